#include "descry/response_parse.hpp"

#include <algorithm>
#include <cctype>

#include "descry/error.hpp"

namespace descry {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<json> try_parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  auto strict = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!strict.is_discarded()) return strict;
  auto loose = json::parse(python_literal_to_json(text), nullptr, false);
  if (!loose.is_discarded()) return loose;
  return std::nullopt;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

}  // namespace

std::string_view to_token(Relationship r) {
  switch (r) {
    case Relationship::Entailment: return "entailment";
    case Relationship::Neutral: return "neutral";
    case Relationship::Contradiction: return "contradiction";
  }
  return "?";
}

std::optional<Relationship> parse_relationship(std::string_view token) {
  auto t = lower(trim(token));
  for (auto r : {Relationship::Entailment, Relationship::Neutral, Relationship::Contradiction}) {
    if (to_token(r) == t) return r;
  }
  return std::nullopt;
}

std::string python_literal_to_json(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == '"') {
      // Copy a double-quoted string verbatim.
      out += c;
      ++i;
      while (i < n) {
        out += text[i];
        if (text[i] == '\\' && i + 1 < n) {
          out += text[++i];
        } else if (text[i] == '"') {
          break;
        }
        ++i;
      }
      ++i;
    } else if (c == '\'') {
      out += '"';
      ++i;
      while (i < n && text[i] != '\'') {
        if (text[i] == '\\' && i + 1 < n) {
          char e = text[i + 1];
          if (e == '\'') {
            out += '\'';
          } else {
            out += '\\';
            out += e;
          }
          i += 2;
          continue;
        }
        if (text[i] == '"') {
          out += "\\\"";
        } else if (text[i] == '\n') {
          out += "\\n";
        } else {
          out += text[i];
        }
        ++i;
      }
      out += '"';
      ++i;
    } else if (c == ',') {
      // Drop trailing commas before a closing bracket.
      std::size_t j = i + 1;
      while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < n && (text[j] == ']' || text[j] == '}')) {
        i = j;
      } else {
        out += c;
        ++i;
      }
    } else if (std::isalpha(static_cast<unsigned char>(c)) && (i == 0 || !is_ident_char(text[i - 1]))) {
      std::size_t j = i;
      while (j < n && is_ident_char(text[j])) ++j;
      auto word = text.substr(i, j - i);
      if (word == "True") {
        out += "true";
      } else if (word == "False") {
        out += "false";
      } else if (word == "None") {
        out += "null";
      } else {
        out.append(word);
      }
      i = j;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

std::optional<std::string> strip_code_fence(std::string_view text) {
  auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = text.find('\n', open + 3);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  auto close = text.find("```", body_start);
  auto body = close == std::string_view::npos ? text.substr(body_start)
                                              : text.substr(body_start, close - body_start);
  return std::string(trim(body));
}

std::optional<nlohmann::json> parse_loose_json(std::string_view text, char open, char close) {
  auto whole = trim(text);
  if (auto v = try_parse(whole)) return v;

  std::string scope(whole);
  if (auto fenced = strip_code_fence(whole)) {
    if (auto v = try_parse(*fenced)) return v;
    scope = *fenced;
  }
  auto b = scope.find(open);
  auto e = scope.rfind(close);
  if (b != std::string::npos && e != std::string::npos && e > b) {
    if (auto v = try_parse(std::string_view(scope).substr(b, e - b + 1))) return v;
  }
  return std::nullopt;
}

std::vector<std::string> parse_extraction_response(std::string_view raw_text) {
  auto value = parse_loose_json(raw_text, '{', '}');
  if (!value) throw ParseError("extraction response: no parseable object", std::string(raw_text));
  if (!value->is_object()) {
    throw ParseError("extraction response: top level is not an object", std::string(raw_text));
  }
  auto it = value->find("events");
  if (it == value->end()) throw ParseError("extraction response: missing key \"events\"", std::string(raw_text));
  if (!it->is_array()) {
    throw ParseError("extraction response: \"events\" is not a list", std::string(raw_text));
  }
  std::vector<std::string> events;
  for (const auto& item : *it) {
    if (!item.is_string()) {
      throw ParseError("extraction response: \"events\" contains a non-string item",
                       std::string(raw_text));
    }
    auto ev = trim(item.get_ref<const std::string&>());
    if (ev.empty()) continue;
    events.emplace_back(ev);
    if (events.size() == kMaxEvents) break;
  }
  return events;
}

std::vector<EntailmentVerdict> parse_entailment_response(std::string_view raw_text) {
  auto value = parse_loose_json(raw_text, '[', ']');
  if (!value) throw ParseError("entailment response: no parseable list", std::string(raw_text));
  if (!value->is_array()) {
    throw ParseError("entailment response: top level is not a list", std::string(raw_text));
  }
  std::vector<EntailmentVerdict> out;
  out.reserve(value->size());
  for (const auto& item : *value) {
    if (!item.is_object()) throw ParseError("entailment response: list item is not an object", std::string(raw_text));
    auto rel = item.find("relationship");
    if (rel == item.end() || !rel->is_string()) {
      throw ParseError("entailment response: item without a \"relationship\" string", std::string(raw_text));
    }
    auto parsed = parse_relationship(rel->get_ref<const std::string&>());
    if (!parsed) {
      throw ParseError("entailment response: unknown relationship '" +
                           rel->get<std::string>() + "'",
                       std::string(raw_text));
    }
    EntailmentVerdict v;
    v.relationship = *parsed;
    auto text_of = [&](const char* key) -> std::string {
      auto f = item.find(key);
      if (f == item.end() || f->is_null()) return {};
      return f->is_string() ? f->get<std::string>() : f->dump();
    };
    v.event = text_of("event");
    v.reason = text_of("reason");
    out.push_back(std::move(v));
  }
  return out;
}

VqaVerdict parse_vqa_response(std::string_view raw_text) {
  auto value = parse_loose_json(raw_text, '{', '}');
  if (!value || !value->is_object()) {
    throw ParseError("vqa response: no parseable object", std::string(raw_text));
  }
  VqaVerdict v;
  auto pred = value->find("pred");
  if (pred == value->end()) throw ParseError("vqa response: missing key \"pred\"", std::string(raw_text));
  if (pred->is_boolean()) {
    v.match = pred->get<bool>();
  } else if (pred->is_string()) {
    auto p = lower(trim(pred->get_ref<const std::string&>()));
    if (p == "yes") {
      v.match = true;
    } else if (p == "no") {
      v.match = false;
    } else {
      throw ParseError("vqa response: \"pred\" must be yes or no", std::string(raw_text));
    }
  } else {
    throw ParseError("vqa response: \"pred\" must be yes or no", std::string(raw_text));
  }

  auto score = value->find("score");
  if (score == value->end()) throw ParseError("vqa response: missing key \"score\"", std::string(raw_text));
  double q = 0;
  if (score->is_number()) {
    q = score->get<double>();
  } else if (score->is_string()) {
    try {
      std::size_t used = 0;
      auto s = std::string(trim(score->get_ref<const std::string&>()));
      q = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("vqa response: \"score\" is not a number", std::string(raw_text));
    }
  } else {
    throw ParseError("vqa response: \"score\" is not a number", std::string(raw_text));
  }
  if (q != static_cast<int>(q) || q < 1 || q > 5) {
    throw ParseError("vqa response: \"score\" must be an integer in 1..5", std::string(raw_text));
  }
  v.quality = static_cast<int>(q);
  return v;
}

}  // namespace descry
