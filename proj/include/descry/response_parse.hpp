#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace descry {

inline constexpr std::size_t kMaxEvents = 10;

enum class Relationship { Entailment, Neutral, Contradiction };

std::string_view to_token(Relationship r);
/// Case-insensitive, surrounding whitespace ignored.
std::optional<Relationship> parse_relationship(std::string_view token);

struct EntailmentVerdict {
  std::string event;
  Relationship relationship = Relationship::Neutral;
  std::string reason;
};

/// Converts a Python literal (single-quoted strings, True/False/None, trailing
/// commas) to JSON text. Valid JSON passes through unchanged.
std::string python_literal_to_json(std::string_view text);

/// Contents of the first ``` fenced block (language tag dropped), if any.
std::optional<std::string> strip_code_fence(std::string_view text);

/// Parses the first interpretable JSON value in judge output. Candidates, in
/// order: the trimmed text, the first fenced block, the span from the first
/// `open` to the last `close` bracket. Each is tried as strict JSON and then
/// as a Python literal.
std::optional<nlohmann::json> parse_loose_json(std::string_view text, char open, char close);

/// Event-extraction output -> list of events (trimmed, empties dropped,
/// truncated to kMaxEvents). Throws ParseError carrying raw_text.
std::vector<std::string> parse_extraction_response(std::string_view raw_text);

/// Entailment output -> one verdict per list item, in order. Throws ParseError
/// on a non-list top level, a missing relationship, or an unknown class.
std::vector<EntailmentVerdict> parse_entailment_response(std::string_view raw_text);

struct VqaVerdict {
  bool match = false;
  int quality = 1;  // 1..5
};

/// Open-ended QA judge output of the form {'pred': 'yes'|'no', 'score': 1..5}.
VqaVerdict parse_vqa_response(std::string_view raw_text);

}  // namespace descry
