#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace descry {

enum class TemplateId {
  EventExtraction,
  Entailment,
  VqaJudge,
  DescriptionDefault,
  DescriptionGpt4v,
  DescriptionGemini,
  DescriptionPllava,
  DescriptionLlavaNext,
};

using Bindings = std::map<std::string, std::string>;

std::string_view to_token(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view token);

/// Template bodies use `{{name}}` placeholders. Every other byte is literal.
std::string_view template_body(TemplateId id);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Single-pass substitution: bound values are inserted verbatim and never
/// rescanned. Throws InputError naming the first unbound placeholder.
std::string render_template(std::string_view body, const Bindings& bindings);
std::string render_prompt(TemplateId id, const Bindings& bindings);

/// Inverse of render_template: recovers bindings if `prompt` could have been
/// produced from `body`. Literal segments between placeholders are matched
/// against their last occurrence, so values may contain earlier literals.
std::optional<Bindings> match_template(std::string_view body, std::string_view prompt);

/// SHA-256 (hex) over every built-in template body, for provenance records.
std::string prompt_set_hash();

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace descry
