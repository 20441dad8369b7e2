#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace hscan::llm {

inline constexpr std::string_view kDefaultOutputInstruction =
    "Answer YES if the article is relevant or unclear. Answer NO if it is not. Then reproduce the exact context "
    "from the paper that contained the information on which basis you made the decision.";
inline constexpr std::string_view kArticlePrefix = "Here is the text of the article: ";

/// Five-part prompt. Parts 1-3 are written per scan; part 4 is fixed by
/// default and part 5 is the article itself.
struct PromptTemplate {
    std::string scene;
    std::string criteria;
    std::optional<std::string> exclusions;
    std::string output_instruction{kDefaultOutputInstruction};

    /// Throws InputError naming the first empty required part.
    void validate() const;
};

nlohmann::json to_json(const PromptTemplate& t);
/// Accepts {"part1","part2","part3","part4"} or {"scene","criteria","exclusions","output_instruction"}.
PromptTemplate template_from_json(const nlohmann::json& j);

/// Parts joined by blank lines, ending with the article prefix and text.
std::string render_prompt(const PromptTemplate& t, std::string_view reference_text);

/// Lowercase hex SHA-256 of the rendered prompt.
std::string prompt_hash(std::string_view prompt);

enum class ParseStatus { clean, salvaged, defaulted, defaulted_on_error };

std::string_view to_string(ParseStatus s);
std::optional<ParseStatus> parse_status_from(std::string_view s);

struct ParsedResponse {
    int bit = 1;
    std::string justification;
    ParseStatus status = ParseStatus::defaulted;
};

/// Never throws. A standalone YES/NO within the first 16 characters is
/// clean, one further in is salvaged, none at all defaults to YES.
ParsedResponse parse_response(std::string_view raw);

}  // namespace hscan::llm
