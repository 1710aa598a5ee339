#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opevo/llm/chat.hpp"
#include "opevo/problems.hpp"

namespace opevo::llm {

class PromptError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ScoredOperator {
    std::string source;
    double score = 0.0;
};

/// Values substituted into the prompt templates. A template that references
/// an unset value fails to render.
struct PromptContext {
    std::optional<std::string> problem_name;     // #PROBLEM#
    std::optional<std::string> problem_desc;     // #PROBLEM_DESC#
    std::optional<std::string> format_spec;      // #FORMAT#
    std::vector<ScoredOperator> selected;        // #SELECTED_OPERATORS#
    std::optional<std::size_t> n_selected;       // #N_s#
    std::optional<std::string> operator_source;  // #OPERATOR#
    std::optional<std::string> error_text;       // #ERROR#

    double temperature = 0.5;
    std::size_t char_budget = 60000;
};

inline constexpr std::size_t kRepairErrorTail = 2000;

/// Problem name, description and operator format for a category.
PromptContext context_for(Category category);

std::string problem_name(Category category);
std::string problem_description(Category category);
std::string operator_format(Category category);

ChatTranscript render_initialization(const PromptContext& ctx);

/// Parents are embedded in the given order. When the prompt exceeds the
/// character budget the lowest-scoring parent is dropped and the prompt is
/// re-rendered, as long as two parents remain.
ChatTranscript render_crossover(const PromptContext& ctx);

ChatTranscript render_mutation(const PromptContext& ctx);
ChatTranscript render_repair(const PromptContext& ctx);

/// Appends a repair request to an existing dialogue and switches its kind.
void append_repair(ChatTranscript& transcript, const PromptContext& ctx);

/// "score: <value>" with six significant digits.
std::string format_score(double score);

} // namespace opevo::llm
