#include "opevo/llm/extract.hpp"

#include <string>

namespace opevo::llm {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// ```python ... ``` around the code: drop the opening fence line and the
// closing fence.
std::string_view strip_fences(std::string_view s) {
    if (s.substr(0, 3) == "```") {
        auto eol = s.find('\n');
        s = eol == std::string_view::npos ? std::string_view{} : s.substr(eol + 1);
    }
    s = trim(s);
    if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s = s.substr(0, s.size() - 3);
    return trim(s);
}

} // namespace

std::string extract_operator(std::string_view response) {
    const auto open = response.find(kOpenTag);
    if (open == std::string_view::npos) throw ExtractError(ExtractFailure::NoTagPair, "no <next_generation> tag found in the response");
    const auto body_start = open + kOpenTag.size();
    const auto close = response.find(kCloseTag, body_start);
    if (close == std::string_view::npos)
        throw ExtractError(ExtractFailure::NoTagPair, "<next_generation> tag is never closed in the response");
    const std::string_view raw = response.substr(body_start, close - body_start);
    if (raw.find(kOpenTag) != std::string_view::npos)
        throw ExtractError(ExtractFailure::NestedTag, "nested <next_generation> tags are not supported");
    const std::string_view body = strip_fences(trim(raw));
    if (body.empty()) throw ExtractError(ExtractFailure::EmptyBlock, "the <next_generation> block is empty");
    if (body.find(kFunctionName) == std::string_view::npos)
        throw ExtractError(ExtractFailure::MissingFunctionName, "the extracted code does not define next_generation");
    return std::string(body);
}

} // namespace opevo::llm
