#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opevo::llm {

enum class ExtractFailure { NoTagPair, EmptyBlock, MissingFunctionName, NestedTag };

class ExtractError : public std::runtime_error {
public:
    ExtractError(ExtractFailure kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ExtractFailure kind() const noexcept { return kind_; }

private:
    ExtractFailure kind_;
};

inline constexpr std::string_view kOpenTag = "<next_generation>";
inline constexpr std::string_view kCloseTag = "</next_generation>";
inline constexpr std::string_view kFunctionName = "next_generation";

/// Content of the first <next_generation> block, with surrounding markdown
/// fences and whitespace removed.
std::string extract_operator(std::string_view response);

} // namespace opevo::llm
