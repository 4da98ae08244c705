#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace magic_markup::utf8 {

/// Decodes UTF-8 into Unicode scalar values. Rejects overlong forms,
/// surrogates and truncated sequences with ErrorCode::InvalidUtf8.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
std::string encode(char32_t scalar);

/// Length of a UTF-8 string in scalar values.
std::size_t length(std::string_view text);

/// Whitespace as understood by normalization: space, tab, CR, LF.
constexpr bool is_space(char32_t c) noexcept {
    return c == U' ' || c == U'\t' || c == U'\r' || c == U'\n';
}

}  // namespace magic_markup::utf8
