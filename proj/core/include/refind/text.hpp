#pragma once

// UTF-8 helpers. Every character offset in this library counts Unicode
// scalar values, never bytes.

#include <cstddef>
#include <string>
#include <string_view>

namespace refind::text {

// Throws DataError on malformed UTF-8.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view chars);

// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

// Substring by scalar-value offsets [start, end). Throws ValidationError if
// the range is out of bounds.
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

bool is_space(char32_t c);

// Letters, digits and combining marks of the scripts we tokenize. Anything
// else (punctuation, symbols, whitespace, controls) separates terms.
bool is_alnum(char32_t c);

// Simple case folding for Latin, Greek, Cyrillic and Armenian. Scalars
// without a lowercase mapping are returned unchanged.
char32_t to_lower(char32_t c);

// True when `s` is empty or made only of whitespace.
bool is_blank(std::u32string_view s);

}  // namespace refind::text
