#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace protegi {

/// Lowercase hex SHA-256 of `data` (64 characters).
std::string sha256_hex(std::string_view data);

/// SHA-256 over length-prefixed parts, so ("ab","c") and ("a","bc") differ.
std::string sha256_hex_parts(std::initializer_list<std::string_view> parts);

/// First 64 bits of the SHA-256 of the length-prefixed parts.
std::uint64_t digest64(std::initializer_list<std::string_view> parts);

} // namespace protegi
