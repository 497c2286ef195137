#pragma once

#include <string>
#include <string_view>

namespace tailprobe::detail {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

std::string format_double(double value);

}  // namespace tailprobe::detail
