#include "adaptive/core/fixed_text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace adaptive {

void append_fixed(std::string& out, double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("cannot serialize non-finite value");
  }
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value,
                                    std::chars_format::fixed, kFixedDecimals);
  out.append(buffer.data(), result.ptr);
}

std::string format_fixed(double value) {
  std::string out;
  append_fixed(out, value);
  return out;
}

double quantize(double value) {
  std::array<char, 64> buffer{};
  const auto written = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value,
                                     std::chars_format::fixed, kFixedDecimals);
  double parsed = 0.0;
  std::from_chars(buffer.data(), written.ptr, parsed);
  return parsed;
}

void append_json_string(std::string& out, std::string_view text) {
  out.push_back('"');
  for (const char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char escaped[8];
          std::snprintf(escaped, sizeof(escaped), "\\u%04x", c);
          out += escaped;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void append_json_key(std::string& out, std::string_view key) {
  append_json_string(out, key);
  out.push_back(':');
}

void append_fixed_array(std::string& out, std::span<const double> values) {
  out.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out.push_back(',');
    append_fixed(out, values[i]);
  }
  out.push_back(']');
}

}  // namespace adaptive
