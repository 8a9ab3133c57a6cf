#pragma once

#include <span>
#include <string>
#include <string_view>

namespace adaptive {

// All persisted floating point values use six fixed decimals. quantize(x)
// returns the double that reading back format_fixed(x) yields, so values that
// went through quantize() survive a text round trip bit-exactly.
inline constexpr int kFixedDecimals = 6;

std::string format_fixed(double value);
void append_fixed(std::string& out, double value);
double quantize(double value);

// Appends `text` as a JSON string literal (quotes and escapes included).
void append_json_string(std::string& out, std::string_view text);
// Appends `"key":`.
void append_json_key(std::string& out, std::string_view key);
// Appends `[v0,v1,...]` with fixed decimals.
void append_fixed_array(std::string& out, std::span<const double> values);

}  // namespace adaptive
