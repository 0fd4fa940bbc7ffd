#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kkw::csv {

/// Shortest round-trippable text for a double ("%.17g").
std::string format(double v);

void write_header(std::ostream& out, std::span<const std::string> columns);

/// Appends "<prefix>_1,...,<prefix>_count" (or _0-based when zero_based).
void append_indexed(std::vector<std::string>& columns, std::string_view prefix,
                    std::size_t count, bool zero_based = false);

/// Writes the values comma-separated followed by a newline.
void write_row(std::ostream& out, std::span<const double> values);

}  // namespace kkw::csv
