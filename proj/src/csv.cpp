#include "kkw/csv.hpp"

#include <cstdio>
#include <ostream>

namespace kkw::csv {

std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_header(std::ostream& out, std::span<const std::string> columns) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (k) out << ',';
        out << columns[k];
    }
    out << '\n';
}

void append_indexed(std::vector<std::string>& columns, std::string_view prefix,
                    std::size_t count, bool zero_based) {
    const std::size_t first = zero_based ? 0 : 1;
    for (std::size_t k = 0; k < count; ++k) {
        columns.push_back(std::string(prefix) + "_" + std::to_string(first + k));
    }
}

void write_row(std::ostream& out, std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out << ',';
        out << format(values[k]);
    }
    out << '\n';
}

}  // namespace kkw::csv
