#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace salyap {

/// Shortest decimal form that round-trips to the same double.
std::string format_real(double x);

/// One comma-separated line; fields containing ',' or '"' are quoted.
void write_csv_row(std::ostream& os, std::span<const std::string> fields);

}  // namespace salyap
