#include "salyap/csv.hpp"

#include <ostream>

#include <fmt/format.h>

namespace salyap {

std::string format_real(double x) { return fmt::format("{}", x); }

void write_csv_row(std::ostream& os, std::span<const std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) os << ',';
    first = false;
    if (f.find_first_of(",\"\n") == std::string::npos) {
      os << f;
      continue;
    }
    os << '"';
    for (char c : f) {
      if (c == '"') os << '"';
      os << c;
    }
    os << '"';
  }
  os << '\n';
}

}  // namespace salyap
