#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topicflow::csv {

struct Row {
    std::size_t line = 0;  // 1-based line on which the row starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
/// line breaks. CRLF and LF line endings are both accepted.
class Reader {
  public:
    explicit Reader(std::istream& in, char separator = ',');

    /// Next row, or nullopt at end of input. Throws DataError on an
    /// unterminated quoted field.
    std::optional<Row> next();

  private:
    std::istream& in_;
    char separator_;
    std::size_t line_ = 1;
};

/// Quotes a field when it contains the separator, a quote or a line break.
std::string escape(std::string_view field, char separator = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char separator = ',');

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);

/// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

}  // namespace topicflow::csv
