#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace evqoe::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader. Lines starting with '#' outside a quoted field are skipped,
/// which is how provenance headers written by this toolkit are carried.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of stream. Throws SchemaError on an unterminated quote.
    std::optional<Row> next();

    /// 1-based physical line number of the last record returned.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

/// Writes one record, quoting fields that contain separators, quotes or line breaks.
void write_row(std::ostream& out, const Row& row);

std::string quote_if_needed(std::string_view field);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
/// Fixed-point text with the given number of decimals.
std::string format_fixed(double v, int decimals);

/// Strict numeric parse of a whole field; surrounding whitespace is not accepted.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Column position lookup; throws SchemaError naming the first missing column.
std::vector<std::size_t> require_columns(const Row& header, const std::vector<std::string>& names,
                                         std::string_view what);

}  // namespace evqoe::csv
