#include "evqoe/core/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "evqoe/core/errors.hpp"

namespace evqoe::csv {

std::optional<Row> Reader::next() {
    Row row;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    bool at_line_start = true;
    int ch = 0;

    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
        const char c = static_cast<char>(ch);
        if (at_line_start && !in_quotes) {
            ++line_;
            if (row.empty() && field.empty() && c == '#') {
                while ((ch = in_.get()) != std::char_traits<char>::eof() && ch != '\n') {
                }
                continue;
            }
            if (row.empty() && field.empty() && (c == '\n' || c == '\r')) {
                // Blank line between records.
                if (c == '\r' && in_.peek() == '\n') in_.get();
                continue;
            }
            record_line_ = line_;
            at_line_start = false;
        }
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && in_.peek() == '\n') {
            // CRLF terminator; the '\n' ends the record below.
        } else if (c == '\n') {
            row.push_back(std::move(field));
            return row;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) {
        throw SchemaError("unterminated quoted field starting near line " +
                          std::to_string(record_line_));
    }
    if (!any) return std::nullopt;
    row.push_back(std::move(field));
    return row;
}

std::string quote_if_needed(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << quote_if_needed(row[i]);
    }
    out << '\n';
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string format_fixed(double v, int decimals) {
    std::string s = fmt::format("{:.{}f}", v, decimals);
    // Avoid "-0.000000" for tiny negatives.
    if (!s.empty() && s[0] == '-' && std::all_of(s.begin() + 1, s.end(), [](char c) {
            return c == '0' || c == '.';
        })) {
        s.erase(0, 1);
    }
    return s;
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<long long> parse_int(std::string_view text) {
    if (text.empty()) return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::vector<std::size_t> require_columns(const Row& header, const std::vector<std::string>& names,
                                         std::string_view what) {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& name : names) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw SchemaError(fmt::format("{}: missing column '{}'", what, name));
        }
        idx.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    return idx;
}

}  // namespace evqoe::csv
