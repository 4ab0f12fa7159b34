#include "topicflow/csv.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "topicflow/errors.hpp"

namespace topicflow::csv {

Reader::Reader(std::istream& in, char separator) : in_(in), separator_(separator) {}

std::optional<Row> Reader::next()
{
    if (in_.peek() == std::char_traits<char>::eof()) {
        return std::nullopt;
    }
    Row row;
    row.line = line_;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    while (true) {
        const int c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            if (quoted) {
                throw DataError("line " + std::to_string(row.line) + ": unterminated quoted field");
            }
            row.fields.push_back(std::move(field));
            return row;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') {
                    ++line_;
                }
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (ch == separator_) {
            row.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (ch == '\r' && in_.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line_;
            row.fields.push_back(std::move(field));
            return row;
        } else {
            field.push_back(ch);
        }
    }
}

std::string escape(std::string_view field, char separator)
{
    const bool needs_quotes = field.find_first_of(std::string{separator} + "\"\r\n") != std::string_view::npos;
    if (!needs_quotes) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char ch : field) {
        if (ch == '"') {
            out.push_back('"');
        }
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char separator)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out << separator;
        }
        out << escape(fields[i], separator);
    }
    out << '\n';
}

std::string format_number(double value)
{
    std::array<char, 64> buffer{};
    auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    if (ec != std::errc{}) {
        throw InvariantError("format_number: conversion failed");
    }
    return std::string(buffer.data(), ptr);
}

std::string format_fixed(double value, int decimals)
{
    std::array<char, 64> buffer{};
    auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value,
                                   std::chars_format::fixed, decimals);
    if (ec != std::errc{}) {
        throw InvariantError("format_fixed: conversion failed");
    }
    return std::string(buffer.data(), ptr);
}

}  // namespace topicflow::csv
