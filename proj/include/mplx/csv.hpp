#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mplx::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> fields;
};

// RFC 4180-style reader: quoted fields, doubled quotes, CRLF. The first
// record is the header.
class Table {
public:
    static Table parse(std::istream& in, std::string_view source_name = "<input>");

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::string& source() const { return source_; }

    // Column position by name; throws InputError naming the source if absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

std::string trim(std::string_view s);

}  // namespace mplx::csv
