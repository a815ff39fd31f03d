#include "mplx/csv.hpp"

#include <fmt/format.h>

#include "mplx/core.hpp"

namespace mplx::csv {

namespace {

// Reads one logical record; returns false at end of input. `line` tracks the
// physical line count so errors can point at the record start.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                 std::string_view source) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    const std::size_t start = line + 1;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line;
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return true;
        } else {
            field += c;
        }
    }
    if (in_quotes)
        throw InputError(fmt::format("{}:{}: unterminated quoted field", source, start));
    if (!any) return false;
    ++line;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    return true;
}

bool blank(const std::vector<std::string>& fields) {
    return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

Table Table::parse(std::istream& in, std::string_view source_name) {
    Table t;
    t.source_ = std::string(source_name);
    std::size_t line = 0;
    std::vector<std::string> fields;
    while (read_record(in, fields, line, source_name)) {
        if (blank(fields)) continue;
        for (auto& f : fields) f = trim(f);
        // Strip a UTF-8 byte-order mark from the header.
        if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
        t.header_ = fields;
        break;
    }
    if (t.header_.empty()) throw InputError(fmt::format("{}: missing CSV header", source_name));
    while (read_record(in, fields, line, source_name)) {
        if (blank(fields)) continue;
        if (fields.size() != t.header_.size())
            throw InputError(fmt::format("{}:{}: expected {} fields, found {}", source_name, line,
                                         t.header_.size(), fields.size()));
        t.rows_.push_back({line, fields});
    }
    return t;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t k = 0; k < header_.size(); ++k)
        if (header_[k] == name) return k;
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
    if (auto k = find_column(name)) return *k;
    throw InputError(fmt::format("{}: missing column '{}'", source_, name));
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out << ',';
        out << escape(fields[k]);
    }
    out << '\n';
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace mplx::csv
