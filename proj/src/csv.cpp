#include "steti/csv.hpp"

#include <sstream>

#include "steti/common.hpp"

namespace steti::csv {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

int Table::require_column(const std::string& name, const std::string& file) const {
    int c = column(name);
    if (c < 0) throw ValidationError(file + ": missing column '" + name + "'");
    return c;
}

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    std::size_t i = 0;
    auto end_field = [&]() {
        fields.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
        row_has_content = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            row_has_content = true;
        } else if (c == ',') {
            end_field();
            row_has_content = true;
        } else if (c == '\n') {
            if (row_has_content || !field.empty() || !fields.empty()) end_row();
        } else if (c == '\r') {
            // swallow, \n handles the row end
        } else {
            field += c;
            row_has_content = true;
        }
        ++i;
    }
    if (quoted) throw ValidationError(origin + ": unterminated quoted field");
    if (row_has_content || !field.empty() || !fields.empty()) end_row();
    return records;
}

}  // namespace

Table parse(const std::string& text, const std::string& origin) {
    auto records = parse_records(text, origin);
    if (records.empty()) throw ValidationError(origin + ": empty file");
    Table t;
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
    return t;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.filename().string());
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += escape_field(fields[i]);
    }
    line += '\n';
    return line;
}

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw RuntimeError("cannot write file: " + path.string());
}

void Writer::row(const std::vector<std::string>& fields) { out_ << join_row(fields); }

}  // namespace steti::csv
