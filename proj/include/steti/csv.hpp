#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace steti::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
    int require_column(const std::string& name, const std::string& file) const;
};

// RFC-4180-ish: quoted fields, embedded commas/quotes, CR/LF line ends.
Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& origin);

std::string escape_field(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    void row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
};

}  // namespace steti::csv
