#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace stgt::csv {

/// Split one line on commas. No quoting support; none of the pipeline
/// formats need it.
std::vector<std::string> split(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const; // -1 when absent
};

/// Reads a header + rows table. Throws IoError when the file cannot be read.
Table read_file(const std::filesystem::path& path);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);

    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::string path_;
    std::ofstream out_;
};

std::string format_double(double v); // shortest round-trip representation

} // namespace stgt::csv
