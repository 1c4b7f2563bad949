#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace erank {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

Table read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Table& table);

// Deterministic numeric formatting for report files ("%.10g").
std::string fmt_double(double x);
// Round-trip exact formatting for draw dumps and trace exports ("%.17g").
std::string fmt_double_exact(double x);

}  // namespace erank
