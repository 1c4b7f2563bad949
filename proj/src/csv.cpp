#include "erank/csv.hpp"

#include "erank/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace erank {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out << ',';
            out << quote(fields[i]);
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    if (!out) throw IoError("write failed: " + path.string());
}

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

std::string fmt_double_exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace erank
