#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "brt/errors.hpp"

namespace brt {

// Minimal CSV support: comma-separated, no quoting, trailing \r stripped.
// Matches the plain numeric CSVs the pipeline reads and writes.
namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NoDataError("cannot open CSV file: " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw NoDataError("CSV file has no header: " + path);
    return t;
}

} // namespace csv
} // namespace brt
