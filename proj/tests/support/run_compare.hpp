#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace run_compare {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Drops the runtime_ms column of a CSV (located by header name).
inline std::string strip_timing(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    std::ptrdiff_t drop = -1;
    bool header = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (header) {
            for (std::size_t j = 0; j < cells.size(); ++j)
                if (cells[j] == "runtime_ms") drop = static_cast<std::ptrdiff_t>(j);
            header = false;
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<std::ptrdiff_t>(j) == drop) continue;
            out += cells[j];
            out += j + 1 < cells.size() ? "," : "";
        }
        out += "\n";
    }
    return out;
}

// Every output file of a run with timing columns removed, keyed by file name.
inline std::map<std::string, std::string> non_timing_outputs(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        const auto text = read_file(entry.path());
        out[name] = entry.path().extension() == ".csv" ? strip_timing(text) : text;
    }
    return out;
}

}  // namespace run_compare
