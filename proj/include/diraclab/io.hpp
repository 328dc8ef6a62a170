#pragma once

// Plain CSV output with round-trippable reals, and a minimal reader for
// numeric CSV tables.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace diraclab {

/// 17 significant digits, so every double reads back bit-for-bit.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw std::invalid_argument("CsvWriter: wrong number of cells");
        write_row(cells);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_real(v));
        row(cells);
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ostream& out_;
    std::size_t columns_;
};

/// Columns of a numeric CSV file with a header row, keyed by header name.
struct CsvTable {
    std::vector<std::string> header;
    std::map<std::string, std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const {
        const auto it = columns.find(name);
        if (it == columns.end()) throw std::runtime_error("csv: missing column '" + name + "'");
        return it->second;
    }
    bool has(const std::string& name) const { return columns.count(name) != 0; }
    std::size_t rows() const { return columns.empty() ? 0 : columns.begin()->second.size(); }
};

inline CsvTable read_csv(std::istream& in, const std::string& name = "stream") {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) {
            const auto a = cell.find_first_not_of(" \t\r");
            const auto b = cell.find_last_not_of(" \t\r");
            out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = split(line);
        if (t.header.empty()) {
            t.header = cells;
            for (const auto& h : cells) t.columns[h];
            continue;
        }
        if (cells.size() != t.header.size())
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.header.size()) + " cells");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v = 0;
            try {
                std::size_t used = 0;
                v = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::runtime_error(name + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                                         cells[i] + "'");
            }
            t.columns[t.header[i]].push_back(v);
        }
    }
    if (t.header.empty()) throw std::runtime_error(name + ": empty CSV");
    return t;
}

inline CsvTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    return read_csv(in, path);
}

}  // namespace diraclab
