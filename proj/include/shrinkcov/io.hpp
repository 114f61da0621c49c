#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "shrinkcov/common.hpp"
#include "shrinkcov/portfolio.hpp"

namespace shrinkcov {

/// Shortest decimal form that parses back to the same double, so emitted
/// files round-trip exactly and reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        std::size_t b = 0, e = cell.size();
        while (b < e && std::isspace(static_cast<unsigned char>(cell[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(cell[e - 1]))) --e;
        cells.push_back(cell.substr(b, e - b));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

struct IngestOptions {
    bool prices = false;           // interpret the file as prices, convert to net returns
    bool drop_incomplete = false;  // drop asset columns with any missing value
};

inline bool parse_cell(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const std::string lower = [&] {
        std::string s = cell;
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }();
    if (lower == "nan" || lower == "na" || lower == "null") return false;
    char* end = nullptr;
    out = std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size();
}

inline bool looks_like_date(const std::string& cell) {
    // ISO-8601 style: at least YYYY-MM-DD
    return cell.size() >= 10 && cell[4] == '-' && cell[7] == '-';
}

/// Ingest a returns (or prices) CSV. Expected schema: header row of asset
/// names, optional leading ISO-8601 date column, one row per trading day.
/// Strict mode rejects rows with missing values; with drop_incomplete the
/// offending asset column is dropped instead. Errors carry line numbers.
inline ReturnsPanel ingest_returns(const std::string& path, const IngestOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("ingest_returns: cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::invalid_argument("ingest_returns: empty file " + path);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty()) throw std::invalid_argument("ingest_returns: empty header in " + path);

    bool has_date_col = false;
    {
        const std::string first = header.front();
        std::string lower = first;
        for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lower == "date" || lower.empty()) has_date_col = true;
    }
    std::vector<std::string> assets(header.begin() + (has_date_col ? 1 : 0), header.end());
    const std::size_t n_assets = assets.size();
    if (n_assets == 0) throw std::invalid_argument("ingest_returns: no asset columns in " + path);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> dates;
    std::vector<bool> column_bad(n_assets, false);
    std::vector<std::vector<bool>> cell_bad;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        std::size_t offset = 0;
        if (has_date_col) {
            if (cells.empty())
                throw std::invalid_argument("ingest_returns: " + path + ":" +
                                            std::to_string(line_no) + ": empty row");
            dates.push_back(cells.front());
            offset = 1;
        } else if (!cells.empty() && looks_like_date(cells.front()) &&
                   cells.size() == assets.size() + 1) {
            // data rows carry a leading date cell the header does not label
            has_date_col = true;
            dates.push_back(cells.front());
            offset = 1;
        }
        if (cells.size() - offset != assets.size())
            throw std::invalid_argument("ingest_returns: " + path + ":" + std::to_string(line_no) +
                                        ": expected " + std::to_string(assets.size()) +
                                        " value cells, got " + std::to_string(cells.size() - offset));
        std::vector<double> row(assets.size());
        std::vector<bool> bad(assets.size(), false);
        for (std::size_t j = 0; j < assets.size(); ++j) {
            if (!parse_cell(cells[offset + j], row[j])) {
                if (!opt.drop_incomplete)
                    throw std::invalid_argument("ingest_returns: " + path + ":" +
                                                std::to_string(line_no) + ": non-numeric cell '" +
                                                cells[offset + j] + "' in column " + assets[j]);
                bad[j] = true;
                column_bad[j] = true;
            }
        }
        rows.push_back(std::move(row));
        cell_bad.push_back(std::move(bad));
    }
    if (rows.size() < 2)
        throw std::invalid_argument("ingest_returns: " + path + ": fewer than 2 data rows");

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < assets.size(); ++j)
        if (!column_bad[j]) keep.push_back(j);
    if (keep.empty())
        throw std::invalid_argument("ingest_returns: " + path + ": every column has missing values");

    Matrix values(rows.size(), keep.size());
    std::vector<std::string> kept_assets;
    for (std::size_t j = 0; j < keep.size(); ++j) kept_assets.push_back(assets[keep[j]]);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j) values(i, j) = rows[i][keep[j]];

    if (opt.prices) {
        Matrix r = net_returns(values);
        if (!dates.empty()) dates.erase(dates.begin());
        return ReturnsPanel(std::move(r), std::move(kept_assets), std::move(dates));
    }
    return ReturnsPanel(std::move(values), std::move(kept_assets), std::move(dates));
}

/// Plain numeric matrix, no header, one row per line.
inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        std::vector<double> row;
        for (const std::string& c : cells) {
            double v;
            if (!parse_cell(c, v))
                throw std::invalid_argument("read_matrix_csv: " + path + ":" +
                                            std::to_string(line_no) + ": non-numeric cell '" + c + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument("read_matrix_csv: " + path + ":" + std::to_string(line_no) +
                                        ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("read_matrix_csv: " + path + ": empty file");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("write_matrix_csv: cannot open " + path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

}  // namespace shrinkcov
