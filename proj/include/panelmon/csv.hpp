#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/panel.hpp"

namespace panelmon::csv {

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        std::string_view cell = line.substr(start, pos == std::string_view::npos ? line.size() - start : pos - start);
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        out.emplace_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Shortest representation that round-trips exactly.
inline std::string format(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s == "inf" || s == "+inf") { out = HUGE_VAL; return true; }
    if (s == "-inf") { out = -HUGE_VAL; return true; }
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

/// Parses a panel: header `time,<id1>,...`, empty cells are missing, the
/// time column must increase with a constant step (1e-9 relative tolerance).
inline Panel read_panel(std::istream& in, const std::string& name = "<panel>") {
    std::string line;
    if (!std::getline(in, line)) throw DataError(name + ": empty file");
    auto header = split(line);
    if (header.size() < 2 || header[0] != "time")
        throw DataError(name + ":1: header must start with 'time' followed by process ids");
    Panel p;
    p.ids.assign(header.begin() + 1, header.end());

    std::vector<double> times;
    std::vector<std::vector<double>> rows;  // per time
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw DataError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
        double t = 0.0;
        if (!parse_double(cells[0], t) || !std::isfinite(t))
            throw DataError(name + ":" + std::to_string(line_no) + ": invalid time value '" + cells[0] + "'");
        std::vector<double> row(p.ids.size(), kMissing);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (cells[j].empty()) continue;
            double v = 0.0;
            if (!parse_double(cells[j], v) || !std::isfinite(v))
                throw DataError(name + ":" + std::to_string(line_no) + ": invalid value '" + cells[j] + "'");
            row[j - 1] = v;
        }
        if (!times.empty()) {
            if (!(t > times.back()))
                throw DataError(name + ":" + std::to_string(line_no) + ": time column must be strictly increasing");
            if (times.size() >= 2) {
                const double step = times[1] - times[0];
                const double here = t - times.back();
                if (std::abs(here - step) > 1e-9 * std::max(std::abs(step), std::abs(t)))
                    throw DataError(name + ":" + std::to_string(line_no) + ": time step is not constant");
            }
        }
        times.push_back(t);
        rows.push_back(std::move(row));
    }
    if (times.empty()) throw DataError(name + ": no data rows");
    p.time_origin = times.front();
    p.time_step = times.size() >= 2 ? times[1] - times[0] : 1.0;
    p.data = MaskedGrid(p.ids.size(), times.size());
    for (std::size_t t = 0; t < times.size(); ++t)
        for (std::size_t i = 0; i < p.ids.size(); ++i)
            if (!std::isnan(rows[t][i])) p.data.set(i, t, rows[t][i]);
    p.validate();
    return p;
}

inline Panel read_panel(const std::string& path) {
    auto in = open_in(path);
    return read_panel(in, path);
}

inline void write_panel(std::ostream& out, const Panel& p) {
    out << "time";
    for (const auto& id : p.ids) out << ',' << id;
    out << '\n';
    for (std::size_t t = 0; t < p.num_times(); ++t) {
        out << format(p.time_at(t));
        for (std::size_t i = 0; i < p.num_processes(); ++i) {
            out << ',';
            if (p.data.is_observed(i, t)) out << format(p.data.values(i, t));
        }
        out << '\n';
    }
}

inline void write_panel(const std::string& path, const Panel& p) {
    auto out = open_out(path);
    write_panel(out, p);
}

}  // namespace panelmon::csv
