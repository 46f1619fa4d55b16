#pragma once

// CMI sweeps over (p, r) grids with a resumable CSV table.
//
// The table file starts with '#' lines carrying the provenance (config and
// code version), then a header row and one row per cell in canonical order:
// p-major over the configured grid, r-minor. Rows are stored as their exact
// text, so a resumed run reproduces the bytes of an uninterrupted one.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmi.hpp"
#include "lattice.hpp"

namespace markov {

/// Shortest decimal text that reads back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct SweepSpec {
    int L = 24;
    std::vector<int> r_list;
    std::vector<double> p_grid;
    long n_samples = 35000;
    int chi = 64;
    double cutoff = 1e-12;
    std::uint64_t seed = 1;
    int threads = 1;
};

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols = {"L",     "r",     "p",        "cmi_bits",  "stderr",   "H_AB",
                                                  "H_B_piA", "H_ABC", "H_BC_piA", "n_samples", "chi",      "seed",
                                                  "max_bond", "status"};
    return cols;
}

inline std::string format_sweep_row(const CmiPoint& pt) {
    std::ostringstream o;
    o << pt.L << ',' << pt.r << ',' << fmt_double(pt.p) << ',' << fmt_double(pt.value) << ',' << fmt_double(pt.stderr_)
      << ',' << fmt_double(pt.H_AB.mean) << ',' << fmt_double(pt.H_B_piA.mean) << ',' << fmt_double(pt.H_ABC.mean) << ','
      << fmt_double(pt.H_BC_piA.mean) << ',' << pt.n_samples << ',' << pt.chi << ',' << pt.seed << ',' << pt.max_bond << ",ok";
    return o.str();
}

inline std::string format_failed_row(const SweepSpec& s, int r, double p, const std::string& why) {
    std::string msg = why;
    for (char& c : msg)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    std::ostringstream o;
    o << s.L << ',' << r << ',' << fmt_double(p) << ",nan,nan,nan,nan,nan,nan," << s.n_samples << ',' << s.chi << ','
      << s.seed << ",0,failed: " << msg;
    return o.str();
}

/// One parsed row of a sweep table.
struct SweepRecord {
    int L = 0, r = 0;
    double p = 0.0, cmi = 0.0, stderr_ = 0.0;
    double H_AB = 0.0, H_B_piA = 0.0, H_ABC = 0.0, H_BC_piA = 0.0;
    long n_samples = 0;
    int chi = 0;
    std::uint64_t seed = 0;
    int max_bond = 0;
    std::string status;
    bool ok() const { return status == "ok"; }
};

inline SweepRecord parse_sweep_row(const std::string& line) {
    auto f = split_csv(line);
    if (f.size() != sweep_columns().size())
        throw std::invalid_argument("sweep row has " + std::to_string(f.size()) + " fields, expected " +
                                    std::to_string(sweep_columns().size()) + ": " + line);
    SweepRecord r;
    r.L = std::stoi(f[0]);
    r.r = std::stoi(f[1]);
    r.p = parse_double(f[2]);
    r.status = f[13];
    if (r.ok()) {
        r.cmi = parse_double(f[3]);
        r.stderr_ = parse_double(f[4]);
        r.H_AB = parse_double(f[5]);
        r.H_B_piA = parse_double(f[6]);
        r.H_ABC = parse_double(f[7]);
        r.H_BC_piA = parse_double(f[8]);
    }
    r.n_samples = std::stol(f[9]);
    r.chi = std::stoi(f[10]);
    r.seed = std::stoull(f[11]);
    r.max_bond = std::stoi(f[12]);
    return r;
}

/// A table file: provenance lines, header, rows.
struct CsvTable {
    std::vector<std::string> provenance;  // without the leading "# "
    std::vector<std::string> header;
    std::vector<std::string> rows;

    static CsvTable read(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path.string());
        CsvTable t;
        std::string line;
        bool have_header = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line.rfind("# ", 0) == 0) {
                t.provenance.push_back(line.substr(2));
            } else if (!have_header) {
                t.header = split_csv(line);
                have_header = true;
            } else {
                t.rows.push_back(line);
            }
        }
        if (!have_header) throw std::runtime_error(path.string() + ": missing header row");
        return t;
    }

    std::string str() const {
        std::ostringstream o;
        for (const auto& p : provenance) o << "# " << p << '\n';
        for (std::size_t k = 0; k < header.size(); ++k) o << (k ? "," : "") << header[k];
        o << '\n';
        for (const auto& r : rows) o << r << '\n';
        return o.str();
    }

    /// Write through a temporary file and rename, so a crash never leaves a torn table.
    void write(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            out << str();
        }
        std::filesystem::rename(tmp, path);
    }

    int column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return static_cast<int>(k);
        return -1;
    }
};

inline std::vector<SweepRecord> read_sweep(const std::filesystem::path& path) {
    auto t = CsvTable::read(path);
    if (t.header != sweep_columns()) {
        for (const auto& c : sweep_columns())
            if (t.column(c) < 0) throw std::runtime_error(path.string() + ": missing column '" + c + "'");
        throw std::runtime_error(path.string() + ": unexpected column layout");
    }
    std::vector<SweepRecord> out;
    for (const auto& r : t.rows) out.push_back(parse_sweep_row(r));
    return out;
}

inline std::string cell_key(int r, double p) { return std::to_string(r) + "|" + fmt_double(p); }

/// Runs every (p, r) cell. `done` maps already-finished cells (key from
/// cell_key) to their row text; those are reused verbatim. `on_progress` sees
/// the rows after each new cell so the caller can persist them.
inline std::vector<std::string> sweep(const SweepSpec& s, const std::map<std::string, std::string>& done = {},
                                      const std::function<void(const std::vector<std::string>&)>& on_progress = {}) {
    for (int r : s.r_list) annulus_partition(Lattice(s.L), r);  // validate geometry up front
    for (double p : s.p_grid) check_dephasing_probability(p);
    std::vector<std::pair<int, double>> cells;
    for (double p : s.p_grid)
        for (int r : s.r_list) cells.emplace_back(r, p);
    std::vector<std::string> ordered(cells.size());
    std::vector<bool> have(cells.size(), false);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        auto it = done.find(cell_key(cells[k].first, cells[k].second));
        if (it != done.end()) {
            ordered[k] = it->second;
            have[k] = true;
        }
    }
    auto snapshot = [&] {
        std::vector<std::string> out;
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (have[k]) out.push_back(ordered[k]);
        return out;
    };
    Lattice lat(s.L);
    EstimatorOptions opt{s.chi, s.cutoff, s.threads};
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (have[k]) continue;
        const auto [r, p] = cells[k];
        try {
            auto pt = estimate_cmi(annulus_partition(lat, r), p, s.n_samples, s.seed, opt);
            ordered[k] = format_sweep_row(pt);
        } catch (const std::exception& e) {
            ordered[k] = format_failed_row(s, r, p, e.what());
        }
        have[k] = true;
        if (on_progress) on_progress(snapshot());
    }
    return snapshot();
}

}  // namespace markov
