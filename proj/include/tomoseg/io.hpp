#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tomoseg/assembly.hpp"
#include "tomoseg/errors.hpp"
#include "tomoseg/evaluation.hpp"
#include "tomoseg/hough.hpp"
#include "tomoseg/membrane.hpp"
#include "tomoseg/postprocess.hpp"

/// CSV readers and writers. All files use ',' separators, '.' decimals and LF
/// line endings; every file starts with a header row.
namespace tomoseg::io {

/// Fixed six-decimal formatting, independent of the global locale.
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double v = 0.0;
    if (!(in >> v) || !(in >> std::ws).eof()) throw MalformedInput(where + ": not a number: '" + s + "'");
    return v;
}

inline int to_int(const std::string& s, const std::string& where) {
    const double v = to_double(s, where);
    if (v != static_cast<int>(v)) throw MalformedInput(where + ": not an integer: '" + s + "'");
    return static_cast<int>(v);
}

// Data rows of a CSV, header checked against `expected` prefix columns.
inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                       const std::vector<std::string>& expected,
                                                       std::size_t min_cols, std::size_t max_cols) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw MalformedInput(path.string() + ": empty file");
    const auto header = split(line);
    for (std::size_t i = 0; i < expected.size() && i < header.size(); ++i)
        if (header[i] != expected[i]) throw MalformedInput(path.string() + ": unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cols = split(line);
        if (cols.size() < min_cols || cols.size() > max_cols)
            throw MalformedInput(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
        rows.push_back(std::move(cols));
    }
    return rows;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot write " + path.string());
    return out;
}

}  // namespace detail

// ---- cell matrix: slice,cell,cx,cy,area,perimeter ----

inline void write_cells(std::ostream& out, const postprocess::CellMatrix& m) {
    out << "slice,cell,cx,cy,area,perimeter\n";
    for (const auto& slice : m.slices)
        for (const auto& r : slice)
            out << r.slice_idx << ',' << r.cell_idx << ',' << fmt(r.cx) << ',' << fmt(r.cy) << ',' << r.area << ','
                << r.perimeter << '\n';
}

inline void write_cells(const std::filesystem::path& path, const postprocess::CellMatrix& m) {
    auto out = detail::open_out(path);
    write_cells(out, m);
}

/// Records without masks; slices sized to the largest index seen (or `slices`).
inline postprocess::CellMatrix read_cells(const std::filesystem::path& path, std::size_t slices = 0) {
    postprocess::CellMatrix m;
    m.slices.resize(slices);
    for (const auto& row : detail::read_rows(path, {"slice", "cell", "cx", "cy", "area", "perimeter"}, 6, 6)) {
        assembly::CellRecord r;
        const std::string where = path.string();
        r.slice_idx = detail::to_int(row[0], where);
        r.cell_idx = detail::to_int(row[1], where);
        r.cx = detail::to_double(row[2], where);
        r.cy = detail::to_double(row[3], where);
        r.area = detail::to_int(row[4], where);
        r.perimeter = detail::to_int(row[5], where);
        if (r.slice_idx < 0) throw MalformedInput(where + ": negative slice index");
        if (static_cast<std::size_t>(r.slice_idx) >= m.slices.size()) m.slices.resize(r.slice_idx + 1);
        m.slices[r.slice_idx].push_back(std::move(r));
    }
    return m;
}

// ---- seeds: [slice,]x,y,r_c,score ----

inline void write_seeds(std::ostream& out, const std::vector<seeding::Seed>& seeds) {
    out << "x,y,r_c,score\n";
    for (const auto& s : seeds) out << s.x << ',' << s.y << ',' << s.r_c << ',' << fmt(s.score) << '\n';
}

inline void write_stack_seeds(const std::filesystem::path& path, const std::vector<std::vector<seeding::Seed>>& seeds) {
    auto out = detail::open_out(path);
    out << "slice,x,y,r_c,score\n";
    for (std::size_t k = 0; k < seeds.size(); ++k)
        for (const auto& s : seeds[k])
            out << k << ',' << s.x << ',' << s.y << ',' << s.r_c << ',' << fmt(s.score) << '\n';
}

// ---- ground truth: slice,x,y[,r] ----

inline evaluation::GroundTruth read_ground_truth(const std::filesystem::path& path) {
    evaluation::GroundTruth gt;
    for (const auto& row : detail::read_rows(path, {"slice", "x", "y"}, 3, 4)) {
        const std::string where = path.string();
        const int s = detail::to_int(row[0], where);
        if (s < 0) throw MalformedInput(where + ": negative slice index");
        evaluation::Annotation a;
        a.x = detail::to_double(row[1], where);
        a.y = detail::to_double(row[2], where);
        if (row.size() == 4 && !row[3].empty()) a.r = detail::to_double(row[3], where);
        if (static_cast<std::size_t>(s) >= gt.slices.size()) gt.slices.resize(s + 1);
        gt.slices[s].push_back(a);
    }
    return gt;
}

inline void write_ground_truth(const std::filesystem::path& path, const evaluation::GroundTruth& gt) {
    auto out = detail::open_out(path);
    out << "slice,x,y,r\n";
    for (std::size_t s = 0; s < gt.slices.size(); ++s)
        for (const auto& a : gt.slices[s])
            out << s << ',' << fmt(a.x) << ',' << fmt(a.y) << ',' << (a.r ? fmt(*a.r) : std::string()) << '\n';
}

// ---- shifts: slice,m0,n0 ----

inline void write_shifts(std::ostream& out, const std::vector<postprocess::Shift>& shifts) {
    out << "slice,m0,n0\n";
    for (std::size_t k = 0; k < shifts.size(); ++k) out << k << ',' << shifts[k].m0 << ',' << shifts[k].n0 << '\n';
}

inline void write_shifts(const std::filesystem::path& path, const std::vector<postprocess::Shift>& shifts) {
    auto out = detail::open_out(path);
    write_shifts(out, shifts);
}

inline std::vector<postprocess::Shift> read_shifts(const std::filesystem::path& path) {
    std::vector<postprocess::Shift> shifts;
    for (const auto& row : detail::read_rows(path, {"slice", "m0", "n0"}, 3, 3))
        shifts.push_back({detail::to_int(row[1], path.string()), detail::to_int(row[2], path.string())});
    return shifts;
}

// ---- membrane profile: one intensity per line, inside to outside ----

inline membrane::MembraneProfile read_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open " + path.string());
    membrane::MembraneProfile p;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line == "intensity") continue;  // optional header
        p.values.push_back(detail::to_double(line, path.string()));
    }
    p.validate();
    return p;
}

inline void write_profile(const std::filesystem::path& path, const membrane::MembraneProfile& p) {
    auto out = detail::open_out(path);
    out << "# membrane intensity profile, inside to outside\n";
    for (double v : p.values) out << fmt(v) << '\n';
}

// ---- evaluation report ----

inline std::string ratio(const std::optional<double>& v) { return v ? fmt(*v) : std::string("undefined"); }

inline void write_report(std::ostream& out, const std::vector<std::pair<std::string, evaluation::EvalReport>>& rows) {
    out << "stage,tp,fp,fn,recall,precision,f_measure\n";
    for (const auto& [stage, r] : rows)
        out << stage << ',' << r.true_positives << ',' << r.false_positives << ',' << r.false_negatives << ','
            << ratio(r.recall) << ',' << ratio(r.precision) << ',' << ratio(r.f_measure()) << '\n';
}

inline void write_report_slices(std::ostream& out,
                                const std::vector<std::pair<std::string, evaluation::EvalReport>>& rows) {
    out << "stage,slice,tp,fp,fn\n";
    for (const auto& [stage, r] : rows)
        for (std::size_t k = 0; k < r.per_slice.size(); ++k)
            out << stage << ',' << k << ',' << r.per_slice[k].tp << ',' << r.per_slice[k].fp << ','
                << r.per_slice[k].fn << '\n';
}

inline std::string pct(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
    return buf;
}

inline void write_summary(std::ostream& out, const std::vector<std::pair<std::string, evaluation::EvalReport>>& rows) {
    for (const auto& [stage, r] : rows)
        out << stage << ": TP=" << r.true_positives << " FP=" << r.false_positives << " FN=" << r.false_negatives
            << " recall=" << pct(r.recall) << " precision=" << pct(r.precision) << '\n';
}

}  // namespace tomoseg::io
