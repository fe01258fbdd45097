#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tomoseg/clahe.hpp"
#include "tomoseg/errors.hpp"
#include "tomoseg/graphcut.hpp"
#include "tomoseg/hough.hpp"
#include "tomoseg/membrane.hpp"
#include "tomoseg/postprocess.hpp"

namespace tomoseg {

/// Everything a pipeline run needs. Read from a flat `key = value` file.
struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path output_dir = "tomoseg_out";
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::filesystem::path> membrane_profile;
    std::vector<std::pair<Pixel, Pixel>> profile_rays;  // inner -> outer, on slice `profile_slice`
    int profile_slice = 0;

    bool enhance = true;
    clahe::ClaheParams clahe;

    int r_min = 10;
    int r_max = 22;
    int l_m = 28;

    double seed_threshold = 0.5;
    int seed_nms_radius = 0;  // 0: use r_min
    double seed_noise_floor = 0.01;
    seeding::VoteDirection vote_direction = seeding::VoteDirection::Both;

    graphcut::ConductanceMode g_mode = graphcut::ConductanceMode::Literal;
    membrane::CCAssign cc_assign = membrane::CCAssign::Center;
    double w_max = graphcut::kDefaultWMax;
    double cc_min = 0.2;
    double jaccard = 0.8;

    int filter_window = 3;
    postprocess::FilterMode filter_mode = postprocess::FilterMode::All;
    std::optional<double> center_tol;  // default r_max / 2
    double area_tol = 0.2;
    double perim_tol = 0.2;

    std::optional<double> eval_tol;  // default r_max
    int parallelism = 1;

    seeding::SeedParams seed_params() const {
        return {r_min, r_max, seed_threshold, seed_nms_radius > 0 ? seed_nms_radius : r_min, seed_noise_floor,
                vote_direction};
    }

    postprocess::FilterParams filter_params() const {
        return {filter_window, center_tol.value_or(r_max / 2.0), area_tol, perim_tol, filter_mode};
    }

    double match_tolerance() const { return eval_tol.value_or(static_cast<double>(r_max)); }

    /// Range checks plus existence of every referenced input file. Single-slice
    /// tools pass need_manifest = false.
    void validate(bool need_manifest = true) const {
        auto need_file = [](const std::filesystem::path& p, const char* key) {
            if (p.empty()) throw ParameterError(std::string("config: ") + key + " is required");
            if (!std::filesystem::is_regular_file(p))
                throw ParameterError(std::string("config: ") + key + " not found: " + p.string());
        };
        if (need_manifest) need_file(manifest, "manifest");
        if (ground_truth) need_file(*ground_truth, "ground_truth");
        if (membrane_profile) need_file(*membrane_profile, "membrane_profile");
        if (!membrane_profile && profile_rays.empty())
            throw ParameterError("config: set membrane_profile or profile_rays");
        if (profile_slice < 0) throw ParameterError("config: profile_slice must be >= 0");
        clahe.validate();
        if (!(r_min > 0 && r_min <= r_max && r_max <= l_m))
            throw ParameterError("config: need 0 < r_min <= r_max <= l_m");
        if (!(seed_threshold > 0.0 && seed_threshold <= 1.0)) throw ParameterError("config: seed_threshold in (0,1]");
        if (seed_nms_radius < 0) throw ParameterError("config: seed_nms_radius must be >= 0");
        if (!(w_max > 0.0)) throw ParameterError("config: w_max must be > 0");
        if (!(jaccard > 0.0 && jaccard <= 1.0)) throw ParameterError("config: jaccard in (0,1]");
        filter_params().validate();
        if (eval_tol && !(*eval_tol > 0.0)) throw ParameterError("config: eval_tol must be > 0");
        if (parallelism < 1) throw ParameterError("config: parallelism must be >= 1");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    in.imbue(std::locale::classic());
    double d = 0.0;
    if (!(in >> d) || !(in >> std::ws).eof()) throw ParameterError("config: " + key + ": not a number: " + v);
    return d;
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_number(key, v);
    if (d != static_cast<int>(d)) throw ParameterError("config: " + key + ": not an integer: " + v);
    return static_cast<int>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParameterError("config: " + key + ": expected true/false");
}

}  // namespace detail

inline seeding::VoteDirection parse_vote_direction(const std::string& v) {
    if (v == "plus") return seeding::VoteDirection::Plus;
    if (v == "minus") return seeding::VoteDirection::Minus;
    if (v == "both") return seeding::VoteDirection::Both;
    throw ParameterError("vote direction must be plus, minus or both");
}

inline graphcut::ConductanceMode parse_g_mode(const std::string& v) {
    if (v == "literal") return graphcut::ConductanceMode::Literal;
    if (v == "linear") return graphcut::ConductanceMode::Linear;
    throw ParameterError("g-mode must be literal or linear");
}

inline membrane::CCAssign parse_cc_assign(const std::string& v) {
    if (v == "center") return membrane::CCAssign::Center;
    if (v == "span") return membrane::CCAssign::Span;
    throw ParameterError("cc assignment must be center or span");
}

inline postprocess::FilterMode parse_filter_mode(const std::string& v) {
    if (v == "all") return postprocess::FilterMode::All;
    if (v == "majority") return postprocess::FilterMode::Majority;
    throw ParameterError("filter mode must be all or majority");
}

/// "8x8" -> (8, 8)
inline std::pair<int, int> parse_tiles(const std::string& v) {
    const auto x = v.find('x');
    if (x == std::string::npos) throw ParameterError("tiles must look like 8x8");
    return {detail::parse_int("tiles", v.substr(0, x)), detail::parse_int("tiles", v.substr(x + 1))};
}

/// "x0 y0 x1 y1; x0 y0 x1 y1; ..."
inline std::vector<std::pair<Pixel, Pixel>> parse_rays(const std::string& v) {
    std::vector<std::pair<Pixel, Pixel>> rays;
    std::istringstream all(v);
    std::string chunk;
    while (std::getline(all, chunk, ';')) {
        if (detail::trim(chunk).empty()) continue;
        std::istringstream in(chunk);
        Pixel a, b;
        if (!(in >> a.x >> a.y >> b.x >> b.y)) throw ParameterError("profile_rays: expected 'x0 y0 x1 y1'");
        rays.emplace_back(a, b);
    }
    return rays;
}

/// Applies one key to the config. Unknown keys are an error.
inline void apply_setting(PipelineConfig& c, const std::string& key, const std::string& v,
                          const std::filesystem::path& base) {
    auto path = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };
    if (key == "manifest") c.manifest = path(v);
    else if (key == "output_dir") c.output_dir = path(v);
    else if (key == "ground_truth") c.ground_truth = path(v);
    else if (key == "membrane_profile") c.membrane_profile = path(v);
    else if (key == "profile_rays") c.profile_rays = parse_rays(v);
    else if (key == "profile_slice") c.profile_slice = detail::parse_int(key, v);
    else if (key == "enhance") c.enhance = detail::parse_bool(key, v);
    else if (key == "clahe_tiles") std::tie(c.clahe.tiles_x, c.clahe.tiles_y) = parse_tiles(v);
    else if (key == "clahe_alpha") c.clahe.alpha = detail::parse_number(key, v);
    else if (key == "clahe_smax") c.clahe.s_max = detail::parse_number(key, v);
    else if (key == "clahe_bins") c.clahe.n_bins = detail::parse_int(key, v);
    else if (key == "r_min") c.r_min = detail::parse_int(key, v);
    else if (key == "r_max") c.r_max = detail::parse_int(key, v);
    else if (key == "l_m") c.l_m = detail::parse_int(key, v);
    else if (key == "seed_threshold") c.seed_threshold = detail::parse_number(key, v);
    else if (key == "seed_nms_radius") c.seed_nms_radius = detail::parse_int(key, v);
    else if (key == "seed_noise_floor") c.seed_noise_floor = detail::parse_number(key, v);
    else if (key == "vote_direction") c.vote_direction = parse_vote_direction(v);
    else if (key == "g_mode") c.g_mode = parse_g_mode(v);
    else if (key == "cc_assign") c.cc_assign = parse_cc_assign(v);
    else if (key == "w_max") c.w_max = detail::parse_number(key, v);
    else if (key == "cc_min") c.cc_min = detail::parse_number(key, v);
    else if (key == "jaccard") c.jaccard = detail::parse_number(key, v);
    else if (key == "filter_window") c.filter_window = detail::parse_int(key, v);
    else if (key == "filter_mode") c.filter_mode = parse_filter_mode(v);
    else if (key == "center_tol") c.center_tol = detail::parse_number(key, v);
    else if (key == "area_tol") c.area_tol = detail::parse_number(key, v);
    else if (key == "perim_tol") c.perim_tol = detail::parse_number(key, v);
    else if (key == "eval_tol") c.eval_tol = detail::parse_number(key, v);
    else if (key == "parallelism") c.parallelism = detail::parse_int(key, v);
    else throw ParameterError("config: unknown key '" + key + "'");
}

/// Parses a config file. Relative paths resolve against the file's directory.
inline PipelineConfig read_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParameterError("cannot open config " + file.string());
    PipelineConfig c;
    const auto base = file.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), base);
    }
    return c;
}

}  // namespace tomoseg
