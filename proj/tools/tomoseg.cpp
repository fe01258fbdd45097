#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tomoseg/config.hpp"
#include "tomoseg/io.hpp"
#include "tomoseg/phantom.hpp"
#include "tomoseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tomoseg;

namespace {

int run_enhance(const std::string& in, const std::string& out, const std::string& tiles, double alpha, double smax,
                int bins) {
    clahe::ClaheParams p;
    std::tie(p.tiles_x, p.tiles_y) = parse_tiles(tiles);
    p.alpha = alpha;
    p.s_max = smax;
    p.n_bins = bins;
    p.validate();
    pgm::write_gray(out, clahe::apply_clahe(pgm::read_gray(in), p), 16);
    return 0;
}

int run_seeds(const std::string& in, const std::string& out, const seeding::SeedParams& p) {
    const auto seeds = seeding::find_seeds(pgm::read_gray(in), p);
    if (out.empty() || out == "-") {
        io::write_seeds(std::cout, seeds);
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw MalformedInput("cannot write " + out);
        io::write_seeds(f, seeds);
    }
    return 0;
}

int run_segment(const std::string& config, const std::string& slice_path, const std::string& out_dir,
                const std::string& g_mode, int slice_idx) {
    auto cfg = read_config(config);
    if (!g_mode.empty()) cfg.g_mode = parse_g_mode(g_mode);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.profile_slice = 0;
    cfg.validate(false);
    const auto img = pgm::read_gray(slice_path);
    const SliceStack single({img});
    const auto bio = bio_params(cfg, resolve_profile(cfg, single));
    const auto outcome = process_slice(img, slice_idx, cfg, bio);

    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    pgm::write_labels(dir / "labels.pgm", img.width(), img.height(), outcome.labeled.labels);
    postprocess::CellMatrix m;
    m.slices.resize(static_cast<std::size_t>(slice_idx) + 1);
    m.slices[slice_idx] = outcome.labeled.records;
    io::write_cells(dir / "cells.csv", m);
    std::ofstream seeds(dir / "seeds.csv", std::ios::binary);
    io::write_seeds(seeds, outcome.seeds);
    std::cout << outcome.labeled.records.size() << " cells from " << outcome.seeds.size() << " seeds ("
              << outcome.skipped.size() << " skipped at the crop frame)\n";
    return 0;
}

int run_filter(const std::string& in, const std::string& out, const postprocess::FilterParams& p, std::size_t slices) {
    const auto m = io::read_cells(in, slices);
    const auto r = postprocess::consistency_filter(m, p);
    io::write_cells(out, r.matrix);
    std::size_t unverified = 0;
    for (bool v : r.verified) unverified += !v;
    std::cout << r.matrix.cell_count() << " of " << m.cell_count() << " cells kept; " << unverified
              << " boundary slices passed through unverified\n";
    return 0;
}

// Label PGMs from a manifest (`<path> [angle]` per line) or the positional list.
std::vector<fs::path> label_paths(const std::string& manifest, const std::vector<std::string>& files) {
    std::vector<fs::path> paths;
    if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw MalformedInput("cannot open " + manifest);
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string rel;
            if (!(ls >> rel) || rel[0] == '#') continue;
            paths.push_back(fs::path(manifest).parent_path() / rel);
        }
    }
    for (const auto& f : files) paths.emplace_back(f);
    if (paths.size() < 2) throw ParameterError("align: need at least 2 label maps");
    return paths;
}

int run_align(const std::string& manifest, const std::vector<std::string>& files, const std::string& cells,
              const std::string& out_dir, int parallelism) {
    const auto paths = label_paths(manifest, files);
    std::optional<postprocess::CellMatrix> keep;
    if (!cells.empty()) keep = io::read_cells(cells, paths.size());

    std::vector<postprocess::Plane> masks;
    std::vector<RawImage> raws;
    for (std::size_t k = 0; k < paths.size(); ++k) {
        auto raw = pgm::read_labels(paths[k]);
        if (keep) {
            std::set<int> kept;
            for (const auto& r : keep->slices[k]) kept.insert(r.cell_idx);
            for (auto& v : raw.samples)
                if (v != 0 && !kept.count(v)) v = 0;
        }
        postprocess::Plane p(raw.width, raw.height);
        for (std::size_t i = 0; i < raw.samples.size(); ++i) p.values[i] = raw.samples[i] != 0 ? 1.0 : 0.0;
        masks.push_back(std::move(p));
        raws.push_back(std::move(raw));
    }
    const auto result = postprocess::align_stack(masks, parallelism);

    const fs::path dir = out_dir;
    fs::create_directories(dir / "aligned");
    io::write_shifts(dir / "shifts.csv", result.corrections);
    for (std::size_t k = 0; k < raws.size(); ++k) {
        const auto& raw = raws[k];
        const postprocess::Shift s = -result.corrections[k];
        std::vector<std::uint16_t> moved(raw.samples.size(), 0);
        for (int y = 0; y < raw.height; ++y)
            for (int x = 0; x < raw.width; ++x) {
                const int sy = y + s.m0;
                const int sx = x + s.n0;
                if (sx >= 0 && sy >= 0 && sx < raw.width && sy < raw.height)
                    moved[static_cast<std::size_t>(y) * raw.width + x] =
                        raw.samples[static_cast<std::size_t>(sy) * raw.width + sx];
            }
        pgm::write_labels(dir / "aligned" / slice_name(k), raw.width, raw.height, moved);
    }
    if (keep) io::write_cells(dir / "cells_aligned.csv", postprocess::translate_matrix(*keep, result.corrections));
    return 0;
}

int run_eval(const std::string& cells, const std::string& truth, double tol, const std::string& out,
             const std::string& stage) {
    const auto gt = io::read_ground_truth(truth);
    const auto m = io::read_cells(cells, gt.slices.size());
    const std::vector<std::pair<std::string, evaluation::EvalReport>> rows{{stage, evaluate(m, gt, tol)}};
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw MalformedInput("cannot write " + out);
        io::write_report(f, rows);
    }
    io::write_summary(std::cout, rows);
    return 0;
}

void write_phantom_config(const fs::path& path, const phantom::PhantomSpec& spec) {
    const int r_min = std::max(1, spec.radius_min - 4);
    const int r_max = spec.radius_max + 4;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot write " + path.string());
    out << "# generated with the phantom; paths are relative to this file\n"
        << "manifest = manifest.txt\n"
        << "output_dir = out\n"
        << "ground_truth = ground_truth.csv\n"
        << "membrane_profile = profile.csv\n"
        << "r_min = " << r_min << "\n"
        << "r_max = " << r_max << "\n"
        << "l_m = " << r_max + 6 << "\n";
}

int run_phantom(const std::string& out_dir, const phantom::PhantomSpec& spec, std::uint64_t seed) {
    const auto ph = phantom::generate_phantom(spec, seed);
    const fs::path dir = out_dir;
    fs::create_directories(dir / "slices");
    fs::create_directories(dir / "masks");
    std::vector<std::pair<std::string, double>> entries;
    for (std::size_t k = 0; k < ph.stack.size(); ++k) {
        const auto name = slice_name(k);
        pgm::write_gray(dir / "slices" / name, ph.stack[k], 16);
        pgm::write_labels(dir / "masks" / name, spec.width, spec.height, ph.true_labels[k]);
        entries.emplace_back("slices/" + name, ph.stack.angles()[k]);
    }
    write_manifest(dir / "manifest.txt", entries);
    io::write_ground_truth(dir / "ground_truth.csv", ph.truth);
    io::write_profile(dir / "profile.csv", ph.profile);
    io::write_shifts(dir / "true_shifts.csv", ph.translations);
    write_phantom_config(dir / "pipeline.cfg", spec);
    std::size_t spurious = 0;
    for (const auto& s : ph.spurious) spurious += s.size();
    std::cout << ph.stack.size() << " slices, " << ph.disks.size() << " disks, " << spurious
              << " spurious disks; SNR(slice 0) = " << phantom::measure_snr_db(ph.clean[0], ph.stack[0]) << " dB\n";
    return 0;
}

int run_pipeline_cmd(const std::string& config, const std::string& out_dir, std::optional<int> parallelism) {
    auto cfg = read_config(config);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (parallelism) cfg.parallelism = *parallelism;
    const auto result = run_pipeline(cfg, true);
    std::cout << result.cells.cell_count() << " cells segmented, " << result.filtered.matrix.cell_count()
              << " after filtering; outputs in " << cfg.output_dir.string() << "\n";
    if (result.segmented_report) {
        io::write_summary(std::cout, {{"segmented", *result.segmented_report}, {"filtered", *result.filtered_report}});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell segmentation for tomogram slice stacks"};
    app.require_subcommand(1);

    auto* enhance = app.add_subcommand("enhance", "CLAHE contrast enhancement of one slice");
    std::string e_in, e_out, e_tiles = "8x8";
    double e_alpha = 100.0, e_smax = 4.0;
    int e_bins = 256;
    enhance->add_option("input", e_in, "input PGM")->required();
    enhance->add_option("output", e_out, "output PGM (16-bit)")->required();
    enhance->add_option("--tiles", e_tiles, "tile grid, e.g. 8x8")->capture_default_str();
    enhance->add_option("--alpha", e_alpha, "clip factor alpha (percent)")->capture_default_str();
    enhance->add_option("--smax", e_smax, "maximum slope s_max")->capture_default_str();
    enhance->add_option("--bins", e_bins, "histogram bins")->capture_default_str();

    auto* seeds = app.add_subcommand("seeds", "gradient Hough seed detection on one slice");
    std::string s_in, s_out, s_dir = "both";
    seeding::SeedParams sp;
    seeds->add_option("input", s_in, "input PGM")->required();
    seeds->add_option("-o,--output", s_out, "CSV path (default stdout)");
    seeds->add_option("--rmin", sp.r_min)->capture_default_str();
    seeds->add_option("--rmax", sp.r_max)->capture_default_str();
    seeds->add_option("--threshold", sp.rel_threshold, "relative to the strongest peak")->capture_default_str();
    seeds->add_option("--nms", sp.nms_radius, "suppression radius (0: rmin)")->capture_default_str();
    seeds->add_option("--noise-floor", sp.noise_floor, "minimum gradient magnitude that votes")->capture_default_str();
    seeds->add_option("--vote-direction", s_dir, "plus, minus or both")->capture_default_str();

    auto* segment = app.add_subcommand("segment", "segment one slice (labels.pgm, cells.csv, seeds.csv)");
    std::string g_config, g_slice, g_out, g_mode;
    int g_idx = 0;
    segment->add_option("slice", g_slice, "input PGM")->required();
    segment->add_option("--config", g_config, "pipeline config")->required();
    segment->add_option("--out-dir", g_out, "output directory (default: config output_dir)");
    segment->add_option("--g-mode", g_mode, "literal or linear");
    segment->add_option("--slice-index", g_idx, "slice index written to cells.csv")->capture_default_str();

    auto* filter = app.add_subcommand("filter", "sliding-window consistency filter over a cell CSV");
    std::string f_in, f_out, f_mode = "all";
    postprocess::FilterParams fp;
    int f_rmax = 22;
    std::optional<double> f_center;
    std::size_t f_slices = 0;
    filter->add_option("input", f_in, "cells CSV")->required();
    filter->add_option("output", f_out, "filtered cells CSV")->required();
    filter->add_option("--window", fp.window, "3, 5 or 7")->capture_default_str();
    filter->add_option("--mode", f_mode, "all or majority")->capture_default_str();
    filter->add_option("--center-tol", f_center, "pixels (default r_max/2)");
    filter->add_option("--r-max", f_rmax, "used for the default centre tolerance")->capture_default_str();
    filter->add_option("--area-tol", fp.area_tol)->capture_default_str();
    filter->add_option("--perim-tol", fp.perim_tol)->capture_default_str();
    filter->add_option("--slices", f_slices, "stack size if trailing slices have no cells");

    auto* align = app.add_subcommand("align", "cross-correlation alignment of label maps");
    std::string a_manifest, a_cells, a_out = ".";
    std::vector<std::string> a_files;
    int a_par = 1;
    align->add_option("labels", a_files, "label PGMs in slice order");
    align->add_option("--manifest", a_manifest, "file listing label PGMs, one per line");
    align->add_option("--cells", a_cells, "filtered cells CSV; other labels are ignored");
    align->add_option("--out-dir", a_out, "writes shifts.csv and aligned/")->capture_default_str();
    align->add_option("--parallelism", a_par)->capture_default_str();

    auto* eval = app.add_subcommand("eval", "recall and precision against annotations");
    std::string v_cells, v_truth, v_out, v_stage = "cells";
    double v_tol = 22.0;
    eval->add_option("cells", v_cells, "cells CSV")->required();
    eval->add_option("truth", v_truth, "ground truth CSV (slice,x,y[,r])")->required();
    eval->add_option("--tol", v_tol, "match distance in pixels")->capture_default_str();
    eval->add_option("-o,--output", v_out, "report CSV");
    eval->add_option("--stage", v_stage, "label for the report row")->capture_default_str();

    auto* phantom_cmd = app.add_subcommand("phantom", "synthetic ring-disk stack with ground truth");
    std::string p_out;
    phantom::PhantomSpec ps;
    std::uint64_t p_seed = 1;
    std::optional<double> p_snr, p_sigma;
    phantom_cmd->add_option("output", p_out, "output directory")->required();
    phantom_cmd->add_option("--seed", p_seed)->capture_default_str();
    phantom_cmd->add_option("--width", ps.width)->capture_default_str();
    phantom_cmd->add_option("--height", ps.height)->capture_default_str();
    phantom_cmd->add_option("--slices", ps.slices)->capture_default_str();
    phantom_cmd->add_option("--disks", ps.disks)->capture_default_str();
    phantom_cmd->add_option("--rmin", ps.radius_min)->capture_default_str();
    phantom_cmd->add_option("--rmax", ps.radius_max)->capture_default_str();
    phantom_cmd->add_option("--ring-sigma", ps.membrane_sigma)->capture_default_str();
    phantom_cmd->add_option("--contrast", ps.membrane_contrast)->capture_default_str();
    phantom_cmd->add_option("--snr", p_snr, "target SNR in dB (default 5.16)");
    phantom_cmd->add_option("--noise-sigma", p_sigma, "fixed noise sigma instead of a target SNR");
    phantom_cmd->add_option("--jitter", ps.jitter)->capture_default_str();
    phantom_cmd->add_option("--spurious-rate", ps.spurious_rate)->capture_default_str();

    auto* pipeline = app.add_subcommand("pipeline", "run every stage from a config file");
    std::string l_config, l_out;
    std::optional<int> l_par;
    pipeline->add_option("--config", l_config, "pipeline config")->required();
    pipeline->add_option("--out-dir", l_out, "overrides output_dir");
    pipeline->add_option("--parallelism", l_par, "overrides parallelism");

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*enhance) return run_enhance(e_in, e_out, e_tiles, e_alpha, e_smax, e_bins);
        if (*seeds) {
            sp.direction = parse_vote_direction(s_dir);
            if (sp.nms_radius == 0) sp.nms_radius = sp.r_min;
            return run_seeds(s_in, s_out, sp);
        }
        if (*segment) return run_segment(g_config, g_slice, g_out, g_mode, g_idx);
        if (*filter) {
            fp.mode = parse_filter_mode(f_mode);
            fp.center_tol = f_center.value_or(f_rmax / 2.0);
            return run_filter(f_in, f_out, fp, f_slices);
        }
        if (*align) return run_align(a_manifest, a_files, a_cells, a_out, a_par);
        if (*eval) return run_eval(v_cells, v_truth, v_tol, v_out, v_stage);
        if (*phantom_cmd) {
            if (p_sigma) {
                ps.snr_db.reset();
                ps.noise_sigma = *p_sigma;
            }
            if (p_snr) ps.snr_db = *p_snr;
            return run_phantom(p_out, ps, p_seed);
        }
        if (*pipeline) return run_pipeline_cmd(l_config, l_out, l_par);
    } catch (const StageError& e) {
        std::cerr << "tomoseg: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "tomoseg: stage " << stage << ": " << e.what() << '\n';
        return 2;
    }
    return 1;
}
