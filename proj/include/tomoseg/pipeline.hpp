#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tomoseg/assembly.hpp"
#include "tomoseg/clahe.hpp"
#include "tomoseg/config.hpp"
#include "tomoseg/evaluation.hpp"
#include "tomoseg/graphcut.hpp"
#include "tomoseg/hough.hpp"
#include "tomoseg/io.hpp"
#include "tomoseg/membrane.hpp"
#include "tomoseg/parallel.hpp"
#include "tomoseg/pgm.hpp"
#include "tomoseg/postprocess.hpp"

namespace tomoseg {

/// Failure inside a pipeline stage; the message names the stage and slice.
class StageError : public Error {
public:
    StageError(const std::string& stage, long slice, const std::string& what)
        : Error("stage " + stage + (slice >= 0 ? " slice " + std::to_string(slice) : std::string()) + ": " + what),
          stage_(stage), slice_(slice) {}

    const std::string& stage() const { return stage_; }
    long slice() const { return slice_; }

private:
    std::string stage_;
    long slice_;
};

struct SliceOutcome {
    GrayImage enhanced;
    std::vector<seeding::Seed> seeds;
    std::vector<seeding::Seed> skipped;  // seeds whose source disk touched the crop frame
    assembly::LabeledSlice labeled;
};

struct PipelineResult {
    std::vector<SliceOutcome> slices;
    postprocess::CellMatrix cells;
    postprocess::FilterResult filtered;
    postprocess::AlignResult alignment;
    postprocess::CellMatrix aligned;
    std::optional<evaluation::EvalReport> segmented_report;
    std::optional<evaluation::EvalReport> filtered_report;
};

inline membrane::BioParams bio_params(const PipelineConfig& c, membrane::MembraneProfile profile) {
    membrane::BioParams bio{c.r_min, c.r_max, c.l_m, std::move(profile)};
    if (bio.profile.length() > static_cast<std::size_t>(bio.l_m)) bio.profile.values.resize(bio.l_m);
    bio.validate();
    return bio;
}

/// Enhance -> seed -> per-seed graph cut -> slice assembly for one slice.
inline SliceOutcome process_slice(const GrayImage& slice, int slice_idx, const PipelineConfig& cfg,
                                  const membrane::BioParams& bio) {
    SliceOutcome out;
    try {
        out.enhanced = cfg.enhance ? clahe::apply_clahe(slice, cfg.clahe) : slice;
    } catch (const Error& e) {
        throw StageError("enhance", slice_idx, e.what());
    }
    VectorField field;
    try {
        field = gradient(out.enhanced);
        const auto sp = cfg.seed_params();
        const auto acc = seeding::hough_accumulate(out.enhanced, field, sp.r_min, sp.r_max, sp.direction, sp.noise_floor);
        out.seeds = seeding::detect_seeds(acc, sp.rel_threshold, sp.nms_radius);
    } catch (const Error& e) {
        throw StageError("seeds", slice_idx, e.what());
    }

    std::vector<assembly::Candidate> candidates;
    const graphcut::GraphCutParams gp{cfg.g_mode, cfg.w_max, cfg.cc_assign};
    for (const auto& seed : out.seeds) {
        try {
            auto seg = graphcut::segment_seed(out.enhanced, field, seed, bio, gp);
            candidates.push_back({std::move(seg.mask), seg.boundary_cc});
        } catch (const ConstraintViolation&) {
            out.skipped.push_back(seed);
        } catch (const Error& e) {
            throw StageError("segment", slice_idx,
                             "seed (" + std::to_string(seed.x) + "," + std::to_string(seed.y) + "): " + e.what());
        }
    }
    out.labeled = assembly::assemble(candidates, bio, slice.width(), slice.height(), slice_idx,
                                     {cfg.cc_min, cfg.jaccard});
    return out;
}

/// Pools all records of a matrix and scores them against the annotations.
inline evaluation::EvalReport evaluate(const postprocess::CellMatrix& m, const evaluation::GroundTruth& truth,
                                       double tol) {
    std::vector<assembly::CellRecord> all;
    for (const auto& s : m.slices) all.insert(all.end(), s.begin(), s.end());
    auto matching = evaluation::match_detections(all, truth, tol);
    return evaluation::score(matching);
}

/// Binary cell planes of every slice of a matrix.
inline std::vector<postprocess::Plane> matrix_masks(const postprocess::CellMatrix& m, int width, int height) {
    std::vector<postprocess::Plane> masks;
    for (const auto& s : m.slices) masks.push_back(postprocess::binary_mask(s, width, height));
    return masks;
}

/// Label map of a set of records (cell_idx as label).
inline std::vector<std::uint16_t> label_map(const std::vector<assembly::CellRecord>& cells, int width, int height) {
    std::vector<std::uint16_t> labels(static_cast<std::size_t>(width) * height, 0);
    for (const auto& c : cells)
        for (const auto& p : c.mask)
            if (p.x >= 0 && p.y >= 0 && p.x < width && p.y < height)
                labels[static_cast<std::size_t>(p.y) * width + p.x] = static_cast<std::uint16_t>(c.cell_idx);
    return labels;
}

inline std::string slice_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "slice_%03zu.pgm", k);
    return buf;
}

/// Template from the config: the profile file if given, else the mean of
/// the configured rays on the (enhanced) profile slice.
inline membrane::MembraneProfile resolve_profile(const PipelineConfig& cfg, const SliceStack& stack) {
    try {
        if (cfg.membrane_profile) return io::read_profile(*cfg.membrane_profile);
        if (static_cast<std::size_t>(cfg.profile_slice) >= stack.size())
            throw ParameterError("profile_slice beyond the stack");
        const auto& src = stack[cfg.profile_slice];
        return membrane::estimate_profile(cfg.enhance ? clahe::apply_clahe(src, cfg.clahe) : src, cfg.profile_rays);
    } catch (const Error& e) {
        throw StageError("profile", -1, e.what());
    }
}

/// Runs every stage over `stack`. Outputs land in cfg.output_dir as each
/// stage completes; pass write = false to keep everything in memory.
inline PipelineResult run_stages(const PipelineConfig& cfg, const SliceStack& stack, const membrane::BioParams& bio,
                                 const std::optional<evaluation::GroundTruth>& truth, bool write = true) {
    if (stack.empty()) throw StageError("load", -1, "empty stack");
    namespace fs = std::filesystem;
    const fs::path out_dir = cfg.output_dir;
    const int width = stack[0].width();
    const int height = stack[0].height();

    PipelineResult result;
    result.slices.resize(stack.size());
    parallel_for(stack.size(), cfg.parallelism, [&](std::size_t k) {
        result.slices[k] = process_slice(stack[k], static_cast<int>(k), cfg, bio);
    });

    result.cells.slices.resize(stack.size());
    for (std::size_t k = 0; k < stack.size(); ++k) result.cells.slices[k] = result.slices[k].labeled.records;

    if (write) {
        fs::create_directories(out_dir / "enhanced");
        fs::create_directories(out_dir / "labels");
        std::vector<std::vector<seeding::Seed>> seeds;
        for (std::size_t k = 0; k < stack.size(); ++k) {
            pgm::write_gray(out_dir / "enhanced" / slice_name(k), result.slices[k].enhanced, 16);
            pgm::write_labels(out_dir / "labels" / slice_name(k), width, height, result.slices[k].labeled.labels);
            seeds.push_back(result.slices[k].seeds);
        }
        io::write_stack_seeds(out_dir / "seeds.csv", seeds);
        io::write_cells(out_dir / "cells.csv", result.cells);
    }

    try {
        result.filtered = postprocess::consistency_filter(result.cells, cfg.filter_params());
    } catch (const Error& e) {
        throw StageError("filter", -1, e.what());
    }
    if (write) io::write_cells(out_dir / "cells_filtered.csv", result.filtered.matrix);

    try {
        result.alignment = postprocess::align_stack(matrix_masks(result.filtered.matrix, width, height), cfg.parallelism);
    } catch (const Error& e) {
        throw StageError("align", -1, e.what());
    }
    result.aligned = postprocess::translate_matrix(result.filtered.matrix, result.alignment.corrections);
    if (write) {
        fs::create_directories(out_dir / "aligned");
        io::write_shifts(out_dir / "shifts.csv", result.alignment.corrections);
        io::write_cells(out_dir / "cells_aligned.csv", result.aligned);
        for (std::size_t k = 0; k < stack.size(); ++k)
            pgm::write_labels(out_dir / "aligned" / slice_name(k), width, height,
                              label_map(result.aligned.slices[k], width, height));
    }

    if (truth) {
        const double tol = cfg.match_tolerance();
        result.segmented_report = evaluate(result.cells, *truth, tol);
        result.filtered_report = evaluate(result.filtered.matrix, *truth, tol);
        if (write) {
            const std::vector<std::pair<std::string, evaluation::EvalReport>> rows{
                {"segmented", *result.segmented_report}, {"filtered", *result.filtered_report}};
            std::ofstream csv(out_dir / "report.csv", std::ios::binary);
            io::write_report(csv, rows);
            std::ofstream per(out_dir / "report_slices.csv", std::ios::binary);
            io::write_report_slices(per, rows);
            std::ofstream txt(out_dir / "report.txt", std::ios::binary);
            io::write_summary(txt, rows);
        }
    }
    return result;
}

/// Validates the config, loads the manifest and runs every stage.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, bool write = true) {
    cfg.validate();
    SliceStack stack;
    try {
        stack = load_stack(cfg.manifest);
    } catch (const Error& e) {
        throw StageError("load", -1, e.what());
    }
    if (stack.empty()) throw StageError("load", -1, "empty stack");
    std::optional<evaluation::GroundTruth> truth;
    if (cfg.ground_truth) {
        try {
            truth = io::read_ground_truth(*cfg.ground_truth);
        } catch (const Error& e) {
            throw StageError("eval", -1, e.what());
        }
    }
    const auto bio = bio_params(cfg, resolve_profile(cfg, stack));
    return run_stages(cfg, stack, bio, truth, write);
}

}  // namespace tomoseg
