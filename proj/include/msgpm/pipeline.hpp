#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "msgpm/config.hpp"
#include "msgpm/densify.hpp"
#include "msgpm/metrics.hpp"
#include "msgpm/multiscale.hpp"

namespace msgpm {

struct PipelineResult {
  MsgpmResult msgpm;
  MergedFlow propagated;              // after homography-model propagation
  std::vector<std::uint8_t> unassigned;  // still without a model after propagation
  FlowField interpolated;
  FlowField flow;  // final dense flow
  OcclusionMask occlusion;
};

// Optional HSV equalization of the pair.
std::pair<Image, Image> preprocess(const Image& a, const Image& b, const RunConfig& cfg);

// MSGPM, propagation, interpolation, consistency merge and the final
// occlusion map on an already preprocessed pair. `cfg` must be resolved.
PipelineResult run_pipeline(const Image& a, const Image& b, const RunConfig& cfg, const Nnf& nnf_fwd,
                            const Nnf& nnf_bwd, const Interpolator& interpolator);
PipelineResult run_pipeline(const Image& a, const Image& b, const RunConfig& cfg);

// Hex SHA-256 over both images and the PatchMatch settings.
std::string nnf_cache_key(const Image& a, const Image& b, const PatchMatchConfig& pm);

// Bidirectional NNF, read from or stored into `cache_dir` when non-empty.
std::pair<Nnf, Nnf> cached_nnf(const Image& a, const Image& b, const PatchMatchConfig& pm, int jobs,
                               const std::string& cache_dir);

// Loads a mask image; any channel-0 intensity above 0.5 is occluded.
OcclusionMask load_mask(const std::filesystem::path& path);

// Full run from files; writes flow.flo, flow.png, occlusion.png,
// manifest.txt, models.txt and report.json into cfg.out_dir and returns the
// report text.
std::string run(RunConfig cfg);

// Writes per-level assignments, losses, models and NNFs into `dir`.
void dump_levels(const MsgpmResult& result, const std::filesystem::path& dir);

struct CompareResult {
  EpeReport a;
  EpeReport b;
  std::string table;
  Image difference;
};

CompareResult compare(const FlowField& flow_a, const FlowField& flow_b, const FlowField& gt, const OcclusionMask& occ,
                      const std::string& name_a = "A", const std::string& name_b = "B");

}  // namespace msgpm
