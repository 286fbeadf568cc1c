#include "msgpm/pipeline.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <json.hpp>

#include "msgpm/equalize.hpp"
#include "msgpm/error.hpp"
#include "msgpm/flow_color.hpp"
#include "msgpm/image_io.hpp"

namespace msgpm {
namespace {

const char* kModule = "pipeline";

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string model_line(const PlaneModel& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "w%d level=%d id=%d stage=%s sym=%.6f agree=%.6f geo=%zu photo=%zu h_fwd=", m.window.id,
                m.level, m.id, m.stage == Stage::first ? "first" : "residual", m.symmetry_overlap, m.agreement,
                m.geometric_inliers, m.photometric_inliers);
  std::string s = buf;
  s += format_homography(m.h_fwd);
  s += " h_bwd=";
  s += m.h_bwd ? format_homography(*m.h_bwd) : std::string("none");
  return s + "\n";
}

std::string models_text(std::span<const PlaneModel> models) {
  std::string s;
  for (const auto& m : models) s += model_line(m);
  return s;
}

nlohmann::json epe_json(const EpeReport& r) {
  return {{"epe_all", r.epe_all},     {"epe_nocc", r.epe_nocc},   {"epe_occ", r.epe_occ},
          {"count_all", r.count_all}, {"count_nocc", r.count_nocc}, {"count_occ", r.count_occ}};
}

}  // namespace

std::pair<Image, Image> preprocess(const Image& a, const Image& b, const RunConfig& cfg) {
  if (cfg.hsv_equalize) return hsv_histogram_equalize(a, b);
  return {a, b};
}

PipelineResult run_pipeline(const Image& a, const Image& b, const RunConfig& cfg, const Nnf& nnf_fwd,
                            const Nnf& nnf_bwd, const Interpolator& interpolator) {
  PipelineResult r;
  r.msgpm = run_msgpm(a, b, cfg.msgpm, nnf_fwd, nnf_bwd);
  const double epsilon = cfg.msgpm.pyramid.level_config(1).epsilon;
  r.propagated = propagate_models(r.msgpm.merged, r.msgpm.models, a, b, epsilon);
  r.unassigned.resize(r.propagated.flow.size());
  for (std::size_t i = 0; i < r.unassigned.size(); ++i) r.unassigned[i] = r.propagated.flow.valid(i) ? 0 : 1;
  r.interpolated = interpolator.interpolate(r.propagated.flow, a);
  r.flow = merge_by_consistency(r.propagated.flow, r.interpolated, a, b);
  r.occlusion = final_occlusion_map(r.flow, a, b, cfg.msgpm.occlusion.theta_occ, r.unassigned);
  return r;
}

PipelineResult run_pipeline(const Image& a, const Image& b, const RunConfig& cfg) {
  const auto [fwd, bwd] = compute_bidirectional_nnf(a, b, cfg.msgpm.pm, cfg.jobs);
  return run_pipeline(a, b, cfg, fwd, bwd, EdgeAwareInterpolator(cfg.interp));
}

std::string nnf_cache_key(const Image& a, const Image& b, const PatchMatchConfig& pm) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw NumericError(kModule, "cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const Image* img : {&a, &b}) {
    const int dims[3] = {img->width(), img->height(), img->channels()};
    EVP_DigestUpdate(ctx, dims, sizeof dims);
    EVP_DigestUpdate(ctx, img->data().data(), img->data().size() * sizeof(double));
  }
  char params[128];
  std::snprintf(params, sizeof params, "r=%d it=%d decay=%.17g seed=%llu", pm.patch_radius, pm.iterations,
                pm.search_decay, static_cast<unsigned long long>(pm.rng_seed));
  EVP_DigestUpdate(ctx, params, std::strlen(params));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

std::pair<Nnf, Nnf> cached_nnf(const Image& a, const Image& b, const PatchMatchConfig& pm, int jobs,
                               const std::string& cache_dir) {
  if (cache_dir.empty()) return compute_bidirectional_nnf(a, b, pm, jobs);
  const std::filesystem::path dir(cache_dir);
  const std::string key = nnf_cache_key(a, b, pm);
  const auto path = [&](const char* suffix) { return dir / (key + suffix); };
  if (std::filesystem::exists(path(".fwd.flo")) && std::filesystem::exists(path(".bwd.flo"))) {
    return {load_nnf(path(".fwd.flo"), path(".fwd.cost")), load_nnf(path(".bwd.flo"), path(".bwd.cost"))};
  }
  auto nnfs = compute_bidirectional_nnf(a, b, pm, jobs);
  std::filesystem::create_directories(dir);
  save_nnf(nnfs.first, path(".fwd.flo"), path(".fwd.cost"));
  save_nnf(nnfs.second, path(".bwd.flo"), path(".bwd.cost"));
  // Reload so cached and fresh runs see identical (float32-rounded) costs.
  return {load_nnf(path(".fwd.flo"), path(".fwd.cost")), load_nnf(path(".bwd.flo"), path(".bwd.cost"))};
}

OcclusionMask load_mask(const std::filesystem::path& path) {
  const Image img = load_image(path);
  OcclusionMask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m.set(x, y, img.at(x, y, 0) > 0.5);
  return m;
}

void dump_levels(const MsgpmResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& lv : result.levels) {
    const std::string stem = "level" + std::to_string(lv.level);
    const auto& as = lv.assignment;
    save_id_png(as.model_ids(), as.width(), as.height(), dir / (stem + "_assignment.png"));
    write_float_raster(as.losses(), as.width(), as.height(), dir / (stem + "_loss.raw"));
    std::vector<PlaneModel> mine;
    for (const auto& m : result.models)
      if (m.level == lv.level) mine.push_back(m);
    write_text(dir / (stem + "_models.txt"), models_text(mine));
    save_nnf(lv.nnf_fwd, dir / (stem + "_nnf_fwd.flo"), dir / (stem + "_nnf_fwd.cost"));
    save_nnf(lv.nnf_bwd, dir / (stem + "_nnf_bwd.flo"), dir / (stem + "_nnf_bwd.cost"));
  }
}

std::string run(RunConfig cfg) {
  cfg.resolve();
  if (cfg.image1.empty() || cfg.image2.empty()) throw InvalidArgument(kModule, "image1 and image2 are required");
  const Image raw_a = load_image(cfg.image1);
  const Image raw_b = load_image(cfg.image2);
  if (!raw_a.same_shape(raw_b)) throw InvalidArgument(kModule, "input images differ in size or channel count");
  const auto [a, b] = preprocess(raw_a, raw_b, cfg);

  const auto [fwd, bwd] = cached_nnf(a, b, cfg.msgpm.pm, cfg.jobs, cfg.cache_dir);
  std::unique_ptr<Interpolator> interp;
  if (cfg.external_interp.empty()) {
    interp = std::make_unique<EdgeAwareInterpolator>(cfg.interp);
  } else {
    interp = std::make_unique<ExternalInterpolator>(read_flo(cfg.external_interp));
  }
  const PipelineResult r = run_pipeline(a, b, cfg, fwd, bwd, *interp);

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  write_flo(r.flow, out / "flow.flo");
  save_png(flow_to_color(r.flow), out / "flow.png");
  save_mask_png(r.occlusion, out / "occlusion.png");
  write_text(out / "manifest.txt", cfg.manifest());
  write_text(out / "models.txt", models_text(r.msgpm.models));
  if (!cfg.dump_levels.empty()) dump_levels(r.msgpm, cfg.dump_levels);

  nlohmann::json report;
  report["interpolator"] = interp->name();
  report["pixels"] = r.flow.size();
  report["assigned_msgpm"] = r.msgpm.merged.flow.count_valid();
  report["assigned_after_propagation"] = r.propagated.flow.count_valid();
  report["occluded"] = r.occlusion.count();
  report["models"] = r.msgpm.models.size();
  for (const auto& lv : r.msgpm.levels) {
    std::size_t models = 0;
    for (const auto& m : r.msgpm.models) models += m.level == lv.level;
    report["levels"].push_back({{"level", lv.level},
                                {"radius", lv.radius},
                                {"assigned", lv.assignment.count_assigned()},
                                {"models", models},
                                {"multiplicity_demoted", lv.demoted}});
  }
  // Cue thresholds are not given by the method description; they are
  // defaults of this implementation and flagged as such.
  report["unpublished_thresholds"] = {{"epsilon", cfg.msgpm.pyramid.level.epsilon},
                                      {"eta", cfg.msgpm.pyramid.level.eta},
                                      {"tau_agree", cfg.msgpm.pyramid.level.tau_agree},
                                      {"delta_m", cfg.msgpm.occlusion.delta_m},
                                      {"theta_occ", cfg.msgpm.occlusion.theta_occ},
                                      {"beta", cfg.msgpm.pyramid.beta}};
  if (!cfg.gt_flow.empty()) {
    const FlowField gt = read_flo(cfg.gt_flow);
    const OcclusionMask occ = cfg.gt_occlusion.empty() ? OcclusionMask(gt.width(), gt.height())
                                                       : load_mask(cfg.gt_occlusion);
    report["epe"] = epe_json(compute_epe(r.flow, gt, occ));
    report["epe_table"] = epe_table_header() + "\n" + epe_table_row("MSGPM", compute_epe(r.flow, gt, occ));
    if (!cfg.gt_occlusion.empty()) {
      const MaskScore s = score_mask(r.occlusion, occ);
      report["occlusion_score"] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    }
  }
  const std::string text = report.dump(2) + "\n";
  write_text(out / "report.json", text);
  return text;
}

CompareResult compare(const FlowField& flow_a, const FlowField& flow_b, const FlowField& gt, const OcclusionMask& occ,
                      const std::string& name_a, const std::string& name_b) {
  CompareResult r;
  r.a = compute_epe(flow_a, gt, occ);
  r.b = compute_epe(flow_b, gt, occ);
  r.table = epe_table_header() + "\n" + epe_table_row(name_a, r.a) + "\n" + epe_table_row(name_b, r.b) + "\n";
  r.difference = epe_difference_map(flow_a, flow_b, gt);
  return r;
}

}  // namespace msgpm
