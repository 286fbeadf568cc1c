#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "msgpm/config.hpp"
#include "msgpm/error.hpp"
#include "msgpm/image_io.hpp"
#include "msgpm/metrics.hpp"
#include "msgpm/pipeline.hpp"
#include "msgpm/synth.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

msgpm::SynthScene make_scene(const std::string& name, std::uint64_t seed, double shift) {
  if (name == "two-plane") return msgpm::two_plane_fixture(seed, shift);
  if (name == "small-plane") return msgpm::small_plane_fixture(seed);
  if (name == "thin-bar") return msgpm::thin_bar_fixture(seed);
  if (name == "identity") {
    msgpm::SceneLayer bg;
    msgpm::SceneOptions opts;
    opts.texture_seed = seed;
    return msgpm::make_plane_scene({bg}, opts);
  }
  throw msgpm::InvalidArgument("cli", "unknown scene '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale generalized plane match optical flow"};
  app.require_subcommand(1);

  // flow
  auto* flow = app.add_subcommand("flow", "full pipeline");
  std::string config_file, img1, img2, out_dir, gt, gt_occ, cache, dumps, external;
  std::vector<std::string> overrides;
  int jobs = -1;
  long long seed = -1;
  bool equalize = false;
  flow->add_option("--config", config_file, "key = value configuration file");
  flow->add_option("-1,--image1", img1, "first frame (PNG/PPM)");
  flow->add_option("-2,--image2", img2, "second frame (PNG/PPM)");
  flow->add_option("-o,--out", out_dir, "output directory");
  flow->add_option("--gt", gt, "ground-truth .flo");
  flow->add_option("--gt-occ", gt_occ, "ground-truth occlusion mask (PNG, occluded = white)");
  flow->add_option("--cache", cache, "NNF cache directory");
  flow->add_option("--dump-levels", dumps, "per-level debug dump directory");
  flow->add_option("--external-interp", external, "dense .flo used instead of the built-in interpolator");
  flow->add_option("--set", overrides, "override a config key (key=value)");
  flow->add_option("--jobs", jobs, "worker thread cap");
  flow->add_option("--seed", seed, "global seed");
  flow->add_flag("--hsv-equalize", equalize, "equalize the V channel of both frames");

  // nnf
  auto* nnf = app.add_subcommand("nnf", "PatchMatch nearest-neighbor field only");
  std::string nnf_out;
  int nnf_iters = 5, nnf_radius = 3;
  std::uint64_t nnf_seed = 1;
  nnf->add_option("image1", img1)->required();
  nnf->add_option("image2", img2)->required();
  nnf->add_option("-o,--out", nnf_out, "output .flo (cost sidecar written next to it)")->required();
  nnf->add_option("--iterations", nnf_iters);
  nnf->add_option("--patch-radius", nnf_radius);
  nnf->add_option("--seed", nnf_seed);

  // eval
  auto* eval = app.add_subcommand("eval", "endpoint error of a flow against ground truth");
  std::string eval_flow, eval_json, method = "MSGPM";
  eval->add_option("flow", eval_flow)->required();
  eval->add_option("--gt", gt)->required();
  eval->add_option("--gt-occ", gt_occ);
  eval->add_option("--json", eval_json, "also write the report as JSON");
  eval->add_option("--method", method, "row label");

  // compare
  auto* cmp = app.add_subcommand("compare", "EPE table and difference map of two flows");
  std::string flow_a, flow_b, diff_out;
  cmp->add_option("flow_a", flow_a)->required();
  cmp->add_option("flow_b", flow_b)->required();
  cmp->add_option("--gt", gt)->required();
  cmp->add_option("--gt-occ", gt_occ);
  cmp->add_option("-o,--out", diff_out, "difference map PNG")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic fixture");
  std::string scene = "two-plane";
  std::uint64_t synth_seed = 1;
  double shift = 0.0;
  synth->add_option("--scene", scene, "two-plane | small-plane | thin-bar | identity");
  synth->add_option("--seed", synth_seed);
  synth->add_option("--brightness-shift", shift, "added to frame 2 (two-plane only)");
  synth->add_option("-o,--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (flow->parsed()) {
      msgpm::RunConfig cfg;
      if (!config_file.empty()) cfg.load_file(config_file);
      if (!img1.empty()) cfg.image1 = img1;
      if (!img2.empty()) cfg.image2 = img2;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!gt.empty()) cfg.gt_flow = gt;
      if (!gt_occ.empty()) cfg.gt_occlusion = gt_occ;
      if (!cache.empty()) cfg.cache_dir = cache;
      if (!dumps.empty()) cfg.dump_levels = dumps;
      if (!external.empty()) cfg.external_interp = external;
      if (equalize) cfg.hsv_equalize = true;
      if (jobs >= 0) cfg.jobs = jobs;
      if (seed >= 0) cfg.seed = std::uint64_t(seed);
      for (const auto& o : overrides) cfg.apply_override(o);
      std::cout << msgpm::run(cfg);
    } else if (nnf->parsed()) {
      msgpm::PatchMatchConfig pm;
      pm.iterations = nnf_iters;
      pm.patch_radius = nnf_radius;
      pm.rng_seed = nnf_seed;
      const auto a = msgpm::load_image(img1), b = msgpm::load_image(img2);
      const auto result = msgpm::compute_nnf(a, b, pm);
      std::filesystem::path cost = nnf_out;
      cost.replace_extension(".cost");
      msgpm::save_nnf(result, nnf_out, cost);
      std::printf("total cost %.6f\n", result.total_cost());
    } else if (eval->parsed()) {
      const auto f = msgpm::read_flo(eval_flow), g = msgpm::read_flo(gt);
      const auto occ = gt_occ.empty() ? msgpm::OcclusionMask(g.width(), g.height()) : msgpm::load_mask(gt_occ);
      const auto r = msgpm::compute_epe(f, g, occ);
      std::printf("%s\n%s\n", msgpm::epe_table_header().c_str(), msgpm::epe_table_row(method, r).c_str());
      if (!eval_json.empty()) {
        const nlohmann::json j = {{"method", method},       {"epe_all", r.epe_all},     {"epe_nocc", r.epe_nocc},
                                  {"epe_occ", r.epe_occ},     {"count_all", r.count_all}, {"count_nocc", r.count_nocc},
                                  {"count_occ", r.count_occ}};
        const std::string text = j.dump(2) + "\n";
        msgpm::write_file_bytes(eval_json, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
      }
    } else if (cmp->parsed()) {
      const auto a = msgpm::read_flo(flow_a), b = msgpm::read_flo(flow_b), g = msgpm::read_flo(gt);
      const auto occ = gt_occ.empty() ? msgpm::OcclusionMask(g.width(), g.height()) : msgpm::load_mask(gt_occ);
      const auto r = msgpm::compare(a, b, g, occ, flow_a, flow_b);
      std::cout << r.table;
      msgpm::save_png(r.difference, diff_out);
    } else if (synth->parsed()) {
      const auto s = make_scene(scene, synth_seed, shift);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      msgpm::save_png(s.a, dir / "frame1.png");
      msgpm::save_png(s.b, dir / "frame2.png");
      msgpm::write_flo(s.gt, dir / "gt.flo");
      msgpm::save_mask_png(s.occ, dir / "gt_occ.png");
      std::printf("wrote %s (occluded %zu of %zu)\n", dir.string().c_str(), s.occ.count(), s.occ.size());
    }
  } catch (const msgpm::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const msgpm::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const msgpm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: filesystem: %s\n", e.what());
    return kIo;
  }
  return kOk;
}
