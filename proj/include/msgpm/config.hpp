#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msgpm/densify.hpp"
#include "msgpm/multiscale.hpp"

namespace msgpm {

struct RunConfig {
  std::string image1;
  std::string image2;
  std::string gt_flow;       // optional
  std::string gt_occlusion;  // optional
  std::string out_dir = "out";
  std::string cache_dir;        // optional NNF cache
  std::string dump_levels;      // optional per-level dump directory
  std::string external_interp;  // optional dense .flo replacing the interpolator
  bool hsv_equalize = false;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency

  MsgpmConfig msgpm;
  InterpolationConfig interp;

  // Sets one key from its textual value; throws InvalidArgument on an
  // unknown key or malformed value.
  void set(const std::string& key, const std::string& value);
  // "key=value" form.
  void apply_override(const std::string& assignment);
  // Reads "key = value" lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void parse(const std::string& text, const std::string& source);

  // Every key with its resolved value, one "key = value" per line.
  std::string manifest() const;
  static std::vector<std::string> keys();

  // Copies the global seed and job count into the module configs and checks
  // every invariant.
  void resolve();
};

}  // namespace msgpm
