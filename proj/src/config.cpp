#include "msgpm/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "msgpm/error.hpp"
#include "msgpm/image_io.hpp"

namespace msgpm {
namespace {

const char* kModule = "config";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw InvalidArgument(kModule, "bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument(kModule, "bad boolean for " + key + ": '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt(x);
  return s;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(parse_number<double>(key, trim(item)));
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define STR_FIELD(name, member) \
  Field{name, [](const RunConfig& c) { return c.member; }, [](RunConfig& c, const std::string& v) { c.member = v; }}
#define NUM_FIELD(name, member, type)                                          \
  Field{name, [](const RunConfig& c) { return fmt(double(c.member)); },        \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }}
#define INT_FIELD(name, member, type)                                          \
  Field{name, [](const RunConfig& c) { return std::to_string(c.member); },     \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }}
#define BOOL_FIELD(name, member)                                                   \
  Field{name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.member = parse_bool(name, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      STR_FIELD("image1", image1),
      STR_FIELD("image2", image2),
      STR_FIELD("gt_flow", gt_flow),
      STR_FIELD("gt_occlusion", gt_occlusion),
      STR_FIELD("out_dir", out_dir),
      STR_FIELD("cache_dir", cache_dir),
      STR_FIELD("dump_levels", dump_levels),
      STR_FIELD("external_interp", external_interp),
      BOOL_FIELD("hsv_equalize", hsv_equalize),
      INT_FIELD("seed", seed, std::uint64_t),
      INT_FIELD("jobs", jobs, int),
      INT_FIELD("pm.patch_radius", msgpm.pm.patch_radius, int),
      INT_FIELD("pm.iterations", msgpm.pm.iterations, int),
      NUM_FIELD("pm.search_decay", msgpm.pm.search_decay, double),
      INT_FIELD("pyramid.levels", msgpm.pyramid.levels, int),
      INT_FIELD("pyramid.w_max", msgpm.pyramid.w_max, int),
      INT_FIELD("pyramid.dw", msgpm.pyramid.dw, int),
      NUM_FIELD("pyramid.beta", msgpm.pyramid.beta, double),
      NUM_FIELD("pyramid.reliability_loss", msgpm.pyramid.reliability_loss, double),
      Field{"pyramid.epsilon_per_level", [](const RunConfig& c) { return fmt_list(c.msgpm.pyramid.epsilon_per_level); },
            [](RunConfig& c, const std::string& v) {
              c.msgpm.pyramid.epsilon_per_level = parse_list("pyramid.epsilon_per_level", v);
            }},
      Field{"pyramid.eta_per_level", [](const RunConfig& c) { return fmt_list(c.msgpm.pyramid.eta_per_level); },
            [](RunConfig& c, const std::string& v) {
              c.msgpm.pyramid.eta_per_level = parse_list("pyramid.eta_per_level", v);
            }},
      INT_FIELD("level.stride", msgpm.pyramid.level.stride, int),
      NUM_FIELD("level.epsilon", msgpm.pyramid.level.epsilon, double),
      NUM_FIELD("level.eta", msgpm.pyramid.level.eta, double),
      NUM_FIELD("level.tau_agree", msgpm.pyramid.level.tau_agree, double),
      BOOL_FIELD("level.symmetry_gate", msgpm.pyramid.level.symmetry_gate),
      BOOL_FIELD("level.agreement_gate", msgpm.pyramid.level.agreement_gate),
      INT_FIELD("level.residual_min", msgpm.pyramid.level.residual_min, int),
      INT_FIELD("level.stage2_passes", msgpm.pyramid.level.stage2_passes, int),
      INT_FIELD("level.max_pairs", msgpm.pyramid.level.max_pairs, int),
      INT_FIELD("ransac.max_iterations", msgpm.pyramid.level.ransac.max_iterations, int),
      NUM_FIELD("ransac.inlier_px", msgpm.pyramid.level.ransac.inlier_px, double),
      INT_FIELD("ransac.min_inliers", msgpm.pyramid.level.ransac.min_inliers, int),
      NUM_FIELD("ransac.confidence", msgpm.pyramid.level.ransac.confidence, double),
      NUM_FIELD("ransac.degeneracy_ratio", msgpm.pyramid.level.ransac.degeneracy_ratio, double),
      NUM_FIELD("occlusion.delta_m", msgpm.occlusion.delta_m, double),
      NUM_FIELD("occlusion.theta_occ", msgpm.occlusion.theta_occ, double),
      INT_FIELD("interp.neighbors", interp.neighbors, int),
      NUM_FIELD("interp.sigma", interp.sigma, double),
      NUM_FIELD("interp.lambda", interp.lambda, double),
  };
  return table;
}

#undef STR_FIELD
#undef NUM_FIELD
#undef INT_FIELD
#undef BOOL_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw InvalidArgument(kModule, "unknown key '" + key + "'");
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument(kModule, "override must be key=value: '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::parse(const std::string& text, const std::string& source) {
  std::stringstream ss(text);
  int line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(kModule, source + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(kModule, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  parse(std::string(bytes.begin(), bytes.end()), path.string());
}

std::string RunConfig::manifest() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

void RunConfig::resolve() {
  msgpm.seed = seed;
  msgpm.pm.rng_seed = seed;
  msgpm.jobs = jobs;
  msgpm.pm.validate();
  msgpm.pyramid.validate();
  for (int l = 1; l <= msgpm.pyramid.levels; ++l) msgpm.pyramid.level_config(l).validate();
  msgpm.occlusion.validate();
  interp.validate();
}

}  // namespace msgpm
