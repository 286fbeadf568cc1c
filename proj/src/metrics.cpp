#include "msgpm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "msgpm/error.hpp"

namespace msgpm {

EpeReport compute_epe(const FlowField& flow, const FlowField& gt, const OcclusionMask& occ) {
  if (!flow.same_size(gt.width(), gt.height()) || occ.width() != gt.width() || occ.height() != gt.height())
    throw InvalidArgument("imgcore", "compute_epe: dimension mismatch");
  double sum_nocc = 0.0, sum_occ = 0.0;
  EpeReport r;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i)) throw InvalidArgument("imgcore", "compute_epe: ground truth must be valid everywhere");
    if (!flow.valid(i)) throw InvalidArgument("imgcore", "compute_epe: flow must be dense");
    const double e = (flow.at(i) - gt.at(i)).norm();
    if (occ.occluded(i)) {
      sum_occ += e;
      ++r.count_occ;
    } else {
      sum_nocc += e;
      ++r.count_nocc;
    }
  }
  r.count_all = r.count_nocc + r.count_occ;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  r.epe_nocc = r.count_nocc ? sum_nocc / double(r.count_nocc) : nan;
  r.epe_occ = r.count_occ ? sum_occ / double(r.count_occ) : nan;
  r.epe_all = r.count_all ? (sum_nocc + sum_occ) / double(r.count_all) : nan;
  return r;
}

MaskScore score_mask(const OcclusionMask& predicted, const OcclusionMask& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height())
    throw InvalidArgument("imgcore", "score_mask: dimension mismatch");
  MaskScore s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted.occluded(i), t = truth.occluded(i);
    if (p && t) ++s.true_positive;
    if (p && !t) ++s.false_positive;
    if (!p && t) ++s.false_negative;
  }
  const double tp = double(s.true_positive);
  s.precision = tp + s.false_positive > 0 ? tp / (tp + double(s.false_positive)) : 1.0;
  s.recall = tp + s.false_negative > 0 ? tp / (tp + double(s.false_negative)) : 1.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::string epe_table_header() { return "Method & EPE nocc. & EPE occ. & EPE all"; }

std::string epe_table_row(const std::string& method, const EpeReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s & %.3f & %.3f & %.3f", method.c_str(), r.epe_nocc, r.epe_occ, r.epe_all);
  return buf;
}

}  // namespace msgpm
