#pragma once

#include <cstddef>
#include <string>

#include "msgpm/image.hpp"

namespace msgpm {

struct EpeReport {
  double epe_all = 0.0;
  double epe_nocc = 0.0;
  double epe_occ = 0.0;
  std::size_t count_all = 0;
  std::size_t count_nocc = 0;
  std::size_t count_occ = 0;
};

// Mean endpoint error over all, non-occluded and occluded pixels. Empty
// categories report NaN with a zero count. `flow` and `gt` must be dense.
EpeReport compute_epe(const FlowField& flow, const FlowField& gt, const OcclusionMask& occ);

struct MaskScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
};

MaskScore score_mask(const OcclusionMask& predicted, const OcclusionMask& truth);

// Rows in the layout "Method & EPE nocc. & EPE occ. & EPE all".
std::string epe_table_header();
std::string epe_table_row(const std::string& method, const EpeReport& report);

}  // namespace msgpm
