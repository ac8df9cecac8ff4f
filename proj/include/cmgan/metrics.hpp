/* Copyright 2026 the cmgan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "cmgan/image.hpp"

namespace cmgan {

/// Per-class intersection-over-union for the three foreground classes plus
/// confusion counts; `overall` is their arithmetic mean. A class absent from
/// both masks scores 1 (nothing to find, nothing hallucinated).
struct IoUReport {
  // index 0..2 = building, road, tree
  std::array<double, 3> intersection{};
  std::array<double, 3> set_union{};
  std::array<double, 3> pred_pixels{};
  std::array<double, 3> gt_pixels{};
  std::array<double, 3> iou{};
  double overall = 0.0;
  double total_pixels = 0.0;
};

inline IoUReport iou(const LabelMask& pred, const LabelMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    detail::fail_input("iou: extents disagree, pred ", std::to_string(pred.height), "x",
                       std::to_string(pred.width), " vs gt ", std::to_string(gt.height), "x",
                       std::to_string(gt.width));
  IoUReport report;
  report.total_pixels = static_cast<double>(pred.pixel_count());
  std::array<std::uint64_t, 3> inter{}, uni{}, np{}, ng{};
  for (std::size_t i = 0; i < pred.ids.size(); ++i) {
    const std::uint8_t p = pred.ids[i];
    const std::uint8_t g = gt.ids[i];
    for (std::uint8_t c = 1; c <= 3; ++c) {
      const bool in_p = p == c;
      const bool in_g = g == c;
      inter[c - 1] += in_p && in_g;
      uni[c - 1] += in_p || in_g;
      np[c - 1] += in_p;
      ng[c - 1] += in_g;
    }
  }
  for (int c = 0; c < 3; ++c) {
    report.intersection[static_cast<std::size_t>(c)] = static_cast<double>(inter[static_cast<std::size_t>(c)]);
    report.set_union[static_cast<std::size_t>(c)] = static_cast<double>(uni[static_cast<std::size_t>(c)]);
    report.pred_pixels[static_cast<std::size_t>(c)] = static_cast<double>(np[static_cast<std::size_t>(c)]);
    report.gt_pixels[static_cast<std::size_t>(c)] = static_cast<double>(ng[static_cast<std::size_t>(c)]);
    report.iou[static_cast<std::size_t>(c)] =
        uni[static_cast<std::size_t>(c)] == 0
            ? 1.0
            : static_cast<double>(inter[static_cast<std::size_t>(c)]) /
                  static_cast<double>(uni[static_cast<std::size_t>(c)]);
    report.overall += report.iou[static_cast<std::size_t>(c)] / 3.0;
  }
  return report;
}

/// Per-pixel modal class over a run of masks; ties go to the smallest id.
inline LabelMask majority_vote(const std::vector<LabelMask>& preds) {
  if (preds.empty()) detail::fail_input("majority_vote needs at least one mask");
  const int h = preds[0].height, w = preds[0].width;
  for (const auto& m : preds)
    if (m.height != h || m.width != w)
      detail::fail_input("majority_vote: mask extents disagree, ", std::to_string(m.height), "x",
                         std::to_string(m.width), " vs ", std::to_string(h), "x",
                         std::to_string(w));
  LabelMask out(h, w);
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    std::array<int, kNumClasses> votes{};
    for (const auto& m : preds) votes[m.ids[i]] += 1;
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    out.ids[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

/// Arithmetic mean of reports across repeated runs.
inline IoUReport mean_iou_over_runs(const std::vector<IoUReport>& reports) {
  if (reports.empty()) detail::fail_input("mean_iou_over_runs needs at least one report");
  IoUReport mean;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    for (int c = 0; c < 3; ++c) {
      mean.intersection[static_cast<std::size_t>(c)] += r.intersection[static_cast<std::size_t>(c)] / n;
      mean.set_union[static_cast<std::size_t>(c)] += r.set_union[static_cast<std::size_t>(c)] / n;
      mean.pred_pixels[static_cast<std::size_t>(c)] += r.pred_pixels[static_cast<std::size_t>(c)] / n;
      mean.gt_pixels[static_cast<std::size_t>(c)] += r.gt_pixels[static_cast<std::size_t>(c)] / n;
      mean.iou[static_cast<std::size_t>(c)] += r.iou[static_cast<std::size_t>(c)] / n;
    }
    mean.overall += r.overall / n;
    mean.total_pixels += r.total_pixels / n;
  }
  return mean;
}

/// Table in the building / road / tree / Overall column layout.
inline std::string iou_table(const IoUReport& r) {
  char buf[160];
  std::string out = "class      building      road      tree   Overall\n";
  std::snprintf(buf, sizeof(buf), "IoU (%%)    %8.2f  %8.2f  %8.2f  %8.2f\n", 100.0 * r.iou[0],
                100.0 * r.iou[1], 100.0 * r.iou[2], 100.0 * r.overall);
  out += buf;
  return out;
}

/// Machine-readable row: building,road,tree,overall as fractions.
inline std::string iou_csv(const IoUReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f\n", r.iou[0], r.iou[1], r.iou[2],
                r.overall);
  return buf;
}

}  // namespace cmgan
