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

#include <doctest.h>

#include "cmgan/metrics.hpp"
#include "support.hpp"

using namespace cmgan;

TEST_SUITE_BEGIN("metrics");

namespace {

// brute-force counting oracle, written independently of IoUReport internals
struct OracleCounts {
  double iou[3];
  double overall;
};

OracleCounts iou_oracle(const LabelMask& pred, const LabelMask& gt) {
  OracleCounts out{};
  out.overall = 0.0;
  for (int cls = 1; cls <= 3; ++cls) {
    long long inter = 0, uni = 0;
    for (int r = 0; r < pred.height; ++r)
      for (int c = 0; c < pred.width; ++c) {
        const bool p = pred.at(r, c) == cls;
        const bool g = gt.at(r, c) == cls;
        if (p && g) ++inter;
        if (p || g) ++uni;
      }
    out.iou[cls - 1] = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    out.overall += out.iou[cls - 1] / 3.0;
  }
  return out;
}

LabelMask vote_oracle(const std::vector<LabelMask>& preds) {
  LabelMask out(preds[0].height, preds[0].width);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      int counts[4] = {0, 0, 0, 0};
      for (const auto& m : preds) counts[m.at(r, c)] += 1;
      int best = 0;
      for (int cls = 1; cls < 4; ++cls)
        if (counts[cls] > counts[best]) best = cls;  // ties keep the smaller id
      out.at(r, c) = static_cast<std::uint8_t>(best);
    }
  return out;
}

}  // namespace

TEST_CASE("identical masks with every class present score 1.0 everywhere") {
  LabelMask m(2, 2);
  m.at(0, 0) = kBuilding;
  m.at(0, 1) = kRoad;
  m.at(1, 0) = kTree;
  m.at(1, 1) = kBackground;
  const IoUReport r = iou(m, m);
  CHECK(r.iou[0] == 1.0);
  CHECK(r.iou[1] == 1.0);
  CHECK(r.iou[2] == 1.0);
  CHECK(r.overall == 1.0);
}

TEST_CASE("disjoint prediction and truth for a present class score 0") {
  LabelMask pred(1, 2), gt(1, 2);
  pred.at(0, 0) = kBuilding;  // gt has building at the other pixel
  gt.at(0, 1) = kBuilding;
  const IoUReport r = iou(pred, gt);
  CHECK(r.iou[0] == 0.0);
}

TEST_CASE("hand-counted 4-pixel example") {
  // gt = {building, building, road, background}
  // pred = {building, road, road, background}
  LabelMask gt(1, 4), pred(1, 4);
  gt.at(0, 0) = kBuilding;
  gt.at(0, 1) = kBuilding;
  gt.at(0, 2) = kRoad;
  pred.at(0, 0) = kBuilding;
  pred.at(0, 1) = kRoad;
  pred.at(0, 2) = kRoad;
  const IoUReport r = iou(pred, gt);
  CHECK(r.iou[0] == 0.5);  // building: inter 1, union 2
  CHECK(r.iou[1] == 0.5);  // road: inter 1, union 2
  CHECK(r.iou[2] == 1.0);  // tree absent from both
  CHECK(r.overall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou rejects extent mismatches") {
  CHECK_THROWS_AS(iou(LabelMask(2, 2), LabelMask(2, 3)), InvalidInput);
}

TEST_CASE("iou is symmetric and matches the counting oracle on random masks") {
  Rng rng(501);
  for (int trial = 0; trial < 60; ++trial) {
    const LabelMask a = testsupport::random_mask(rng, 9, 7);
    const LabelMask b = testsupport::random_mask(rng, 9, 7);
    const IoUReport ab = iou(a, b);
    const IoUReport ba = iou(b, a);
    const OracleCounts want = iou_oracle(a, b);
    for (int c = 0; c < 3; ++c) {
      CHECK(ab.iou[static_cast<std::size_t>(c)] == want.iou[c]);
      CHECK(ab.iou[static_cast<std::size_t>(c)] == ba.iou[static_cast<std::size_t>(c)]);
    }
    CHECK(ab.overall == doctest::Approx(want.overall).epsilon(1e-12));
    CHECK(iou(a, a).overall == 1.0);
  }
}

TEST_CASE("overall is the mean of the three foreground IoUs") {
  Rng rng(503);
  const LabelMask a = testsupport::random_mask(rng, 16, 16);
  const LabelMask b = testsupport::random_mask(rng, 16, 16);
  const IoUReport r = iou(a, b);
  CHECK(r.overall == doctest::Approx((r.iou[0] + r.iou[1] + r.iou[2]) / 3.0).epsilon(1e-12));
}

TEST_CASE("majority_vote point rules") {
  SUBCASE("a single mask votes for itself") {
    Rng rng(505);
    const LabelMask m = testsupport::random_mask(rng, 5, 5);
    CHECK(majority_vote({m}) == m);
  }
  SUBCASE("road, road, tree gives road") {
    LabelMask a(1, 1), b(1, 1), c(1, 1);
    a.at(0, 0) = kRoad;
    b.at(0, 0) = kRoad;
    c.at(0, 0) = kTree;
    CHECK(majority_vote({a, b, c}).at(0, 0) == kRoad);
  }
  SUBCASE("building/tree tie resolves to the smaller id") {
    LabelMask a(1, 1), b(1, 1);
    a.at(0, 0) = kBuilding;
    b.at(0, 0) = kTree;
    CHECK(majority_vote({a, b}).at(0, 0) == kBuilding);
  }
  SUBCASE("k copies of a mask vote for that mask") {
    Rng rng(507);
    const LabelMask m = testsupport::random_mask(rng, 6, 6);
    CHECK(majority_vote({m, m, m, m, m}) == m);
  }
  SUBCASE("extent mismatch rejected") {
    CHECK_THROWS_AS(majority_vote({LabelMask(2, 2), LabelMask(3, 2)}), InvalidInput);
  }
}

TEST_CASE("majority_vote matches the brute-force mode oracle") {
  Rng rng(509);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabelMask> preds;
    const int n = 1 + static_cast<int>(rng.uniform_below(5));
    for (int i = 0; i < n; ++i) preds.push_back(testsupport::random_mask(rng, 6, 8));
    CHECK(majority_vote(preds) == vote_oracle(preds));
  }
}

TEST_CASE("mean_iou_over_runs") {
  SUBCASE("one report is returned unchanged") {
    Rng rng(511);
    const IoUReport r =
        iou(testsupport::random_mask(rng, 8, 8), testsupport::random_mask(rng, 8, 8));
    const IoUReport m = mean_iou_over_runs({r});
    CHECK(m.iou == r.iou);
    CHECK(m.overall == doctest::Approx(r.overall).epsilon(1e-12));
  }
  SUBCASE("two reports average per class") {
    IoUReport a{}, b{};
    a.iou = {0.4, 0.2, 1.0};
    a.overall = (0.4 + 0.2 + 1.0) / 3.0;
    b.iou = {0.6, 0.4, 0.0};
    b.overall = (0.6 + 0.4 + 0.0) / 3.0;
    const IoUReport m = mean_iou_over_runs({a, b});
    CHECK(m.iou[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.iou[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(m.iou[2] == doctest::Approx(0.5).epsilon(1e-12));
    // averaging preserves overall = mean of foreground
    CHECK(m.overall == doctest::Approx((m.iou[0] + m.iou[1] + m.iou[2]) / 3.0).epsilon(1e-12));
  }
  SUBCASE("run order does not matter") {
    Rng rng(513);
    std::vector<IoUReport> reports;
    for (int i = 0; i < 4; ++i)
      reports.push_back(
          iou(testsupport::random_mask(rng, 7, 7), testsupport::random_mask(rng, 7, 7)));
    const IoUReport fwd = mean_iou_over_runs(reports);
    std::reverse(reports.begin(), reports.end());
    const IoUReport rev = mean_iou_over_runs(reports);
    for (int c = 0; c < 3; ++c)
      CHECK(fwd.iou[static_cast<std::size_t>(c)] ==
            doctest::Approx(rev.iou[static_cast<std::size_t>(c)]).epsilon(1e-12));
    CHECK(fwd.overall == doctest::Approx(rev.overall).epsilon(1e-12));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(mean_iou_over_runs({}), InvalidInput);
  }
}

TEST_CASE("report rendering carries the table layout") {
  LabelMask m(2, 2);
  m.at(0, 0) = kBuilding;
  const IoUReport r = iou(m, m);
  const std::string table = iou_table(r);
  CHECK(table.find("building") != std::string::npos);
  CHECK(table.find("road") != std::string::npos);
  CHECK(table.find("tree") != std::string::npos);
  CHECK(table.find("Overall") != std::string::npos);
  const std::string csv = iou_csv(r);
  CHECK(csv == "1.000000,1.000000,1.000000,1.000000\n");
}

TEST_SUITE_END();
