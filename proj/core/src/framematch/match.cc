// Copyright 2026 The vidplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vidplan/framematch/match.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "vidplan/common/error.h"

namespace vidplan::framematch {

namespace {

constexpr double kEdgeFloor = 1e-12;

// Summed-area table with a zero first row/column: (h+1) x (w+1).
std::vector<double> Integral(const std::vector<double>& v, int h, int w) {
  std::vector<double> s(static_cast<size_t>(h + 1) * (w + 1), 0.0);
  for (int r = 0; r < h; ++r) {
    double row = 0.0;
    for (int c = 0; c < w; ++c) {
      row += v[r * w + c];
      s[(r + 1) * (w + 1) + c + 1] = s[r * (w + 1) + c + 1] + row;
    }
  }
  return s;
}

double BoxSum(const std::vector<double>& s, int w, int r0, int c0, int r1, int c1) {
  const int ws = w + 1;
  return s[r1 * ws + c1] - s[r0 * ws + c1] - s[r1 * ws + c0] + s[r0 * ws + c0];
}

}  // namespace

void MatchConfig::Validate() const {
  for (double w : {w_geo, w_pos, w_ssim, w_flow}) {
    if (!(w >= 0.0)) throw ConfigError("match weights must be non-negative");
  }
  if (std::abs(w_geo + w_pos + w_ssim + w_flow - 1.0) > 1e-9) {
    throw ConfigError("match weights must sum to 1");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (ssim_window < 1 || block_grid < 1 || flow_block < 1 || flow_search < 0) {
    throw ConfigError("invalid similarity window sizes");
  }
  if (!(edge_fraction > 0.0 && edge_fraction <= 1.0)) {
    throw ConfigError("edge fraction must lie in (0, 1]");
  }
}

std::vector<double> Gray(const Frame& f) { return ToGray(f); }

std::vector<bool> EdgeMap(const Frame& f, double fraction) {
  const int h = f.height, w = f.width;
  const std::vector<double> g = Gray(f);
  std::vector<double> mag(g.size());
  auto at = [&](int r, int c) {
    return g[std::clamp(r, 0, h - 1) * w + std::clamp(c, 0, w - 1)];
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
      const double gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
      mag[r * w + c] = std::sqrt(gx * gx + gy * gy);
    }
  }
  std::vector<double> nonzero;
  for (double m : mag) {
    if (m > kEdgeFloor) nonzero.push_back(m);
  }
  std::vector<bool> edges(mag.size(), false);
  if (nonzero.empty()) return edges;
  const size_t keep = std::min(
      nonzero.size(),
      std::max<size_t>(1, static_cast<size_t>(std::ceil(fraction * static_cast<double>(mag.size())))));
  std::nth_element(nonzero.begin(), nonzero.begin() + (keep - 1), nonzero.end(),
                   std::greater<double>());
  const double cut = nonzero[keep - 1];
  for (size_t i = 0; i < mag.size(); ++i) edges[i] = mag[i] > kEdgeFloor && mag[i] >= cut;
  return edges;
}

double SimGeo(const Frame& a, const Frame& b, double edge_fraction) {
  RequireSameShape(a, b);
  const auto ea = EdgeMap(a, edge_fraction), eb = EdgeMap(b, edge_fraction);
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < ea.size(); ++i) {
    inter += ea[i] && eb[i];
    uni += ea[i] || eb[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::array<double, 2> CenterOfMass(const std::vector<double>& g, int h, int w) {
  double total = 0.0, sr = 0.0, sc = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = g[r * w + c];
      total += v;
      sr += v * r;
      sc += v * c;
    }
  }
  if (total <= 0.0) return {(h - 1) / 2.0, (w - 1) / 2.0};
  return {sr / total, sc / total};
}

}  // namespace

double SimPos(const Frame& a, const Frame& b, int grid) {
  RequireSameShape(a, b);
  if (grid < 1) throw ConfigError("block grid must be >= 1");
  const int h = a.height, w = a.width;
  const std::vector<double> ga = Gray(a), gb = Gray(b);
  double diff = 0.0;
  int blocks = 0;
  for (int bi = 0; bi < grid; ++bi) {
    const int r0 = bi * h / grid, r1 = (bi + 1) * h / grid;
    for (int bj = 0; bj < grid; ++bj) {
      const int c0 = bj * w / grid, c1 = (bj + 1) * w / grid;
      if (r1 <= r0 || c1 <= c0) continue;
      double sa = 0.0, sb = 0.0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          sa += ga[r * w + c];
          sb += gb[r * w + c];
        }
      }
      const double n = static_cast<double>((r1 - r0) * (c1 - c0));
      diff += std::abs(sa / n - sb / n);
      ++blocks;
    }
  }
  const double block_score = blocks == 0 ? 1.0 : 1.0 - diff / blocks;
  const auto ca = CenterOfMass(ga, h, w), cb = CenterOfMass(gb, h, w);
  const double diag = std::hypot(h - 1, w - 1);
  const double shift = std::hypot(ca[0] - cb[0], ca[1] - cb[1]);
  const double com_score = diag > 0.0 ? std::clamp(1.0 - shift / diag, 0.0, 1.0) : 1.0;
  return std::clamp(0.5 * block_score + 0.5 * com_score, 0.0, 1.0);
}

double Ssim(const Frame& a, const Frame& b, int window) {
  RequireSameShape(a, b);
  const int h = a.height, w = a.width;
  const int k = std::min({window, h, w});
  if (k < 1) throw ShapeError("SSIM needs a non-empty frame");
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  const std::vector<double> ga = Gray(a), gb = Gray(b);
  std::vector<double> aa(ga.size()), bb(ga.size()), ab(ga.size());
  for (size_t i = 0; i < ga.size(); ++i) {
    aa[i] = ga[i] * ga[i];
    bb[i] = gb[i] * gb[i];
    ab[i] = ga[i] * gb[i];
  }
  const auto sa = Integral(ga, h, w), sb = Integral(gb, h, w);
  const auto saa = Integral(aa, h, w), sbb = Integral(bb, h, w), sab = Integral(ab, h, w);
  const double n = static_cast<double>(k) * k;
  double total = 0.0;
  int count = 0;
  for (int r = 0; r + k <= h; ++r) {
    for (int c = 0; c + k <= w; ++c) {
      const double mu_a = BoxSum(sa, w, r, c, r + k, c + k) / n;
      const double mu_b = BoxSum(sb, w, r, c, r + k, c + k) / n;
      const double var_a = BoxSum(saa, w, r, c, r + k, c + k) / n - mu_a * mu_a;
      const double var_b = BoxSum(sbb, w, r, c, r + k, c + k) / n - mu_b * mu_b;
      const double cov = BoxSum(sab, w, r, c, r + k, c + k) / n - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++count;
    }
  }
  return std::clamp(total / count, 0.0, 1.0);
}

double SimFlow(const Frame& a, const Frame& b, int block, int search) {
  RequireSameShape(a, b);
  if (block < 1 || search < 0) throw ConfigError("invalid flow block / search");
  const int h = a.height, w = a.width;
  const std::vector<double> ga = Gray(a), gb = Gray(b);
  double total = 0.0;
  int blocks = 0;
  for (int r0 = 0; r0 + block <= h; r0 += block) {
    for (int c0 = 0; c0 + block <= w; c0 += block) {
      double best_sad = std::numeric_limits<double>::infinity();
      double best_len = 0.0;
      for (int dy = -search; dy <= search; ++dy) {
        for (int dx = -search; dx <= search; ++dx) {
          if (r0 + dy < 0 || c0 + dx < 0 || r0 + dy + block > h || c0 + dx + block > w) {
            continue;
          }
          double sad = 0.0;
          for (int r = 0; r < block; ++r) {
            for (int c = 0; c < block; ++c) {
              sad += std::abs(ga[(r0 + r) * w + c0 + c] - gb[(r0 + dy + r) * w + c0 + dx + c]);
            }
          }
          const double len = std::hypot(dy, dx);
          if (sad < best_sad || (sad == best_sad && len < best_len)) {
            best_sad = sad;
            best_len = len;
          }
        }
      }
      total += best_len;
      ++blocks;
    }
  }
  const double mean = blocks == 0 ? 0.0 : total / blocks;
  return 1.0 / (1.0 + mean);
}

MatchScore CompositeSimilarity(const Frame& a, const Frame& b, const MatchConfig& cfg) {
  cfg.Validate();
  RequireSameShape(a, b);
  MatchScore s;
  s.geo = SimGeo(a, b, cfg.edge_fraction);
  s.pos = SimPos(a, b, cfg.block_grid);
  s.ssim = Ssim(a, b, cfg.ssim_window);
  s.flow = SimFlow(a, b, cfg.flow_block, cfg.flow_search);
  s.total = cfg.w_geo * s.geo + cfg.w_pos * s.pos + cfg.w_ssim * s.ssim + cfg.w_flow * s.flow;
  return s;
}

TrackerStep TrackerUpdate(const GoalTracker& tracker, const Frame& current,
                          const std::vector<Frame>& clip, const MatchConfig& cfg) {
  if (tracker.goal_index < kFirstGoal || tracker.goal_index > kLastGoal ||
      tracker.steps_since_switch < 0) {
    throw RangeError("invalid goal tracker state");
  }
  if (static_cast<int>(clip.size()) <= tracker.goal_index) {
    throw ShapeError("clip has no frame " + std::to_string(tracker.goal_index));
  }
  TrackerStep out;
  out.score = CompositeSimilarity(current, clip[tracker.goal_index], cfg);
  out.tracker = tracker;
  if (out.score.total >= cfg.tau) {
    out.advanced = true;
  } else if (++out.tracker.steps_since_switch >= cfg.t_max) {
    out.advanced = true;
    out.forced = true;
  }
  if (out.advanced) {
    out.tracker.goal_index = std::min(tracker.goal_index + 1, kLastGoal);
    out.tracker.steps_since_switch = 0;
  }
  return out;
}

}  // namespace vidplan::framematch
