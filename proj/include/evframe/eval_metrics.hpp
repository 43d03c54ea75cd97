/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The evframe Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// COCO-style detection metrics and corruption-robustness summaries.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evframe/corruption_types.hpp"
#include "evframe/detection.hpp"
#include "evframe/errors.hpp"

namespace evframe {

inline constexpr int kRecallPoints = 101;
inline constexpr int kIouThresholds = 10;  // 0.50:0.05:0.95
inline constexpr std::size_t kMaxDetectionsPerImage = 100;

inline double iou_threshold(int i) { return (50.0 + 5.0 * i) / 100.0; }

// Outcome of greedy matching for one (image, class) cell.
struct MatchResult {
  std::vector<double> scores;  // descending
  std::vector<bool> tp;        // parallel to scores
  std::vector<int> matched_gt; // gt index or -1
  std::size_t n_gt = 0;
  std::size_t unmatched_gt = 0;
};

// Detections in descending score order (stable), each taking the highest-IoU
// still-unmatched GT with IoU >= threshold; equal IoU prefers the earlier GT.
inline MatchResult match_detections(const DetectionSet& preds, const DetectionSet& gts, double threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score.value_or(0.0) > preds[b].score.value_or(0.0);
  });
  MatchResult r;
  r.n_gt = gts.size();
  std::vector<bool> used(gts.size(), false);
  for (std::size_t i : order) {
    int best = -1;
    double best_iou = threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double v = iou(preds[i].bbox, gts[g].bbox);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) used[static_cast<std::size_t>(best)] = true;
    r.scores.push_back(preds[i].score.value_or(0.0));
    r.tp.push_back(best >= 0);
    r.matched_gt.push_back(best);
  }
  r.unmatched_gt = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return r;
}

// 101-point interpolated AP over flags already sorted by descending score.
inline double average_precision(const std::vector<bool>& flags, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  const std::size_t n = flags.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += flags[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int j = 0; j < kRecallPoints; ++j) {
    const double r = j / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / kRecallPoints;
}

struct MapResult {
  double map = 0.0;    // mean over classes with GT, then over the 10 thresholds
  double map50 = 0.0;
  std::map<int, double> per_class;             // AP averaged over thresholds
  std::array<double, kIouThresholds> per_threshold{};
};

// preds/gts may span many images and classes. Classes without GT are skipped.
inline MapResult map_coco(const DetectionSet& preds, const DetectionSet& gts) {
  using Key = std::pair<int, std::int64_t>;  // (class, image)
  std::map<Key, DetectionSet> pred_cells, gt_cells;
  std::map<int, std::size_t> gt_per_class;
  for (const auto& g : gts) {
    gt_cells[{g.category_id, g.image_id}].push_back(g);
    ++gt_per_class[g.category_id];
  }
  if (gt_per_class.empty()) throw EvaluationError("map_coco: ground truth is empty for every class");
  for (const auto& p : preds) pred_cells[{p.category_id, p.image_id}].push_back(p);

  // Keep the top-scoring detections per (image, class).
  for (auto& [key, cell] : pred_cells) {
    std::stable_sort(cell.begin(), cell.end(),
                     [](const Detection& a, const Detection& b) { return a.score.value_or(0) > b.score.value_or(0); });
    if (cell.size() > kMaxDetectionsPerImage) cell.resize(kMaxDetectionsPerImage);
  }

  MapResult res;
  std::map<int, double> class_sum;
  for (int t = 0; t < kIouThresholds; ++t) {
    const double thr = iou_threshold(t);
    double threshold_sum = 0.0;
    for (const auto& [cls, n_gt] : gt_per_class) {
      std::vector<std::pair<double, bool>> merged;
      std::set<std::int64_t> images;
      for (const auto& [key, cell] : pred_cells)
        if (key.first == cls) images.insert(key.second);
      for (std::int64_t img : images) {
        static const DetectionSet kEmpty;
        const auto g_it = gt_cells.find({cls, img});
        const auto m = match_detections(pred_cells.at({cls, img}), g_it == gt_cells.end() ? kEmpty : g_it->second, thr);
        for (std::size_t i = 0; i < m.tp.size(); ++i) merged.emplace_back(m.scores[i], m.tp[i]);
      }
      std::stable_sort(merged.begin(), merged.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::vector<bool> flags;
      flags.reserve(merged.size());
      for (const auto& [s, f] : merged) flags.push_back(f);
      const double ap = average_precision(flags, n_gt);
      threshold_sum += ap;
      class_sum[cls] += ap;
    }
    res.per_threshold[static_cast<std::size_t>(t)] = threshold_sum / static_cast<double>(gt_per_class.size());
  }
  double total = 0.0;
  for (double v : res.per_threshold) total += v;
  res.map = total / kIouThresholds;
  res.map50 = res.per_threshold[0];
  for (const auto& [cls, s] : class_sum) res.per_class[cls] = s / kIouThresholds;
  return res;
}

// mAP per (corruption type, severity). Entries may be missing until filled.
struct CorruptionMatrix {
  std::vector<std::vector<std::optional<double>>> entries;  // [type][severity]

  CorruptionMatrix() = default;
  CorruptionMatrix(std::size_t types, std::size_t severities)
      : entries(types, std::vector<std::optional<double>>(severities)) {}

  std::size_t types() const { return entries.size(); }
  std::size_t severities() const { return entries.empty() ? 0 : entries[0].size(); }
};

enum class MatrixMode {
  kProduction,  // exactly 15 types x 5 severities
  kAnyShape,    // tests and toy studies
};

namespace detail {

inline std::string matrix_type_label(std::size_t c, std::size_t n_types) {
  if (n_types == kNumCorruptionTypes) return std::string(kCorruptionNames[c]);
  return "type #" + std::to_string(c);
}

inline void check_matrix(const CorruptionMatrix& m, MatrixMode mode) {
  if (m.types() == 0 || m.severities() == 0) throw DomainError("corruption matrix is empty");
  if (mode == MatrixMode::kProduction &&
      (m.types() != kNumCorruptionTypes || m.severities() != kNumSeverities))
    throw DomainError("corruption matrix must be 15 types x 5 severities, got " + std::to_string(m.types()) + " x " +
                      std::to_string(m.severities()));
  for (std::size_t c = 0; c < m.types(); ++c) {
    if (m.entries[c].size() != m.severities()) throw DomainError("corruption matrix rows differ in length");
    for (std::size_t s = 0; s < m.severities(); ++s) {
      const auto& e = m.entries[c][s];
      if (!e)
        throw DomainError("corruption matrix is missing " + matrix_type_label(c, m.types()) + " severity " +
                          std::to_string(s + 1));
      if (!(*e >= 0.0 && *e <= 1.0))
        throw DomainError("corruption matrix entry for " + matrix_type_label(c, m.types()) + " severity " +
                          std::to_string(s + 1) + " lies outside [0,1]");
    }
  }
}

}  // namespace detail

// Mean performance under corruption: mean over types of the mean over severities.
inline double mpc(const CorruptionMatrix& m, MatrixMode mode = MatrixMode::kProduction) {
  detail::check_matrix(m, mode);
  double outer = 0.0;
  for (const auto& row : m.entries) {
    double inner = 0.0;
    for (const auto& e : row) inner += *e;
    outer += inner / static_cast<double>(row.size());
  }
  return outer / static_cast<double>(m.types());
}

// Relative performance per severity: mean over types of mAP_{c,s}, divided by clean mAP.
inline std::vector<double> rpc(double map_clean, const CorruptionMatrix& m, MatrixMode mode = MatrixMode::kProduction) {
  if (!(map_clean > 0.0)) throw DomainError("rpc: clean mAP must be positive");
  detail::check_matrix(m, mode);
  std::vector<double> out(m.severities(), 0.0);
  for (std::size_t s = 0; s < m.severities(); ++s) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.types(); ++c) sum += *m.entries[c][s];
    out[s] = sum / static_cast<double>(m.types()) / map_clean;
  }
  return out;
}

struct MpcReport {
  double map_clean = 0.0;
  CorruptionMatrix matrix;
  double mpc = 0.0;
  std::vector<double> rpc;
};

inline MpcReport mpc_report(double map_clean, const CorruptionMatrix& m, MatrixMode mode = MatrixMode::kProduction) {
  return {map_clean, m, mpc(m, mode), rpc(map_clean, m, mode)};
}

}  // namespace evframe
