#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mpcml {

/// External validation of a predicted partition against ground truth.
struct FReport {
  double overall_f = 0.0;
  std::map<int, double> per_class_f;  ///< best F(L_i, C_j) per truth class
  std::map<int, int> matched_pred;    ///< argmax predicted id (-1: a noise singleton)
};

/// F measure. Noise predictions (negative ids) count as singleton clusters.
/// Class weights are |L_i| / total sample count.
inline FReport f_measure(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("f_measure: truth and prediction differ in length");
  FReport rep;
  if (truth.empty()) return rep;
  for (int t : truth)
    if (t < 0) throw std::invalid_argument("f_measure: truth labels must be non-negative");

  // Give every noise point a private id above all real ones.
  int next = 0;
  for (int p : pred) next = std::max(next, p + 1);
  std::vector<int> ids(pred.begin(), pred.end());
  std::vector<bool> is_noise(ids.size(), false);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] < 0) {
      ids[i] = next++;
      is_noise[i] = true;
    }

  std::map<int, int> class_size, cluster_size;
  std::map<std::pair<int, int>, int> overlap;
  std::map<int, bool> noise_id;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ++class_size[truth[i]];
    ++cluster_size[ids[i]];
    ++overlap[{truth[i], ids[i]}];
    noise_id[ids[i]] = is_noise[i];
  }
  const double total = static_cast<double>(truth.size());
  for (const auto& [cls, size] : class_size) {
    double best = 0.0;
    int arg = -1;
    for (auto it = overlap.lower_bound({cls, std::numeric_limits<int>::min()});
         it != overlap.end() && it->first.first == cls; ++it) {
      const int cid = it->first.second;
      const double n = it->second;
      const double precision = n / cluster_size[cid];
      const double recall = n / size;
      const double f = 2.0 * precision * recall / (precision + recall);
      if (f > best) {
        best = f;
        arg = noise_id[cid] ? -1 : cid;
      }
    }
    rep.per_class_f[cls] = best;
    rep.matched_pred[cls] = arg;
    rep.overall_f += size / total * best;
  }
  rep.overall_f = std::clamp(rep.overall_f, 0.0, 1.0);
  return rep;
}

struct FSummary {
  double mean = 0.0;
  double sd = 0.0;  ///< sample standard deviation (0 for a single report)
  std::size_t count = 0;
};

inline FSummary aggregate(std::span<const FReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  FSummary s;
  s.count = reports.size();
  for (const auto& r : reports) s.mean += r.overall_f;
  s.mean /= static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (const auto& r : reports) ss += (r.overall_f - s.mean) * (r.overall_f - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

}  // namespace mpcml
