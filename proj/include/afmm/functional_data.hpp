#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "afmm/error.hpp"

namespace afmm {

/// Curves observed on possibly different grids.
struct Curve {
  long long id = 0;
  std::vector<double> t;
  std::vector<double> y;
};

struct FunctionalData {
  std::vector<Curve> curves;
  /// Affine map applied to t so all observations fall in [0, 1].
  double t_offset = 0.0;
  double t_scale = 1.0;

  int size() const { return static_cast<int>(curves.size()); }
};

/// Groups long-format (id, t, y) rows into curves ordered by first
/// appearance of the id, sorts each curve by t, and rescales t to [0, 1].
inline FunctionalData curves_from_long(const std::vector<long long>& id, const std::vector<double>& t,
                                       const std::vector<double>& y) {
  if (id.size() != t.size() || t.size() != y.size()) throw DataError("functional data: column lengths differ");
  if (id.empty()) throw DataError("functional data: no rows");
  FunctionalData out;
  std::map<long long, std::size_t> index;
  for (std::size_t r = 0; r < id.size(); ++r) {
    if (!std::isfinite(t[r]) || !std::isfinite(y[r])) {
      throw DataError("functional data: non-finite value in row " + std::to_string(r + 1));
    }
    auto [it, inserted] = index.try_emplace(id[r], out.curves.size());
    if (inserted) out.curves.push_back(Curve{id[r], {}, {}});
    out.curves[it->second].t.push_back(t[r]);
    out.curves[it->second].y.push_back(y[r]);
  }
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  out.t_offset = *lo;
  out.t_scale = *hi > *lo ? *hi - *lo : 1.0;
  for (auto& c : out.curves) {
    std::vector<std::size_t> order(c.t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.t[a] < c.t[b]; });
    Curve sorted{c.id, {}, {}};
    for (std::size_t i : order) {
      sorted.t.push_back(std::clamp((c.t[i] - out.t_offset) / out.t_scale, 0.0, 1.0));
      sorted.y.push_back(c.y[i]);
    }
    c = std::move(sorted);
  }
  return out;
}

}  // namespace afmm
