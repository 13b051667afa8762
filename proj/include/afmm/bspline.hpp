#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "afmm/error.hpp"

namespace afmm {

/// Clamped B-spline basis on [0, 1] with evenly spaced interior knots.
struct BsplineBasis {
  int degree = 3;
  int interior_knots = 7;
  std::vector<double> knots;  ///< full knot vector, boundary knots repeated degree + 1 times

  static BsplineBasis make(int degree, int interior_knots) {
    if (degree < 0 || interior_knots < 0) throw DomainError("bspline: negative degree or knot count");
    BsplineBasis b;
    b.degree = degree;
    b.interior_knots = interior_knots;
    for (int i = 0; i <= degree; ++i) b.knots.push_back(0.0);
    for (int i = 1; i <= interior_knots; ++i) b.knots.push_back(static_cast<double>(i) / (interior_knots + 1));
    for (int i = 0; i <= degree; ++i) b.knots.push_back(1.0);
    return b;
  }

  /// Number of basis functions before the first column is dropped.
  int full_size() const { return interior_knots + degree + 1; }
  /// Number of retained columns.
  int p() const { return full_size() - 1; }

  /// All full_size() basis values at t (Cox-de Boor recursion).
  std::vector<double> evaluate(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bspline: t outside [0, 1]");
    const int m = full_size();
    // Span index: knots[span] <= t < knots[span + 1], with t = 1 in the last span.
    int span = degree;
    while (span < m - 1 && t >= knots[static_cast<std::size_t>(span + 1)]) ++span;
    std::vector<double> n_vals(static_cast<std::size_t>(degree + 1), 0.0);
    n_vals[0] = 1.0;
    std::vector<double> left(static_cast<std::size_t>(degree + 1));
    std::vector<double> right(static_cast<std::size_t>(degree + 1));
    for (int j = 1; j <= degree; ++j) {
      left[j] = t - knots[static_cast<std::size_t>(span + 1 - j)];
      right[j] = knots[static_cast<std::size_t>(span + j)] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[r + 1] + left[j - r];
        const double tmp = denom > 0.0 ? n_vals[r] / denom : 0.0;
        n_vals[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      n_vals[j] = saved;
    }
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j <= degree; ++j) out[static_cast<std::size_t>(span - degree + j)] = n_vals[j];
    return out;
  }

  Eigen::MatrixXd full_design(std::span<const double> grid) const {
    Eigen::MatrixXd B(static_cast<Eigen::Index>(grid.size()), full_size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto row = evaluate(grid[i]);
      for (int c = 0; c < full_size(); ++c) B(static_cast<Eigen::Index>(i), c) = row[c];
    }
    return B;
  }

  /// Design matrix with the first column dropped (it is absorbed into the
  /// subject-level intercept).
  Eigen::MatrixXd design(std::span<const double> grid) const {
    if (static_cast<int>(grid.size()) < p()) throw RankError("bspline: fewer grid points than basis columns");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (grid[i] < grid[i - 1]) throw DomainError("bspline: grid must be sorted");
    }
    const Eigen::MatrixXd full = full_design(grid);
    return full.rightCols(p());
  }

  /// Greville abscissae of the retained columns (where each coefficient
  /// mostly acts); handy for building coefficient templates from functions.
  std::vector<double> greville() const {
    std::vector<double> g;
    for (int c = 1; c < full_size(); ++c) {
      double s = 0.0;
      for (int j = 1; j <= degree; ++j) s += knots[static_cast<std::size_t>(c + j)];
      g.push_back(degree > 0 ? s / degree : knots[static_cast<std::size_t>(c)]);
    }
    return g;
  }
};

/// Second-order random-walk penalty S = D'D, D the (p-2) x p second-difference matrix.
inline Eigen::MatrixXd rw2_penalty(int p) {
  if (p < 3) throw DomainError("rw2_penalty: need p >= 3");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p - 2, p);
  for (int r = 0; r < p - 2; ++r) {
    D(r, r) = 1.0;
    D(r, r + 1) = -2.0;
    D(r, r + 2) = 1.0;
  }
  return D.transpose() * D;
}

}  // namespace afmm
