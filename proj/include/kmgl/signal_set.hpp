#pragma once

#include "kmgl/filter.hpp"

#include <Eigen/Dense>

#include <vector>

namespace kmgl {

/// m graph signals on n shared nodes, one signal per column, with optional
/// per-signal observation masks.
struct SignalSet {
  Eigen::MatrixXd X;
  std::vector<ObservationMask> masks;

  Eigen::Index nodes() const { return X.rows(); }
  Eigen::Index size() const { return X.cols(); }
  bool has_masks() const { return !masks.empty(); }

  /// Columns `indices` of X (and their masks) as a new set.
  SignalSet select(const std::vector<Eigen::Index>& indices) const;
  /// X with unobserved entries set to zero.
  Eigen::MatrixXd zero_filled() const;
  /// Throws Dimension when masks are present but inconsistent with X.
  void validate() const;
};

}  // namespace kmgl
