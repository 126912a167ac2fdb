#include "kmgl/signal_set.hpp"

#include "kmgl/error.hpp"

namespace kmgl {

SignalSet SignalSet::select(const std::vector<Eigen::Index>& indices) const {
  SignalSet out;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) out.X.col(static_cast<Eigen::Index>(c)) = X.col(indices[c]);
  if (has_masks()) {
    out.masks.reserve(indices.size());
    for (Eigen::Index i : indices) out.masks.push_back(masks[static_cast<std::size_t>(i)]);
  }
  return out;
}

Eigen::MatrixXd SignalSet::zero_filled() const {
  if (!has_masks()) return X;
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) out.col(i) = masks[static_cast<std::size_t>(i)].apply(X.col(i));
  return out;
}

void SignalSet::validate() const {
  if (!has_masks()) return;
  if (static_cast<Eigen::Index>(masks.size()) != X.cols()) {
    throw Error(ErrorKind::Dimension, "expected one mask per signal");
  }
  for (const auto& m : masks) {
    if (m.size() != X.rows()) throw Error(ErrorKind::Dimension, "mask length does not match node count");
  }
}

}  // namespace kmgl
