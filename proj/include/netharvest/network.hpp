#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netharvest/error.hpp"

namespace netharvest {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

// Nodes not reached from node 0 by following edges i -> j with adj(i, j) > 0.
template <typename Derived>
std::vector<bool> reachable_from_first(const Eigen::MatrixBase<Derived>& adj) {
  const Eigen::Index n = adj.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> frontier;
  seen[0] = true;
  frontier.push(0);
  while (!frontier.empty()) {
    const Eigen::Index i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (adj(i, j) > 0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        frontier.push(j);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Directed migration network. Entry b(i, j) is the fraction of the stock at
/// node i that flows to node j per unit time.
///
/// Invariants: square, n >= 2, b >= 0, zero diagonal, strongly connected.
/// Immutable once built.
template <typename Scalar>
class Network {
 public:
  using Matrix = MatrixX<Scalar>;

  /// Validates `weights` and builds the network. Throws Error with
  /// kDimensionMismatch, kNegativeWeight, kNonzeroDiagonal or
  /// kNotStronglyConnected; the error index is the offending (0-based) node.
  static Network build(const Matrix& weights) {
    if (weights.rows() != weights.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "weight matrix must be square");
    }
    if (weights.rows() < 2) {
      throw Error(ErrorCode::kDimensionMismatch, "network needs at least 2 nodes");
    }
    const Eigen::Index n = weights.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights(i, i) != Scalar(0)) {
        throw Error(ErrorCode::kNonzeroDiagonal,
                    "b_ii must be 0 at node " + std::to_string(i + 1), i);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(weights(i, j) >= Scalar(0))) {
          throw Error(ErrorCode::kNegativeWeight,
                      "b_" + std::to_string(i + 1) + std::to_string(j + 1) +
                          " is negative or not a number",
                      i);
        }
      }
    }
    // Forward sweep: every node reachable from node 1. Sweep on the
    // transpose: node 1 reachable from every node.
    const auto forward = detail::reachable_from_first(weights);
    const auto backward = detail::reachable_from_first(weights.transpose());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!forward[static_cast<std::size_t>(i)]) {
        throw Error(ErrorCode::kNotStronglyConnected,
                    "no path from node 1 to node " + std::to_string(i + 1), i);
      }
      if (!backward[static_cast<std::size_t>(i)]) {
        throw Error(ErrorCode::kNotStronglyConnected,
                    "no path from node " + std::to_string(i + 1) + " to node 1", i);
      }
    }
    return Network(weights);
  }

  Eigen::Index size() const { return b_.rows(); }
  const Matrix& weights() const { return b_; }

  /// Diagonal outflow matrix D: D_ii = -sum_j b_ij.
  Matrix outflow_diagonal() const {
    return Matrix((-b_.rowwise().sum()).asDiagonal());
  }

 private:
  explicit Network(Matrix b) : b_(std::move(b)) {}

  Matrix b_;
};

/// Fick-type symmetric diffusion: flow along edge (i, j) proportional to the
/// stock difference, alpha_i(x) = sum_j w_ji (x_j - x_i).
template <typename Scalar>
Network<Scalar> fick_from_weights(const MatrixX<Scalar>& w) {
  if (w.rows() != w.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "weight matrix must be square");
  }
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
      if (w(i, j) != w(j, i)) {
        throw Error(ErrorCode::kNotSymmetric,
                    "w_" + std::to_string(i + 1) + std::to_string(j + 1) +
                        " != w_" + std::to_string(j + 1) + std::to_string(i + 1),
                    i);
      }
    }
  }
  return Network<Scalar>::build(w);
}

/// Migration operator D + B^T. Columns sum to zero, off-diagonals are
/// nonnegative (Metzler).
template <typename Scalar>
struct MigrationOperator {
  MatrixX<Scalar> matrix;

  Eigen::Index size() const { return matrix.rows(); }
};

template <typename Scalar>
MigrationOperator<Scalar> migration_operator(const Network<Scalar>& net) {
  return {net.outflow_diagonal() + net.weights().transpose()};
}

/// Net inflow alpha(x) = (D + B^T) x. Components sum to zero.
template <typename Scalar, typename Derived>
VectorX<Scalar> net_inflow(const Network<Scalar>& net,
                           const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != net.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state has " + std::to_string(x.size()) + " entries, network has " +
                    std::to_string(net.size()) + " nodes");
  }
  return migration_operator(net).matrix * x;
}

/// The set F of nodes hosting an extractor.
class ExtractionPattern {
 public:
  /// `active` holds 0-based node indices, in any order; duplicates merge.
  static ExtractionPattern build(Eigen::Index n, std::vector<Eigen::Index> active) {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    if (active.empty()) {
      throw Error(ErrorCode::kInvalidPattern, "at least one active node is required");
    }
    if (active.front() < 0 || active.back() >= n) {
      throw Error(ErrorCode::kInvalidPattern, "active node index out of range",
                  active.front() < 0 ? active.front() : active.back());
    }
    return ExtractionPattern(n, std::move(active));
  }

  Eigen::Index size() const { return n_; }
  Eigen::Index count() const { return static_cast<Eigen::Index>(active_.size()); }
  const std::vector<Eigen::Index>& active() const { return active_; }
  bool contains(Eigen::Index i) const {
    return std::binary_search(active_.begin(), active_.end(), i);
  }

  /// Indicator vector xi = sum_{i in F} e_i.
  template <typename Scalar>
  VectorX<Scalar> indicator() const {
    VectorX<Scalar> xi = VectorX<Scalar>::Zero(n_);
    for (auto i : active_) xi(i) = Scalar(1);
    return xi;
  }

  /// E = xi e^T: row i is all ones for i in F, zero otherwise.
  template <typename Scalar>
  MatrixX<Scalar> e_matrix() const {
    return indicator<Scalar>() * VectorX<Scalar>::Ones(n_).transpose();
  }

 private:
  ExtractionPattern(Eigen::Index n, std::vector<Eigen::Index> active)
      : n_(n), active_(std::move(active)) {}

  Eigen::Index n_;
  std::vector<Eigen::Index> active_;
};

/// Smallest inflow weight b_ji (j != i) into any active node i. An affine
/// feedback theta * <e, x> keeps the nonnegative orthant invariant from every
/// initial state iff theta does not exceed this value. Returns 0 when some
/// active node misses an inflow edge.
template <typename Scalar>
Scalar inflow_threshold(const Network<Scalar>& net, const ExtractionPattern& pat) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const auto& b = net.weights();
  for (auto i : pat.active()) {
    for (Eigen::Index j = 0; j < net.size(); ++j) {
      if (j != i) best = std::min(best, b(j, i));
    }
  }
  return best;
}

/// Same bound with the outflow orientation b_ij. Reported next to
/// inflow_threshold because both index orders appear in the literature.
template <typename Scalar>
Scalar outflow_threshold(const Network<Scalar>& net, const ExtractionPattern& pat) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const auto& b = net.weights();
  for (auto i : pat.active()) {
    for (Eigen::Index j = 0; j < net.size(); ++j) {
      if (j != i) best = std::min(best, b(i, j));
    }
  }
  return best;
}

using Networkd = Network<double>;
using MigrationOperatord = MigrationOperator<double>;

}  // namespace netharvest
