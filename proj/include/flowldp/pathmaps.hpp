#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace flowldp {

/// Piecewise-linear path in R^d: values.col(j) is the position at times[j].
/// The time grid is strictly increasing from 0 to 1.
class PiecewiseLinearPath {
 public:
  PiecewiseLinearPath(std::vector<double> times, Eigen::MatrixXd values);
  // Scalar path.
  PiecewiseLinearPath(std::vector<double> times, std::span<const double> values);

  std::size_t dimension() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t points() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const Eigen::MatrixXd& values() const { return values_; }
  double value(std::size_t coord, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(coord), static_cast<Eigen::Index>(j));
  }

  Eigen::VectorXd at(double t) const;
  double at(std::size_t coord, double t) const;

 private:
  std::vector<double> times_;
  Eigen::MatrixXd values_;
};

// Sup over time of the max-coordinate difference; exact for piecewise-linear paths.
double sup_distance(const PiecewiseLinearPath& a, const PiecewiseLinearPath& b);

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Closed target set: {x : normal . x >= offset}, a box, or a finite union of boxes.
class HittingSet {
 public:
  enum class Kind { halfspace, box, finite_union };

  static HittingSet halfspace(Eigen::VectorXd normal, double offset);
  static HittingSet box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static HittingSet finite_union(std::vector<Box> boxes);

  Kind kind() const { return kind_; }
  std::size_t dimension() const;
  const Eigen::VectorXd& normal() const { return normal_; }
  double offset() const { return offset_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  bool contains(const Eigen::VectorXd& x) const;
  // Smallest s in [0, 1] with a + s (b - a) in the set, if any.
  std::optional<double> segment_entry(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  // Nearest point of the set (used to remove rounding from computed entry points).
  Eigen::VectorXd snap(const Eigen::VectorXd& x) const;

 private:
  Kind kind_ = Kind::halfspace;
  Eigen::VectorXd normal_;
  double offset_ = 0.0;
  std::vector<Box> boxes_;
};

struct Entry {
  double time;
  Eigen::VectorXd point;  // lies in the set
};

std::optional<Entry> first_entry(const PiecewiseLinearPath& f, const HittingSet& b);

// tau = inf{t : f(t) in B} clipped at 1.
double hitting_time(const PiecewiseLinearPath& f, const HittingSet& b);

// f(t ∧ tau) with tau inserted into the time grid.
PiecewiseLinearPath stop_map(const PiecewiseLinearPath& f, const HittingSet& b);

/// Output of the coalescing projection. tau[k] is the meeting time of particle k
/// with particle k - 1 (tau[0] = 1; unmet boundaries keep 1 with met[k] = false).
struct CoalescedPaths {
  PiecewiseLinearPath paths;  // one row per particle
  std::vector<double> tau;
  std::vector<bool> met;
};

// Rows of `paths` are the coordinates 0..n-1, ordered at t = 0. After two
// neighbouring clusters meet, the right one follows the left one's path.
// Simultaneous meetings are processed left to right.
CoalescedPaths coalescing_projection(const PiecewiseLinearPath& paths);

/// Values y(k / 2^level, t_j) of a monotone coalescing skeleton, row k.
struct ForestSkeleton {
  std::size_t level = 0;
  std::vector<double> times;
  Eigen::MatrixXd values;

  std::size_t rows() const { return (std::size_t{1} << level) + 1; }
  double point(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(std::size_t{1} << level);
  }
  // Checks y(r, 0) = r and monotonicity in r; returns false on violation.
  bool is_monotone(double tol = 1e-12) const;
};

/// Forest evaluated on a query grid in u: values(i, j) = y(u_i, t_j).
struct Forest {
  std::vector<double> u;
  std::vector<double> times;
  Eigen::MatrixXd values;
};

// y~(u, t) = min over skeleton points r > u of y(r, t). Query points must lie in [0, 1).
Forest dyadic_extend(const ForestSkeleton& skeleton, std::span<const double> query_u);

}  // namespace flowldp
