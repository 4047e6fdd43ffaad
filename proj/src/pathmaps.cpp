#include "flowldp/pathmaps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowldp/error.hpp"

namespace flowldp {

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> times, Eigen::MatrixXd values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() < 2) throw InvalidParameter("path needs at least two time points");
  if (static_cast<std::size_t>(values_.cols()) != times_.size()) {
    throw InvalidParameter("path values must have one column per time point");
  }
  if (values_.rows() == 0) throw InvalidParameter("path dimension must be positive");
  if (times_.front() != 0.0 || times_.back() != 1.0) {
    throw InvalidParameter("path time grid must run from 0 to 1");
  }
  for (std::size_t j = 1; j < times_.size(); ++j) {
    if (!(times_[j] > times_[j - 1])) throw InvalidParameter("path time grid must be strictly increasing");
  }
  if (!values_.allFinite()) throw InvalidParameter("path values must be finite");
}

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> times, std::span<const double> values)
    : PiecewiseLinearPath(std::move(times),
                          Eigen::MatrixXd(Eigen::Map<const Eigen::RowVectorXd>(
                              values.data(), static_cast<Eigen::Index>(values.size())))) {}

namespace {

// Segment j with times[j] <= t <= times[j+1], and the weight of the right end.
std::pair<std::size_t, double> locate(const std::vector<double>& times, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t j = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  j = std::min(j, times.size() - 2);
  const double w = (t - times[j]) / (times[j + 1] - times[j]);
  return {j, w};
}

}  // namespace

Eigen::VectorXd PiecewiseLinearPath::at(double t) const {
  const auto [j, w] = locate(times_, t);
  const auto c = static_cast<Eigen::Index>(j);
  if (w == 0.0) return values_.col(c);
  return values_.col(c) + w * (values_.col(c + 1) - values_.col(c));
}

double PiecewiseLinearPath::at(std::size_t coord, double t) const {
  const auto [j, w] = locate(times_, t);
  const double a = value(coord, j);
  if (w == 0.0) return a;
  return a + w * (value(coord, j + 1) - a);
}

double sup_distance(const PiecewiseLinearPath& a, const PiecewiseLinearPath& b) {
  if (a.dimension() != b.dimension()) throw InvalidParameter("sup_distance: dimension mismatch");
  std::vector<double> grid;
  grid.reserve(a.points() + b.points());
  std::merge(a.times().begin(), a.times().end(), b.times().begin(), b.times().end(),
             std::back_inserter(grid));
  double d = 0.0;
  for (double t : grid) d = std::max(d, (a.at(t) - b.at(t)).cwiseAbs().maxCoeff());
  return d;
}

HittingSet HittingSet::halfspace(Eigen::VectorXd normal, double offset) {
  if (normal.size() == 0 || !normal.allFinite() || normal.norm() == 0.0 || !std::isfinite(offset)) {
    throw InvalidParameter("halfspace needs a finite nonzero normal and finite offset");
  }
  HittingSet s;
  s.kind_ = Kind::halfspace;
  s.normal_ = std::move(normal);
  s.offset_ = offset;
  return s;
}

HittingSet HittingSet::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  HittingSet s = finite_union({Box{std::move(lo), std::move(hi)}});
  s.kind_ = Kind::box;
  return s;
}

HittingSet HittingSet::finite_union(std::vector<Box> boxes) {
  if (boxes.empty()) throw InvalidParameter("finite union needs at least one box");
  const auto d = boxes.front().lo.size();
  for (const Box& b : boxes) {
    if (b.lo.size() == 0 || b.lo.size() != d || b.hi.size() != d) {
      throw InvalidParameter("box corners must share one positive dimension");
    }
    if (b.lo.array().isNaN().any() || b.hi.array().isNaN().any() || (b.lo.array() > b.hi.array()).any()) {
      throw InvalidParameter("box needs lo <= hi in every coordinate");
    }
  }
  HittingSet s;
  s.kind_ = Kind::finite_union;
  s.boxes_ = std::move(boxes);
  return s;
}

std::size_t HittingSet::dimension() const {
  return static_cast<std::size_t>(kind_ == Kind::halfspace ? normal_.size() : boxes_.front().lo.size());
}

namespace {

bool in_box(const Box& b, const Eigen::VectorXd& x) {
  return (x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all();
}

std::optional<double> box_entry(const Box& box, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s_lo = 0.0;
  double s_hi = 1.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = b(i) - a(i);
    if (d == 0.0) {
      if (a(i) < box.lo(i) || a(i) > box.hi(i)) return std::nullopt;
      continue;
    }
    double s1 = (box.lo(i) - a(i)) / d;
    double s2 = (box.hi(i) - a(i)) / d;
    if (s1 > s2) std::swap(s1, s2);
    s_lo = std::max(s_lo, s1);
    s_hi = std::min(s_hi, s2);
    if (s_lo > s_hi) return std::nullopt;
  }
  return s_lo;
}

}  // namespace

bool HittingSet::contains(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dimension()) throw InvalidParameter("hitting set: dimension mismatch");
  if (kind_ == Kind::halfspace) return normal_.dot(x) >= offset_;
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return in_box(b, x); });
}

std::optional<double> HittingSet::segment_entry(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (kind_ == Kind::halfspace) {
    const double g0 = normal_.dot(a) - offset_;
    if (g0 >= 0.0) return 0.0;
    const double g1 = normal_.dot(b) - offset_;
    if (g1 < 0.0) return std::nullopt;
    return std::clamp(g0 / (g0 - g1), 0.0, 1.0);
  }
  std::optional<double> best;
  for (const Box& box : boxes_) {
    if (auto s = box_entry(box, a, b); s && (!best || *s < *best)) best = s;
  }
  return best;
}

Eigen::VectorXd HittingSet::snap(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::halfspace) {
    Eigen::VectorXd y = x;
    const double nn = normal_.squaredNorm();
    for (int iter = 0; iter < 64 && normal_.dot(y) < offset_; ++iter) {
      const double deficit = offset_ - normal_.dot(y);
      const double push = std::max(deficit, std::numeric_limits<double>::epsilon() *
                                                std::max(1.0, std::abs(offset_))) / nn;
      y += push * normal_;
    }
    return y;
  }
  Eigen::VectorXd best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Box& b : boxes_) {
    Eigen::VectorXd y = x.cwiseMax(b.lo).cwiseMin(b.hi);
    const double d = (y - x).norm();
    if (d < best_d) {
      best_d = d;
      best = std::move(y);
    }
  }
  return best;
}

std::optional<Entry> first_entry(const PiecewiseLinearPath& f, const HittingSet& b) {
  if (f.dimension() != b.dimension()) throw InvalidParameter("hitting: path and set dimensions differ");
  const auto& t = f.times();
  for (std::size_t j = 0; j + 1 < f.points(); ++j) {
    const Eigen::VectorXd p0 = f.values().col(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd p1 = f.values().col(static_cast<Eigen::Index>(j + 1));
    const auto s = b.segment_entry(p0, p1);
    if (!s) continue;
    if (*s == 0.0) return Entry{t[j], b.snap(p0)};
    if (*s == 1.0) return Entry{t[j + 1], b.snap(p1)};
    const double time = std::min(t[j] + *s * (t[j + 1] - t[j]), t[j + 1]);
    return Entry{time, b.snap(p0 + *s * (p1 - p0))};
  }
  return std::nullopt;
}

double hitting_time(const PiecewiseLinearPath& f, const HittingSet& b) {
  const auto e = first_entry(f, b);
  return e ? e->time : 1.0;
}

PiecewiseLinearPath stop_map(const PiecewiseLinearPath& f, const HittingSet& b) {
  const auto e = first_entry(f, b);
  if (!e) return f;
  const auto& t = f.times();
  std::vector<double> times;
  std::vector<Eigen::Index> source;  // -1 = frozen point
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t[j] < e->time) {
      times.push_back(t[j]);
      source.push_back(static_cast<Eigen::Index>(j));
    }
  }
  times.push_back(e->time);
  source.push_back(-1);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t[j] > e->time) {
      times.push_back(t[j]);
      source.push_back(-1);
    }
  }
  Eigen::MatrixXd v(f.values().rows(), static_cast<Eigen::Index>(times.size()));
  for (std::size_t c = 0; c < times.size(); ++c) {
    v.col(static_cast<Eigen::Index>(c)) = source[c] >= 0 ? f.values().col(source[c]) : e->point;
  }
  return PiecewiseLinearPath(std::move(times), std::move(v));
}

CoalescedPaths coalescing_projection(const PiecewiseLinearPath& f) {
  const std::size_t n = f.dimension();
  const auto& t = f.times();
  for (std::size_t k = 1; k < n; ++k) {
    if (f.value(k, 0) < f.value(k - 1, 0)) {
      throw InvalidParameter("coalescing_projection: paths must be ordered at t = 0");
    }
  }
  std::vector<double> tau(n, 1.0);
  std::vector<bool> met(n, false);
  std::vector<double> inserted;
  std::vector<std::size_t> heads(n);
  for (std::size_t k = 0; k < n; ++k) heads[k] = k;

  for (std::size_t j = 0; j + 1 < t.size() && heads.size() > 1; ++j) {
    const double t0 = t[j];
    const double t1 = t[j + 1];
    auto val = [&](std::size_t row, double s) {
      const double a = f.value(row, j);
      return s == t0 ? a : a + (s - t0) / (t1 - t0) * (f.value(row, j + 1) - a);
    };
    double now = t0;
    for (;;) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_q = 0;
      for (std::size_t q = 1; q < heads.size(); ++q) {
        const double d0 = val(heads[q], now) - val(heads[q - 1], now);
        const double d1 = f.value(heads[q], j + 1) - f.value(heads[q - 1], j + 1);
        double when;
        if (d0 <= 0.0) {
          when = now;
        } else if (d1 <= 0.0) {
          when = std::clamp(now + d0 / (d0 - d1) * (t1 - now), now, t1);
        } else {
          continue;
        }
        if (when < best) {
          best = when;
          best_q = q;
        }
      }
      if (best_q == 0) break;
      const std::size_t k = heads[best_q];
      tau[k] = best;
      met[k] = true;
      if (best > t0 && best < t1) inserted.push_back(best);
      heads.erase(heads.begin() + static_cast<std::ptrdiff_t>(best_q));
      now = best;
    }
  }

  std::vector<double> grid;
  grid.reserve(t.size() + inserted.size());
  std::sort(inserted.begin(), inserted.end());
  std::merge(t.begin(), t.end(), inserted.begin(), inserted.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t c = 0; c < grid.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = i;
      while (r > 0 && met[r] && tau[r] <= grid[c]) --r;
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f.at(r, grid[c]);
    }
  }
  return CoalescedPaths{PiecewiseLinearPath(std::move(grid), std::move(v)), std::move(tau),
                        std::move(met)};
}

bool ForestSkeleton::is_monotone(double tol) const {
  if (static_cast<std::size_t>(values.rows()) != rows() ||
      static_cast<std::size_t>(values.cols()) != times.size()) {
    return false;
  }
  for (std::size_t k = 0; k < rows(); ++k) {
    if (std::abs(values(static_cast<Eigen::Index>(k), 0) - point(k)) > tol) return false;
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index k = 1; k < values.rows(); ++k) {
      if (values(k, j) < values(k - 1, j) - tol) return false;
    }
  }
  return true;
}

Forest dyadic_extend(const ForestSkeleton& s, std::span<const double> query_u) {
  const std::size_t rows = s.rows();
  if (static_cast<std::size_t>(s.values.rows()) != rows ||
      static_cast<std::size_t>(s.values.cols()) != s.times.size() || s.times.empty()) {
    throw InvalidParameter("dyadic_extend: skeleton shape does not match its level and time grid");
  }
  // Suffix minima over r: suffix(k, j) = min_{k' >= k} y(k' / 2^n, t_j).
  Eigen::MatrixXd suffix = s.values;
  for (Eigen::Index k = suffix.rows() - 2; k >= 0; --k) {
    suffix.row(k) = suffix.row(k).cwiseMin(suffix.row(k + 1));
  }
  const double scale = static_cast<double>(rows - 1);
  Forest out;
  out.u.assign(query_u.begin(), query_u.end());
  out.times = s.times;
  out.values.resize(static_cast<Eigen::Index>(query_u.size()), suffix.cols());
  for (std::size_t i = 0; i < query_u.size(); ++i) {
    const double u = query_u[i];
    if (!(u >= 0.0 && u < 1.0)) throw InvalidParameter("dyadic_extend: query points must lie in [0, 1)");
    auto k = static_cast<std::size_t>(std::floor(u * scale)) + 1;
    while (k > 1 && s.point(k - 1) > u) --k;
    while (k < rows - 1 && s.point(k) <= u) ++k;
    out.values.row(static_cast<Eigen::Index>(i)) = suffix.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace flowldp
