#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowldp {

struct Atom {
  double position;
  double mass;
};

/// Finitely supported measure on the line: strictly increasing positions,
/// nonnegative masses.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  // Sorts by position and merges atoms at identical positions.
  static DiscreteMeasure from_points(std::span<const double> positions,
                                     std::span<const double> masses);
  static DiscreteMeasure dirac(double position) { return from_atoms({{position, 1.0}}); }
  static DiscreteMeasure from_atoms(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;
  bool is_probability(double tol = 1e-12) const;

 private:
  std::vector<Atom> atoms_;
};

}  // namespace flowldp
