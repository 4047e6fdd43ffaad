#include "flowldp/measure.hpp"

#include <algorithm>
#include <cmath>

#include "flowldp/error.hpp"

namespace flowldp {

DiscreteMeasure DiscreteMeasure::from_points(std::span<const double> positions,
                                             std::span<const double> masses) {
  if (positions.size() != masses.size()) {
    throw InvalidParameter("DiscreteMeasure: positions and masses differ in length");
  }
  std::vector<Atom> atoms(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) atoms[i] = {positions[i], masses[i]};
  return from_atoms(std::move(atoms));
}

DiscreteMeasure DiscreteMeasure::from_atoms(std::vector<Atom> atoms) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.position)) throw InvalidParameter("DiscreteMeasure: non-finite position");
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass)) {
      throw InvalidParameter("DiscreteMeasure: masses must be finite and nonnegative");
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.position < b.position; });
  DiscreteMeasure m;
  for (const Atom& a : atoms) {
    if (!m.atoms_.empty() && m.atoms_.back().position == a.position) {
      m.atoms_.back().mass += a.mass;
    } else {
      m.atoms_.push_back(a);
    }
  }
  return m;
}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.mass;
  return s;
}

bool DiscreteMeasure::is_probability(double tol) const {
  return !atoms_.empty() && std::abs(total_mass() - 1.0) <= tol;
}

}  // namespace flowldp
