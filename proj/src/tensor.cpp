#include "linein/tensor.hpp"

namespace linein {

int jet_order(const JetTensor& t) {
  if (t.size() == 0) return 0;
  return t[0].order();
}

JetTensor truncated(const JetTensor& t, int order) {
  if (jet_order(t) == order) return t;
  JetTensor out(t.dim(), t.valence(), t[0].truncated(order));
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = t[k].truncated(order);
  out.label = t.label;
  return out;
}

RealTensor values(const JetTensor& t) {
  RealTensor out(t.dim(), t.valence(), 0.0);
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = t[k].value();
  out.label = t.label;
  return out;
}

JetTensor promote(const RealTensor& t, int order, std::span<const double> base) {
  const Jet zero = Jet::constant(t.dim(), order, base, 0.0);
  JetTensor out(t.dim(), t.valence(), zero);
  for (std::size_t k = 0; k < t.size(); ++k) out[k].coeffs()[0] = t[k];
  out.label = t.label;
  return out;
}

double max_abs(const RealTensor& t) {
  double m = 0.0;
  for (double v : t.entries()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_difference(const RealTensor& a, const RealTensor& b) {
  if (a.size() != b.size()) throw BadSlots("tensor sizes differ");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

RiemannSymmetryReport check_riemann_symmetries(const RealTensor& t) {
  if (t.rank() != 4) throw BadSlots("Riemann symmetry check needs a rank-4 tensor");
  for (int s = 0; s < 4; ++s)
    if (t.variance(s) != Variance::Covariant) throw BadSlots("Riemann symmetry check needs covariant slots");

  RiemannSymmetryReport r;
  r.scale = max_abs(t);
  const RealTensor pairs = symmetrize_slots(
      symmetrize_slots(t, {0, 1}, SymmetryMode::Antisymmetric), {2, 3},
      SymmetryMode::Antisymmetric);
  r.pair_antisymmetry = max_abs_difference(t, pairs);
  r.first_bianchi = max_abs(symmetrize_slots(t, {0, 1, 2}, SymmetryMode::Antisymmetric));
  r.pair_interchange = max_abs_difference(t, permute_slots(t, {2, 3, 0, 1}));
  return r;
}

}  // namespace linein
