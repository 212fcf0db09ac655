#pragma once

// Dense component tensors with declared valence. Entries are homogeneous:
// either all reals (RealTensor) or all jets (JetTensor). Storage is
// row-major over the slots, dim^rank entries, no symmetry compression.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "linein/errors.hpp"
#include "linein/jet.hpp"

namespace linein {

enum class Variance : std::uint8_t { Covariant, Contravariant };
using Valence = std::vector<Variance>;

inline Valence covariant(int rank) { return Valence(rank, Variance::Covariant); }
inline Valence contravariant(int rank) { return Valence(rank, Variance::Contravariant); }

template <class Scalar>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, Valence valence, const Scalar& fill)
      : dim_(dim), valence_(std::move(valence)) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < valence_.size(); ++i) n *= static_cast<std::size_t>(dim_);
    entries_.assign(n, fill);
  }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(valence_.size()); }
  const Valence& valence() const { return valence_; }
  Variance variance(int slot) const { return valence_[slot]; }
  std::size_t size() const { return entries_.size(); }

  Scalar& operator[](std::size_t flat) { return entries_[flat]; }
  const Scalar& operator[](std::size_t flat) const { return entries_[flat]; }

  template <class... I>
  Scalar& operator()(I... idx) {
    return entries_[flat_of(idx...)];
  }
  template <class... I>
  const Scalar& operator()(I... idx) const {
    return entries_[flat_of(idx...)];
  }

  std::size_t flatten(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * dim_ + static_cast<std::size_t>(i);
    return f;
  }
  void unflatten(std::size_t flat, std::span<int> idx) const {
    for (int s = rank() - 1; s >= 0; --s) {
      idx[s] = static_cast<int>(flat % dim_);
      flat /= dim_;
    }
  }

  std::span<const Scalar> entries() const { return entries_; }
  std::span<Scalar> entries() { return entries_; }

  Tensor& operator+=(const Tensor& rhs) {
    check_shape(rhs);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += rhs.entries_[k];
    return *this;
  }
  Tensor& operator-=(const Tensor& rhs) {
    check_shape(rhs);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= rhs.entries_[k];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& e : entries_) e *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }

  std::string label;

 private:
  template <class... I>
  std::size_t flat_of(I... idx) const {
    std::size_t f = 0;
    ((f = f * dim_ + static_cast<std::size_t>(idx)), ...);
    return f;
  }
  void check_shape(const Tensor& rhs) const {
    if (rhs.dim_ != dim_ || rhs.valence_ != valence_)
      throw BadSlots("tensor shapes differ in elementwise operation");
  }

  int dim_ = 0;
  Valence valence_;
  std::vector<Scalar> entries_;
};

using RealTensor = Tensor<double>;
using JetTensor = Tensor<Jet>;

// ---------------------------------------------------------------------------
// scalar helpers shared by the real and jet code paths

inline double zero_like(double) { return 0.0; }
inline Jet zero_like(const Jet& j) { return j.zero_like(); }

inline void accumulate_product(double& acc, double a, double b, double scale = 1.0) {
  acc += scale * a * b;
}
inline void accumulate_product(Jet& acc, const Jet& a, const Jet& b, double scale = 1.0) {
  acc.add_product(a, b, scale);
}

/// Lowest jet order among the entries (entries always share one order).
int jet_order(const JetTensor& t);
JetTensor truncated(const JetTensor& t, int order);
RealTensor values(const JetTensor& t);
/// Explicit promotion of reals to constant jets.
JetTensor promote(const RealTensor& t, int order, std::span<const double> base);

double max_abs(const RealTensor& t);
double max_abs_difference(const RealTensor& a, const RealTensor& b);

// ---------------------------------------------------------------------------

enum class SymmetryMode { Symmetric, Antisymmetric };

namespace detail {

inline int permutation_sign(const std::vector<int>& perm) {
  int sign = 1;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

}  // namespace detail

/// Average over all permutations of the listed slots (weight 1/k!), signed by
/// parity when mode is Antisymmetric. Slots must be distinct and of one variance.
template <class Scalar>
Tensor<Scalar> symmetrize_slots(const Tensor<Scalar>& t, std::vector<int> slots,
                                SymmetryMode mode) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] < 0 || slots[i] >= t.rank()) throw BadSlots("slot index out of range");
    if (t.variance(slots[i]) != t.variance(slots[0]))
      throw BadSlots("symmetrised slots must share variance");
    for (std::size_t j = 0; j < i; ++j)
      if (slots[i] == slots[j]) throw BadSlots("symmetrised slots must be distinct");
  }
  if (slots.size() < 2) return t;

  std::vector<int> perm(slots.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  std::vector<int> signs;
  do {
    perms.push_back(perm);
    signs.push_back(detail::permutation_sign(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double weight = 1.0 / static_cast<double>(perms.size());

  Tensor<Scalar> out(t.dim(), t.valence(), zero_like(t[0]));
  out.label = t.label;
  std::vector<int> idx(t.rank()), src(t.rank());
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unflatten(f, idx);
    Scalar acc = zero_like(t[0]);
    for (std::size_t p = 0; p < perms.size(); ++p) {
      src = idx;
      for (std::size_t i = 0; i < slots.size(); ++i) src[slots[i]] = idx[slots[perms[p][i]]];
      const double w = mode == SymmetryMode::Antisymmetric ? weight * signs[p] : weight;
      Scalar term = t[t.flatten(src)];
      term *= w;
      acc += term;
    }
    out[f] = std::move(acc);
  }
  return out;
}

/// Sums over one contravariant and one covariant slot; the rank drops by two.
template <class Scalar>
Tensor<Scalar> contract_slots(const Tensor<Scalar>& t, int slot_up, int slot_down) {
  if (slot_up < 0 || slot_up >= t.rank() || slot_down < 0 || slot_down >= t.rank() ||
      slot_up == slot_down)
    throw BadSlots("contraction slots out of range");
  if (t.variance(slot_up) != Variance::Contravariant || t.variance(slot_down) != Variance::Covariant)
    throw BadSlots("contraction needs one contravariant and one covariant slot");

  Valence v;
  for (int s = 0; s < t.rank(); ++s)
    if (s != slot_up && s != slot_down) v.push_back(t.variance(s));
  Tensor<Scalar> out(t.dim(), v, zero_like(t[0]));
  std::vector<int> idx(out.rank()), src(t.rank());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out.unflatten(f, idx);
    for (int s = 0, k = 0; s < t.rank(); ++s)
      if (s != slot_up && s != slot_down) src[s] = idx[k++];
    Scalar acc = zero_like(t[0]);
    for (int i = 0; i < t.dim(); ++i) {
      src[slot_up] = i;
      src[slot_down] = i;
      acc += t[t.flatten(src)];
    }
    out[f] = std::move(acc);
  }
  return out;
}

/// out(i_0, ..., i_{k-1}) = t(i_{perm[0]}, ..., i_{perm[k-1]}).
template <class Scalar>
Tensor<Scalar> permute_slots(const Tensor<Scalar>& t, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != t.rank()) throw BadSlots("permutation length mismatch");
  Valence v(t.rank());
  for (int k = 0; k < t.rank(); ++k) v[perm[k]] = t.variance(k);
  Tensor<Scalar> out(t.dim(), v, zero_like(t[0]));
  std::vector<int> idx(t.rank()), src(t.rank());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out.unflatten(f, idx);
    for (int k = 0; k < t.rank(); ++k) src[k] = idx[perm[k]];
    out[f] = t[t.flatten(src)];
  }
  return out;
}

enum class IndexMove { Raise, Lower };

/// Contracts slot with g^{..} (Raise) or g_{..} (Lower); the slot keeps its
/// position. metric/inverse are rank-2 tensors of the same scalar kind.
template <class Scalar>
Tensor<Scalar> adjust_index(const Tensor<Scalar>& t, int slot, IndexMove move,
                            const Tensor<Scalar>& metric, const Tensor<Scalar>& inverse) {
  if (slot < 0 || slot >= t.rank()) throw BadSlots("slot index out of range");
  const Variance need = move == IndexMove::Raise ? Variance::Covariant : Variance::Contravariant;
  if (t.variance(slot) != need)
    throw BadSlots(move == IndexMove::Raise ? "cannot raise a contravariant slot"
                                            : "cannot lower a covariant slot");
  const Tensor<Scalar>& m = move == IndexMove::Raise ? inverse : metric;
  Valence v = t.valence();
  v[slot] = move == IndexMove::Raise ? Variance::Contravariant : Variance::Covariant;
  Tensor<Scalar> out(t.dim(), v, zero_like(t[0]));
  std::vector<int> idx(t.rank()), src(t.rank());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out.unflatten(f, idx);
    src = idx;
    Scalar acc = zero_like(t[0]);
    for (int j = 0; j < t.dim(); ++j) {
      src[slot] = j;
      accumulate_product(acc, m(idx[slot], j), t[t.flatten(src)]);
    }
    out[f] = std::move(acc);
  }
  return out;
}

struct RiemannSymmetryReport {
  /// max |T - T_[ab][cd]|
  double pair_antisymmetry = 0.0;
  /// max |T_[abc]d|
  double first_bianchi = 0.0;
  /// max |T_abcd - T_cdab|
  double pair_interchange = 0.0;
  double scale = 0.0;
};

RiemannSymmetryReport check_riemann_symmetries(const RealTensor& t);

}  // namespace linein
