#pragma once

#include <functional>
#include <memory>
#include <string>

#include "linalg.hpp"

namespace heegner {

/// A Z-lattice in Q^n stored as (1/den) * (row HNF basis).
class Lattice {
 public:
  Lattice() = default;

  static Lattice from_rows(const QMat& gens, size_t dim) {
    Lattice L;
    L.dim_ = dim;
    Int d = common_den(gens);
    IMat rows;
    rows.reserve(gens.size());
    for (auto& g : gens) {
      IVec r(dim);
      for (size_t j = 0; j < dim; ++j) r[j] = Int(Rat(g[j] * d).get_num());
      rows.push_back(std::move(r));
    }
    L.set(hnf(std::move(rows)), d);
    return L;
  }

  static Lattice from_int_rows(IMat rows, const Int& den, size_t dim) {
    Lattice L;
    L.dim_ = dim;
    L.set(hnf(std::move(rows)), den);
    return L;
  }

  size_t dim() const { return dim_; }
  size_t rank() const { return basis_.size(); }
  const IMat& int_basis() const { return basis_; }
  const Int& den() const { return den_; }

  QVec basis_vector(size_t i) const {
    QVec v(dim_);
    for (size_t j = 0; j < dim_; ++j) v[j] = frac(basis_[i][j], den_);
    return v;
  }
  QMat basis() const {
    QMat b;
    for (size_t i = 0; i < rank(); ++i) b.push_back(basis_vector(i));
    return b;
  }

  Lattice operator+(const Lattice& o) const {
    Int d = lcm(den_, o.den_);
    IMat rows = scaled(d);
    for (auto& r : o.scaled(d)) rows.push_back(r);
    return from_int_rows(std::move(rows), d, dim_);
  }

  Lattice intersect(const Lattice& o) const {
    Int d = lcm(den_, o.den_);
    IMat a = scaled(d), b = o.scaled(d);
    IMat stacked = a;
    for (auto& r : b) stacked.push_back(r);
    IMat ker = left_kernel(stacked);
    IMat rows;
    for (auto& k : ker) {
      IVec r(dim_, 0);
      for (size_t i = 0; i < a.size(); ++i)
        if (k[i] != 0)
          for (size_t j = 0; j < dim_; ++j) r[j] += k[i] * a[i][j];
      rows.push_back(std::move(r));
    }
    return from_int_rows(std::move(rows), d, dim_);
  }

  Lattice scale(const Rat& s) const {
    IMat rows = basis_;
    Int num = s.get_num();
    for (auto& r : rows)
      for (auto& x : r) x *= num;
    return from_int_rows(std::move(rows), den_ * Int(s.get_den()), dim_);
  }

  /// Coordinates of v in this basis (requires full rank); empty if not a rational combination.
  QVec coords(const QVec& v) const {
    if (!inv_) {
      QMat b = basis();
      inv_ = std::make_shared<QMat>(inverse(b));
    }
    QVec c(rank(), 0);
    for (size_t j = 0; j < dim_; ++j)
      if (v[j] != 0)
        for (size_t i = 0; i < rank(); ++i) c[i] += v[j] * (*inv_)[j][i];
    return c;
  }

  bool contains(const QVec& v) const {
    if (rank() == dim_) {
      for (auto& c : coords(v))
        if (c.get_den() != 1) return false;
      return true;
    }
    // general case: v in L iff L + Zv == L
    Lattice w = *this + from_rows({v}, dim_);
    return w == *this;
  }

  bool contains(const Lattice& o) const {
    for (size_t i = 0; i < o.rank(); ++i)
      if (!contains(o.basis_vector(i))) return false;
    return true;
  }

  /// |det| of the basis (full rank only), as a rational covolume.
  Rat covolume() const {
    Int d = 1;
    for (size_t i = 0; i < rank(); ++i) d *= basis_[i][i_pivot(i)];
    return frac(d, pow(den_, rank()));
  }

  /// [o : this] for this ⊂ o of equal full rank.
  Int index_in(const Lattice& o) const {
    Rat r = covolume() / o.covolume();
    if (r.get_den() != 1) throw Error("lattice", "index: not a sublattice");
    return r.get_num();
  }

  bool operator==(const Lattice& o) const { return den_ == o.den_ && basis_ == o.basis_; }
  bool operator!=(const Lattice& o) const { return !(*this == o); }

  size_t hash() const {
    size_t h = std::hash<std::string>()(den_.get_str());
    for (auto& r : basis_)
      for (auto& x : r) h = h * 1000003u ^ std::hash<std::string>()(x.get_str(16));
    return h;
  }

 private:
  size_t dim_ = 0;
  IMat basis_;
  Int den_ = 1;
  mutable std::shared_ptr<QMat> inv_;

  void set(IMat rows, Int d) {
    // reduce the denominator
    Int g = d;
    for (auto& r : rows)
      for (auto& x : r) g = gcd(g, x);
    if (g != 1 && g != 0) {
      for (auto& r : rows)
        for (auto& x : r) x /= g;
      d /= g;
    }
    basis_ = std::move(rows);
    den_ = d;
    inv_.reset();
  }
  IMat scaled(const Int& d) const {
    Int f = d / den_;
    IMat r = basis_;
    for (auto& row : r)
      for (auto& x : row) x *= f;
    return r;
  }
  size_t i_pivot(size_t i) const {
    size_t j = 0;
    while (basis_[i][j] == 0) ++j;
    return j;
  }
};

}  // namespace heegner
