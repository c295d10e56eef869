#pragma once

#include <map>
#include <optional>
#include <set>

#include "enumerate.hpp"
#include "lattice.hpp"
#include "quatalg.hpp"

namespace heegner {

// ---------------------------------------------------------------------------
// Lattices in B (coordinates from QuaternionAlgebra::to_vec)

inline Lattice span(const QuaternionAlgebra& B, const std::vector<QuatElement>& xs) {
  QMat rows;
  for (auto& x : xs) rows.push_back(B.to_vec(x));
  return Lattice::from_rows(rows, B.dim());
}

inline std::vector<QuatElement> elements(const QuaternionAlgebra& B, const Lattice& L) {
  std::vector<QuatElement> out;
  for (size_t k = 0; k < L.rank(); ++k) out.push_back(B.from_vec(L.basis_vector(k)));
  return out;
}

inline Lattice product(const QuaternionAlgebra& B, const Lattice& I, const Lattice& J) {
  auto a = elements(B, I), b = elements(B, J);
  std::vector<QuatElement> xs;
  for (auto& x : a)
    for (auto& y : b) xs.push_back(B.mul(x, y));
  return span(B, xs);
}

inline Lattice left_mul(const QuaternionAlgebra& B, const QuatElement& x, const Lattice& I) {
  std::vector<QuatElement> xs;
  for (auto& y : elements(B, I)) xs.push_back(B.mul(x, y));
  return span(B, xs);
}

inline Lattice right_mul(const QuaternionAlgebra& B, const Lattice& I, const QuatElement& x) {
  std::vector<QuatElement> xs;
  for (auto& y : elements(B, I)) xs.push_back(B.mul(y, x));
  return span(B, xs);
}

inline Lattice conj_lattice(const QuaternionAlgebra& B, const Lattice& I) {
  std::vector<QuatElement> xs;
  for (auto& y : elements(B, I)) xs.push_back(B.conj(y));
  return span(B, xs);
}

/// O_F * I (the O_F-module generated by I).
inline Lattice of_module(const QuaternionAlgebra& B, const Lattice& I) {
  if (B.d() == 1) return I;
  std::vector<QuatElement> xs = elements(B, I);
  size_t n = xs.size();
  FieldElement w{Rat(0), Rat(1)};
  for (size_t k = 0; k < n; ++k) xs.push_back(B.scale(xs[k], w));
  return span(B, xs);
}

/// {x in B : x J subset I} (left = true) or {x : J x subset I}.
inline Lattice colon(const QuaternionAlgebra& B, const Lattice& I, const Lattice& J, bool left) {
  size_t n = B.dim();
  auto bj = elements(B, J);
  // M (n x n*|J|): row r holds the I-coordinates of e_r * b_k (or b_k * e_r)
  QMat M(n);
  for (size_t r = 0; r < n; ++r) {
    QVec e(n, Rat(0));
    e[r] = 1;
    QuatElement er = B.from_vec(e);
    for (auto& b : bj) {
      QVec c = I.coords(B.to_vec(left ? B.mul(er, b) : B.mul(b, er)));
      M[r].insert(M[r].end(), c.begin(), c.end());
    }
  }
  Int D = common_den(M);
  IMat A(n, IVec(M[0].size()));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < M[r].size(); ++c) A[r][c] = Int(Rat(M[r][c] * D).get_num());
  // x A in D Z^N; with u A v = S and y = x u^{-1}: y_i s_i in D Z
  Smith s = smith(A);
  QMat rows;
  for (size_t i = 0; i < n; ++i) {
    if (s.d[i] == 0) throw Error("lattices", "colon: degenerate lattice");
    Rat f = frac(D, s.d[i]);
    QVec r(n);
    for (size_t c = 0; c < n; ++c) r[c] = f * Rat(s.u[i][c]);
    rows.push_back(r);
  }
  return Lattice::from_rows(rows, n);
}

inline Lattice left_order(const QuaternionAlgebra& B, const Lattice& I) { return colon(B, I, I, true); }
inline Lattice right_order(const QuaternionAlgebra& B, const Lattice& I) { return colon(B, I, I, false); }

inline bool is_order(const QuaternionAlgebra& B, const Lattice& L) {
  if (!L.contains(B.to_vec(B.one()))) return false;
  for (auto& x : elements(B, L))
    for (auto& y : elements(B, L))
      if (!L.contains(B.to_vec(B.mul(x, y)))) return false;
  return true;
}

inline bool is_integral_f(const FieldElement& x) {
  // integral in O_F with respect to the basis {1, omega}
  return x.a.get_den() == 1 && x.b.get_den() == 1;
}

// ---------------------------------------------------------------------------
// Trace form Tr_{F/Q}(nrd) on a lattice

/// Integral Gram matrix g with x^T g x = scale * Tr_{F/Q}(nrd(x)) in the lattice basis.
struct TraceForm {
  IMat g;
  Rat scale;
};

inline TraceForm trace_form(const QuaternionAlgebra& B, const Lattice& L) {
  auto b = elements(B, L);
  size_t n = b.size();
  QMat G(n, QVec(n));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) G[r][c] = B.F().trace(B.trd(B.mul(b[r], B.conj(b[c]))));
  // x^T G x = 2 Tr(nrd x)
  Int D = common_den(G);
  TraceForm t{IMat(n, IVec(n)), Rat(2 * D)};
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) t.g[r][c] = Int(Rat(G[r][c] * D).get_num());
  return t;
}

/// All nonzero x in L with Tr_{F/Q}(nrd x) <= bound.
inline void enumerate_trace(const QuaternionAlgebra& B, const Lattice& L, const Rat& bound,
                            const std::function<void(const QuatElement&)>& f) {
  TraceForm t = trace_form(B, L);
  Int ib = floor(bound * t.scale);
  auto basis = L.basis();
  size_t n = basis.size(), dim = B.dim();
  enumerate_short(t.g, ib, [&](const IVec& x) {
    QVec v(dim, Rat(0));
    for (size_t k = 0; k < n; ++k)
      if (x[k] != 0)
        for (size_t j = 0; j < dim; ++j) v[j] += Rat(x[k]) * basis[k][j];
    f(B.from_vec(v));
  });
}

// ---------------------------------------------------------------------------
// Ideals of O_F (d <= 2)

/// O_F-ideal generated by a set of elements, as a lattice in Q^d.
inline Lattice f_ideal(const TotallyRealField& F, const std::vector<FieldElement>& xs) {
  QMat rows;
  for (auto& x : xs) {
    if (F.degree == 1) {
      rows.push_back({x.a});
    } else {
      rows.push_back({x.a, x.b});
      FieldElement y = F.mul(x, FieldElement{Rat(0), Rat(1)});
      rows.push_back({y.a, y.b});
    }
  }
  return Lattice::from_rows(rows, size_t(F.degree));
}

/// Absolute norm of an O_F-ideal lattice.
inline Rat f_ideal_norm(const Lattice& a) { return a.covolume(); }

/// Tp units of O_F modulo squares (representatives).
inline std::vector<FieldElement> tp_unit_classes(const TotallyRealField& F) {
  std::vector<FieldElement> out = {FieldElement(1)};
  if (F.degree == 2 && F.norm(F.unit) == 1) {
    for (auto& u : {F.unit, -F.unit})
      if (F.totally_positive(u)) out.push_back(u);
  }
  return out;
}

/// A generator of a principal O_F-ideal, totally positive when one exists.
inline FieldElement f_ideal_generator(const TotallyRealField& F, const Lattice& a) {
  if (F.degree == 1) return FieldElement(abs(a.basis_vector(0)[0]));
  Rat N = f_ideal_norm(a);
  // enumerate by Tr(x^2) with doubling bounds
  auto basis = a.basis();
  QMat G(2, QVec(2));
  auto fe = [&](const QVec& v) { return FieldElement{v[0], v[1]}; };
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) G[r][c] = F.trace(F.mul(fe(basis[r]), fe(basis[c])));
  Int D = common_den(G);
  IMat g(2, IVec(2));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) g[r][c] = Int(Rat(G[r][c] * D).get_num());
  for (Int bound = D * 4 * Int(ceil(N)); bound < D * 4 * Int(ceil(N)) * Int(1000000); bound *= 4) {
    std::optional<FieldElement> found;
    enumerate_short(g, bound, [&](const IVec& x) {
      FieldElement y = fe(basis[0]) * Rat(x[0]) + fe(basis[1]) * Rat(x[1]);
      if (!found && abs(F.norm(y)) == N) found = y;
    });
    if (found) {
      FieldElement y = *found;
      for (auto u : {F.unit, -F.unit, FieldElement(-1)}) {
        if (F.totally_positive(y)) break;
        if (F.totally_positive(F.mul(y, u))) y = F.mul(y, u);
      }
      return y;
    }
  }
  throw Error("lattices", "ideal of O_F is not principal");
}

/// Reduced norm ideal of a lattice: O_F-span of nrd(x), returned as a generator.
inline FieldElement norm_generator(const QuaternionAlgebra& B, const Lattice& I) {
  auto b = elements(B, I);
  std::vector<FieldElement> vals;
  for (size_t r = 0; r < b.size(); ++r) {
    vals.push_back(B.nrd(b[r]));
    for (size_t c = r + 1; c < b.size(); ++c) vals.push_back(B.trd(B.mul(b[r], B.conj(b[c]))));
  }
  return f_ideal_generator(B.F(), f_ideal(B.F(), vals));
}

// ---------------------------------------------------------------------------
// Maximal order

/// |det| of the Z-Gram of (x, y) -> Tr_{F/Q} trd(x y) on L.
inline Rat discriminant_abs(const QuaternionAlgebra& B, const Lattice& L) {
  auto b = elements(B, L);
  size_t n = b.size();
  QMat G(n, QVec(n));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) G[r][c] = B.F().trace(B.trd(B.mul(b[r], b[c])));
  return abs(det(G));
}

/// |det| expected for an order of reduced discriminant of absolute norm N.
inline Rat expected_discriminant(const QuaternionAlgebra& B, const Rat& N) {
  Rat dF = Rat(B.F().disc);
  return N * N * dF * dF * dF * dF;
}

/// O_K + O_K j.
inline Lattice standard_suborder(const QuaternionAlgebra& B) {
  std::vector<QuatElement> xs;
  const auto& K = B.K;
  std::vector<FieldElement> fb = {FieldElement(1)};
  if (B.d() == 2) fb.push_back(FieldElement{Rat(0), Rat(1)});
  for (auto& f : fb)
    for (auto& z : {K.from_omega(Int(1), Int(0)), K.omega()}) {
      KElement fz = K.scale(z, f);
      xs.push_back(B.from_k(fz));
      xs.push_back({KElement(), fz});
    }
  return span(B, xs);
}

namespace detail {

/// Multiplicative closure of L (containing 1); nullopt if it does not stabilize quickly.
inline std::optional<Lattice> ring_closure(const QuaternionAlgebra& B, Lattice L, int rounds = 6) {
  for (int r = 0; r < rounds; ++r) {
    for (auto& x : elements(B, L))
      if (!is_integral_f(B.trd(x)) || !is_integral_f(B.nrd(x))) return std::nullopt;
    Lattice M = L + product(B, L, L);
    if (M == L) return L;
    L = M;
  }
  return std::nullopt;
}

}  // namespace detail

/// A maximal order containing O_K + O_K j, by saturation one prime at a time.
inline Lattice maximal_order(const QuaternionAlgebra& B) {
  Lattice O = standard_suborder(B);
  Rat target = expected_discriminant(B, Rat(discriminant_norm(B)));
  while (true) {
    Rat ratio = discriminant_abs(B, O) / target;
    if (ratio == 1) return O;
    if (ratio.get_den() != 1) throw Error("lattices", "maximal_order: discriminant below target");
    bool grown = false;
    for (auto& [q, e] : factor(Int(ratio.get_num()))) {
      if (e < 2) continue;
      auto basis = elements(B, O);
      size_t n = basis.size();
      IVec c(n, 0);
      // run over nonzero c in (Z/q)^n
      while (!grown) {
        size_t k = 0;
        while (k < n && c[k] == q - 1) c[k++] = 0;
        if (k == n) break;
        ++c[k];
        QuatElement x{};
        for (size_t t = 0; t < n; ++t)
          if (c[t] != 0) x = x + B.scale(basis[t], FieldElement(frac(c[t], q)));
        if (!is_integral_f(B.trd(x)) || !is_integral_f(B.nrd(x))) continue;
        auto R = detail::ring_closure(B, of_module(B, O + span(B, {x})));
        if (R && !(*R == O)) {
          O = *R;
          grown = true;
        }
      }
      if (grown) break;
    }
    if (!grown) throw Error("lattices", "maximal_order: saturation failed");
  }
}

// ---------------------------------------------------------------------------
// Eichler orders

struct EichlerOrder {
  Lattice L;
  Lattice maximal;
  Int nplus, p;
  int m = 0;
  KElement theta;
  std::map<Int, LocalSplitting> split;  // at primes dividing n+ p
  Int level() const { return nplus * pow(p, (unsigned long)m); }
};

/// Level exponent at each rational prime of n+ p^m.
inline std::map<Int, int> level_exponents(const Int& nplus, const Int& p, int m) {
  std::map<Int, int> e;
  if (nplus > 1)
    for (auto& [q, k] : factor(nplus)) e[q] += k;
  if (m > 0) e[p] += m;
  return e;
}

/// {x in R_0 : i_v(x) lower-left = 0 mod v^{e_v}} for v | n+ p^m (F = Q).
inline EichlerOrder standard_eichler_order(const QuaternionAlgebra& B, const Lattice& R0, const KElement& theta,
                                           const Int& nplus, const Int& p, int m, int guard = 2) {
  EichlerOrder E;
  E.maximal = R0;
  E.nplus = nplus;
  E.p = p;
  E.m = m;
  E.theta = theta;
  auto ex = level_exponents(nplus, p, m);
  if (B.d() != 1 && !ex.empty()) throw Error("unsupported", "Eichler level structure is implemented for F = Q");
  Lattice L = R0;
  std::set<Int> primes;
  if (nplus > 1)
    for (auto& [q, k] : factor(nplus)) primes.insert(q);
  if (p > 1) primes.insert(p);
  for (auto& q : primes) {
    int e = ex.count(q) ? ex[q] : 0;
    E.split.emplace(q, theta_splitting(B, theta, q, e + guard));
  }
  for (auto& [q, e] : ex) {
    const LocalSplitting& S = E.split.at(q);
    Int M = pow(q, (unsigned long)e);
    auto basis = elements(B, L);
    size_t n = basis.size();
    IMat A(n + 1, IVec(1));
    for (size_t k = 0; k < n; ++k) {
      auto [sh, img] = S.image_scaled(B, basis[k]);
      if (sh != 0) throw Error("lattices", "order not integral at a level prime");
      A[k][0] = img.c;
    }
    A[n][0] = M;
    IMat ker = left_kernel(A);
    QMat rows;
    for (auto& r : ker) {
      QuatElement x{};
      for (size_t k = 0; k < n; ++k)
        if (r[k] != 0) x = x + B.scale(basis[k], FieldElement(Rat(r[k])));
      rows.push_back(B.to_vec(x));
    }
    L = Lattice::from_rows(rows, B.dim());
  }
  E.L = L;
  return E;
}

// ---------------------------------------------------------------------------
// Units

/// Units of an order modulo O_F^x: elements with nrd in the tp unit classes, one of each pair +-x.
inline std::vector<QuatElement> unit_group(const QuaternionAlgebra& B, const Lattice& O) {
  std::vector<QuatElement> out;
  for (auto& u : tp_unit_classes(B.F())) {
    enumerate_trace(B, O, B.F().trace(u), [&](const QuatElement& x) {
      if (B.nrd(x) != u) return;
      QVec v = B.to_vec(x);
      for (auto& c : v)
        if (c != 0) {
          if (c > 0) out.push_back(x);
          break;
        }
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Right ideals and isomorphism

struct RightIdeal {
  Lattice L;
  FieldElement norm;  // generator of the reduced norm ideal
};

inline RightIdeal make_right_ideal(const QuaternionAlgebra& B, const Lattice& L) {
  return {L, norm_generator(B, L)};
}

/// beta with beta J = I, if any.
inline std::optional<QuatElement> ideal_isomorphism(const QuaternionAlgebra& B, const RightIdeal& I,
                                                   const RightIdeal& J) {
  const auto& F = B.F();
  Lattice IJ = product(B, I.L, conj_lattice(B, J.L));
  FieldElement g = F.mul(I.norm, J.norm);
  FieldElement ginv = F.inv(J.norm);
  for (auto& u : tp_unit_classes(F)) {
    FieldElement target = F.mul(g, u);
    std::optional<QuatElement> found;
    enumerate_trace(B, IJ, F.trace(target), [&](const QuatElement& x) {
      if (found || B.nrd(x) != target) return;
      QuatElement beta = B.scale(x, ginv);
      if (left_mul(B, beta, J.L) == I.L) found = beta;
    });
    if (found) return found;
  }
  return std::nullopt;
}

/// Counts of x in I with Tr(nrd(x)/nrd(I)) = k, k = 1..kmax; invariant under left multiplication.
inline std::vector<size_t> ideal_invariant(const QuaternionAlgebra& B, const RightIdeal& I, int kmax) {
  const auto& F = B.F();
  std::vector<size_t> h(size_t(kmax) + 1, 0);
  FieldElement ninv = F.inv(I.norm);
  auto basis = elements(B, I.L);
  size_t n = basis.size();
  QMat G(n, QVec(n));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) G[r][c] = F.trace(F.mul(ninv, B.trd(B.mul(basis[r], B.conj(basis[c])))));
  Int D = common_den(G);
  IMat g(n, IVec(n));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) g[r][c] = Int(Rat(G[r][c] * D).get_num());
  enumerate_short(g, Int(2 * D * kmax), [&](const IVec& x) {
    Int v = quad_value(g, x);
    Rat k = frac(v, 2 * D);
    if (k.get_den() == 1 && k <= kmax) ++h[size_t(k.get_num().get_ui())];
  });
  return h;
}

// ---------------------------------------------------------------------------
// Neighbors

/// Representatives of L / M for a full-rank sublattice M, as elements of L.
inline std::vector<QVec> quotient_reps(const Lattice& L, const Lattice& M) {
  size_t n = L.rank();
  IMat A(n, IVec(n));
  for (size_t k = 0; k < n; ++k) {
    QVec c = L.coords(M.basis_vector(k));
    for (size_t j = 0; j < n; ++j) {
      if (c[j].get_den() != 1) throw Error("lattices", "quotient_reps: not a sublattice");
      A[k][j] = c[j].get_num();
    }
  }
  Smith s = smith(A);
  // M = span(d_i f_i) with f = v^{-1} E
  QMat vq(n, QVec(n));
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) vq[r][c] = Rat(s.v[r][c]);
  QMat vinv = inverse(vq);
  QMat E = L.basis();
  size_t dim = L.dim();
  QMat f(n, QVec(dim, Rat(0)));
  for (size_t r = 0; r < n; ++r)
    for (size_t k = 0; k < n; ++k)
      if (vinv[r][k] != 0)
        for (size_t j = 0; j < dim; ++j) f[r][j] += vinv[r][k] * E[k][j];
  std::vector<QVec> out;
  IVec a(n, 0);
  while (true) {
    QVec x(dim, Rat(0));
    for (size_t r = 0; r < n; ++r)
      if (a[r] != 0)
        for (size_t j = 0; j < dim; ++j) x[j] += Rat(a[r]) * f[r][j];
    out.push_back(x);
    size_t k = 0;
    while (k < n && a[k] + 1 >= s.d[k]) a[k++] = 0;
    if (k == n) break;
    ++a[k];
  }
  return out;
}

/// The right R-ideals J subset I with I/J of type (O_F/v)^2: J = pi I + x R for x in I singular mod v.
inline std::vector<Lattice> neighbors(const QuaternionAlgebra& B, const RightIdeal& I, const Lattice& R,
                                      const PrimeIdeal& v) {
  const auto& F = B.F();
  Lattice piI = left_mul(B, B.from_field(v.gen), I.L);
  int base = F.valuation(I.norm, v);
  auto Rb = elements(B, R);
  std::vector<Lattice> out;
  std::set<std::pair<size_t, std::string>> seen;
  Int target = pow(v.norm(), 2);
  for (auto& xv : quotient_reps(I.L, piI)) {
    QuatElement x = B.from_vec(xv);
    if (x == QuatElement{}) continue;
    if (F.valuation(B.nrd(x), v) <= base) continue;
    std::vector<QuatElement> gens;
    for (auto& r : Rb) gens.push_back(B.mul(x, r));
    Lattice J = piI + span(B, gens);
    if (J.index_in(I.L) != target) continue;
    bool dup = false;
    for (auto& K : out)
      if (K == J) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(J);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mass and class sets

/// Eichler mass with weights |O^x / O_F^x|.
inline Rat eichler_mass(const QuaternionAlgebra& B, const std::map<Int, int>& level) {
  const auto& F = B.F();
  Rat m = abs(zeta_minus_one(F)) * Rat(F.class_number);
  if (F.degree == 2) m /= 2;
  for (auto& v : B.ramified) m *= Rat(v.norm() - 1);
  for (auto& [q, e] : level) {
    auto vs = F.primes_above(q);
    if (vs.size() != 1 || vs[0].f != 1) throw Error("unsupported", "level at a prime that is not of degree one");
    Int N = vs[0].norm();
    m *= Rat(pow(N, (unsigned long)(e - 1)) * (N + 1));
  }
  return m;
}

/// Smallest prime of F not dividing n- or the level.
inline PrimeIdeal traversal_prime(const QuaternionAlgebra& B, const Int& level) {
  Int bad = discriminant_norm(B) * level;
  for (Int q = 2;; ++q) {
    if (!is_prime(q) || bad % q == 0) continue;
    auto vs = B.F().primes_above(q);
    bool ok = true;
    for (auto& v : B.ramified)
      if (v.p == q) ok = false;
    if (ok) return vs.front();
  }
}

struct ClassSet {
  Lattice order;
  std::vector<RightIdeal> ideals;
  std::vector<Lattice> left_orders;
  std::vector<size_t> weights;  // |O_L(I)^x / O_F^x|
  std::vector<std::vector<size_t>> invariants;
  Rat mass;
  PrimeIdeal traversal;
  int kmax = 2;

  Rat weighted_count() const {
    Rat s = 0;
    for (auto w : weights) s += frac(1, Int(w));
    return s;
  }
};

/// Index of the class of J and beta with beta I_i = J.
inline std::pair<size_t, QuatElement> classify(const QuaternionAlgebra& B, const ClassSet& cs, const RightIdeal& J) {
  auto inv = ideal_invariant(B, J, cs.kmax);
  for (size_t i = 0; i < cs.ideals.size(); ++i) {
    if (cs.invariants[i] != inv) continue;
    if (auto beta = ideal_isomorphism(B, J, cs.ideals[i])) return {i, *beta};
  }
  throw Error("lattices", "ideal not isomorphic to any class representative");
}

inline ClassSet right_ideal_classes(const QuaternionAlgebra& B, const Lattice& R, const Rat& mass,
                                    const PrimeIdeal& v) {
  ClassSet cs;
  cs.order = R;
  cs.mass = mass;
  cs.traversal = v;
  cs.kmax = B.d() == 1 ? 16 : 4;
  auto add = [&](const RightIdeal& I) {
    cs.ideals.push_back(I);
    Lattice O = left_order(B, I.L);
    cs.left_orders.push_back(O);
    cs.weights.push_back(unit_group(B, O).size());
    cs.invariants.push_back(ideal_invariant(B, I, cs.kmax));
  };
  add(make_right_ideal(B, R));
  for (size_t head = 0; head < cs.ideals.size() && cs.weighted_count() < mass; ++head) {
    RightIdeal I = cs.ideals[head];
    for (auto& L : neighbors(B, I, R, v)) {
      RightIdeal J = make_right_ideal(B, L);
      auto inv = ideal_invariant(B, J, cs.kmax);
      bool known = false;
      for (size_t i = 0; i < cs.ideals.size() && !known; ++i)
        if (cs.invariants[i] == inv && ideal_isomorphism(B, J, cs.ideals[i])) known = true;
      if (!known) add(J);
      if (cs.weighted_count() >= mass) break;
    }
  }
  if (cs.weighted_count() != mass) throw Error("lattices", "class set mass mismatch");
  return cs;
}

}  // namespace heegner
