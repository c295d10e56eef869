#pragma once

#include <map>

#include "orders.hpp"

namespace heegner {

/// Add congruence conditions sum_k n_k c_k = 0 mod M on coordinates of L (one condition per pair).
inline Lattice congruence_sublattice(const QuaternionAlgebra& B, const Lattice& L,
                                     const std::vector<std::pair<IVec, Int>>& conds) {
  size_t n = L.rank(), c = conds.size();
  IMat A(n + c, IVec(c, 0));
  for (size_t j = 0; j < c; ++j) {
    for (size_t k = 0; k < n; ++k) A[k][j] = conds[j].first[k];
    A[n + j][j] = conds[j].second;
  }
  auto basis = L.basis();
  QMat rows;
  for (auto& r : left_kernel(A)) {
    QVec x(B.dim(), Rat(0));
    for (size_t k = 0; k < n; ++k)
      if (r[k] != 0)
        for (size_t j = 0; j < B.dim(); ++j) x[j] += Rat(r[k]) * basis[k][j];
    rows.push_back(x);
  }
  return Lattice::from_rows(rows, B.dim());
}

/// Matrix of y in the splitting at p as an exact quotient: (image of p^e y, e).
inline std::pair<Mat2, int> local_image(const QuaternionAlgebra& B, const LocalSplitting& S, const QuatElement& y) {
  auto [e, M] = S.image_scaled(B, y);
  return {M, e};
}

// ---------------------------------------------------------------------------
// Oriented class sets: points (i, o) with o in (O_F/p^m)^x modulo the image of O_L(I_i)^x

struct Transport {
  size_t k;          // target class
  Int f;             // orientation factor
  QuatElement beta;  // beta I_k = image ideal
};

struct OrientedClassSet {
  QuaternionAlgebra B;
  EichlerOrder E;
  ClassSet cs;
  bool oriented = false;
  Int pm = 1;                             // p^m when oriented
  std::vector<QuatElement> gamma;         // local generators at p
  std::vector<std::vector<Int>> stab;     // orientation stabilizers
  std::vector<std::pair<size_t, Int>> points;
  std::map<std::pair<size_t, Int>, size_t> index;
  std::map<std::string, std::vector<std::vector<Transport>>> cache;

  size_t size() const { return points.size(); }
  Int level_p() const { return E.m > 0 ? E.p : Int(0); }

  std::pair<size_t, Int> normalize(size_t i, const Int& o) const {
    if (!oriented) return {i, 0};
    Int best = -1;
    for (auto& h : stab[i]) {
      Int x = mod(h * o, pm);
      if (best < 0 || x < best) best = x;
    }
    return {i, best};
  }
  size_t point_index(size_t i, const Int& o) const { return index.at(normalize(i, o)); }
};

namespace detail {

/// Orientation d-entry of a p-local unit given as (image of p^e y) * extra, divided by p^e.
inline Int d_entry(const LocalSplitting& S, const Mat2& M, int e, const Mat2& extra, const Int& pm) {
  Mat2 P = S.R.mul(M, extra);
  Int pe = pow(S.R.l, (unsigned long)e);
  if (mod(P.d, pe) != 0) throw Error("hecke", "orientation transport is not p-integral");
  Int d = mod(P.d / pe, pm);
  if (gcd(d, S.R.l) != 1) throw Error("hecke", "orientation transport is not a unit");
  return d;
}

inline QuatElement local_generator(const QuaternionAlgebra& B, const RightIdeal& I, const Int& p) {
  int target = valuation(I.norm.a, p);
  Rat bound = B.F().trace(I.norm);
  for (int round = 0; round < 40; ++round, bound *= 2) {
    std::optional<QuatElement> found;
    enumerate_trace(B, I.L, bound, [&](const QuatElement& x) {
      if (!found && valuation(B.nrd(x).a, p) == target) found = x;
    });
    if (found) return *found;
  }
  throw Error("hecke", "no local generator found");
}

}  // namespace detail

inline OrientedClassSet make_oriented(const QuaternionAlgebra& B, const EichlerOrder& E, const ClassSet& cs,
                                      bool oriented) {
  OrientedClassSet X;
  X.B = B;
  X.E = E;
  X.cs = cs;
  X.oriented = oriented && E.m > 0;
  if (E.m > 0) {
    const LocalSplitting& S = E.split.at(E.p);
    X.pm = pow(E.p, (unsigned long)E.m);
    for (size_t i = 0; i < cs.ideals.size(); ++i) {
      QuatElement g = detail::local_generator(B, cs.ideals[i], E.p);
      X.gamma.push_back(g);
      std::set<Int> H = {1, mod(Int(-1), X.pm)};
      QuatElement ginv = B.inv(g);
      for (auto& u : unit_group(B, cs.left_orders[i])) {
        auto [M, e] = local_image(B, S, B.mul(B.mul(ginv, u), g));
        Int d = detail::d_entry(S, M, e, S.R.identity(), X.pm);
        H.insert(d);
        H.insert(mod(-d, X.pm));
      }
      X.stab.emplace_back(H.begin(), H.end());
    }
  }
  for (size_t i = 0; i < cs.ideals.size(); ++i) {
    if (!X.oriented) {
      X.index[{i, 0}] = X.points.size();
      X.points.push_back({i, 0});
      continue;
    }
    for (Int o = 1; o < X.pm; ++o) {
      if (gcd(o, E.p) != 1) continue;
      auto key = X.normalize(i, o);
      if (!X.index.count(key)) {
        X.index[key] = X.points.size();
        X.points.push_back(key);
      }
    }
  }
  return X;
}

/// Class and orientation factor of J = I_i lambda where the local p-component of lambda is `lam`.
inline Transport transport(const OrientedClassSet& X, size_t i, const RightIdeal& J, const Mat2& lam) {
  auto [k, beta] = classify(X.B, X.cs, J);
  if (X.E.m == 0) return {k, 1, beta};
  const auto& B = X.B;
  const LocalSplitting& S = X.E.split.at(X.E.p);
  QuatElement y = B.mul(B.mul(B.inv(X.gamma[k]), B.inv(beta)), X.gamma[i]);
  auto [M, e] = local_image(B, S, y);
  return {k, detail::d_entry(S, M, e, lam, X.pm), beta};
}

/// T_v transports for each class (v prime to n- and the level).
inline const std::vector<std::vector<Transport>>& t_transports(OrientedClassSet& X, const PrimeIdeal& v) {
  std::string key = "T" + v.p.get_str() + ":" + std::to_string(v.f) + ":" + v.root.get_str();
  if (auto it = X.cache.find(key); it != X.cache.end()) return it->second;
  if (X.E.level() % v.p == 0 || discriminant_norm(X.B) % v.p == 0)
    throw Error("hecke", "T_v requires v prime to n- and the level");
  std::vector<std::vector<Transport>> out(X.cs.ideals.size());
  const LocalRing* R = X.E.m > 0 ? &X.E.split.at(X.E.p).R : nullptr;
  for (size_t i = 0; i < X.cs.ideals.size(); ++i)
    for (auto& L : neighbors(X.B, X.cs.ideals[i], X.cs.order, v))
      out[i].push_back(transport(X, i, make_right_ideal(X.B, L), R ? R->identity() : Mat2{1, 0, 0, 1}));
  return X.cache[key] = out;
}

/// U_p transports: J_b = I_i cap gamma_i lambda_b R_p with lambda_b = [[p, b], [0, 1]].
inline const std::vector<std::vector<Transport>>& u_transports(OrientedClassSet& X) {
  if (auto it = X.cache.find("U"); it != X.cache.end()) return it->second;
  if (X.E.m == 0) throw Error("hecke", "U_p requires level m >= 1");
  const auto& B = X.B;
  const LocalSplitting& S = X.E.split.at(X.E.p);
  const Int& p = X.E.p;
  Int Mm1 = pow(p, (unsigned long)X.E.m + 1);
  std::vector<std::vector<Transport>> out(X.cs.ideals.size());
  for (size_t i = 0; i < X.cs.ideals.size(); ++i) {
    const RightIdeal& I = X.cs.ideals[i];
    QuatElement ginv = B.inv(X.gamma[i]);
    auto basis = elements(B, I.L);
    std::vector<Mat2> z;
    for (auto& x : basis) {
      auto [M, e] = local_image(B, S, B.mul(ginv, x));
      if (e != 0) throw Error("hecke", "gamma is not a local generator");
      z.push_back(M);
    }
    for (Int b = 0; b < p; ++b) {
      // [[1, -b], [0, p]] z in p R_{m,p}
      std::vector<std::pair<IVec, Int>> conds(4, {IVec(basis.size()), p});
      conds[2].second = Mm1;
      for (size_t k = 0; k < basis.size(); ++k) {
        const Mat2& m = z[k];
        conds[0].first[k] = m.a - b * m.c;
        conds[1].first[k] = m.b - b * m.d;
        conds[2].first[k] = p * m.c;
        conds[3].first[k] = p * m.d;
      }
      Lattice J = congruence_sublattice(B, I.L, conds);
      out[i].push_back(transport(X, i, make_right_ideal(B, J), S.R.reduce({p, b, 0, 1})));
    }
  }
  return X.cache["U"] = out;
}

inline IMat transports_matrix(const OrientedClassSet& X, const std::vector<std::vector<Transport>>& tr) {
  size_t N = X.size();
  IMat M(N, IVec(N, 0));
  for (size_t x = 0; x < N; ++x) {
    auto [i, o] = X.points[x];
    for (auto& t : tr[i]) {
      Int o2 = X.oriented ? mod(t.f * o, X.pm) : Int(0);
      M[x][X.point_index(t.k, o2)] += 1;
    }
  }
  return M;
}

/// Row convention: row x lists the image of the point x.
inline IMat brandt_matrix(OrientedClassSet& X, const PrimeIdeal& v) { return transports_matrix(X, t_transports(X, v)); }
inline IMat u_p_matrix(OrientedClassSet& X) { return transports_matrix(X, u_transports(X)); }

inline IMat diamond_matrix(const OrientedClassSet& X, const Int& a) {
  if (X.oriented && gcd(a, X.E.p) != 1) throw Error("hecke", "diamond operator needs a unit");
  size_t N = X.size();
  IMat M(N, IVec(N, 0));
  for (size_t x = 0; x < N; ++x) {
    auto [i, o] = X.points[x];
    M[x][X.oriented ? X.point_index(i, mod(a * o, X.pm)) : x] = 1;
  }
  return M;
}

// ---------------------------------------------------------------------------
// Linear algebra over Z/p^k

struct ModRing {
  Int p;
  int k;
  Int m;  // p^k
  ModRing(const Int& p_, int k_) : p(p_), k(k_), m(heegner::pow(p_, (unsigned long)k_)) {}

  IMat reduce(IMat a) const {
    for (auto& r : a)
      for (auto& x : r) x = mod(x, m);
    return a;
  }
  IMat mul(const IMat& a, const IMat& b) const { return reduce(heegner::mul(a, b)); }
  IMat pow(IMat a, Int e) const {
    IMat r = identity_imat(a.size());
    while (e > 0) {
      if (e % 2 == 1) r = mul(r, a);
      a = mul(a, a);
      e /= 2;
    }
    return r;
  }
  IMat sub_scalar(const IMat& a, const Int& c) const {
    IMat r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i][i] -= c;
    return reduce(r);
  }
  int val(const Int& x) const {
    Int y = mod(x, m);
    if (y == 0) return k;
    return valuation(y, p);
  }
  IVec apply(const IMat& a, const IVec& x) const {
    IVec y(a.size(), 0);
    for (size_t i = 0; i < a.size(); ++i) {
      for (size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
      y[i] = mod(y[i], m);
    }
    return y;
  }
};

/// u a v = diag(p^{e_i}) over Z/p^k with u, v invertible; returns exponents (k for zero).
struct LocalSmith {
  IMat u, v;
  std::vector<int> e;
};

inline LocalSmith local_smith(const ModRing& R, IMat a) {
  size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  a = R.reduce(a);
  IMat u = identity_imat(rows), v = identity_imat(cols);
  size_t n = std::min(rows, cols);
  std::vector<int> e(n, R.k);
  for (size_t t = 0; t < n; ++t) {
    size_t bi = rows, bj = cols;
    int best = R.k;
    for (size_t i = t; i < rows && best > 0; ++i)
      for (size_t j = t; j < cols; ++j) {
        int w = R.val(a[i][j]);
        if (w < best) {
          best = w;
          bi = i;
          bj = j;
          if (w == 0) break;
        }
      }
    if (bi == rows) break;
    std::swap(a[t], a[bi]);
    std::swap(u[t], u[bi]);
    for (size_t i = 0; i < rows; ++i) std::swap(a[i][t], a[i][bj]);
    for (size_t i = 0; i < cols; ++i) std::swap(v[i][t], v[i][bj]);
    // pivot = p^best * unit
    Int pb = heegner::pow(R.p, (unsigned long)best);
    Int unit = a[t][t] / pb;
    Int uinv = invmod(unit, R.m);
    for (size_t j = 0; j < cols; ++j) a[t][j] = mod(a[t][j] * uinv, R.m);
    for (size_t j = 0; j < rows; ++j) u[t][j] = mod(u[t][j] * uinv, R.m);
    for (size_t i = 0; i < rows; ++i) {
      if (i == t || a[i][t] == 0) continue;
      Int q = a[i][t] / pb;  // exact since the pivot has minimal valuation
      for (size_t j = 0; j < cols; ++j) a[i][j] = mod(a[i][j] - q * a[t][j], R.m);
      for (size_t j = 0; j < rows; ++j) u[i][j] = mod(u[i][j] - q * u[t][j], R.m);
    }
    for (size_t j = 0; j < cols; ++j) {
      if (j == t || a[t][j] == 0) continue;
      Int q = a[t][j] / pb;
      for (size_t i = 0; i < rows; ++i) a[i][j] = mod(a[i][j] - q * a[i][t], R.m);
      for (size_t i = 0; i < cols; ++i) v[i][j] = mod(v[i][j] - q * v[i][t], R.m);
    }
    e[t] = best;
  }
  return {u, v, e};
}

/// Inverse of a matrix invertible over Z/p^k.
inline IMat mod_inverse(const ModRing& R, const IMat& a) {
  LocalSmith s = local_smith(R, a);
  for (int x : s.e)
    if (x != 0) throw Error("hecke", "matrix not invertible mod p^k");
  // u a v = 1  =>  a^{-1} = v u
  return R.mul(s.v, s.u);
}

struct OrdinaryProjector {
  int k;
  IMat e;
  size_t rank;
  Int exponent;        // power of U_p used
  IMat image;          // columns span im(e)  (N x rank)
};

/// Fitting decomposition of U mod p^k: e projects onto im(U^s) along ker(U^s).
inline OrdinaryProjector ordinary_projector(const ModRing& R, const IMat& U) {
  size_t N = U.size();
  Int s = 1;
  while (s < Int(N) * R.k) s *= 2;
  IMat V = R.pow(U, s);
  LocalSmith sm = local_smith(R, V);
  // V = u^{-1} D v^{-1}; im(V) = u^{-1} columns with e = 0; ker(V) = v columns with e = k
  IMat uinv = mod_inverse(R, sm.u);
  size_t r = 0;
  for (int x : sm.e) {
    if (x != 0 && x != R.k) throw Error("hecke", "ordinary projector: U^s is not split (precision bug)");
    if (x == 0) ++r;
  }
  IMat S(N, IVec(N));
  for (size_t i = 0; i < N; ++i)
    for (size_t j = 0; j < N; ++j) S[i][j] = j < r ? uinv[i][j] : sm.v[i][j];
  IMat Sinv = mod_inverse(R, S);
  IMat D(N, IVec(N, 0));
  for (size_t i = 0; i < r; ++i) D[i][i] = 1;
  IMat e = R.mul(R.mul(S, D), Sinv);
  if (R.mul(e, e) != e) throw Error("hecke", "ordinary projector is not idempotent");
  IMat img(N, IVec(r));
  for (size_t i = 0; i < N; ++i)
    for (size_t j = 0; j < r; ++j) img[i][j] = S[i][j];
  return {R.k, e, r, s, img};
}

struct EigenDatum {
  IVec ef;                          // function on points, mod p^k
  std::map<std::string, Int> a;     // eigenvalues by label
  Int alpha;                        // U_p eigenvalue
};

/// Common kernel of (T - a) on im(e), required to be free of rank one (multiplicity one).
inline EigenDatum eigen_datum(const ModRing& R, const OrdinaryProjector& P, const IMat& U,
                              const std::vector<std::pair<std::string, IMat>>& T, const std::vector<Int>& a) {
  size_t N = U.size(), r = P.rank;
  if (r == 0) throw Error("hecke", "eigenpacket not found: ordinary part is zero");
  // coordinates on im(e): T W = W T' with T' = (left inverse of W) T W
  LocalSmith sw = local_smith(R, P.image);  // u W v = [I; 0]
  IMat left(r, IVec(N));
  IMat vu = sw.v;
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < N; ++j) {
      Int x = 0;
      for (size_t t = 0; t < r; ++t) x += vu[i][t] * sw.u[t][j];
      left[i][j] = mod(x, R.m);
    }
  IMat stacked;
  for (size_t q = 0; q < T.size(); ++q) {
    IMat Tp = R.mul(R.mul(left, T[q].second), P.image);
    Tp = R.sub_scalar(Tp, a[q]);
    for (auto& row : Tp) stacked.push_back(row);
  }
  LocalSmith ss = local_smith(R, stacked);
  size_t unit = size_t(std::count(ss.e.begin(), ss.e.end(), 0));
  if (unit + 1 != r) {
    if (unit == r) throw Error("hecke", "eigenpacket not found");
    throw Error("hecke", "multiplicity-one surrogate violated");
  }
  // kernel vector: column r-1 of v (the unique non-unit diagonal position)
  IVec w(r);
  size_t col = r - 1;
  for (size_t i = 0; i < r; ++i) w[i] = ss.v[i][col];
  IVec ef = R.apply(P.image, w);
  // check the non-unit position is a true zero mod p^k
  for (size_t q = 0; q < T.size(); ++q) {
    IVec tv = R.apply(T[q].second, ef);
    for (size_t i = 0; i < N; ++i)
      if (mod(tv[i] - a[q] * ef[i], R.m) != 0) throw Error("hecke", "eigenpacket not found mod p^k");
  }
  // normalize: first unit coordinate = 1
  size_t pos = N;
  for (size_t i = 0; i < N; ++i)
    if (gcd(ef[i], R.p) == 1) {
      pos = i;
      break;
    }
  if (pos == N) throw Error("hecke", "eigenvector is zero mod p");
  Int inv = invmod(ef[pos], R.m);
  for (auto& x : ef) x = mod(x * inv, R.m);
  EigenDatum D;
  D.ef = ef;
  for (size_t q = 0; q < T.size(); ++q) D.a[T[q].first] = mod(a[q], R.m);
  IVec uv = R.apply(U, ef);
  D.alpha = uv[pos];
  for (size_t i = 0; i < N; ++i)
    if (mod(uv[i] - D.alpha * ef[i], R.m) != 0) throw Error("hecke", "eigenvector is not a U_p eigenvector");
  if (D.alpha % R.p == 0) throw Error("hecke", "eigenvalue of U_p is not a unit");
  return D;
}

}  // namespace heegner
