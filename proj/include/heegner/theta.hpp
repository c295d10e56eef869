#pragma once

#include "points.hpp"

namespace heegner {

// ---------------------------------------------------------------------------
// (Z/p^k)[Z/p^n]

struct GroupRingElement {
  int n = 0;
  Int p, mod;  // mod = p^k
  IVec c;      // coefficient of g = 0, ..., p^n - 1

  size_t size() const { return c.size(); }
  bool operator==(const GroupRingElement& o) const { return n == o.n && mod == o.mod && c == o.c; }
};

inline GroupRingElement group_ring_zero(const Int& p, int n, const Int& mod) {
  return {n, p, mod, IVec(size_t(Int(pow(p, (unsigned long)n)).get_ui()), Int(0))};
}

inline GroupRingElement operator*(const GroupRingElement& a, const GroupRingElement& b) {
  if (a.n != b.n || a.mod != b.mod) throw Error("theta", "group ring mismatch");
  GroupRingElement r = group_ring_zero(a.p, a.n, a.mod);
  size_t N = a.size();
  for (size_t i = 0; i < N; ++i) {
    if (a.c[i] == 0) continue;
    for (size_t j = 0; j < N; ++j) r.c[(i + j) % N] += a.c[i] * b.c[j];
  }
  for (auto& x : r.c) x = heegner::mod(x, a.mod);
  return r;
}

/// The involution g -> g^-1.
inline GroupRingElement star(const GroupRingElement& a) {
  GroupRingElement r = a;
  size_t N = a.size();
  for (size_t i = 0; i < N; ++i) r.c[(N - i) % N] = a.c[i];
  return r;
}

/// Image under (Z/p^k)[G_{n+1}] -> (Z/p^k)[G_n].
inline GroupRingElement project(const GroupRingElement& a) {
  if (a.n == 0) throw Error("theta", "cannot project from G_0");
  GroupRingElement r = group_ring_zero(a.p, a.n - 1, a.mod);
  for (size_t i = 0; i < a.size(); ++i) r.c[i % r.size()] = heegner::mod(r.c[i % r.size()] + a.c[i], a.mod);
  return r;
}

inline Int augmentation(const GroupRingElement& a) {
  Int s = 0;
  for (auto& x : a.c) s += x;
  return heegner::mod(s, a.mod);
}

// ---------------------------------------------------------------------------
// Values of characters of order p^j: (Z/p^k)[x] / Phi_{p^j}(x)

struct CycloValue {
  Int p, mod;
  int j = 0;
  IVec c;  // coefficients of 1, x, ..., x^{deg-1}
  bool operator==(const CycloValue& o) const { return j == o.j && mod == o.mod && c == o.c; }
};

inline CycloValue cyclo_reduce(const Int& p, int j, const Int& mod, IVec a) {
  if (j == 0) {
    Int s = 0;
    for (auto& x : a) s += x;
    return {p, mod, 0, {heegner::mod(s, mod)}};
  }
  size_t q = Int(pow(p, (unsigned long)(j - 1))).get_ui(), pu = p.get_ui();
  size_t deg = (pu - 1) * q;
  // Phi = sum_{i < p} x^{i q}; x^deg = -sum_{i < p-1} x^{i q}
  for (size_t e = a.size(); e-- > deg;) {
    if (a[e] == 0) continue;
    Int t = a[e];
    a[e] = 0;
    for (size_t i = 0; i + 1 < pu; ++i) a[e - deg + i * q] -= t;
  }
  a.resize(deg, Int(0));
  for (auto& x : a) x = heegner::mod(x, mod);
  return {p, mod, j, a};
}

inline CycloValue operator*(const CycloValue& a, const CycloValue& b) {
  IVec r(a.c.size() + b.c.size(), Int(0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t t = 0; t < b.c.size(); ++t) r[i + t] += a.c[i] * b.c[t];
  return cyclo_reduce(a.p, a.j, a.mod, r);
}

/// chi(a) where chi(g) = zeta^(s g) with zeta of order p^j, j the order exponent of chi on G_n.
inline CycloValue specialize_character(const GroupRingElement& a, const Int& s) {
  Int N = Int(a.size());
  Int g = gcd(heegner::mod(s, N), N);
  if (g == 0) g = N;
  Int order = N / g;
  int j = valuation(order, a.p);
  if (pow(a.p, (unsigned long)j) != order) throw Error("theta", "character order is not a power of p");
  size_t ord = order.get_ui();
  IVec v(ord, Int(0));
  for (size_t i = 0; i < a.size(); ++i) {
    size_t e = Int(heegner::mod(s * Int(i), N) / g).get_ui();
    v[e] += a.c[i];
  }
  return cyclo_reduce(a.p, j, a.mod, v);
}

// ---------------------------------------------------------------------------
// The ordinary module at depth M and the eigenform

struct ThetaTower {
  PointContext* C = nullptr;  // level-M Heegner points
  OrientedClassSet X;         // classes at level M without orientation
  ModRing R{2, 1};
  IMat U;
  OrdinaryProjector P;
  IMat Ainv;  // inverse of U e + (1 - e)
  EigenDatum ef;
  std::map<Int, IMat> T;  // Brandt T_v by norm
  int M() const { return C->m; }
  Int p() const { return C->p; }
};

inline const IMat& brandt_T(ThetaTower& Tw, const Int& v) {
  auto it = Tw.T.find(v);
  if (it == Tw.T.end())
    it = Tw.T.emplace(v, Tw.R.reduce(brandt_matrix(Tw.X, Tw.C->B.F().primes_above(v).front()))).first;
  return it->second;
}

/// Depth-M ordinary module of the Heegner context C with the eigenpacket a_v (v, a_v) mod p^k.
inline ThetaTower make_theta_tower(PointContext& C, int k, const std::vector<std::pair<Int, Int>>& packet) {
  if (C.m < 1) throw Error("theta", "depth M must be at least 1");
  ThetaTower Tw;
  Tw.C = &C;
  Tw.X = make_oriented(C.B, C.E(), C.X.cs, false);
  Tw.R = ModRing(C.p, k);
  Tw.U = Tw.R.reduce(u_p_matrix(Tw.X));
  Tw.P = ordinary_projector(Tw.R, Tw.U);
  size_t N = Tw.U.size();
  IMat A = Tw.R.mul(Tw.U, Tw.P.e);
  for (size_t i = 0; i < N; ++i)
    for (size_t j = 0; j < N; ++j) A[i][j] = mod(A[i][j] + (i == j ? 1 : 0) - Tw.P.e[i][j], Tw.R.m);
  Tw.Ainv = mod_inverse(Tw.R, A);
  std::vector<std::pair<std::string, IMat>> ops;
  std::vector<Int> vals;
  for (auto& [v, a] : packet) {
    ops.push_back({"T" + v.get_str(), brandt_T(Tw, v)});
    vals.push_back(a);
  }
  Tw.ef = eigen_datum(Tw.R, Tw.P, Tw.U, ops, vals);
  return Tw;
}

/// Representatives of O_K,p^x / Z_p^x (1 + p^t O_K,p): a + omega with N unit, and 1 + p s omega.
inline std::vector<KElement> p_unit_reps(const CMExtension& K, const Int& p, int t) {
  std::vector<KElement> out;
  Int pt = pow(p, (unsigned long)t);
  for (Int a = 0; a < pt; ++a) {
    KElement x = K.from_omega(a, 1);
    if (Int(K.norm(x).a.get_num()) % p != 0) out.push_back(x);
  }
  for (Int s = 0; s < pt / p; ++s) out.push_back(K.from_omega(1, p * s));
  return out;
}

/// |O_c^x / {+-1}|.
inline Int unit_index(const CMExtension& K, const Int& c) { return Int(order_of_conductor(K, c).units.size() / 2); }

/// Class vector (row) of a point.
inline IVec class_vector(const ThetaTower& Tw, const PointDivisor& D) {
  IVec v(Tw.X.size(), Int(0));
  for (auto& [P, c] : D) v[P.k] = mod(v[P.k] + c, Tw.R.m);
  return v;
}

inline IVec row_times(const ModRing& R, const IVec& v, const IMat& A) {
  IVec r(A.empty() ? 0 : A[0].size(), Int(0));
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    for (size_t j = 0; j < r.size(); ++j) r[j] += v[i] * A[i][j];
  }
  for (auto& x : r) x = mod(x, R.m);
  return r;
}

/// Galois trace from H_{c v... p^(n+M)} down to H_c of P_{c v..., p^n, M}, as a class vector.
inline IVec trace_vector(ThetaTower& Tw, const Int& c, int n, const std::vector<Int>& vs) {
  PointContext& C = *Tw.C;
  const auto& K = C.B.K;
  Int cv = c;
  for (auto& v : vs) cv *= v;
  std::vector<GrossPoint> S = {heegner_point(C, cv, n)};
  for (auto& v : vs) {
    std::vector<GrossPoint> next;
    for (auto& Q : S)
      for (auto& y : v_coset_reps(C, v)) next.push_back(galois_act_local(C, y, v, Q));
    S = std::move(next);
  }
  PointDivisor D;
  for (auto& Q : S)
    for (auto& x : p_unit_reps(K, C.p, n + C.m)) add_to(D, galois_act_local(C, x, C.p, Q));
  IVec v = class_vector(Tw, D);
  Int inv = invmod(unit_index(K, c), Tw.R.m);
  for (auto& x : v) x = mod(x * inv, Tw.R.m);
  return v;
}

/// e^ord and U_p^-M applied to a class vector.
inline IVec ordinary_normalize(const ThetaTower& Tw, IVec v) {
  v = row_times(Tw.R, v, Tw.P.e);
  for (int i = 0; i < Tw.M(); ++i) v = row_times(Tw.R, v, Tw.Ainv);
  return v;
}

struct BigHeegnerTruncation {
  Int c;
  int n = 0;
  int M = 0;
  std::vector<Int> vs;
  IVec vec;  // ordinary class vector mod p^k
};

/// P_{c p^n} at depth M (with extra inert primes vs in the conductor), traced to H_c.
inline BigHeegnerTruncation big_heegner_truncation(ThetaTower& Tw, const Int& c, int n = 0,
                                                   const std::vector<Int>& vs = {}) {
  return {c, n, Tw.M(), vs, ordinary_normalize(Tw, trace_vector(Tw, c, n, vs))};
}

inline Int pair(const ThetaTower& Tw, const IVec& v) {
  Int s = 0;
  for (size_t i = 0; i < v.size(); ++i) s += v[i] * Tw.ef.ef[i];
  return mod(s, Tw.R.m);
}

/// U_p(P_c) = cor(P_cp) and T_v(P_c) = cor(P_cv) in the ordinary module mod p^k.
inline CheckReport verify_euler_relations(ThetaTower& Tw, const Int& c, const Int& v) {
  CheckReport rep{"euler", {}};
  if (Tw.C->B.K.splitting(v) != -1) throw Error("theta", "Euler relations need v inert in K");
  if (c % v == 0 || v == Tw.p()) throw Error("theta", "v must not divide c p");
  auto Pc = big_heegner_truncation(Tw, c);
  auto Pcp = big_heegner_truncation(Tw, c, 1);
  auto Pcv = big_heegner_truncation(Tw, c, 0, {v});
  rep.checks.push_back({"U_p", row_times(Tw.R, Pc.vec, Tw.U) == Pcp.vec});
  rep.checks.push_back({"T_" + v.get_str(), row_times(Tw.R, Pc.vec, brandt_T(Tw, v)) == Pcv.vec});
  bool nonzero = false;
  for (auto& x : Pc.vec) nonzero = nonzero || x != 0;
  rep.checks.push_back({"nonzero", nonzero});
  return rep;
}

// ---------------------------------------------------------------------------
// Theta elements

/// Conductor exponent of Q_n: d(n) from the layer, and d(1) - 1 for n = 0.
inline int q_conductor_exponent(const CMExtension& K, const Int& p, int n) {
  if (n == 0) return anticyclotomic_layer(K, p, 1).d - 1;
  return anticyclotomic_layer(K, p, n).d;
}

/// Q_n^sigma for each sigma in G_n, as ordinary class vectors.
inline std::vector<IVec> q_divisor(ThetaTower& Tw, int n) {
  PointContext& C = *Tw.C;
  const auto& K = C.B.K;
  int d = q_conductor_exponent(K, C.p, n);
  AnticyclotomicLayer A = anticyclotomic_layer(K, C.p, n);
  GrossPoint P = heegner_point(C, 1, d);
  size_t N = Int(pow(C.p, (unsigned long)n)).get_ui();
  std::vector<PointDivisor> D(N);
  for (auto& x : p_unit_reps(K, C.p, d + C.m)) {
    auto [a, b] = K.omega_coords(x);
    size_t g = Int(A.log(K, {a.get_num(), b.get_num()})).get_ui();
    add_to(D[g], galois_act_local(C, x, C.p, P));
  }
  Int inv = invmod(unit_index(K, 1), Tw.R.m);
  std::vector<IVec> out;
  for (auto& Dg : D) {
    IVec v = class_vector(Tw, Dg);
    for (auto& x : v) x = mod(x * inv, Tw.R.m);
    out.push_back(ordinary_normalize(Tw, v));
  }
  return out;
}

struct ThetaElement {
  int n = 0;
  GroupRingElement theta;
  int normalization = 0;  // power of alpha^-1 applied
};

/// theta_n = alpha^-n sum_sigma <e_f, Q_n^sigma> sigma^-1.
inline ThetaElement theta_element(ThetaTower& Tw, int n) {
  auto Q = q_divisor(Tw, n);
  GroupRingElement t = group_ring_zero(Tw.p(), n, Tw.R.m);
  Int ainv = powmod(invmod(Tw.ef.alpha, Tw.R.m), n, Tw.R.m);
  size_t N = t.size();
  for (size_t g = 0; g < N; ++g) t.c[(N - g) % N] = mod(ainv * pair(Tw, Q[g]), Tw.R.m);
  return {n, t, n};
}

inline bool theta_compatibility(const ThetaElement& lower, const ThetaElement& upper) {
  return upper.n == lower.n + 1 && project(upper.theta) == lower.theta;
}

struct LFunctionElement {
  int n = 0;
  GroupRingElement L;
};

inline LFunctionElement two_variable_L(const ThetaElement& t) { return {t.n, t.theta * star(t.theta)}; }

// ---------------------------------------------------------------------------
// Gross sums

/// Quadratic character of O_K,p^x / Z_p^x mu_K through the Legendre symbol of the norm.
inline int local_quadratic_character(const CMExtension& K, const KElement& x, const Int& p) {
  return kronecker(Int(K.norm(x).a.get_num()), p);
}

/// sum over Gal(H_{c0 p^M}/K) of chi(sigma) <e_f, P_{c0,M}^sigma>, chi trivial or the quadratic character
/// read off at p (the Legendre symbol of the norm). c0 is squarefree, prime to p and built from inert primes.
inline Int tower_gross_sum(ThetaTower& Tw, const Int& c0, bool quadratic) {
  PointContext& C = *Tw.C;
  const auto& K = C.B.K;
  std::vector<GrossPoint> S = {heegner_point(C, c0, 0)};
  for (auto& [v, e] : factor(c0)) {
    if (e != 1) throw Error("theta", "c0 must be squarefree");
    std::vector<GrossPoint> next;
    for (auto& Q : S)
      for (auto& y : v_coset_reps(C, v)) next.push_back(galois_act_local(C, y, v, Q));
    S = std::move(next);
  }
  Int s = 0;
  for (auto& P : S)
    for (auto& x : p_unit_reps(K, C.p, C.m)) {
      GrossPoint Q = galois_act_local(C, x, C.p, P);
      s += (quadratic ? local_quadratic_character(K, x, C.p) : 1) * Tw.ef.ef[Q.k];
    }
  return mod(s * invmod(unit_index(K, 1), Tw.R.m), Tw.R.m);
}

/// phi(theta) representatives modulo the units of O_L(I_k), ignoring orientation.
inline QuatElement canonical_embedding(const PointContext& C, size_t k, const QuatElement& phi) {
  QuatElement best = phi;
  for (auto& [u, d] : C.units[k]) {
    QuatElement q = C.B.conjugate_by(u, phi);
    if (q < best) best = q;
  }
  return best;
}

struct GrossSumOracle {
  Int conductor;
  size_t embeddings = 0;  // optimal embeddings of O_c over all classes, modulo units
  size_t orbit = 0;       // size of the Pic(O_c)-orbit of the Heegner embedding
  Int trivial, quadratic;
};

/// Brute-force Gross sums over the Pic(O_c)-orbit of the Heegner embedding of conductor c = c0 p^M.
/// Embeddings are enumerated as elements y = phi(c omega) of each left order; Pic(O_c) acts via
/// ideals from reduced forms.
inline GrossSumOracle gross_sum_oracle(ThetaTower& Tw, const Int& c0 = 1) {
  PointContext& C = *Tw.C;
  const auto& B = C.B;
  const auto& K = B.K;
  Int c = c0 * C.pm;
  GrossSumOracle out;
  out.conductor = c;
  // theta = u + w omega
  auto [u, w] = K.omega_coords(C.theta);
  Int t = K.tK(), nk = K.nK();
  std::set<std::pair<size_t, QuatElement>> emb;
  for (size_t k = 0; k < C.X.cs.ideals.size(); ++k) {
    const Lattice& O = C.X.cs.left_orders[k];
    Rat bound = 2 * Rat(c * c * nk) + 1;
    enumerate_trace(B, O, bound, [&](const QuatElement& y) {
      if (B.trd(y) != FieldElement(Rat(c * t)) || B.nrd(y) != FieldElement(Rat(c * c * nk))) return;
      QuatElement phi = B.from_field(FieldElement(u)) + B.scale(y, FieldElement(w / Rat(c)));
      GrossPoint P{k, 0, phi};
      if (optimal_conductor(C, P) != c) return;
      emb.insert({k, canonical_embedding(C, k, phi)});
    });
  }
  out.embeddings = emb.size();
  GrossPoint H = heegner_point(C, c0, 0);
  if (!emb.count({H.k, canonical_embedding(C, H.k, H.phi)}))
    throw Error("theta", "Heegner embedding missing from the brute-force enumeration");
  PicardGroup G = picard_group(K, order_of_conductor(K, c), c * C.E().nplus * discriminant_norm(B));
  // quadratic character: -1 off the subgroup of squares (assumes a cyclic 2-part)
  std::set<Form> squares;
  for (auto& f : G.elements) squares.insert(compose(f, f));
  Int triv = 0, quad = 0;
  for (auto& f : G.elements) {
    Form g = coprime_representative(f, c * C.E().nplus * discriminant_norm(B) * 6);
    GrossPoint Q = galois_act(C, form_to_lattice(K, g), H);
    if (!emb.count({Q.k, canonical_embedding(C, Q.k, Q.phi)}))
      throw Error("theta", "Galois conjugate missing from the brute-force enumeration");
    ++out.orbit;
    triv += Tw.ef.ef[Q.k];
    quad += (squares.count(f) ? 1 : -1) * Tw.ef.ef[Q.k];
  }
  out.trivial = mod(triv, Tw.R.m);
  out.quadratic = mod(quad, Tw.R.m);
  return out;
}

}  // namespace heegner
