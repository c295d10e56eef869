#pragma once

#include "cmfield.hpp"
#include "linalg.hpp"

#include <set>

namespace heegner {

// ---------------------------------------------------------------------------
// Hilbert symbols

namespace detail {

inline Rat strip(const Rat& x, const Int& p, int v) {
  return v >= 0 ? Rat(x / Rat(pow(p, v))) : Rat(x * Rat(pow(p, -v)));
}

inline int hilbert_q_odd(const Rat& a, const Rat& b, const Int& p) {
  int al = valuation(a, p), be = valuation(b, p);
  Rat u = strip(a, p, al), w = strip(b, p, be);
  auto leg = [&](const Rat& x) { return kronecker(mod(Int(x.get_num()) * invmod(x.get_den(), p), p), p); };
  int s = 1;
  if ((al * be) % 2 != 0 && mod(p, 4) == 3) s = -s;
  if (be % 2 != 0) s *= leg(u);
  if (al % 2 != 0) s *= leg(w);
  return s;
}

inline int hilbert_q2(const Rat& a, const Rat& b) {
  const Int two = 2;
  int al = valuation(a, two), be = valuation(b, two);
  auto unit_mod8 = [&](const Rat& x, int v) {
    Rat y = strip(x, two, v);
    return mod(Int(y.get_num()) * invmod(y.get_den(), 8), 8);
  };
  Int u = unit_mod8(a, al), w = unit_mod8(b, be);
  auto eps = [](const Int& x) { return int(mod((x - 1) / 2, 2).get_si()); };
  auto om = [](const Int& x) { return int(mod((x * x - 1) / 8, 2).get_si()); };
  int e = eps(u) * eps(w) + al * om(w) + be * om(u);
  return (e % 2 == 0) ? 1 : -1;
}

}  // namespace detail

/// Real place k: -1 iff both images are negative.
inline int hilbert_real(const TotallyRealField& F, const FieldElement& a, const FieldElement& b, int k) {
  return (F.sign(a, k) < 0 && F.sign(b, k) < 0) ? -1 : 1;
}

inline int hilbert_symbol(const TotallyRealField& F, FieldElement a, FieldElement b, const PrimeIdeal& v);

namespace detail {

/// Clear denominators by a rational square.
inline FieldElement integral_part(const FieldElement& x) {
  Int d = lcm(Int(x.a.get_den()), Int(x.b.get_den()));
  return x * Rat(d * d);
}

/// omega -> r in Z/p^k for a degree-one prime v over p (Hensel lift of v.root).
inline Int padic_root(const TotallyRealField& F, const PrimeIdeal& v, int k) {
  Int r = v.root, m = v.p;
  for (int i = 1; i < k; ++i) {
    m *= v.p;
    r = mod(r - (r * r - F.t * r + F.n) * invmod(2 * r - F.t, m), m);
  }
  return r;
}

inline Int padic_image(const FieldElement& x, const Int& r, const Int& m) {
  return mod(Int(x.a.get_num()) + Int(x.b.get_num()) * r, m);
}

inline int hilbert_odd(const TotallyRealField& F, FieldElement a, FieldElement b, const PrimeIdeal& v) {
  if (F.degree == 1) return hilbert_q_odd(a.a, b.a, v.p);
  a = integral_part(a);
  b = integral_part(b);
  int al = F.valuation(a, v), be = F.valuation(b, v);
  if (F.primes_above(v.p).size() == 2) {
    // F_v = Q_p
    int k = std::max(al, be) + 2;
    Int m = pow(v.p, k), r = padic_root(F, v, k);
    return hilbert_q_odd(Rat(padic_image(a, r, m)), Rat(padic_image(b, r, m)), v.p);
  }
  // v is the only prime over p: (-1)^{al be} a^be conj(b)^al / N(b)^al, with the p-power cleared
  FieldElement X = F.mul(F.pow(a, unsigned(be)), F.pow(F.conj(b), unsigned(al)));
  Rat Nb = Rat(pow(Int(F.norm(b).get_num()), unsigned(al)));
  int e = valuation(Nb, v.p);
  Nb /= Rat(pow(v.p, e));
  FieldElement t = X * Rat(Rat(1) / (Nb * Rat(pow(v.p, e))));
  if ((al * be) % 2 != 0) t = -t;
  return F.res_legendre(F.reduce(t, v), v);
}

}  // namespace detail

/// Hilbert symbol (a, b)_v at a finite prime v of F (d <= 2).
inline int hilbert_symbol(const TotallyRealField& F, FieldElement a, FieldElement b, const PrimeIdeal& v) {
  if (a.is_zero() || b.is_zero()) throw Error("quatalg", "Hilbert symbol of zero");
  if (v.p != 2) return detail::hilbert_odd(F, a, b, v);
  if (F.degree == 1) return detail::hilbert_q2(a.a, b.a);
  a = detail::integral_part(a);
  b = detail::integral_part(b);
  if (F.primes_above(2).size() == 2) {
    // F_v = Q_2
    int k = std::max(F.valuation(a, v), F.valuation(b, v)) + 8;
    Int m = pow(Int(2), k), r = detail::padic_root(F, v, k);
    return detail::hilbert_q2(Rat(detail::padic_image(a, r, m)), Rat(detail::padic_image(b, r, m)));
  }
  // single dyadic prime: product formula
  int prod = 1;
  for (int k = 0; k < F.degree; ++k) prod *= hilbert_real(F, a, b, k);
  Int N = abs(Int(F.norm(a).get_num()) * Int(F.norm(b).get_num()));
  for (auto& [p, e] : factor(N)) {
    if (p == 2) continue;
    for (auto& w : F.primes_above(p)) prod *= detail::hilbert_odd(F, a, b, w);
  }
  return prod;
}

// ---------------------------------------------------------------------------
// The algebra B = K + K j

struct QuatElement {
  KElement x, y;  // x + y j
  bool operator==(const QuatElement& o) const { return x == o.x && y == o.y; }
  bool operator!=(const QuatElement& o) const { return !(*this == o); }
  bool operator<(const QuatElement& o) const { return x != o.x ? x < o.x : y < o.y; }
  QuatElement operator+(const QuatElement& o) const { return {x + o.x, y + o.y}; }
  QuatElement operator-(const QuatElement& o) const { return {x - o.x, y - o.y}; }
  QuatElement operator-() const { return {-x, -y}; }
};

class QuaternionAlgebra {
 public:
  CMExtension K;
  FieldElement beta;
  std::vector<PrimeIdeal> ramified;  // finite ramified primes

  const TotallyRealField& F() const { return K.F; }
  int d() const { return K.F.degree; }
  size_t dim() const { return 4 * size_t(d()); }

  QuatElement mul(const QuatElement& a, const QuatElement& b) const {
    // (x1 + y1 j)(x2 + y2 j) = (x1 x2 + beta y1 conj(y2)) + (x1 y2 + y1 conj(x2)) j
    return {K.mul(a.x, b.x) + K.scale(K.mul(a.y, K.conj(b.y)), beta), K.mul(a.x, b.y) + K.mul(a.y, K.conj(b.x))};
  }
  QuatElement conj(const QuatElement& a) const { return {K.conj(a.x), -a.y}; }
  FieldElement nrd(const QuatElement& a) const { return K.norm(a.x) - K.F.mul(beta, K.norm(a.y)); }
  FieldElement trd(const QuatElement& a) const { return K.trace(a.x); }
  QuatElement scale(const QuatElement& a, const FieldElement& s) const { return {K.scale(a.x, s), K.scale(a.y, s)}; }
  QuatElement inv(const QuatElement& a) const {
    FieldElement n = nrd(a);
    if (n.is_zero()) throw Error("quatalg", "inverse of a zero divisor");
    return scale(conj(a), K.F.inv(n));
  }
  QuatElement from_field(const FieldElement& f) const { return {KElement(f), KElement()}; }
  QuatElement from_k(const KElement& z) const { return {z, KElement()}; }
  QuatElement one() const { return from_field(FieldElement(1)); }
  QuatElement i() const { return {KElement(FieldElement(0), FieldElement(1)), KElement()}; }
  QuatElement j() const { return {KElement(), KElement(FieldElement(1))}; }

  /// Coordinates in Q^{4d}: F-coordinates of (1, i, j, ij), each expanded in {1, omega_F}.
  QVec to_vec(const QuatElement& q) const {
    const FieldElement* c[4] = {&q.x.x, &q.x.y, &q.y.x, &q.y.y};
    QVec v;
    v.reserve(dim());
    for (auto* f : c) {
      v.push_back(f->a);
      if (d() == 2) v.push_back(f->b);
    }
    return v;
  }
  QuatElement from_vec(const QVec& v) const {
    auto fe = [&](size_t k) { return d() == 2 ? FieldElement(v[2 * k], v[2 * k + 1]) : FieldElement(v[k]); };
    return {KElement(fe(0), fe(1)), KElement(fe(2), fe(3))};
  }
  QuatElement from_ivec(const IVec& v, const Int& den) const {
    QVec q(v.size());
    for (size_t k = 0; k < v.size(); ++k) q[k] = frac(v[k], den);
    return from_vec(q);
  }

  /// x -> b x b^{-1} applied to an element.
  QuatElement conjugate_by(const QuatElement& b, const QuatElement& x) const { return mul(mul(b, x), inv(b)); }
};

/// Finite primes where (delta, beta) ramifies.
inline std::vector<PrimeIdeal> ramified_primes(const TotallyRealField& F, const FieldElement& a, const FieldElement& b) {
  std::set<Int> cand = {2};
  auto add = [&](const FieldElement& x) {
    Int N = abs(Int(F.norm(x).get_num()) * Int(F.norm(x).get_den()));
    if (N > 1)
      for (auto& [p, e] : factor(N)) cand.insert(p);
  };
  add(a);
  add(b);
  std::vector<PrimeIdeal> out;
  int prod = 1;
  for (int k = 0; k < F.degree; ++k) prod *= hilbert_real(F, a, b, k);
  for (auto& p : cand)
    for (auto& v : F.primes_above(p))
      if (hilbert_symbol(F, a, b, v) == -1) {
        out.push_back(v);
        prod = -prod;
      }
  if (prod != 1) throw Error("quatalg", "Hilbert symbols violate the product formula");
  return out;
}

inline QuaternionAlgebra make_algebra(const CMExtension& K, const FieldElement& beta) {
  QuaternionAlgebra B;
  B.K = K;
  B.beta = beta;
  const auto& F = K.F;
  if (!F.totally_negative(beta)) throw Error("quatalg", "beta must be totally negative (definite algebra)");
  B.ramified = ramified_primes(F, K.delta, beta);
  int parity = int(B.ramified.size()) + F.degree;
  if (parity % 2 != 0) throw Error("quatalg", "product formula violated for (delta, beta)");
  return B;
}

/// Product of the finite ramified primes, as an integer (norm of the discriminant ideal).
inline Int discriminant_norm(const QuaternionAlgebra& B) {
  Int n = 1;
  for (auto& v : B.ramified) n *= v.norm();
  return n;
}

/// Tr(x) = Nr(x) = 0 for x in B tensor_F K, with x = u + v with u, v in B (x = u + sqrt(delta) v).
inline bool y_membership(const QuaternionAlgebra& B, const QuatElement& u, const QuatElement& v) {
  if (u == QuatElement{} && v == QuatElement{}) throw Error("quatalg", "y_membership of zero");
  // Tr(u + s v) = Tr u + s Tr v; Nr(u + s v) = Nr u + delta Nr v + s (u conj(v) + v conj(u)) trace part
  FieldElement tu = B.trd(u), tv = B.trd(v);
  if (!tu.is_zero() || !tv.is_zero()) return false;
  FieldElement nr = B.nrd(u) + B.F().mul(B.K.delta, B.nrd(v));
  FieldElement cross = B.trd(B.mul(u, B.conj(v)));
  return nr.is_zero() && cross.is_zero();
}

/// Embedding K -> B stored as the image of sqrt(delta).
struct Embedding {
  QuatElement s;  // phi(sqrt(delta))
  bool operator==(const Embedding& o) const { return s == o.s; }
  bool operator<(const Embedding& o) const { return s < o.s; }
};

inline QuatElement apply(const QuaternionAlgebra& B, const Embedding& phi, const KElement& z) {
  return B.from_field(z.x) + B.scale(phi.s, z.y);
}

inline Embedding canonical_embedding(const QuaternionAlgebra& B) { return {B.i()}; }

inline Embedding conjugation_action(const QuaternionAlgebra& B, const QuatElement& b, const Embedding& phi) {
  if (B.nrd(b).is_zero()) throw Error("quatalg", "conjugation by a non-invertible element");
  return {B.conjugate_by(b, phi.s)};
}

// ---------------------------------------------------------------------------
// Choice of theta and beta (F = Q)

/// theta in O_K with Im > 0, {1, theta} a local basis at primes of d_K p n, uniformizer at ramified primes.
inline KElement choose_theta(const CMExtension& K, const Int& p, const Int& n, int height_bound = 50) {
  if (K.F.degree != 1) throw Error("quatalg", "choose_theta implemented for F = Q");
  Int bad = abs(K.dK) * p * n;
  for (int H = 1; H <= height_bound; ++H)
    for (int b = 1; b <= H; ++b) {
      std::vector<int> as;
      if (b == H) {
        for (int a = 0; a <= H; ++a) {
          as.push_back(a);
          if (a) as.push_back(-a);
        }
      } else {
        as = {H, -H};
      }
      for (int a : as) {
        // theta = (a + b sqrt(delta)) / 2
        KElement th{FieldElement(frac(a, 2)), FieldElement(frac(b, 2))};
        if (!K.is_integral(th)) continue;
        auto [ca, cb] = K.omega_coords(th);
        Int index = abs(Int(cb.get_num()));
        if (gcd(index, bad) != 1) continue;
        Int N = K.norm(th).a.get_num();
        bool ok = true;
        for (auto& v : K.ramified)
          if (valuation(N, v.p) != 1) ok = false;
        if (ok) return th;
      }
    }
  throw Error("search", "choose_theta: height bound exhausted");
}

/// beta in F^x totally negative with the local conditions at p n+, d_K and ramification exactly n-.
inline FieldElement choose_beta(const CMExtension& K, const Int& nplus, const Int& nminus, const Int& p,
                                int height_bound = 2000) {
  const auto& F = K.F;
  std::vector<PrimeIdeal> want;
  if (nminus > 1)
    for (auto& [q, e] : factor(nminus)) {
      if (e > 1) throw Error("config", "n- is not squarefree");
      for (auto& v : F.primes_above(q)) want.push_back(v);
    }
  if ((int(want.size()) + F.degree) % 2 != 0) throw Error("config", "inconsistent ramification parity");
  std::vector<PrimeIdeal> square_at;
  for (const Int& m : {p, nplus})
    if (m > 1)
      for (auto& [q, e] : factor(m))
        for (auto& v : F.primes_above(q)) square_at.push_back(v);
  auto candidates = [&](int h) {
    std::vector<FieldElement> out;
    if (F.degree == 1) {
      out.push_back(FieldElement(-h));
      return out;
    }
    for (int a = -h; a <= h; ++a)
      for (int b = -h; b <= h; ++b) {
        if (std::max(std::abs(a), std::abs(b)) != h) continue;
        FieldElement x{Rat(a), Rat(b)};
        if (F.totally_negative(x)) out.push_back(x);
      }
    return out;
  };
  for (int h = 1; h <= height_bound; ++h)
    for (auto& beta : candidates(h)) {
      bool ok = true;
      for (auto& v : square_at) {
        if (F.valuation(beta, v) != 0 || (v.p != 2 && F.res_legendre(F.reduce(beta, v), v) != 1)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (auto& v : K.ramified)
        if (F.valuation(beta, v) != 0) ok = false;
      if (!ok) continue;
      auto ram = ramified_primes(F, K.delta, beta);
      if (ram.size() != want.size()) continue;
      std::sort(ram.begin(), ram.end());
      auto w = want;
      std::sort(w.begin(), w.end());
      if (ram == w) return beta;
    }
  throw Error("search", "choose_beta: height bound exhausted");
}

// ---------------------------------------------------------------------------
// Local splittings i_l : B_l -> M_2(Q_l) at primes l not dividing n- (F = Q)

/// 2x2 matrix over Z / l^T.
struct Mat2 {
  Int a, b, c, d;
  bool operator==(const Mat2& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }
};

struct LocalRing {
  Int l;
  int T;
  Int m;  // l^T
  Mat2 reduce(const Mat2& x) const { return {mod(x.a, m), mod(x.b, m), mod(x.c, m), mod(x.d, m)}; }
  Mat2 mul(const Mat2& x, const Mat2& y) const {
    return reduce({x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d});
  }
  Mat2 add(const Mat2& x, const Mat2& y) const { return reduce({x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}); }
  Mat2 scal(const Int& s, const Mat2& x) const { return reduce({s * x.a, s * x.b, s * x.c, s * x.d}); }
  Int to_local(const Rat& q) const { return mod(Int(q.get_num()) * invmod(q.get_den(), m), m); }
  Mat2 identity() const { return {1, 0, 0, 1}; }
  Int det(const Mat2& x) const { return mod(x.a * x.d - x.b * x.c, m); }
  Int trace(const Mat2& x) const { return mod(x.a + x.d, m); }
};

struct LocalSplitting {
  LocalRing R;
  enum Kind { ThetaFormula, Regular } kind;
  KElement xi;    // {1, xi} an l-basis of O_{K,l}
  Mat2 Xi, J;     // images of xi and j
  Int sqrt_beta;  // ThetaFormula only

  /// Image of z in O_{K,l} (l-integral xi-coordinates).
  Mat2 image_k(const CMExtension& K, const KElement& z) const {
    // z = u + w xi
    Rat w = (xi.y.a == 0) ? Rat(0) : z.y.a / xi.y.a;
    Rat u = z.x.a - w * xi.x.a;
    (void)K;
    return R.add(R.scal(R.to_local(u), R.identity()), R.scal(R.to_local(w), Xi));
  }
  /// Image of an l-integral element x (coordinates with denominators prime to l in the xi basis).
  Mat2 image(const QuaternionAlgebra& B, const QuatElement& x) const {
    return R.add(image_k(B.K, x.x), R.mul(image_k(B.K, x.y), J));
  }
  /// Smallest e >= 0 with l^e x integral for this splitting, and the image of l^e x.
  std::pair<int, Mat2> image_scaled(const QuaternionAlgebra& B, const QuatElement& x) const {
    int e = 0;
    auto denval = [&](const KElement& z) {
      Rat w = (xi.y.a == 0) ? Rat(0) : z.y.a / xi.y.a;
      Rat u = z.x.a - w * xi.x.a;
      int v = 0;
      for (const Rat& q : {u, w})
        if (q != 0) v = std::max(v, -valuation(q, R.l));
      return v;
    };
    e = std::max(denval(x.x), denval(x.y));
    QuatElement y = B.scale(x, FieldElement(Rat(pow(R.l, e))));
    return {e, image(B, y)};
  }
};

/// Splitting at l with i(theta) = [[T,-N],[1,0]], i(j) = sqrt(beta) [[-1,T],[0,1]].
inline LocalSplitting theta_splitting(const QuaternionAlgebra& B, const KElement& theta, const Int& l, int T) {
  LocalSplitting S;
  S.R = {l, T, pow(l, T)};
  S.kind = LocalSplitting::ThetaFormula;
  S.xi = theta;
  Int Tr = Int(B.K.trace(theta).a.get_num()), N = Int(B.K.norm(theta).a.get_num());
  S.Xi = S.R.reduce({Tr, -N, 1, 0});
  Int beta = Int(B.beta.a.get_num());
  if (beta % l == 0 || kronecker(beta, l) != 1) throw Error("quatalg", "beta is not a unit square at " + l.get_str());
  S.sqrt_beta = sqrt_mod_prime_power(beta, l, T);
  S.J = S.R.reduce({-S.sqrt_beta, S.sqrt_beta * Tr, 0, S.sqrt_beta});
  return S;
}

/// Splitting at l unramified in K with beta a unit: regular representation of K_l on {1, omega}
/// and j acting as x -> y conj(x) with N(y) = beta.
inline LocalSplitting regular_splitting(const QuaternionAlgebra& B, const Int& l, int T) {
  const auto& K = B.K;
  LocalSplitting S;
  S.R = {l, T, pow(l, T)};
  S.kind = LocalSplitting::Regular;
  S.xi = K.omega();
  Int beta = Int(B.beta.a.get_num());
  if (beta % l == 0) throw Error("unsupported", "regular splitting needs beta to be a unit at " + l.get_str());
  if (K.splitting(l) == 0) throw Error("unsupported", "regular splitting at a ramified prime");
  Int t = K.tK(), n = K.nK();
  // multiplication by omega on basis {1, omega}: columns are images
  S.Xi = S.R.reduce({0, -n, 1, t});
  // find y = y0 + y1 omega with N(y) = beta mod l, then Hensel lift in y0 (or y1)
  auto N = [&](const Int& a, const Int& b) -> Int { return a * a + t * a * b + n * b * b; };
  Int y0 = -1, y1 = -1;
  for (Int a = 0; a < l && y0 < 0; ++a)
    for (Int b = 0; b < l; ++b)
      if (mod(N(a, b) - beta, l) == 0) {
        // need a nonzero partial derivative mod l
        if (mod(2 * a + t * b, l) != 0 || mod(t * a + 2 * b * n, l) != 0) {
          y0 = a;
          y1 = b;
          break;
        }
      }
  if (y0 < 0) throw Error("quatalg", "no norm-beta element found");
  Int m = l;
  bool lift_a = mod(2 * y0 + t * y1, l) != 0;
  for (int k = 1; k < T; ++k) {
    m *= l;
    Int f = N(y0, y1) - beta;
    if (lift_a)
      y0 = mod(y0 - f * invmod(2 * y0 + t * y1, m), m);
    else
      y1 = mod(y1 - f * invmod(t * y0 + 2 * y1 * n, m), m);
  }
  // j(1) = y, j(omega) = y * conj(omega) = y (t - omega)
  // y * omega = y0 omega + y1 (t omega - n) = -n y1 + (y0 + t y1) omega
  Int ywa = -n * y1, ywb = y0 + t * y1;
  Int c0 = t * y0 - ywa, c1 = t * y1 - ywb;
  S.J = S.R.reduce({y0, c0, y1, c1});
  return S;
}

}  // namespace heegner
