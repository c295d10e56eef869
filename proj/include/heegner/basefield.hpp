#pragma once

#include <array>
#include <optional>
#include <set>

#include "arith.hpp"

namespace heegner {

/// a + b*omega in the integral basis {1, omega} of O_F (b = 0 when F = Q).
struct FieldElement {
  Rat a = 0, b = 0;
  FieldElement() = default;
  FieldElement(Rat x) : a(std::move(x)) {}
  FieldElement(int x) : a(x) {}
  FieldElement(const Int& x) : a(x) {}
  FieldElement(Rat x, Rat y) : a(std::move(x)), b(std::move(y)) {}
  bool is_zero() const { return a == 0 && b == 0; }
  bool is_integral() const { return a.get_den() == 1 && b.get_den() == 1; }
  bool operator==(const FieldElement& o) const { return a == o.a && b == o.b; }
  bool operator!=(const FieldElement& o) const { return !(*this == o); }
  bool operator<(const FieldElement& o) const { return a != o.a ? a < o.a : b < o.b; }
  FieldElement operator+(const FieldElement& o) const { return {a + o.a, b + o.b}; }
  FieldElement operator-(const FieldElement& o) const { return {a - o.a, b - o.b}; }
  FieldElement operator-() const { return {-a, -b}; }
  FieldElement operator*(const Rat& s) const { return {a * s, b * s}; }
};

/// Prime of O_F: residue field F_q with q = p^f; for f = 1 reduction is omega -> root.
struct PrimeIdeal {
  Int p;
  int f = 1;
  FieldElement gen;  // totally positive generator
  Int root = 0;      // omega mod v when f == 1 (d = 2)
  Int norm() const { return pow(p, f); }
  bool operator==(const PrimeIdeal& o) const { return p == o.p && f == o.f && root == o.root; }
  bool operator<(const PrimeIdeal& o) const {
    return p != o.p ? p < o.p : (f != o.f ? f < o.f : root < o.root);
  }
};

/// Element of a residue field F_q (q = p or p^2), c0 + c1*w with w the image of omega.
struct Residue {
  Int c0 = 0, c1 = 0;
  bool operator==(const Residue& o) const { return c0 == o.c0 && c1 == o.c1; }
  bool is_zero() const { return c0 == 0 && c1 == 0; }
};

class TotallyRealField {
 public:
  int D = 1;
  int degree = 1;
  Int disc = 1;  // discriminant of O_F (1 for Q)
  Int t = 0, n = 0;  // omega^2 = t*omega - n
  FieldElement unit;  // fundamental unit (d = 2)
  int narrow_class_number = 1;
  int class_number = 1;
  Rat zeta_m1;  // |zeta_F(-1)|

  // --- arithmetic ---
  FieldElement mul(const FieldElement& x, const FieldElement& y) const {
    if (degree == 1) return {x.a * y.a, 0};
    Rat bd = x.b * y.b;
    return {x.a * y.a - Rat(n) * bd, x.a * y.b + x.b * y.a + Rat(t) * bd};
  }
  FieldElement conj(const FieldElement& x) const {
    if (degree == 1) return x;
    return {x.a + x.b * Rat(t), -x.b};
  }
  Rat norm(const FieldElement& x) const {
    if (degree == 1) return x.a;
    return x.a * x.a + Rat(t) * x.a * x.b + Rat(n) * x.b * x.b;
  }
  Rat trace(const FieldElement& x) const {
    if (degree == 1) return x.a;
    return 2 * x.a + Rat(t) * x.b;
  }
  FieldElement inv(const FieldElement& x) const {
    Rat N = norm(x);
    if (N == 0) throw Error("basefield", "inverse of zero");
    if (degree == 1) return {1 / x.a, 0};
    return conj(x) * (1 / N);
  }
  FieldElement div(const FieldElement& x, const FieldElement& y) const { return mul(x, inv(y)); }
  FieldElement pow(FieldElement x, unsigned e) const {
    FieldElement r(1);
    while (e) {
      if (e & 1) r = mul(r, x);
      x = mul(x, x);
      e >>= 1;
    }
    return r;
  }

  /// Sign of the image of x under the k-th real embedding (k = 0 is tau: sqrt(D) > 0).
  int sign(const FieldElement& x, int k) const {
    if (degree == 1) return sgn(x.a);
    // x = u + v sqrt(D)
    Rat u = x.a, v = x.b;
    if (t == 1) {
      u += x.b / 2;
      v = x.b / 2;
    }
    if (k == 1) v = -v;
    // sign(u + v sqrt D) exactly
    if (v == 0) return sgn(u);
    if (u == 0) return sgn(v);
    if (sgn(u) == sgn(v)) return sgn(u);
    Rat cmp = u * u - v * v * D;
    return sgn(cmp) * sgn(u);
  }
  bool totally_positive(const FieldElement& x) const {
    for (int k = 0; k < degree; ++k)
      if (sign(x, k) <= 0) return false;
    return true;
  }
  bool totally_negative(const FieldElement& x) const {
    for (int k = 0; k < degree; ++k)
      if (sign(x, k) >= 0) return false;
    return true;
  }
  /// x / y is integral.
  bool divides(const FieldElement& y, const FieldElement& x) const { return div(x, y).is_integral(); }

  // --- primes ---
  std::vector<PrimeIdeal> primes_above(const Int& p) const {
    std::vector<PrimeIdeal> out;
    if (degree == 1) {
      out.push_back({p, 1, FieldElement(p), 0});
      return out;
    }
    std::vector<Int> roots;
    for (Int r = 0; r < p; ++r)
      if (mod(r * r - t * r + n, p) == 0) roots.push_back(r);
    if (roots.empty()) {
      out.push_back({p, 2, FieldElement(p), 0});
      return out;
    }
    for (auto& r : roots) out.push_back({p, 1, find_generator(p, r), r});
    return out;
  }

  /// Valuation of nonzero x at v.
  int valuation(const FieldElement& x, const PrimeIdeal& v) const {
    if (x.is_zero()) throw Error("basefield", "valuation of zero");
    // write x = y / den with y integral; v(x) = v(y) - v(den)
    Int den = lcm(Int(x.a.get_den()), Int(x.b.get_den()));
    FieldElement y = x * Rat(den);
    int val = 0;
    while (divides(v.gen, y)) {
      y = div(y, v.gen);
      ++val;
    }
    FieldElement dd(den);
    while (divides(v.gen, dd)) {
      dd = div(dd, v.gen);
      --val;
    }
    return val;
  }

  /// Reduction O_{F,v} -> k_v of a v-integral element.
  Residue reduce(const FieldElement& x, const PrimeIdeal& v) const {
    const Int& p = v.p;
    auto red = [&](const Rat& q) { return mod(Int(q.get_num()) * invmod(q.get_den(), p), p); };
    if (degree == 1) return {red(x.a), 0};
    if (v.f == 1) {
      // omega = root mod v; for ramified/split primes the element p*omega etc. reduce fine
      return {mod(red(x.a) + red(x.b) * v.root, p), 0};
    }
    return {red(x.a), red(x.b)};
  }
  Residue res_mul(const Residue& x, const Residue& y, const PrimeIdeal& v) const {
    const Int& p = v.p;
    if (v.f == 1) return {mod(x.c0 * y.c0, p), 0};
    Int bd = x.c1 * y.c1;
    return {mod(x.c0 * y.c0 - n * bd, p), mod(x.c0 * y.c1 + x.c1 * y.c0 + t * bd, p)};
  }
  Residue res_pow(Residue x, Int e, const PrimeIdeal& v) const {
    Residue r{1, 0};
    while (e > 0) {
      if (e % 2 == 1) r = res_mul(r, x, v);
      x = res_mul(x, x, v);
      e /= 2;
    }
    return r;
  }
  /// Quadratic character of k_v^x (v odd); 0 on zero.
  int res_legendre(const Residue& x, const PrimeIdeal& v) const {
    if (x.is_zero()) return 0;
    Residue r = res_pow(x, (v.norm() - 1) / 2, v);
    return (r.c0 == 1 && r.c1 == 0) ? 1 : -1;
  }

  /// x is congruent to a square of O_F modulo the ideal (m) (brute force over O_F/(m)).
  bool is_square_mod(const FieldElement& x, const FieldElement& m) const {
    Int N = abs(Int(norm(m).get_num()));
    Int range = degree == 1 ? N : N;  // coordinates mod N suffice since N in (m)
    for (Int a = 0; a < range; ++a)
      for (Int b = 0; b < (degree == 1 ? Int(1) : range); ++b) {
        FieldElement y{Rat(a), Rat(b)};
        if (divides(m, mul(y, y) - x)) return true;
      }
    return false;
  }

  /// Factorisation of the ideal generated by x (integral, nonzero).
  std::vector<std::pair<PrimeIdeal, int>> factor_ideal(const FieldElement& x) const {
    if (x.is_zero()) throw Error("basefield", "factor_ideal: zero ideal");
    Int N = abs(Int(norm(x).get_num()));
    std::vector<std::pair<PrimeIdeal, int>> out;
    if (N == 1) return out;
    for (auto& [p, e] : factor(N))
      for (auto& v : primes_above(p)) {
        int val = valuation(x, v);
        if (val > 0) out.emplace_back(v, val);
      }
    return out;
  }

  /// Prime ideal above p dividing the integral element x, if any.
  std::vector<PrimeIdeal> prime_divisors(const FieldElement& x) const {
    std::vector<PrimeIdeal> out;
    for (auto& [v, e] : factor_ideal(x)) out.push_back(v);
    return out;
  }

 private:
  static int sgn(const Rat& q) { return q > 0 ? 1 : (q < 0 ? -1 : 0); }

  FieldElement make_totally_positive(const FieldElement& x) const {
    FieldElement e = unit;
    for (const FieldElement& u : {FieldElement(1), FieldElement(-1), e, -e}) {
      FieldElement y = mul(x, u);
      if (totally_positive(y)) return y;
    }
    throw Error("basefield", "no totally positive generator (narrow class number > 1)");
  }

  FieldElement find_generator(const Int& p, const Int& r) const {
    // search a + b omega of norm +-p with a + b r = 0 mod p, increasing height
    for (Int h = 1;; ++h)
      for (Int a = -h; a <= h; ++a)
        for (Int b = -h; b <= h; ++b) {
          if (abs(a) != h && abs(b) != h) continue;
          FieldElement x{Rat(a), Rat(b)};
          if (abs(Int(norm(x).get_num())) != p) continue;
          if (mod(a + b * r, p) != 0) continue;
          return make_totally_positive(x);
        }
  }

  friend TotallyRealField make_field(int D);
};

/// Number of proper classes of primitive forms of positive non-square discriminant disc
/// (cycles of reduced indefinite forms under the rho operator).
inline int narrow_form_class_number(const Int& disc) {
  Int s = isqrt(disc);
  using F3 = std::array<Int, 3>;
  std::set<F3> reduced;
  for (Int b = 1; b <= s; ++b) {
    if (mod(b - disc, 2) != 0) continue;
    Int ac = (b * b - disc) / 4;  // = a*c < 0
    for (Int a = 1; 2 * a <= s + b; ++a) {
      if (2 * a < s - b + 1) continue;
      if (ac % a != 0) continue;
      Int c = ac / a;
      for (int sg : {1, -1}) {
        Int A = a * sg, C = c * sg;
        if (gcd(gcd(A, b), C) != 1) continue;
        reduced.insert({A, b, C});
      }
    }
  }
  auto rho = [&](const F3& f) {
    const Int &c = f[2], b = f[1];
    Int ac2 = 2 * abs(c);
    // r = -b mod 2c with s - 2|c| < r <= s
    Int r = mod(-b, ac2);
    Int lo = s - ac2 + 1;
    r = r + ac2 * ceil_div(lo - r, ac2);
    return F3{c, r, (r * r - disc) / (4 * c)};
  };
  std::set<F3> seen;
  int cycles = 0;
  for (auto& f : reduced) {
    if (seen.count(f)) continue;
    ++cycles;
    F3 g = f;
    while (!seen.count(g)) {
      if (!reduced.count(g)) throw Error("basefield", "rho left the reduced set");
      seen.insert(g);
      g = rho(g);
    }
  }
  return cycles;
}

inline Rat siegel_zeta_minus_one(const Int& disc) {
  Int total = 0;
  for (Int b = -isqrt(disc); b * b < disc; ++b) {
    if (mod(b - disc, 2) != 0) continue;
    total += sigma1((disc - b * b) / 4);
  }
  return frac(total, 60);
}

inline TotallyRealField make_field(int D) {
  TotallyRealField F;
  if (D < 1) throw Error("field", "field.D must be >= 1");
  F.D = D;
  if (D == 1) {
    F.degree = 1;
    F.disc = 1;
    F.zeta_m1 = Rat(1, 12);
    F.unit = FieldElement(-1);
    return F;
  }
  if (!is_squarefree(D) || is_square(D)) throw Error("field", "field.D must be squarefree");
  F.degree = 2;
  if (D % 4 == 1) {
    F.disc = D;
    F.t = 1;
    F.n = (1 - D) / 4;
  } else {
    F.disc = 4 * D;
    F.t = 0;
    F.n = -D;
  }
  // fundamental unit (x + y sqrt(disc))/2 with x^2 - disc y^2 = +-4, smallest y > 0
  for (Int y = 1;; ++y) {
    for (int s : {-4, 4}) {
      Int x2 = F.disc * y * y + s;
      if (!is_square(x2)) continue;
      Int x = isqrt(x2);
      // (x + y sqrt(disc))/2 in basis {1, omega}
      if (F.t == 1) {
        // sqrt(disc) = 2 omega - 1
        F.unit = FieldElement(frac(x - y, 2), Rat(y));
      } else {
        // sqrt(disc) = 2 sqrt(D) = 2 omega
        F.unit = FieldElement(frac(x, 2), Rat(y));
      }
      goto found;
    }
  }
found:
  F.narrow_class_number = narrow_form_class_number(F.disc);
  F.class_number = F.norm(F.unit) == -1 ? F.narrow_class_number : F.narrow_class_number / 2;
  if (F.narrow_class_number != 1)
    throw Error("field", "narrow class number of Q(sqrt " + std::to_string(D) + ") is " +
                             std::to_string(F.narrow_class_number) + " (must be 1)");
  F.zeta_m1 = siegel_zeta_minus_one(F.disc);
  return F;
}

inline Rat zeta_minus_one(const TotallyRealField& F) { return F.zeta_m1; }

}  // namespace heegner
