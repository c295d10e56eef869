#pragma once

#include <map>

#include "basefield.hpp"
#include "linalg.hpp"

namespace heegner {

/// x + y*sqrt(delta) with x, y in F.
struct KElement {
  FieldElement x, y;
  KElement() = default;
  KElement(FieldElement a, FieldElement b = FieldElement()) : x(std::move(a)), y(std::move(b)) {}
  bool operator==(const KElement& o) const { return x == o.x && y == o.y; }
  bool operator!=(const KElement& o) const { return !(*this == o); }
  bool operator<(const KElement& o) const { return x != o.x ? x < o.x : y < o.y; }
  KElement operator+(const KElement& o) const { return {x + o.x, y + o.y}; }
  KElement operator-(const KElement& o) const { return {x - o.x, y - o.y}; }
  KElement operator-() const { return {-x, -y}; }
};

class CMExtension {
 public:
  TotallyRealField F;
  FieldElement delta;
  // F = Q data
  Int dK = 0;       // discriminant of O_K
  bool omega_half;  // omega = (1 + sqrt(delta))/2, else omega = sqrt(delta)
  std::vector<PrimeIdeal> ramified;  // primes dividing d_{K/F}

  KElement mul(const KElement& a, const KElement& b) const {
    return {F.mul(a.x, b.x) + F.mul(delta, F.mul(a.y, b.y)), F.mul(a.x, b.y) + F.mul(a.y, b.x)};
  }
  KElement conj(const KElement& a) const { return {a.x, -a.y}; }
  FieldElement norm(const KElement& a) const { return F.mul(a.x, a.x) - F.mul(delta, F.mul(a.y, a.y)); }
  FieldElement trace(const KElement& a) const { return a.x * Rat(2); }
  KElement inv(const KElement& a) const {
    FieldElement n = F.inv(norm(a));
    return {F.mul(a.x, n), -F.mul(a.y, n)};
  }
  KElement scale(const KElement& a, const FieldElement& s) const { return {F.mul(a.x, s), F.mul(a.y, s)}; }

  // --- F = Q helpers: coordinates in the basis {1, omega} of O_K ---
  KElement omega() const {
    if (omega_half) return {FieldElement(Rat(1, 2)), FieldElement(Rat(1, 2))};
    return {FieldElement(0), FieldElement(1)};
  }
  KElement from_omega(const Int& a, const Int& b) const {
    KElement w = omega();
    return {FieldElement(Rat(a)) + w.x * Rat(b), w.y * Rat(b)};
  }
  /// Rational coordinates (a, b) with z = a + b*omega.
  std::pair<Rat, Rat> omega_coords(const KElement& z) const {
    Rat b = omega_half ? 2 * z.y.a : z.y.a;
    Rat a = omega_half ? z.x.a - b / 2 : z.x.a;
    return {a, b};
  }
  bool is_integral(const KElement& z) const {
    auto [a, b] = omega_coords(z);
    return a.get_den() == 1 && b.get_den() == 1;
  }
  /// omega^2 = tK*omega - nK.
  Int tK() const { return omega_half ? 1 : 0; }
  Int nK() const { return omega_half ? Int((1 - Int(delta.a.get_num())) / 4) : Int(-Int(delta.a.get_num())); }

  /// Splitting symbol (K/v): +1 split, -1 inert, 0 ramified.
  int splitting(const PrimeIdeal& v) const {
    if (F.degree == 1) return kronecker(dK, v.p);
    int e = F.valuation(delta, v);
    if (e % 2 != 0) return 0;
    FieldElement u = F.div(delta, F.pow(v.gen, e));
    if (v.p != 2) return F.res_legendre(F.reduce(u, v), v);
    FieldElement four_pi = F.mul(FieldElement(4), v.gen);
    if (F.is_square_mod(u, four_pi)) return 1;
    if (F.is_square_mod(u, FieldElement(4))) return -1;
    return 0;
  }
  int splitting(const Int& p) const { return splitting(F.primes_above(p).front()); }

  /// Roots of unity of K (F = Q), as elements.
  std::vector<KElement> roots_of_unity() const {
    std::vector<KElement> mu;
    for (Int a = -2; a <= 2; ++a)
      for (Int b = -2; b <= 2; ++b) {
        KElement z = from_omega(a, b);
        if (norm(z) == FieldElement(1)) mu.push_back(z);
      }
    return mu;
  }
};

inline CMExtension make_cm(const TotallyRealField& F, const FieldElement& delta) {
  CMExtension K;
  K.F = F;
  K.delta = delta;
  if (!F.totally_negative(delta)) throw Error("cm", "cm.delta must be totally negative");
  if (!delta.is_integral()) throw Error("cm", "cm.delta must be integral");
  if (F.degree == 1) {
    Int d = delta.a.get_num();
    if (!is_squarefree(d)) throw Error("cm", "cm.delta must be squarefree over Q");
    K.omega_half = mod(d, 4) == 1;
    K.dK = K.omega_half ? d : Int(4 * d);
    for (auto& [p, e] : factor(K.dK)) K.ramified.push_back(F.primes_above(p).front());
  } else {
    K.omega_half = false;
    Int N = abs(Int(F.norm(delta).get_num()));
    std::set<Int> cand = {2};
    for (auto& [p, e] : factor(N)) cand.insert(p);
    for (auto& p : cand)
      for (auto& v : F.primes_above(p))
        if (K.splitting(v) == 0) K.ramified.push_back(v);
  }
  return K;
}

/// Coprimality of d_{K/F} with an integer n (F = Q) or with the primes of F above it.
inline bool disc_coprime(const CMExtension& K, const Int& n) {
  for (auto& v : K.ramified)
    if (n % v.p == 0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Orders of conductor c and binary quadratic forms (F = Q)

struct QuadOrder {
  Int c;
  Int disc;        // dK * c^2
  int unit_index;  // [O_K^x : O_c^x]
  std::vector<KElement> units;  // roots of unity in O_c
};

inline QuadOrder order_of_conductor(const CMExtension& K, const Int& c) {
  if (c <= 0) throw Error("cm", "conductor must be positive");
  QuadOrder O{c, K.dK * c * c, 1, {}};
  auto mu = K.roots_of_unity();
  for (auto& z : mu) {
    auto [a, b] = K.omega_coords(z);
    if (Int(b.get_num()) % c == 0) O.units.push_back(z);
  }
  O.unit_index = int(mu.size() / O.units.size());
  return O;
}

struct Form {
  Int a, b, c;
  bool operator==(const Form& o) const { return a == o.a && b == o.b && c == o.c; }
  bool operator<(const Form& o) const {
    return a != o.a ? a < o.a : (b != o.b ? b < o.b : c < o.c);
  }
  Int disc() const { return b * b - 4 * a * c; }
};

/// Reduction of a positive-definite form.
inline Form reduce(Form f) {
  while (true) {
    if (f.b > f.a || f.b <= -f.a) {
      // translate b into (-a, a]
      Int k = floor_div(f.a - f.b, 2 * f.a);
      Int nb = f.b + 2 * k * f.a;
      f.c = f.a * k * k + f.b * k + f.c;
      f.b = nb;
    }
    if (f.a > f.c) {
      std::swap(f.a, f.c);
      f.b = -f.b;
      continue;
    }
    if (f.a == f.c && f.b < 0) f.b = -f.b;
    return f;
  }
}

/// Composition of primitive forms of equal discriminant (Shanks), followed by reduction.
inline Form compose(Form f1, Form f2) {
  Int D = f1.disc();
  if (f1.a > f2.a) std::swap(f1, f2);
  Int s = (f1.b + f2.b) / 2, n = f2.b - s;
  Int d, u, v, y1;
  if (f2.a % f1.a == 0) {
    y1 = 0;
    d = f1.a;
  } else {
    mpz_gcdext(d.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), f2.a.get_mpz_t(), f1.a.get_mpz_t());
    y1 = u;
  }
  Int d1, x2, y2;
  if (s % d == 0) {
    y2 = -1;
    x2 = 0;
    d1 = d;
  } else {
    mpz_gcdext(d1.get_mpz_t(), x2.get_mpz_t(), y2.get_mpz_t(), s.get_mpz_t(), d.get_mpz_t());
    y2 = -y2;
  }
  Int v1 = f1.a / d1, v2 = f2.a / d1;
  Int r = mod(y1 * y2 * n - x2 * f2.c, v1);
  Int b3 = f2.b + 2 * v2 * r, a3 = v1 * v2;
  Int c3 = (b3 * b3 - D) / (4 * a3);
  return reduce(Form{a3, b3, c3});
}

inline Form identity_form(const Int& D) {
  Int b = mod(D, 2);
  return reduce(Form{1, b, (b * b - D) / 4});
}

inline Form inverse_form(const Form& f) { return reduce(Form{f.a, -f.b, f.c}); }

/// All reduced primitive forms of negative discriminant D.
inline std::vector<Form> reduced_forms(const Int& D) {
  std::vector<Form> out;
  for (Int a = 1; 3 * a * a <= -D; ++a)
    for (Int b = -a + 1; b <= a; ++b) {
      Int num = b * b - D;
      if (mod(num, 4 * a) != 0) continue;
      Int c = num / (4 * a);
      if (c < a || (c == a && b < 0)) continue;
      if (gcd(gcd(a, b), c) != 1) continue;
      out.push_back({a, b, c});
    }
  return out;
}

inline Int dedekind_cardinality(const CMExtension& K, const QuadOrder& O, const Int& hK) {
  Rat v = Rat(hK * O.c);
  for (auto& [l, e] : factor(O.c)) v *= Rat(1) - frac(kronecker(K.dK, l), l);
  v /= O.unit_index;
  if (v.get_den() != 1) throw Error("cm", "Dedekind formula not integral");
  return v.get_num();
}

struct PicardGroup {
  Int disc;
  std::vector<Form> elements;          // all reduced forms, sorted
  std::vector<Form> generators;        // representative forms with coprime leading coefficient
  std::vector<Int> invariants;         // Smith invariants (> 1)
  IMat relations;                      // relation matrix on the generators
  size_t cardinality() const { return elements.size(); }
};

/// Form equivalent to f whose leading coefficient is coprime to m.
inline Form coprime_representative(const Form& f, const Int& m) {
  for (Int x = 0; x < 50; ++x)
    for (Int y = 0; y < 50; ++y) {
      if (gcd(x, y) != 1) continue;
      Int a = f.a * x * x + f.b * x * y + f.c * y * y;
      if (gcd(a, m) != 1) continue;
      // complete (x, y) to a matrix [[x, z],[y, w]] with xw - yz = 1
      Int g, w, mz;
      mpz_gcdext(g.get_mpz_t(), w.get_mpz_t(), mz.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
      Int z = -mz;
      Int b = 2 * f.a * x * z + f.b * (x * w + y * z) + 2 * f.c * y * w;
      Int c = f.a * z * z + f.b * z * w + f.c * w * w;
      return Form{a, b, c};
    }
  throw Error("cm", "no coprime representative found");
}

inline PicardGroup picard_group(const CMExtension& K, const QuadOrder& O, const Int& level = 1) {
  if (K.F.degree != 1) throw Error("cm", "class-group backend required for d = 2 (cm.classgroup_file)");
  PicardGroup G;
  G.disc = O.disc;
  G.elements = reduced_forms(O.disc);
  std::sort(G.elements.begin(), G.elements.end());
  // greedy generators with discrete-log table of the generated subgroup
  std::map<Form, std::vector<Int>> table;
  Form e = identity_form(O.disc);
  table[e] = {};
  std::vector<Form> gens;
  std::vector<std::vector<Int>> rels;
  auto order_of = [&](const Form& f) {
    Int o = 1;
    Form g = f;
    while (!(g == e)) {
      g = compose(g, f);
      ++o;
    }
    return o;
  };
  while (table.size() < G.elements.size()) {
    // element of maximal order not yet in the subgroup
    Form best = e;
    Int bo = 0;
    for (auto& f : G.elements) {
      if (table.count(f)) continue;
      Int o = order_of(f);
      if (o > bo) {
        bo = o;
        best = f;
      }
    }
    size_t r = gens.size();
    gens.push_back(best);
    for (auto& [k, v] : table) v.resize(r + 1, 0);
    // smallest power landing in the current subgroup
    Form g = best;
    Int k = 1;
    while (!table.count(g)) {
      g = compose(g, best);
      ++k;
    }
    std::vector<Int> rel = table[g];
    for (auto& x : rel) x = -x;
    rel[r] = k;
    rels.push_back(rel);
    // extend table
    std::map<Form, std::vector<Int>> next = table;
    for (auto& [f, v] : table) {
      Form h = f;
      for (Int j = 1; j < k; ++j) {
        h = compose(h, best);
        auto w = v;
        w[r] = j;
        next.emplace(h, w);
      }
    }
    table = std::move(next);
  }
  size_t r = gens.size();
  IMat R(r, IVec(r, 0));
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < rels[i].size(); ++j) R[i][j] = rels[i][j];
  G.relations = R;
  if (r > 0) {
    Smith s = smith(R);
    for (auto& d : s.d)
      if (d > 1) G.invariants.push_back(d);
  }
  for (auto& f : gens) G.generators.push_back(coprime_representative(f, level * O.c));
  return G;
}

// ---------------------------------------------------------------------------
// Ideals of quadratic orders as lattices in K (F = Q); coordinates (x, y) of x + y sqrt(delta).

struct KLattice {
  KElement alpha, beta;  // Z-basis
};

/// Proper O_f-ideal a Z + (-b + sqrt(disc))/2 Z attached to a form of discriminant dK f^2.
inline KLattice form_to_lattice(const CMExtension& K, const Form& f) {
  Int D = f.disc();
  // sqrt(D) = s * sqrt(delta) with s = f (omega_half) or 2 f
  Int cond2 = D / K.dK;
  Int cond = isqrt(cond2);
  Rat s = K.omega_half ? Rat(cond) : Rat(2 * cond);
  KElement alpha{FieldElement(Rat(f.a)), FieldElement(0)};
  KElement beta{FieldElement(frac(-f.b, 2)), FieldElement(s / 2)};
  return {alpha, beta};
}

/// Reduced form of the lattice L regarded as an ideal of its multiplier ring of discriminant D.
inline Form lattice_to_form(const CMExtension& K, KLattice L, const Int& D) {
  // orientation: Im(conj(alpha) * beta) > 0
  KElement q = K.mul(K.conj(L.alpha), L.beta);
  if (q.y.a < 0) std::swap(L.alpha, L.beta);
  Rat na = K.norm(L.alpha).a, nb = K.norm(L.beta).a;
  Rat tr = 2 * K.mul(L.alpha, K.conj(L.beta)).x.a;
  // normalise by N(L): a c - b^2/4 = -D/4 scaled
  Rat disc = tr * tr - 4 * na * nb;  // = N(L)^2 * D
  Rat n2 = disc / Rat(D);
  // N(L) = sqrt(n2)
  Int num = isqrt(n2.get_num()), den = isqrt(n2.get_den());
  Rat N = frac(num, den);
  if (N * N != n2) throw Error("cm", "lattice_to_form: discriminant mismatch");
  Form f{Int(Rat(na / N).get_num()), Int(Rat(tr / N).get_num()), Int(Rat(nb / N).get_num())};
  if (Rat(na / N).get_den() != 1 || Rat(tr / N).get_den() != 1) throw Error("cm", "lattice_to_form: non-integral");
  return reduce(f);
}

/// Image of a class of Pic(O_c) in Pic(O_{c'}) for c' | c (extension of ideals).
inline Form extend_class(const CMExtension& K, const Form& f, const Int& c_to) {
  Form g = coprime_representative(f, f.disc());
  KLattice L = form_to_lattice(K, g);
  KElement w = K.scale(K.omega(), FieldElement(Rat(c_to)));
  // generators: alpha, beta, alpha*w, beta*w ; reduce to a Z-basis via HNF on (x, y)
  std::vector<KElement> gens = {L.alpha, L.beta, K.mul(L.alpha, w), K.mul(L.beta, w)};
  QMat rows;
  for (auto& z : gens) rows.push_back({z.x.a, z.y.a});
  Int d = common_den(rows);
  IMat ir;
  for (auto& r : rows) ir.push_back({Int(Rat(r[0] * d).get_num()), Int(Rat(r[1] * d).get_num())});
  IMat h = hnf(ir);
  KLattice M{{FieldElement(frac(h[0][0], d)), FieldElement(frac(h[0][1], d))},
             {FieldElement(frac(h[1][0], d)), FieldElement(frac(h[1][1], d))}};
  return lattice_to_form(K, M, K.dK * c_to * c_to);
}

// ---------------------------------------------------------------------------
// Anticyclotomic layers (F = Q, h_K = 1)

/// Arithmetic in O_K / p^e on omega-coordinates.
struct ResidueRingK {
  Int p, mod_;  // mod_ = p^e
  Int t, n;     // omega^2 = t omega - n
  using E = std::pair<Int, Int>;
  E mul(const E& x, const E& y) const {
    Int bd = x.second * y.second;
    return {heegner::mod(x.first * y.first - n * bd, mod_), heegner::mod(x.first * y.second + x.second * y.first + t * bd, mod_)};
  }
  E pow(E x, Int e) const {
    E r{1, 0};
    while (e > 0) {
      if (e % 2 == 1) r = mul(r, x);
      x = mul(x, x);
      e /= 2;
    }
    return r;
  }
  E conj(const E& x) const { return {heegner::mod(x.first + t * x.second, mod_), heegner::mod(-x.second, mod_)}; }
  Int norm(const E& x) const { return heegner::mod(x.first * x.first + t * x.first * x.second + n * x.second * x.second, mod_); }
};

struct AnticyclotomicLayer {
  int n = 0;
  int d = 0;                    // conductor exponent d(n)
  Int p;
  Int order;                    // |G_n| = p^n
  std::pair<Int, Int> gen_seed;  // y with psi(y) a topological generator

  /// Image in G_n = Z/p^n of a p-adic unit x (omega-coordinates, any integral lift).
  Int log(const CMExtension& K, const std::pair<Int, Int>& x) const {
    if (n == 0) return 0;
    ResidueRingK R{p, heegner::pow(p, n + 1), K.tK(), K.nK()};
    auto psi = [&](const std::pair<Int, Int>& z) {
      auto zz = std::make_pair(heegner::mod(z.first, R.mod_), heegner::mod(z.second, R.mod_));
      Int N = R.norm(zz);
      auto q = R.mul(R.mul(zz, zz), {invmod(N, R.mod_), 0});
      return R.pow(q, p * p - 1);
    };
    auto target = psi(x), g = psi(gen_seed);
    std::pair<Int, Int> h{1, 0};
    for (Int s = 0; s < order; ++s) {
      if (h == target) return s;
      h = R.mul(h, g);
    }
    throw Error("cm", "anticyclotomic log: element outside the generated group");
  }
};

inline AnticyclotomicLayer anticyclotomic_layer(const CMExtension& K, const Int& p, int n, const Int& hK = 1,
                                                int bound = 12) {
  AnticyclotomicLayer A;
  A.n = n;
  A.p = p;
  A.order = pow(p, n);
  if (n == 0) {
    A.d = 0;
    return A;
  }
  int t = 0;
  for (;; ++t) {
    if (t > bound) throw Error("cm", "anticyclotomic_layer: bound exceeded");
    QuadOrder O = order_of_conductor(K, pow(p, t));
    Int h = dedekind_cardinality(K, O, hK);
    if (h % A.order == 0) break;
  }
  A.d = t;
  // generator seed: psi(y) not congruent to 1 mod p^2
  ResidueRingK R{p, p * p, K.tK(), K.nK()};
  for (Int a = 0;; ++a) {
    std::pair<Int, Int> y{a, 1};
    if (R.norm({mod(a, R.mod_), 1}) % p == 0) continue;
    auto zz = std::make_pair(mod(a, R.mod_), Int(1));
    auto q = R.mul(R.mul(zz, zz), {invmod(R.norm(zz), R.mod_), 0});
    auto g = R.pow(q, p * p - 1);
    if (!(g == std::make_pair(Int(1), Int(0)))) {
      A.gen_seed = y;
      break;
    }
  }
  return A;
}

}  // namespace heegner
