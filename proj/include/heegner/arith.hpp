#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heegner {

using Int = mpz_class;
using Rat = mpq_class;

/// Error raised on violated preconditions; `kind` names the failed hypothesis.
struct Error : std::runtime_error {
  std::string kind;
  Error(std::string k, const std::string& what) : std::runtime_error(what), kind(std::move(k)) {}
};

/// Canonicalised fraction a/b.
inline Rat frac(const Int& a, const Int& b) {
  Rat q(a, b);
  q.canonicalize();
  return q;
}

inline Int floor_div(const Int& a, const Int& b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

inline Int ceil_div(const Int& a, const Int& b) {
  Int q;
  mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

/// Nonnegative residue of a modulo m (m > 0).
inline Int mod(const Int& a, const Int& m) {
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

inline Int gcd(const Int& a, const Int& b) {
  Int g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

inline Int lcm(const Int& a, const Int& b) {
  Int g;
  mpz_lcm(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

inline Int pow(const Int& a, unsigned long e) {
  Int r;
  mpz_pow_ui(r.get_mpz_t(), a.get_mpz_t(), e);
  return r;
}

inline Int powmod(const Int& a, const Int& e, const Int& m) {
  Int r;
  mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

/// Inverse of a modulo m; throws if not a unit.
inline Int invmod(const Int& a, const Int& m) {
  Int r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0)
    throw Error("arith", "invmod: " + a.get_str() + " not invertible mod " + m.get_str());
  return r;
}

inline Int isqrt(const Int& a) {
  Int r;
  mpz_sqrt(r.get_mpz_t(), a.get_mpz_t());
  return r;
}

inline bool is_square(const Int& a) { return a >= 0 && mpz_perfect_square_p(a.get_mpz_t()) != 0; }

inline Int floor(const Rat& q) { return floor_div(q.get_num(), q.get_den()); }
inline Int ceil(const Rat& q) { return ceil_div(q.get_num(), q.get_den()); }

/// Exponent of prime p in nonzero a.
inline int valuation(Int a, const Int& p) {
  if (a == 0) throw Error("arith", "valuation of zero");
  int v = 0;
  while (mpz_divisible_p(a.get_mpz_t(), p.get_mpz_t())) {
    a /= p;
    ++v;
  }
  return v;
}

/// Valuation of a nonzero rational.
inline int valuation(const Rat& a, const Int& p) {
  return valuation(Int(a.get_num()), p) - valuation(Int(a.get_den()), p);
}

/// Trial-division factorisation of |n| (n != 0), primes ascending.
inline std::vector<std::pair<Int, int>> factor(Int n) {
  if (n == 0) throw Error("arith", "factor of zero");
  if (n < 0) n = -n;
  std::vector<std::pair<Int, int>> out;
  for (Int p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    int e = 0;
    while (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) {
      n /= p;
      ++e;
    }
    if (e) out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

inline bool is_prime(const Int& n) { return n > 1 && mpz_probab_prime_p(n.get_mpz_t(), 40) > 0; }

inline bool is_squarefree(const Int& n) {
  for (auto& [p, e] : factor(n))
    if (e > 1) return false;
  return true;
}

inline int kronecker(const Int& a, const Int& n) { return mpz_kronecker(a.get_mpz_t(), n.get_mpz_t()); }

/// Square root of a modulo odd prime p (a must be a square); smallest root in [0, p).
inline Int sqrt_mod_prime(const Int& a0, const Int& p) {
  Int a = mod(a0, p);
  if (a == 0) return 0;
  if (kronecker(a, p) != 1) throw Error("arith", "not a square mod " + p.get_str());
  // Tonelli-Shanks
  Int q = p - 1;
  int s = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++s;
  }
  Int z = 2;
  while (kronecker(z, p) != -1) ++z;
  Int c = powmod(z, q, p), r = powmod(a, (q + 1) / 2, p), t = powmod(a, q, p);
  int m = s;
  while (t != 1) {
    int i = 0;
    Int tt = t;
    while (tt != 1) {
      tt = tt * tt % p;
      ++i;
    }
    Int b = c;
    for (int j = 0; j < m - i - 1; ++j) b = b * b % p;
    r = r * b % p;
    c = b * b % p;
    t = t * c % p;
    m = i;
  }
  return r < p - r ? r : Int(p - r);
}

/// Hensel lift of a square root of a (a unit square mod odd p) to modulus p^t.
/// The residue mod p is chosen in [0, p/2].
inline Int sqrt_mod_prime_power(const Int& a, const Int& p, int t) {
  Int r = sqrt_mod_prime(a, p);
  if (r == 0) throw Error("arith", "square root of a non-unit");
  Int pk = p;
  for (int k = 1; k < t; ++k) {
    pk *= p;
    // r <- r - (r^2 - a) / (2r)
    r = mod(r - (r * r - a) * invmod(2 * r, pk), pk);
  }
  return mod(r, pow(p, t));
}

inline Int sigma1(const Int& n) {
  Int s = 1;
  for (auto& [p, e] : factor(n)) {
    Int t = 1, pk = 1;
    for (int i = 0; i < e; ++i) {
      pk *= p;
      t += pk;
    }
    s *= t;
  }
  return s;
}

inline std::string to_string(const Rat& q) { return q.get_str(); }

}  // namespace heegner
