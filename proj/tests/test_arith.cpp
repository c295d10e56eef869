#include <gtest/gtest.h>

#include <random>

#include "heegner/enumerate.hpp"
#include "heegner/lattice.hpp"

using namespace heegner;

TEST(Arith, SqrtModPrimePower) {
  for (int p : {3, 5, 7, 11, 13}) {
    for (int a = 1; a < p; ++a) {
      if (kronecker(a * a, p) != 1) continue;
      Int r = sqrt_mod_prime_power(a * a + 7 * p, p, 5);
      Int m = pow(Int(p), 5);
      EXPECT_EQ(mod(r * r - (a * a + 7 * p), m), 0);
      EXPECT_LE(mod(r, p), Int(p / 2));
    }
  }
  // -143 is a square mod 7^6
  Int r = sqrt_mod_prime_power(-143, 7, 6);
  EXPECT_EQ(mod(r * r + 143, pow(Int(7), 6)), 0);
}

TEST(Arith, FactorAndValuation) {
  auto f = factor(12);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].first, 2);
  EXPECT_EQ(f[0].second, 2);
  EXPECT_EQ(valuation(Rat(49, 6), Int(7)), 2);
  EXPECT_EQ(sigma1(12), 28);
}

TEST(Linalg, SmithTransformsReproduceDiagonal) {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 40; ++it) {
    size_t r = 2 + rng() % 4, c = 2 + rng() % 5;
    IMat a(r, IVec(c));
    for (auto& row : a)
      for (auto& x : row) x = int(rng() % 21) - 10;
    Smith s = smith(a);
    IMat d = mul(mul(s.u, a), s.v);
    for (size_t i = 0; i < r; ++i)
      for (size_t j = 0; j < c; ++j) EXPECT_EQ(d[i][j], (i == j ? s.d[i] : Int(0)));
    for (size_t i = 0; i + 1 < s.d.size(); ++i)
      if (s.d[i] != 0) {
        EXPECT_EQ(s.d[i + 1] % s.d[i], 0);
      }
    EXPECT_EQ(abs(det(s.u)), 1);
    EXPECT_EQ(abs(det(s.v)), 1);
  }
}

TEST(Lattice, IntersectionAgreesWithMembership) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 30; ++it) {
    QMat g1, g2;
    for (int i = 0; i < 3; ++i) {
      QVec a(3), b(3);
      for (int j = 0; j < 3; ++j) {
        a[j] = Rat(int(rng() % 13) - 6, 1 + rng() % 3);
        b[j] = Rat(int(rng() % 13) - 6, 1 + rng() % 2);
        a[j].canonicalize();
        b[j].canonicalize();
      }
      g1.push_back(a);
      g2.push_back(b);
    }
    Lattice A = Lattice::from_rows(g1, 3), B = Lattice::from_rows(g2, 3);
    if (A.rank() < 3 || B.rank() < 3) continue;
    Lattice C = A.intersect(B), S = A + B;
    EXPECT_TRUE(A.contains(C));
    EXPECT_TRUE(B.contains(C));
    EXPECT_TRUE(S.contains(A));
    EXPECT_TRUE(S.contains(B));
    // index identity [S:A][A:C] = [S:B][B:C]... and [S:B] = [A:C]
    EXPECT_EQ(B.index_in(S), C.index_in(A));
    // membership oracle on a small box
    for (int x = -2; x <= 2; ++x)
      for (int y = -2; y <= 2; ++y)
        for (int z = -2; z <= 2; ++z) {
          QVec v = {Rat(x, 2), Rat(y, 3), Rat(z)};
          for (auto& e : v) e.canonicalize();
          EXPECT_EQ(C.contains(v), A.contains(v) && B.contains(v));
        }
  }
}

TEST(Enumerate, MatchesBoxSearch) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 25; ++it) {
    // random positive-definite Gram via B B^T
    size_t n = 2 + it % 3;
    IMat b(n, IVec(n));
    for (auto& r : b)
      for (auto& x : r) x = int(rng() % 7) - 3;
    for (size_t i = 0; i < n; ++i) b[i][i] += 4;
    if (det(b) == 0) continue;
    IMat g = mul(b, transpose(b));
    Int bound = 40;
    auto vs = short_vectors(g, bound);
    std::set<IVec> got(vs.begin(), vs.end());
    EXPECT_EQ(got.size(), vs.size());
    std::set<IVec> want;
    IVec x(n);
    int R = 8;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == n) {
        bool z = true;
        for (auto& e : x)
          if (e != 0) z = false;
        if (!z && quad_value(g, x) <= bound) want.insert(x);
        return;
      }
      for (int v = -R; v <= R; ++v) {
        x[i] = v;
        rec(i + 1);
      }
    };
    rec(0);
    EXPECT_EQ(got, want);
  }
}
