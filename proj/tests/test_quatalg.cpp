#include <gtest/gtest.h>

#include <random>
#include <set>

#include "heegner/quatalg.hpp"

using namespace heegner;

namespace {

CMExtension eisenstein() { return make_cm(make_field(1), FieldElement(-3)); }
CMExtension gaussian() { return make_cm(make_field(1), FieldElement(-1)); }

// a x^2 + b y^2 = z^2 has a primitive solution mod p^k
int hilbert_oracle(long a, long b, long p) {
  long k = (p == 2) ? 6 : 3, m = 1;
  for (int t = 0; t < k; ++t) m *= p;
  std::vector<char> sq(m, 0);
  for (long z = 0; z < m; ++z) sq[(z * z) % m] = 1;
  for (long x = 0; x < m; ++x)
    for (long y = 0; y < m; ++y) {
      if (x % p == 0 && y % p == 0) continue;
      long r = ((a % m + m) % m * (x * x % m) + (b % m + m) % m * (y * y % m)) % m;
      if (sq[r]) return 1;
    }
  return -1;
}

KElement rand_k(std::mt19937_64& g, const CMExtension& K, int r) {
  std::uniform_int_distribution<int> d(-r, r);
  return K.from_omega(Int(d(g)), Int(d(g)));
}

QuatElement rand_q(std::mt19937_64& g, const CMExtension& K, int r) { return {rand_k(g, K, r), rand_k(g, K, r)}; }

}  // namespace

TEST(QuatAlg, HilbertSymbolMatchesLocalSolvability) {
  auto F = make_field(1);
  std::vector<long> vals = {-1, -2, -3, -5, -6, -7, -11, -13, 2, 3, 5, 7, 10, 11, 13, -143, 143, 6};
  for (long a : vals)
    for (long b : vals)
      for (long p : {2, 3, 5, 7, 11, 13}) {
        if (std::abs(a) > 20 && p > 7) continue;
        auto v = F.primes_above(p).front();
        EXPECT_EQ(hilbert_symbol(F, FieldElement(a), FieldElement(b), v), hilbert_oracle(a, b, p))
            << a << " " << b << " " << p;
      }
}

TEST(QuatAlg, ProductFormulaProperty) {
  std::mt19937_64 g(11);
  for (int D : {1, 17, 5, 13}) {
    auto F = make_field(D);
    std::uniform_int_distribution<int> d(-30, 30);
    for (int trial = 0; trial < 40; ++trial) {
      FieldElement a{Rat(d(g)), Rat(F.degree == 2 ? d(g) : 0)}, b{Rat(d(g)), Rat(F.degree == 2 ? d(g) : 0)};
      if (a.is_zero() || b.is_zero()) continue;
      // ramified_primes asserts the product formula internally
      EXPECT_NO_THROW(ramified_primes(F, a, b)) << D << " (" << a.a << "," << a.b << ") (" << b.a << "," << b.b << ")";
    }
  }
}

TEST(QuatAlg, Discriminants) {
  auto B = make_algebra(eisenstein(), FieldElement(-143));
  EXPECT_EQ(discriminant_norm(B), 11);
  auto H = make_algebra(gaussian(), FieldElement(-1));
  EXPECT_EQ(discriminant_norm(H), 2);
  auto F5 = make_field(5);
  auto H5 = make_algebra(make_cm(F5, FieldElement(-1)), FieldElement(-1));
  EXPECT_TRUE(H5.ramified.empty());
  EXPECT_THROW(make_algebra(eisenstein(), FieldElement(3)), Error);
}

TEST(QuatAlg, ChooseThetaAndBeta) {
  auto K = eisenstein();
  auto th = choose_theta(K, 7, 11);
  EXPECT_EQ(th, (KElement{FieldElement(0), FieldElement(1)}));
  auto G = gaussian();
  EXPECT_EQ(choose_theta(G, 5, 11), (KElement{FieldElement(1), FieldElement(1)}));

  auto beta = choose_beta(K, 1, 11, 7);
  EXPECT_EQ(beta, FieldElement(-143));
  // -11 is a non-square mod 7
  EXPECT_EQ(kronecker(-11, 7), -1);

  auto bG = choose_beta(G, 1, 11, 5);
  EXPECT_EQ(bG, FieldElement(-11));
  auto ram = ramified_primes(G.F, G.delta, bG);
  ASSERT_EQ(ram.size(), 1u);
  EXPECT_EQ(ram[0].p, 11);
  EXPECT_THROW(choose_beta(K, 1, 11 * 17, 7), Error);
}

TEST(QuatAlg, AlgebraIdentities) {
  auto K = eisenstein();
  auto B = make_algebra(K, FieldElement(-143));
  auto i = B.i(), j = B.j();
  EXPECT_EQ(B.mul(i, i), B.from_field(FieldElement(-3)));
  EXPECT_EQ(B.mul(j, j), B.from_field(FieldElement(-143)));
  EXPECT_EQ(B.mul(j, i), -B.mul(i, j));
  std::mt19937_64 g(5);
  for (int t = 0; t < 100; ++t) {
    auto a = rand_q(g, K, 9), b = rand_q(g, K, 9), c = rand_q(g, K, 9);
    EXPECT_EQ(B.nrd(B.mul(a, b)), B.F().mul(B.nrd(a), B.nrd(b)));
    EXPECT_EQ(B.trd(B.mul(a, b)), B.trd(B.mul(b, a)));
    EXPECT_EQ(B.mul(B.mul(a, b), c), B.mul(a, B.mul(b, c)));
    EXPECT_EQ(B.conj(B.mul(a, b)), B.mul(B.conj(b), B.conj(a)));
    EXPECT_EQ(B.from_vec(B.to_vec(a)), a);
    KElement z = rand_k(g, K, 9);
    EXPECT_EQ(B.mul(j, B.from_k(z)), B.mul(B.from_k(K.conj(z)), j));
    if (!(a == QuatElement{})) {
      EXPECT_EQ(B.mul(a, B.inv(a)), B.one());
    }
  }
}

TEST(QuatAlg, NormFormPositiveDefinite) {
  for (auto [D, delta, beta] : {std::tuple{1, -3, -143}, std::tuple{1, -1, -11}, std::tuple{5, -1, -1}}) {
    auto F = make_field(D);
    auto B = make_algebra(make_cm(F, FieldElement(delta)), FieldElement(beta));
    size_t n = B.dim();
    QMat G(n, QVec(n));
    auto basis = [&](size_t k) {
      QVec e(n, Rat(0));
      e[k] = 1;
      return B.from_vec(e);
    };
    auto q = [&](const QuatElement& x) { return F.trace(B.nrd(x)); };
    for (size_t r = 0; r < n; ++r)
      for (size_t c = 0; c < n; ++c) G[r][c] = (q(basis(r) + basis(c)) - q(basis(r)) - q(basis(c))) / 2;
    // leading principal minors positive
    for (size_t k = 1; k <= n; ++k) {
      QMat M(k, QVec(k));
      for (size_t r = 0; r < k; ++r)
        for (size_t c = 0; c < k; ++c) M[r][c] = G[r][c];
      EXPECT_GT(det(M), 0);
    }
  }
}

TEST(QuatAlg, LocalSplittingsAreHomomorphisms) {
  auto K = eisenstein();
  auto B = make_algebra(K, FieldElement(-143));
  auto th = choose_theta(K, 7, 11);
  std::vector<LocalSplitting> S = {theta_splitting(B, th, 7, 4), regular_splitting(B, 2, 5), regular_splitting(B, 5, 3),
                                   regular_splitting(B, 7, 3)};
  EXPECT_THROW(theta_splitting(B, th, 5, 3), Error);  // -143 = 2 mod 5 is not a square
  std::mt19937_64 g(17);
  for (auto& s : S) {
    const auto& R = s.R;
    auto T = s.image(B, B.from_k(s.xi));
    Int tr = Int(K.trace(s.xi).a.get_num()), nm = Int(K.norm(s.xi).a.get_num());
    EXPECT_EQ(R.add(R.add(R.mul(T, T), R.scal(-tr, T)), R.scal(nm, R.identity())), (Mat2{0, 0, 0, 0}));
    EXPECT_EQ(R.mul(s.J, s.J), R.scal(-143, R.identity()));
    for (int t = 0; t < 20; ++t) {
      auto a = rand_q(g, K, 6), b = rand_q(g, K, 6);
      auto ia = s.image(B, a), ib = s.image(B, b);
      EXPECT_EQ(s.image(B, B.mul(a, b)), R.mul(ia, ib));
      EXPECT_EQ(R.det(ia), R.to_local(B.nrd(a).a));
      EXPECT_EQ(R.trace(ia), R.to_local(B.trd(a).a));
    }
  }
}

TEST(QuatAlg, YMembershipAndConjugation) {
  auto K = eisenstein();
  auto B = make_algebra(K, FieldElement(-143));
  // x = (i + sqrt(delta)) j is nilpotent: u = ij, v = j
  EXPECT_TRUE(y_membership(B, B.mul(B.i(), B.j()), B.j()));
  EXPECT_FALSE(y_membership(B, B.i(), -B.one()));
  EXPECT_FALSE(y_membership(B, B.one(), QuatElement{}));
  EXPECT_FALSE(y_membership(B, B.j(), QuatElement{}));
  EXPECT_THROW(y_membership(B, QuatElement{}, QuatElement{}), Error);

  auto phi = canonical_embedding(B);
  EXPECT_EQ(conjugation_action(B, B.one(), phi), phi);
  EXPECT_EQ(conjugation_action(B, B.from_k(K.omega()), phi), phi);
  auto c = conjugation_action(B, B.j(), phi);
  EXPECT_EQ(c.s, -B.i());
  EXPECT_THROW(conjugation_action(B, QuatElement{}, phi), Error);
}
