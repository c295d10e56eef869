#include <gtest/gtest.h>

#include <random>

#include "heegner/theta.hpp"

using namespace heegner;

namespace {

struct Setup {
  QuaternionAlgebra B;
  std::vector<PointContext> ctx;  // depth 1, 2
  std::vector<ThetaTower> tw;
  std::vector<ThetaElement> theta;  // n = 0, 1, 2 at depth 1
};

Setup& setup() {
  static std::optional<Setup> S;
  if (!S) {
    auto K = make_cm(make_field(1), FieldElement(-3));
    auto B = make_algebra(K, FieldElement(-143));
    auto O = maximal_order(B);
    auto th = choose_theta(K, 7, 11);
    S.emplace(Setup{B, {}, {}, {}});
    S->ctx.reserve(2);
    for (int m : {1, 2}) {
      auto E = standard_eichler_order(B, O, th, 1, 7, m);
      auto cs = right_ideal_classes(B, E.L, eichler_mass(B, level_exponents(1, 7, m)), traversal_prime(B, E.level()));
      S->ctx.push_back(make_point_context(B, E, cs));
    }
    for (auto& C : S->ctx) S->tw.push_back(make_theta_tower(C, 4, {{2, -2}, {3, -1}, {5, 1}}));
    for (int n = 0; n <= 2; ++n) S->theta.push_back(theta_element(S->tw[0], n));
  }
  return *S;
}

ThetaTower& depth(int M) { return setup().tw[M - 1]; }

GroupRingElement random_element(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> d(0, 2400);
  GroupRingElement a = group_ring_zero(7, n, 2401);
  for (auto& x : a.c) x = d(rng);
  return a;
}

}  // namespace

TEST(GroupRing, RingAxioms) {
  std::mt19937 rng(20261019);
  for (int n : {0, 1, 2})
    for (int trial = 0; trial < 5; ++trial) {
      auto a = random_element(rng, n), b = random_element(rng, n), c = random_element(rng, n);
      EXPECT_EQ(a * b, b * a);
      EXPECT_EQ((a * b) * c, a * (b * c));
      EXPECT_EQ(star(star(a)), a);
      EXPECT_EQ(star(a * b), star(a) * star(b));
      EXPECT_EQ(augmentation(a * b), mod(augmentation(a) * augmentation(b), Int(2401)));
      if (n > 0) {
        EXPECT_EQ(project(a * b), project(a) * project(b));
        EXPECT_EQ(augmentation(project(a)), augmentation(a));
      }
    }
  EXPECT_THROW(project(group_ring_zero(7, 0, 49)), Error);
}

TEST(GroupRing, SpecializationIsMultiplicative) {
  std::mt19937 rng(11);
  for (int n : {1, 2})
    for (int trial = 0; trial < 4; ++trial) {
      auto a = random_element(rng, n), b = random_element(rng, n);
      for (int s : {0, 1, 3, 7, 10}) {
        if (s >= int(a.size())) continue;
        EXPECT_EQ(specialize_character(a * b, s), specialize_character(a, s) * specialize_character(b, s)) << n << " " << s;
      }
      EXPECT_EQ(specialize_character(a, 0).c[0], augmentation(a));
    }
}

TEST(GroupRing, CyclotomicReduction) {
  // 1 + x + ... + x^6 = 0 in (Z/49)[x]/Phi_7
  auto z = cyclo_reduce(7, 1, 49, IVec(7, Int(1)));
  EXPECT_EQ(z.c, IVec(6, Int(0)));
  // x^7 is not reduced by Phi_49 alone; x^42 = -(1 + x^7 + ... + x^35)
  IVec a(43, Int(0));
  a[42] = 1;
  auto r = cyclo_reduce(7, 2, 49, a);
  ASSERT_EQ(r.c.size(), 42u);
  for (size_t i = 0; i < 42; ++i) EXPECT_EQ(r.c[i], (i % 7 == 0) ? Int(48) : Int(0)) << i;
}

TEST(Theta, LocalUnitRepresentatives) {
  const auto& K = setup().B.K;
  for (int t : {1, 2, 3}) {
    Int pt = pow(Int(7), t);
    // omega -> r, r' roots of x^2 - x + 1 mod 7^t; x -> x(r)/x(r') is a bijection onto (Z/7^t)^x
    std::vector<Int> roots;
    for (Int r = 0; r < pt; ++r)
      if (mod(r * r - r + 1, pt) == 0) roots.push_back(r);
    ASSERT_EQ(roots.size(), 2u);
    auto reps = p_unit_reps(K, 7, t);
    EXPECT_EQ(Int(reps.size()), pt - pt / 7);
    std::set<Int> ratios;
    for (auto& x : reps) {
      auto [a, b] = K.omega_coords(x);
      Int u = mod(Int(a.get_num()) + Int(b.get_num()) * roots[0], pt);
      Int w = mod(Int(a.get_num()) + Int(b.get_num()) * roots[1], pt);
      ratios.insert(mod(u * invmod(w, pt), pt));
    }
    EXPECT_EQ(ratios.size(), reps.size()) << t;
  }
}

TEST(Theta, OrdinaryModule) {
  auto& Tw = depth(1);
  EXPECT_EQ(Tw.P.rank, 6u);
  EXPECT_NE(mod(Tw.ef.alpha, Int(7)), 0);
  // e_f is an eigenvector of U_p
  IVec u = row_times(Tw.R, Tw.ef.ef, transpose(Tw.U));
  for (size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], mod(Tw.ef.alpha * Tw.ef.ef[i], Tw.R.m));
}

TEST(Theta, EulerRelations) {
  for (int M : {1, 2})
    for (int v : {2, 5}) {
      auto rep = verify_euler_relations(depth(M), 1, v);
      EXPECT_TRUE(rep.ok()) << M << " " << v;
      EXPECT_EQ(rep.checks.size(), 3u);
    }
  EXPECT_TRUE(verify_euler_relations(depth(1), 2, 5).ok());
  // 13 splits in Q(sqrt -3)
  EXPECT_THROW(verify_euler_relations(depth(1), 1, 13), Error);
  EXPECT_THROW(verify_euler_relations(depth(1), 2, 2), Error);
}

TEST(Theta, QDivisorOrbit) {
  auto Q = q_divisor(depth(1), 1);
  ASSERT_EQ(Q.size(), 7u);
  std::set<IVec> distinct(Q.begin(), Q.end());
  EXPECT_GT(distinct.size(), 1u);
}

TEST(Theta, Compatibility) {
  auto& th = setup().theta;
  EXPECT_TRUE(theta_compatibility(th[0], th[1]));
  EXPECT_TRUE(theta_compatibility(th[1], th[2]));
  EXPECT_FALSE(theta_compatibility(th[0], th[2]));
  EXPECT_NE(mod(th[0].theta.c[0], Int(7)), 0);
}

TEST(Theta, IndependentOfDepth) {
  EXPECT_EQ(theta_element(depth(2), 0).theta, setup().theta[0].theta);
}

TEST(Theta, WrongAlphaBreaksCompatibility) {
  ThetaTower Tw = depth(1);
  Tw.ef.alpha = mod(Tw.ef.alpha + 7, Tw.R.m);
  EXPECT_FALSE(theta_compatibility(setup().theta[0], theta_element(Tw, 1)));
}

TEST(Theta, TwoVariableL) {
  auto& th = setup().theta;
  for (int n : {1, 2}) {
    auto L = two_variable_L(th[n]);
    EXPECT_EQ(star(L.L), L.L);
    for (int s : {0, 1, 2, 7}) {
      if (s >= int(L.L.size())) continue;
      EXPECT_EQ(specialize_character(L.L, s),
                specialize_character(th[n].theta, s) * specialize_character(th[n].theta, -s));
    }
  }
  EXPECT_EQ(project(two_variable_L(th[2]).L), two_variable_L(th[1]).L);
}

TEST(Theta, GrossSumOracle) {
  auto& Tw = depth(1);
  // the global unit relating the tower to the oracle is fixed by c0 = 1, trivial character
  auto o1 = gross_sum_oracle(Tw, 1);
  Int t1 = tower_gross_sum(Tw, 1, false);
  ASSERT_NE(mod(o1.trivial, Int(7)), 0);
  Int unit = mod(t1 * invmod(o1.trivial, Tw.R.m), Tw.R.m);
  EXPECT_EQ(o1.orbit, 2u);
  EXPECT_EQ(t1, setup().theta[0].theta.c[0]);
  EXPECT_EQ(tower_gross_sum(Tw, 1, true), mod(unit * o1.quadratic, Tw.R.m));
  auto o2 = gross_sum_oracle(Tw, 2);
  EXPECT_EQ(o2.orbit, 6u);
  EXPECT_EQ(tower_gross_sum(Tw, 2, false), mod(unit * o2.trivial, Tw.R.m));
  EXPECT_EQ(tower_gross_sum(Tw, 2, true), mod(unit * o2.quadratic, Tw.R.m));
}
