#include <gtest/gtest.h>

#include <random>

#include "heegner/points.hpp"

using namespace heegner;

namespace {

struct Tower {
  QuaternionAlgebra B;
  std::vector<PointContext> ctx;  // levels 0, 1, 2
};

Tower& tower() {
  static std::optional<Tower> T;
  if (!T) {
    auto K = make_cm(make_field(1), FieldElement(-3));
    auto B = make_algebra(K, FieldElement(-143));
    auto O = maximal_order(B);
    auto th = choose_theta(K, 7, 11);
    T.emplace(Tower{B, {}});
    for (int m = 0; m <= 2; ++m) {
      auto E = standard_eichler_order(B, O, th, 1, 7, m);
      auto cs = right_ideal_classes(B, E.L, eichler_mass(B, level_exponents(1, 7, m)), traversal_prime(B, E.level()));
      T->ctx.push_back(make_point_context(B, E, cs));
    }
  }
  return *T;
}

PointContext& level(int m) { return tower().ctx[m]; }

PrimeIdeal prime(int q) { return tower().B.F().primes_above(q).front(); }

// brute-force square root in 1 + 7Z mod 7^m
Int sqrt_one_mod_p(const Int& x, long p, int m) {
  Int pm = pow(Int(p), m);
  for (Int r = 1; r < pm; ++r)
    if (mod(r - 1, p) == 0 && mod(r * r - x, pm) == 0) return r;
  return -1;
}

}  // namespace

TEST(Points, BComponents) {
  auto& C = level(1);
  const auto& K = C.B.K;
  auto g = b_component(BCase::Generic, K, C.theta, C.Sp.R, 1);
  EXPECT_EQ(g.G, C.Sp.R.identity());
  // p = 7 splits in Q(sqrt -3): [[r, -1], [1, 0]] diag(7, 1) with r^2 - Tr r + N = 0
  auto b = b_component(BCase::PSplit, K, C.theta, C.Sp.R, 1);
  EXPECT_EQ(b.G.b, mod(Int(-1), C.Sp.R.m));
  EXPECT_EQ(b.G.c, 7);
  EXPECT_EQ(b.G.d, 0);
  Int root = b.G.a / 7;
  EXPECT_EQ(mod(root * root + 3, C.Sp.R.m / 7), 0);
  EXPECT_THROW(b_component(BCase::PInert, K, C.theta, C.Sp.R, 1), Error);
  auto c = b_component(BCase::C, K, C.theta, C.split_at(2).R, 1);
  EXPECT_EQ(c.shift, 1);
  EXPECT_EQ(c.G, (Mat2{1, 0, 0, 2}));
}

TEST(Points, HeegnerPointsAreOptimalAtTheirConductor) {
  for (int m : {1, 2})
    for (int c : {1, 2, 5})
      for (int n : {0, 1}) {
        auto& C = level(m);
        GrossPoint P = heegner_point(C, c, n);
        Int cond = c * pow(Int(7), n + m);
        // phi(theta) satisfies x^2 + 3 = 0
        EXPECT_EQ(C.B.trd(P.phi), FieldElement(0));
        EXPECT_EQ(C.B.nrd(P.phi), FieldElement(3));
        EXPECT_TRUE(is_optimal(C, P, cond)) << c << " " << n << " " << m;
        for (auto& [q, e] : factor(cond)) EXPECT_FALSE(is_optimal(C, P, cond / q));
        EXPECT_TRUE(p_level_condition(C, P, n + m));
      }
}

TEST(Points, LevelConditionFailsBelowTheLevel) {
  auto& C = level(2);
  for (int s : {0, 1}) {
    GrossPoint P = heegner_point_exponent(C, 1, s);
    EXPECT_TRUE(is_optimal(C, P, pow(Int(7), s)));
    EXPECT_FALSE(p_level_condition(C, P, s));
  }
  EXPECT_TRUE(p_level_condition(level(0), GrossPoint{}, 0));
}

TEST(Points, ThetaCharacter) {
  EXPECT_EQ(theta_character(43, 7, 2), 22);
  EXPECT_EQ(theta_character(1, 7, 2), 1);
  for (int m : {1, 2, 3}) {
    Int pm = pow(Int(7), m);
    for (Int a = 1; a < pm; a += 7) {
      EXPECT_EQ(theta_character(a * a, 7, m), a);
      EXPECT_EQ(theta_character(a, 7, m), sqrt_one_mod_p(a, 7, m));
    }
  }
  EXPECT_THROW(theta_character(3, 7, 2), Error);
}

TEST(Points, NormalizationIsLeftInvariant) {
  auto& C = level(1);
  const auto& B = C.B;
  std::mt19937 rng(20261019);
  std::uniform_int_distribution<int> d(-3, 3);
  GrossPoint P = heegner_point(C, 2, 0);
  const Lattice& I = C.X.cs.ideals[P.k].L;
  for (int trial = 0; trial < 8; ++trial) {
    // gamma in B^x with nrd prime to 7
    QuatElement g;
    do {
      QVec v(B.dim());
      for (auto& x : v) x = Rat(d(rng));
      g = B.from_vec(v);
    } while (B.nrd(g) == FieldElement(0) || Int(B.nrd(g).a.get_num()) % 7 == 0);
    Lattice J = left_mul(B, g, I);
    QuatElement phi = B.conjugate_by(g, P.phi);
    GrossPoint Q = normalize_point(C, J, phi, [&](size_t k, const QuatElement& beta) -> Int {
      QuatElement y = B.mul(B.mul(B.mul(B.inv(C.X.gamma[k]), B.inv(beta)), g), C.X.gamma[P.k]);
      return mod(detail::orientation_of(C, y, C.Sp.R.identity()) * P.o, C.pm);
    });
    EXPECT_EQ(Q, P);
  }
}

TEST(Points, EqualityModuloUnits) {
  auto& C = level(1);
  GrossPoint P = heegner_point(C, 1, 0);
  EXPECT_TRUE(points_equal(C, P, P));
  for (auto& [u, d] : C.units[P.k]) {
    GrossPoint Q{P.k, mod(d * P.o, C.pm), C.B.conjugate_by(u, P.phi)};
    EXPECT_TRUE(points_equal(C, P, Q));
  }
  // 3 generates (Z/7)^x
  EXPECT_FALSE(points_equal(C, P, diamond(C, 3, P)));
  EXPECT_EQ(diamond(C, 1, P), P);
}

TEST(Points, HeckeDegrees) {
  for (int m : {1, 2}) {
    auto& C = level(m);
    GrossPoint P = heegner_point(C, 1, 0);
    EXPECT_EQ(degree(hecke_U(C, P)), 7);
    for (int v : {2, 3, 5}) EXPECT_EQ(degree(hecke_T(C, prime(v), P)), v + 1);
  }
}

TEST(Points, GaloisActionAxiom) {
  auto& C = level(1);
  const auto& K = C.B.K;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(0, 48);
  GrossPoint P = heegner_point(C, 2, 0);
  for (int trial = 0; trial < 6; ++trial) {
    KElement x, y;
    do x = K.from_omega(d(rng), d(rng));
    while (Int(K.norm(x).a.get_num()) % 7 == 0);
    do y = K.from_omega(d(rng), d(rng));
    while (Int(K.norm(y).a.get_num()) % 7 == 0);
    EXPECT_EQ(galois_act_local(C, x, 7, galois_act_local(C, y, 7, P)), galois_act_local(C, K.mul(x, y), 7, P));
  }
  EXPECT_EQ(galois_act_local(C, K.from_omega(1, 0), 7, P), P);
}

TEST(Points, ClassGroupOrbit) {
  auto& C = level(1);
  const auto& K = C.B.K;
  GrossPoint P = heegner_point(C, 1, 0);
  auto G = picard_group(K, order_of_conductor(K, 7), 7 * 11);
  ASSERT_EQ(G.cardinality(), 2u);
  ASSERT_EQ(G.generators.size(), 1u);
  KLattice a = form_to_lattice(K, G.generators[0]);
  GrossPoint Q = galois_act(C, a, P);
  EXPECT_FALSE(points_equal(C, P, Q));
  // a^2 is principal in O_7, so the square acts through the ray part
  GrossPoint R = galois_act(C, a, Q);
  bool found = false;
  for (Int t = 1; t < 7; ++t) found = found || points_equal(C, R, diamond(C, t, P));
  EXPECT_TRUE(found);
}

TEST(Points, HeckeCommutesWithGalois) {
  auto& C = level(1);
  const auto& K = C.B.K;
  GrossPoint P = heegner_point(C, 1, 0);
  KElement x = K.from_omega(3, 2);
  auto act = [&](const GrossPoint& Q) { return PointDivisor{{galois_act_local(C, x, 7, Q), 1}}; };
  for (int v : {2, 5}) {
    PointDivisor a = hecke_T(C, prime(v), galois_act_local(C, x, 7, P));
    PointDivisor b = map_divisor(hecke_T(C, prime(v), P), act);
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(hecke_U(C, galois_act_local(C, x, 7, P)), map_divisor(hecke_U(C, P), act));
}

TEST(Points, ProjectionCommutesWithDiamonds) {
  auto& C = level(2);
  auto& C0 = level(1);
  GrossPoint P = heegner_point(C, 1, 0);
  for (Int a : {Int(3), Int(8), Int(10)})
    EXPECT_EQ(project_alpha(C, C0, diamond(C, a, P)), diamond(C0, a, project_alpha(C, C0, P)));
}

TEST(Points, HorizontalCompatibilityUp) {
  for (int m : {1, 2})
    for (int c : {1, 2}) {
      auto rep = verify_horizontal_p(level(m), c, 1);
      EXPECT_TRUE(rep.ok()) << "c=" << c << " m=" << m;
    }
}

TEST(Points, HorizontalCompatibilityTv) {
  for (auto [c, v] : std::vector<std::pair<int, int>>{{1, 2}, {1, 5}, {2, 5}})
    EXPECT_TRUE(verify_horizontal_v(level(1), c, v).ok()) << c << " " << v;
  EXPECT_THROW(verify_horizontal_v(level(1), 2, 2), Error);
  EXPECT_THROW(verify_horizontal_v(level(1), 1, 13), Error);
}

TEST(Points, VerticalCompatibility) {
  for (int c : {1, 2}) EXPECT_TRUE(verify_vertical(level(1), level(2), c).ok()) << c;
  EXPECT_THROW(verify_vertical(level(0), level(1), 1), Error);
}

TEST(Points, GaloisCompatibility) {
  for (int m : {1, 2}) {
    auto rep = verify_galois_compat(level(m), 1);
    EXPECT_TRUE(rep.ok()) << m;
    EXPECT_EQ(rep.checks.size(), 4u);
  }
}

TEST(Points, PerturbedThetaBreaksGaloisCompatibility) {
  auto& C = level(2);
  GrossPoint P = heegner_point(C, 1, 0);
  // x = 8 has theta = 8; using theta = 8 * 8 instead must fail
  GrossPoint lhs = galois_act_local(C, C.B.K.from_omega(8, 0), 7, P);
  EXPECT_TRUE(points_equal(C, lhs, diamond(C, 8, P)));
  EXPECT_FALSE(points_equal(C, lhs, diamond(C, 64, P)));
}
