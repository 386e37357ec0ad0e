#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "briques/frontier.hpp"

using namespace briques;

namespace {

Rational q(std::int64_t a, std::int64_t b = 1) { return make_rational(a, b); }

const Frontier kFull{2, 3};
const Frontier kLeftHole{2, 2};
const Frontier kRightHole{2, 1};

Rational random_rational(std::mt19937_64& rng, std::int64_t den) {
  std::uniform_int_distribution<std::int64_t> d(0, den - 1);
  return q(d(rng), den);
}

Frontier random_frontier(std::mt19937_64& rng, int K) {
  std::uniform_int_distribution<std::uint32_t> d(1, Frontier::full(K).mask);
  return {K, d(rng)};
}

}  // namespace

TEST(FrontierBasics, Alpha) {
  EXPECT_EQ(FrontierMap<Rational>(2, Slope::rational(1, 4)).alpha(), q(0));
  EXPECT_EQ(FrontierMap<Rational>(2, Slope::rational(1, 4)).alpha_unreduced(), q(1));
  EXPECT_EQ(FrontierMap<Rational>(2, Slope::rational(1, 2)).alpha(), q(1, 2));
  EXPECT_EQ(FrontierMap<Rational>(3, Slope::rational(1, 7)).alpha(), q(1, 6));
}

TEST(FrontierBasics, Beta) {
  FrontierMap<Rational> m(3, Slope::rational(1, 7));
  // bricks 0 and 2 present, entering column 1
  EXPECT_EQ(m.beta(Frontier{3, 0b101}, 1), frac(Rational(q(1, 3) - q(2, 3))));
  EXPECT_EQ(m.beta(Frontier{3, 0b011}, 2), frac(Rational(q(1, 3) + q(2, 3))));
  FrontierMap<Rational> m2(2, Slope::rational(1, 4));
  EXPECT_EQ(m2.beta(kLeftHole, 0), q(1, 2));
  EXPECT_EQ(m2.beta(kRightHole, 1), q(1, 2));
}

TEST(FrontierBasics, FrontierIndex) {
  EXPECT_EQ(kFull.index(), 0u);
  EXPECT_EQ(kLeftHole.index(), 1u);
  EXPECT_EQ(kRightHole.index(), 2u);
  std::ostringstream os;
  os << kLeftHole;
  EXPECT_EQ(os.str(), "(0,1)");
}

TEST(FrontierMapRoutes, PiecesAgreeWithDirectFormula) {
  std::mt19937_64 rng(11);
  for (int K : {1, 2, 3, 4}) {
    for (auto [p, qq] : {std::pair{1, 4}, {1, 7}, {2, 9}, {1, 13}, {3, 50}}) {
      FrontierMap<Rational> m(K, Slope::rational(p, qq));
      for (int i = 0; i < 300; ++i) {
        FrontierPoint<Rational> pt{random_rational(rng, 997), random_rational(rng, 991), random_frontier(rng, K)};
        ASSERT_EQ(m.phi(pt), m.phi_by_pieces(pt)) << "K=" << K << " " << pt;
      }
    }
  }
}

TEST(FrontierMapRoutes, PiecesCoverCircleOnce) {
  std::mt19937_64 rng(12);
  FrontierMap<Rational> m(3, Slope::rational(1, 7));
  for (int i = 0; i < 50; ++i) {
    Rational h = random_rational(rng, 101);
    auto pcs = m.pieces(h, random_frontier(rng, 3));
    Rational total = 0;
    for (const auto& pc : pcs) total += pc.length;
    EXPECT_EQ(total, 1);
  }
}

TEST(FrontierMapRoutes, K2TableAgrees) {
  std::mt19937_64 rng(13);
  for (auto [p, qq] : {std::pair{1, 4}, {1, 3}, {2, 5}, {1, 10}}) {
    FrontierMap<Rational> m(2, Slope::rational(p, qq));
    for (int i = 0; i < 2000; ++i) {
      FrontierPoint<Rational> pt{random_rational(rng, 1009), random_rational(rng, 1013), random_frontier(rng, 2)};
      ASSERT_EQ(m.phi(pt), phi_k2(pt, m.alpha())) << pt;
    }
  }
}

TEST(FrontierMapRoutes, DeltaHIndicatorK2IsAsymmetry) {
  std::mt19937_64 rng(14);
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  for (int i = 0; i < 500; ++i) {
    FrontierPoint<Rational> pt{random_rational(rng, 211), random_rational(rng, 223), random_frontier(rng, 2)};
    EXPECT_EQ(m.deltaH_indicator(pt), pt.xi.is_full() ? 0 : 1);
  }
}

TEST(Psi, InverseRoundTrip) {
  std::mt19937_64 rng(15);
  for (int K : {2, 3}) {
    FrontierMap<Rational> m(K, Slope::rational(1, 7));
    for (int i = 0; i < 300; ++i) {
      FrontierPoint<Rational> pt{random_rational(rng, 1000), random_rational(rng, 999), random_frontier(rng, K)};
      auto [dom, st] = m.psi_star_inverse(pt);
      EXPECT_EQ(m.psi(dom, st), pt);
    }
  }
}

TEST(Psi, InverseOrientation) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  auto [d1, s1] = m.psi_star_inverse({q(1, 8), q(1, 2), kFull});
  EXPECT_EQ(s1.x1, q(1, 2));
  EXPECT_EQ(s1.dir.sx, +1);
  EXPECT_EQ(d1.h, q(1, 2));
  auto [d2, s2] = m.psi_star_inverse({q(7, 8), q(0), kFull});
  EXPECT_EQ(s2.x1, q(1, 2));
  EXPECT_EQ(s2.dir.sx, -1);
}

TEST(Psi, RejectsUnequilibrated) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  BaseState<Rational> s{q(1, 3), make_direction(Slope::rational(1, 4), 1, 1),
                        Configuration::strip_with_holes(2, {{0, 0}, {1, 1}})};
  EXPECT_THROW(m.psi(Domain<Rational>::strip(2, q(1, 2)), s), NotEquilibrated);
}

TEST(Conjugacy, LockstepWithStripReturns) {
  struct Case {
    int K;
    Slope s;
    Rational h;
    Rational x1;
  };
  std::vector<Case> cases = {
      {2, Slope::rational(1, 4), q(7, 100), q(1, 10)},
      {2, Slope::rational(1, 4), q(1, 30), q(3, 7)},
      {2, Slope::rational(1, 3), q(1, 5), q(5, 4)},
      {3, Slope::rational(1, 7), q(1, 9), q(1, 11)},
      {4, Slope::rational(1, 13), q(2, 7), q(5, 3)},
  };
  for (const auto& c : cases) {
    FrontierMap<Rational> m(c.K, c.s);
    BaseState<Rational> st{c.x1, make_direction(c.s, 1, 1), Configuration::strip(c.K)};
    auto rep = conjugacy_check(m, Domain<Rational>::strip(c.K, c.h), st, 3000);
    EXPECT_TRUE(rep.ok()) << "K=" << c.K << " step " << rep.mismatch_step << " phi " << rep.lhs << " strip " << rep.rhs
                          << " " << rep.message;
    EXPECT_EQ(rep.steps, 3000);
    EXPECT_EQ(rep.height_gain, rep.indicator_sum);
  }
}

TEST(Conjugacy, BiasedBetaIsDetected) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  m.beta_bias = q(1, 1000);
  BaseState<Rational> st{q(1, 10), make_direction(Slope::rational(1, 4), 1, 1), Configuration::strip(2)};
  auto rep = conjugacy_check(m, Domain<Rational>::strip(2, q(7, 100)), st, 3000);
  EXPECT_TRUE(rep.mismatch);
}

TEST(Conjugacy, FloatBackendTracksExact) {
  Slope s = Slope::rational(1, 4);
  FrontierMap<double> md(2, s);
  FrontierMap<Rational> mq(2, s);
  FrontierPoint<Rational> pq{q(3, 7), q(7, 100), kFull};
  FrontierPoint<double> pd{3.0 / 7, 0.07, kFull};
  for (int i = 0; i < 200; ++i) {
    pq = mq.phi(pq);
    pd = md.phi(pd);
    ASSERT_EQ(pq.xi, pd.xi) << i;
    ASSERT_NEAR(to_double(pq.x), pd.x, 1e-9);
  }
}

TEST(Gh, InducedClosedForm) {
  Rational h = q(1, 30);
  EXPECT_EQ(induced_closed_form_Gh(q(0), h), q(4, 30));
  EXPECT_EQ(induced_closed_form_Gh(q(1, 10), h), q(14, 15));
  EXPECT_EQ(induced_closed_form_Gh(q(1, 4) - h, h), Rational(q(3, 4) + 9 * h - 1));
  EXPECT_THROW(induced_closed_form_Gh(q(9, 10), h), OutOfDomain);
  EXPECT_THROW(induced_closed_form_Gh(q(0), q(1, 10)), OutOfDomain);
}

TEST(Gh, InducedMapMatchesFirstReturn) {
  Slope s = Slope::rational(1, 4);
  FrontierMap<Rational> m(2, s);
  for (Rational h : {q(1, 30), q(1, 50), q(3, 100), q(1, 25)}) {
    Arc g = arc_Gh(h);
    auto in_g = [&](const FrontierPoint<Rational>& p) { return p.xi == kLeftHole && g.contains_closed(p.x) && p.h == h; };
    auto step = [&](const FrontierPoint<Rational>& p) { return m.phi(p); };
    std::set<std::int64_t> times;
    for (int i = 0; i < 200; ++i) {
      Rational x = frac(Rational(g.start + g.length * q(2 * i + 1, 400)));
      auto [img, n] = induce<Rational>(step, in_g, FrontierPoint<Rational>{x, h, kLeftHole}, 20);
      EXPECT_EQ(img.x, induced_closed_form_Gh(x, h)) << x;
      times.insert(n);
    }
    EXPECT_EQ(times, (std::set<std::int64_t>{2, 5}));
  }
}

TEST(Gh, OrbitSetComponents) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  for (Rational h : {q(1, 30), q(1, 25)}) {
    ArcSet set = orbit_set_Gh(m, h);
    EXPECT_EQ(set.measure(kFull), 4 * h);
    EXPECT_EQ(set.measure(kLeftHole), q(1, 2) - 2 * h);
    EXPECT_EQ(set.measure(kRightHole), q(1, 2) - 2 * h);
    EXPECT_EQ(set.measure(kLeftHole) + set.measure(kRightHole), 1 - 4 * h);
    ArcSet expected({make_arc(q(3, 4) + h, q(3, 4) + 3 * h, kFull), make_arc(q(1, 4) + h, q(1, 4) + 3 * h, kFull),
                     make_arc(q(3, 4) + 3 * h, q(1, 4) + h, kLeftHole),
                     make_arc(q(1, 4) + 3 * h, q(3, 4) + h, kRightHole)});
    EXPECT_EQ(set, expected);
    EXPECT_TRUE(set.includes(push_forward(m, set, h)));
  }
}

TEST(Gh, TwoBranchFormFailsAboveOneTwentieth) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  Rational h = q(7, 100);
  Arc g = arc_Gh(h);
  EXPECT_EQ(g.length, q(2, 25));
  auto in_g = [&](const FrontierPoint<Rational>& p) { return p.xi == kLeftHole && g.contains_closed(p.x); };
  auto step = [&](const FrontierPoint<Rational>& p) { return m.phi(p); };
  auto [img, n] = induce<Rational>(step, in_g, FrontierPoint<Rational>{q(11, 100), h, kLeftHole}, 100);
  EXPECT_EQ(n, 11);
  EXPECT_NE(img.x, induced_closed_form_Gh(q(11, 100), h));
  ArcSet set = orbit_set_Gh(m, h);
  EXPECT_FALSE(set.includes(push_forward(m, set, h)));
}

TEST(Gh, RotationAngle) {
  EXPECT_EQ(rotation_angle_Gh(q(1, 20)), q(1));
  EXPECT_EQ(rotation_angle_Gh(q(1, 30)), q(8, 30) / (1 - q(12, 30)));
}

TEST(LimitSet, CsvAndShape) {
  FrontierMap<Rational> m(2, Slope::rational(1, 4));
  auto cloud = limit_set_sample(m, {{q(1, 3), q(1, 30), kFull}, {q(2, 3), q(1, 30), kRightHole}}, 10, 5);
  ASSERT_EQ(cloud.size(), 10u);
  EXPECT_EQ(cloud[0].iterate, 10);
  EXPECT_EQ(cloud[9].orbit_id, 1);
  std::ostringstream os;
  write_cloud_csv(os, cloud);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "x,h,xi_index,orbit_id,iterate_index");
}
