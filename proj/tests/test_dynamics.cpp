#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "briques/dynamics.hpp"
#include "oracle.hpp"

using namespace briques;

namespace {

Rational q(std::int64_t a, std::int64_t b = 1) { return make_rational(a, b); }

SimState<Rational> state_at(Rational x, Rational y, Slope s, int sx, int sy, Configuration c) {
  return make_state(Point<Rational>{x, y}, make_direction(s, sx, sy), std::move(c));
}

}  // namespace

TEST(Reflect, FacesFlipOneSign) {
  auto d = make_direction(Slope::rational(1, 4), +1, +1);
  auto l = reflect(d, Face::Left);
  EXPECT_EQ(l.sx, -1);
  EXPECT_EQ(l.sy, +1);
  auto b = reflect(d, Face::Bottom);
  EXPECT_EQ(b.sx, +1);
  EXPECT_EQ(b.sy, -1);
  EXPECT_EQ(reflect(reflect(d, Face::Top), Face::Bottom), d);
  EXPECT_EQ(reflect(reflect(d, Face::Right), Face::Left), d);
}

TEST(Slope, RejectsHorizontalAndReduces) {
  EXPECT_THROW(Slope::rational(0, 3), InvalidArgument);
  EXPECT_EQ(Slope::rational(2, 8).str(), "1/4");
  EXPECT_TRUE(Slope::parse("vertical").is_vertical());
  EXPECT_TRUE(Slope::rational(1, 4) < Slope::rational(1, 2));
  EXPECT_TRUE(Slope::rational(100, 1) < Slope::vertical());
}

TEST(NextEvent, FirstImpactInStrip) {
  auto dom = Domain<Rational>::strip(2, q(1, 2));
  auto s = state_at(q(1, 2), q(-1, 2), Slope::rational(3, 1), +1, +1, Configuration::strip(2));
  auto st = next_event(s, dom);
  ASSERT_EQ(st.event.kind, EventKind::BrickHit);
  EXPECT_EQ(st.event.cell, (CellIndex{0, 0}));
  EXPECT_EQ(st.event.face, Face::Bottom);
  EXPECT_EQ(st.hit.x, q(2, 3));
  EXPECT_EQ(st.hit.y, q(0));
  EXPECT_EQ(st.v_delta, q(1, 2));
}

TEST(NextEvent, ShallowRayFromBaseMeetsStripCorner) {
  // Slope 1/3 from (1/2,-1/2) reaches height 0 exactly at the right wall.
  auto dom = Domain<Rational>::strip(2, q(1, 2));
  auto s = state_at(q(1, 2), q(-1, 2), Slope::rational(1, 3), +1, +1, Configuration::strip(2));
  auto st = next_event(s, dom);
  EXPECT_EQ(st.event.kind, EventKind::Singularity);
  EXPECT_EQ(st.hit, (Point<Rational>{q(2), q(0)}));
}

TEST(NextEvent, VerticalInPlane) {
  auto s = state_at(q(1, 2), q(1, 2), Slope::vertical(), +1, +1, Configuration::plane());
  auto st = next_event(s, Domain<Rational>::plane());
  ASSERT_EQ(st.event.kind, EventKind::BrickHit);
  EXPECT_EQ(st.event.cell, (CellIndex{0, 1}));
  EXPECT_EQ(st.event.face, Face::Bottom);
  EXPECT_EQ(st.hit, (Point<Rational>{q(1, 2), q(1)}));
}

TEST(NextEvent, CornerHitIsSingular) {
  auto h = q(1, 2);
  auto dom = Domain<Rational>::strip(1, h);
  auto s = state_at(q(1, 2), -h, Slope::rational(1, 1), +1, +1, Configuration::strip(1));
  auto st = next_event(s, dom);
  EXPECT_EQ(st.event.kind, EventKind::Singularity);
  EXPECT_EQ(st.event.reason, SingularReason::CornerHit);
  EXPECT_EQ(st.hit, (Point<Rational>{q(1), q(0)}));
}

TEST(NextEvent, BrickVertexOnWallIsSingular) {
  auto dom = Domain<Rational>::strip(2, q(1));
  // From (1, -1) with slope 1 the ray reaches the wall corner (2, 0).
  auto s = state_at(q(1), q(-1), Slope::rational(1, 1), +1, +1, Configuration::strip(2));
  EXPECT_EQ(next_event(s, dom).event.kind, EventKind::Singularity);
}

TEST(NextEvent, DomainCornerIsSingular) {
  auto dom = Domain<Rational>::strip(2, q(1, 2));
  auto s = state_at(q(1, 2), q(0), Slope::rational(1, 1), -1, -1, Configuration::strip(2));
  auto st = next_event(s, dom);
  EXPECT_EQ(st.event.kind, EventKind::Singularity);
  EXPECT_EQ(st.hit, (Point<Rational>{q(0), q(-1, 2)}));
}

TEST(NextEvent, GrazingVerticalIsAmbiguous) {
  auto c = Configuration::plane_with_holes({{0, 0}, {1, 0}});
  auto s = state_at(q(1), q(1, 2), Slope::vertical(), +1, +1, c);
  auto st = next_event(s, Domain<Rational>::plane());
  EXPECT_EQ(st.event.kind, EventKind::Singularity);
  EXPECT_EQ(st.event.reason, SingularReason::AmbiguousBrick);
  EXPECT_EQ(st.hit.y, q(1));
}

TEST(NextEvent, WalksThroughHoles) {
  auto c = Configuration::plane_with_holes({{0, 0}, {1, 0}, {2, 0}, {2, 1}});
  auto s = state_at(q(1, 3), q(1, 2), Slope::rational(1, 4), +1, +1, c);
  auto st = next_event(s, Domain<Rational>::plane());
  ASSERT_EQ(st.event.kind, EventKind::BrickHit);
  // y reaches 1 at x = 1/3 + 2 = 7/3, inside hole (2,0)->(2,1); then x = 3 at y = 1 + 2/12.
  EXPECT_EQ(st.event.cell, (CellIndex{3, 1}));
  EXPECT_EQ(st.event.face, Face::Left);
  EXPECT_EQ(st.hit, (Point<Rational>{q(3), q(1, 2) + q(8, 3) / 4}));
}

TEST(ApplyEvent, BrickHitDestroysAndReflects) {
  auto dom = Domain<Rational>::strip(2, q(1, 2));
  auto s = state_at(q(1, 2), q(-1, 2), Slope::rational(3, 1), +1, +1, Configuration::strip(2));
  auto st = next_event(s, dom);
  auto n = apply_event(s, st);
  EXPECT_TRUE(n.config.is_hole({0, 0}));
  EXPECT_EQ(n.dir.sy, -1);
  EXPECT_EQ(n.v_travelled, q(1, 2));
  EXPECT_EQ(n.events, 1);
  EXPECT_THROW(apply_event(n, st), DestroyedTwice);
}

TEST(ApplyEvent, WallBounceKeepsConfig) {
  auto dom = Domain<Rational>::strip(2, q(5));
  auto s = state_at(q(1, 2), q(-5), Slope::rational(1, 1), -1, +1, Configuration::strip(2));
  auto st = next_event(s, dom);
  ASSERT_EQ(st.event.kind, EventKind::WallBounce);
  EXPECT_EQ(st.event.wall, Wall::Left);
  auto n = apply_event(s, st);
  EXPECT_EQ(n.dir.sx, +1);
  EXPECT_EQ(n.config.hole_count(), 0u);
}

TEST(RunUntil, RejectsZeroBudget) {
  auto s = state_at(q(1, 2), q(1, 2), Slope::vertical(), +1, +1, Configuration::plane());
  EXPECT_THROW(run_until<Rational>(s, Domain<Rational>::plane(), nullptr, 0), InvalidArgument);
}

TEST(RunUntil, VerticalSingleColumnBaseReturns) {
  auto h = q(1, 2);
  auto dom = Domain<Rational>::strip(1, h);
  auto s = state_at(q(1, 2), -h, Slope::vertical(), +1, +1, Configuration::strip(1));
  std::vector<Rational> returns;
  StopPredicate<Rational> stop = [&](const SimState<Rational>& st, const Step<Rational>& e) {
    if (e.event.kind == EventKind::BaseCross) returns.push_back(st.v_travelled);
    return returns.size() == 3;
  };
  auto tr = run_until(s, dom, stop, 1000);
  EXPECT_EQ(tr.end, TraceEnd::Stopped);
  ASSERT_EQ(returns.size(), 3u);
  EXPECT_EQ(returns[0], q(1));
  EXPECT_EQ(returns[1], q(4));
  EXPECT_EQ(returns[2], q(9));
}

TEST(RunUntil, BrickHitsMatchHoleGrowth) {
  auto s = state_at(q(1, 3), q(1, 5), Slope::rational(1, 1), +1, +1, Configuration::plane());
  auto tr = run_until<Rational>(s, Domain<Rational>::plane(), nullptr, 500);
  std::size_t hits = 0;
  for (const auto& st : tr.steps) hits += st.event.kind == EventKind::BrickHit;
  EXPECT_EQ(tr.final_state.config.hole_count(), hits + 1);
}

TEST(RunUntil, SemigroupAtEventGranularity) {
  auto s = state_at(q(1, 3), q(1, 5), Slope::rational(2, 1), +1, +1, Configuration::plane());
  auto dom = Domain<Rational>::plane();
  auto two = run_until<Rational>(s, dom, nullptr, 2).final_state;
  auto one = run_until<Rational>(s, dom, nullptr, 1).final_state;
  auto again = run_until<Rational>(one, dom, nullptr, 1).final_state;
  EXPECT_EQ(two.pos, again.pos);
  EXPECT_EQ(two.dir, again.dir);
  EXPECT_EQ(two.config, again.config);
  EXPECT_EQ(two.v_travelled, again.v_travelled);
}

TEST(TranslateState, IdentityAndPlaneEquivariance) {
  auto s = state_at(q(1, 3), q(1, 5), Slope::rational(1, 2), +1, +1, Configuration::plane());
  auto id = translate_state(s, {0, 0});
  EXPECT_EQ(id.pos, s.pos);
  EXPECT_EQ(id.config, s.config);
  auto dom = Domain<Rational>::plane();
  CellIndex u{3, -2};
  auto a = translate_state(run_until<Rational>(s, dom, nullptr, 200).final_state, u);
  auto b = run_until<Rational>(translate_state(s, u), dom, nullptr, 200).final_state;
  EXPECT_EQ(a.pos, b.pos);
  EXPECT_EQ(a.dir, b.dir);
  EXPECT_EQ(a.config, b.config);
}

TEST(TranslateState, StripDownShiftWithEmptyBottomRow) {
  auto h = q(3, 10);
  auto dom = Domain<Rational>::strip(2, h);
  auto c = Configuration::strip_with_holes(2, {{0, 0}, {1, 0}, {1, 1}});
  auto s = state_at(q(3, 5), -h, Slope::rational(1, 3), +1, +1, c);
  CellIndex u{0, -1};
  auto dom2 = translate_domain(dom, u);
  EXPECT_EQ(dom2.h, h + 1);
  auto s2 = translate_state(s, u);
  EXPECT_EQ(s2.config, Configuration::strip_with_holes(2, {{1, 0}}));
  auto a = run_until<Rational>(s, dom, nullptr, 50).final_state;
  auto b = run_until<Rational>(s2, dom2, nullptr, 50).final_state;
  EXPECT_EQ(translate_state(a, u).pos, b.pos);
  EXPECT_EQ(translate_state(a, u).config, b.config);
  EXPECT_THROW(translate_state(s, {0, -2}), IllegalTranslate);
  EXPECT_THROW(translate_state(s, {1, 0}), IllegalTranslate);
}

TEST(NextEvent, MatchesBruteForceOnRandomStrips) {
  std::mt19937_64 rng(12345);
  int checked = 0, singular = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    int K = 1 + static_cast<int>(rng() % 4);
    std::vector<CellIndex> holes;
    for (int z2 = 0; z2 < 3; ++z2)
      for (int z1 = 0; z1 < K; ++z1)
        if (rng() % 2) { holes.push_back({z1, z2}); }
    auto config = Configuration::strip_with_holes(K, holes);
    Rational h = q(static_cast<std::int64_t>(rng() % 40), 1 + static_cast<std::int64_t>(rng() % 12));
    auto dom = Domain<Rational>::strip(K, h);
    // Start on a random point of the base or inside a hole.
    Rational x = q(static_cast<std::int64_t>(rng() % (97 * K - 1)) + 1, 97);
    Rational y = -h;
    if (!holes.empty() && rng() % 2) {  // NOLINT
      auto c = holes[rng() % holes.size()];
      x = q(c.z1) + q(1 + static_cast<std::int64_t>(rng() % 89), 91);
      y = q(c.z2) + q(1 + static_cast<std::int64_t>(rng() % 89), 91);
    }
    bool vertical = rng() % 10 == 0;
    Slope slope = vertical ? Slope::vertical()
                           : Slope::rational(1 + static_cast<std::int64_t>(rng() % 7),
                                             1 + static_cast<std::int64_t>(rng() % 7));
    int sx = rng() % 2 ? 1 : -1;
    int sy = (y == -h || rng() % 2) ? 1 : -1;
    auto s = state_at(x, y, slope, sx, sy, config);
    auto got = next_event(s, dom);
    auto want = oracle::first_contact(s, dom, 0, K - 1, 0, 12);
    Rational t = got.v_delta / s.dir.rise;
    if (want.kind == oracle::Contact::Singular) {
      ++singular;
      EXPECT_EQ(got.event.kind, EventKind::Singularity) << "trial " << trial;
      continue;
    }
    if (got.event.kind == EventKind::Singularity) {
      ADD_FAILURE() << "trial " << trial << " unexpected singularity at (" << got.hit.x << "," << got.hit.y
                    << ") K=" << K << " h=" << h << " from (" << x << "," << y << ") slope " << slope.str()
                    << " sx=" << sx << " sy=" << sy;
      continue;
    }
    ++checked;
    EXPECT_EQ(t, want.t) << "trial " << trial;
    switch (want.kind) {
      case oracle::Contact::Brick:
        ASSERT_EQ(got.event.kind, EventKind::BrickHit) << "trial " << trial;
        EXPECT_EQ(got.event.cell, want.cell);
        EXPECT_EQ(got.event.face, want.face);
        break;
      case oracle::Contact::Wall:
        EXPECT_EQ(got.event.kind, EventKind::WallBounce) << "trial " << trial;
        break;
      case oracle::Contact::Base:
        EXPECT_EQ(got.event.kind, EventKind::BaseCross) << "trial " << trial;
        break;
      default:
        break;
    }
  }
  EXPECT_GT(checked, 2000);
  (void)singular;
}

TEST(NextEvent, MatchesBruteForceInPlane) {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<CellIndex> holes{{0, 0}};
    for (int z2 = -3; z2 <= 3; ++z2)
      for (int z1 = -3; z1 <= 3; ++z1)
        if (rng() % 3 == 0) { holes.push_back({z1, z2}); }
    auto config = Configuration::plane_with_holes(holes);
    auto c = holes[rng() % holes.size()];
    Rational x = q(c.z1) + q(1 + static_cast<std::int64_t>(rng() % 89), 91);
    Rational y = q(c.z2) + q(1 + static_cast<std::int64_t>(rng() % 89), 91);
    Slope slope = Slope::rational(1 + static_cast<std::int64_t>(rng() % 5), 1 + static_cast<std::int64_t>(rng() % 5));
    auto s = state_at(x, y, slope, rng() % 2 ? 1 : -1, rng() % 2 ? 1 : -1, config);
    auto got = next_event(s, Domain<Rational>::plane());
    auto want = oracle::first_contact(s, Domain<Rational>::plane(), -6, 6, -6, 6);
    if (want.kind == oracle::Contact::Singular) {
      EXPECT_EQ(got.event.kind, EventKind::Singularity) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(got.event.kind, EventKind::BrickHit) << "trial " << trial;
    EXPECT_EQ(got.event.cell, want.cell) << "trial " << trial;
    EXPECT_EQ(got.event.face, want.face) << "trial " << trial;
    EXPECT_EQ(got.v_delta / s.dir.rise, want.t);
  }
}

TEST(FloatBackend, AgreesWithExactAwayFromCorners) {
  auto dom_q = Domain<Rational>::strip(2, q(7, 100));
  auto dom_f = Domain<double>::strip(2, 0.07);
  Slope slope = Slope::rational(1, 4);
  auto sq = state_at(q(37, 100), q(-7, 100), slope, +1, +1, Configuration::strip(2));
  SimState<double> sf;
  sf.pos = {0.37, -0.07};
  sf.dir = {slope.cos(), slope.sin(), +1, +1};
  sf.config = Configuration::strip(2);
  for (int i = 0; i < 2000; ++i) {
    auto eq = next_event(sq, dom_q);
    auto ef = next_event(sf, dom_f);
    ASSERT_EQ(eq.event.kind, ef.event.kind) << "event " << i;
    if (eq.event.kind == EventKind::BrickHit) {
      EXPECT_EQ(eq.event.cell, ef.event.cell);
    }
    advance(sq, eq);
    advance(sf, ef);
    // Physical time from vertical distance vs accumulated segment lengths.
    EXPECT_NEAR(physical_time(sq.v_travelled, sq.dir), sf.v_travelled / slope.sin(), 1e-12 * (1 + i));
  }
}

TEST(FloatBackend, CornerGuard) {
  auto dom = Domain<double>::strip(1, 0.5);
  SimState<double> s;
  s.pos = {0.5 + 1e-12, -0.5};
  s.dir = make_float_direction(std::atan(1.0));
  s.config = Configuration::strip(1);
  EXPECT_EQ(next_event(s, dom).event.kind, EventKind::Singularity);
}

TEST(TraceCsv, RationalColumns) {
  auto dom = Domain<Rational>::strip(2, q(1, 2));
  auto s = state_at(q(1, 2), q(-1, 2), Slope::rational(3, 1), +1, +1, Configuration::strip(2));
  auto tr = run_until<Rational>(s, dom, nullptr, 2);
  std::ostringstream os;
  write_trace_csv(os, tr.steps);
  std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "event_index,kind,cell_z1,cell_z2,face,x_num,x_den,y_num,y_den,v_travelled_num,v_travelled_den");
  EXPECT_NE(text.find("0,brick,0,0,bottom,2,3,0,1,1,2"), std::string::npos);
}
