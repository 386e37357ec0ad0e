#pragma once
/**
 * @file dynamics.hpp
 * @brief Event-driven propagation of the ball through a brick lattice.
 *
 * The ball moves in straight lines between events. An event is the first
 * contact of the ray with a fixed wall, a present brick, or the strip base.
 * Brick hits reflect the ball and delete the brick. Contacts with a lattice
 * corner of a present brick (or with a corner of the domain) have no defined
 * continuation; they are reported as terminal Singularity events.
 *
 * Two tracers share the same event semantics:
 *  - exact (Rational): gridline crossings are enumerated with integer
 *    arithmetic after one rational setup per event, so corner hits are
 *    decided exactly;
 *  - float (double): a classic DDA where a contact closer than `epsilon` to a
 *    lattice corner counts as a corner hit.
 *
 * Time is kept as travelled vertical distance; the physical time is that
 * distance divided by sin of the reduced angle.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "briques/configuration.hpp"
#include "briques/geometry.hpp"
#include "briques/rational.hpp"

namespace briques {

class RunawayRay : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InadmissibleState : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometry of the free region: a strip [0,K] x [-h, inf) with bricks on
/// {0..K-1} x N, or the whole plane.
template <class Num>
struct Domain {
  DomainKind kind = DomainKind::Plane;
  int K = 0;
  Num h{};

  static Domain strip(int K, Num h) {
    if (K < 1) throw InvalidArgument("strip width K must be >= 1");
    if (h < 0) throw InvalidArgument("base depth h must be >= 0");
    return Domain{DomainKind::Strip, K, std::move(h)};
  }
  static Domain plane() { return Domain{DomainKind::Plane, 0, Num{}}; }

  bool is_strip() const { return kind == DomainKind::Strip; }
};

enum class EventKind { WallBounce, BrickHit, BaseCross, Singularity };
enum class Wall { Left, Right };
enum class SingularReason { CornerHit, AmbiguousBrick };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::WallBounce: return "wall";
    case EventKind::BrickHit: return "brick";
    case EventKind::BaseCross: return "base";
    case EventKind::Singularity: return "singular";
  }
  return "?";
}

struct Event {
  EventKind kind = EventKind::BrickHit;
  Wall wall = Wall::Left;
  CellIndex cell{};
  Face face = Face::Bottom;
  SingularReason reason = SingularReason::CornerHit;
};

/// One event together with where it happens and the vertical distance to it.
template <class Num>
struct Step {
  Event event;
  Point<Num> hit;
  Num v_delta{};
};

template <class Num>
struct SimState {
  Point<Num> pos;
  Direction<Num> dir;
  Configuration config;
  Num v_travelled{};
  std::int64_t events = 0;
  bool singular = false;
};

struct TracerOptions {
  std::int64_t max_walk_steps = 100'000'000;
  /// Corner proximity guard of the float tracer.
  double epsilon = 1e-9;
};

namespace detail {

/// floor and integrality of a rational R, for deciding n < R and n == R on integers.
struct Threshold {
  std::int64_t fl = 0;
  bool exact = false;
  bool below(std::int64_t n) const { return exact ? n < fl : n <= fl; }
  bool equal(std::int64_t n) const { return exact && n == fl; }
};

inline Threshold threshold(const Rational& r) { return {floor_int(r), is_integer(r)}; }

template <class Num>
Step<Num> make_step(EventKind kind, Point<Num> hit, Num v_delta) {
  Step<Num> s;
  s.event.kind = kind;
  s.hit = std::move(hit);
  s.v_delta = std::move(v_delta);
  return s;
}

template <class Num>
Step<Num> singular_step(Point<Num> hit, Num v_delta, SingularReason reason) {
  auto s = make_step(EventKind::Singularity, std::move(hit), std::move(v_delta));
  s.event.reason = reason;
  return s;
}

template <class Num>
Step<Num> brick_step(Point<Num> hit, Num v_delta, CellIndex cell, Face face) {
  auto s = make_step(EventKind::BrickHit, std::move(hit), std::move(v_delta));
  s.event.cell = cell;
  s.event.face = face;
  return s;
}

template <class Num>
Step<Num> wall_step(Point<Num> hit, Num v_delta, Wall wall) {
  auto s = make_step(EventKind::WallBounce, std::move(hit), std::move(v_delta));
  s.event.wall = wall;
  return s;
}

template <class Num>
struct LatticeView {
  const Configuration& config;
  const Domain<Num>& domain;
  bool wall_column(std::int64_t z1) const {
    return domain.is_strip() && (z1 < 0 || z1 >= domain.K);
  }
  bool present(CellIndex c) const { return config.is_present(c); }
};

/// Contact at the starting point when the ball sits on the boundary of a
/// blocked cell and moves into it. Returns false when no such contact exists.
template <class Num>
bool immediate_contact(const SimState<Num>& s, const LatticeView<Num>& view, std::int64_t cx,
                       std::int64_t cy, Step<Num>& out) {
  bool wall = view.wall_column(cx);
  if (!wall && !view.present({cx, cy})) return false;
  bool x_line = is_integer(s.pos.x) && s.dir.run != 0;
  bool y_line = is_integer(s.pos.y);
  if (x_line && y_line) {
    out = singular_step(s.pos, Num{}, SingularReason::CornerHit);
  } else if (x_line && wall) {
    out = wall_step(s.pos, Num{}, cx < 0 ? Wall::Left : Wall::Right);
  } else if (x_line) {
    out = brick_step(s.pos, Num{}, CellIndex{cx, cy}, s.dir.sx > 0 ? Face::Left : Face::Right);
  } else if (y_line && !wall) {
    out = brick_step(s.pos, Num{}, CellIndex{cx, cy}, s.dir.sy > 0 ? Face::Bottom : Face::Top);
  } else {
    throw InadmissibleState("ball lies inside an obstacle");
  }
  return true;
}

/// The base contact at abscissa xb; corners of the domain and brick corners on the base are singular.
template <class Num>
Step<Num> base_step(const LatticeView<Num>& view, Point<Num> hit, Num v_delta) {
  const auto& dom = view.domain;
  if (hit.x == from_int<Num>(0) || hit.x == from_int<Num>(dom.K)) {
    return singular_step(std::move(hit), std::move(v_delta), SingularReason::CornerHit);
  }
  if (is_integer(hit.x) && is_integer(hit.y)) {
    std::int64_t X = floor_int(hit.x);
    std::int64_t Y = floor_int(hit.y);
    if (view.present({X - 1, Y}) || view.present({X, Y})) {
      return singular_step(std::move(hit), std::move(v_delta), SingularReason::CornerHit);
    }
  }
  return make_step(EventKind::BaseCross, std::move(hit), std::move(v_delta));
}

template <class Num>
std::int64_t current_column(const SimState<Num>& s) {
  if (s.dir.run == 0) return floor_int(s.pos.x);
  return s.dir.sx > 0 ? floor_int(s.pos.x) : ceil_int(s.pos.x) - 1;
}

template <class Num>
std::int64_t current_row(const SimState<Num>& s) {
  return s.dir.sy > 0 ? floor_int(s.pos.y) : ceil_int(s.pos.y) - 1;
}

/// Vertical ray running exactly along the gridline x = X: the contact with
/// any present brick along the line is ambiguous (two-brick seam or corner).
template <class Num>
Step<Num> grazing_vertical(const SimState<Num>& s, const LatticeView<Num>& view, bool base_active,
                           const TracerOptions& opt) {
  std::int64_t X = floor_int(s.pos.x);
  std::int64_t cy = current_row(s);
  auto blocked = [&](std::int64_t row) {
    return view.present({X - 1, row}) || view.present({X, row});
  };
  if (blocked(cy)) return singular_step(s.pos, Num{}, SingularReason::AmbiguousBrick);
  int sy = s.dir.sy;
  Num yb = base_active ? Num(-view.domain.h) : Num{};
  for (std::int64_t n = 0; n < opt.max_walk_steps; ++n) {
    std::int64_t Y = sy > 0 ? cy + 1 : cy;
    Num y_line = from_int<Num>(Y);
    if (base_active && !(y_line > yb)) {
      Num dy = s.pos.y - yb;
      return base_step(view, Point<Num>{s.pos.x, yb}, dy);
    }
    std::int64_t next = cy + sy;
    if (blocked(next)) {
      Num dy = sy > 0 ? Num(y_line - s.pos.y) : Num(s.pos.y - y_line);
      return singular_step(Point<Num>{s.pos.x, y_line}, dy, SingularReason::AmbiguousBrick);
    }
    cy = next;
  }
  throw RunawayRay("cell walk exceeded max_walk_steps");
}

inline Step<Rational> next_event_exact(const SimState<Rational>& s, const Domain<Rational>& dom,
                                       const TracerOptions& opt) {
  LatticeView<Rational> view{s.config, dom};
  const Rational& x = s.pos.x;
  const Rational& y = s.pos.y;
  const int sx = s.dir.sx;
  const int sy = s.dir.sy;
  const std::int64_t P = to_int64(s.dir.rise.get_num());
  const std::int64_t Q = to_int64(s.dir.run.get_num());
  if (P <= 0) throw InadmissibleState("horizontal motion is excluded");
  const bool base_active = dom.is_strip() && sy < 0;
  Rational sB;
  if (base_active) {
    sB = (y + dom.h) / P;
    if (sgn(sB) < 0) throw InadmissibleState("ball below the strip base");
  }
  if (dom.is_strip() && (x < 0 || x > dom.K)) throw InadmissibleState("ball outside the strip");

  if (Q == 0 && is_integer(x)) {
    return grazing_vertical<Rational>(s, view, base_active, opt);
  }

  std::int64_t cx = current_column(s);
  std::int64_t cy = current_row(s);
  Step<Rational> immediate;
  if (immediate_contact(s, view, cx, cy, immediate)) return immediate;

  auto at_param = [&](const Rational& t) {
    return Point<Rational>{x + sx * Q * t, y + sy * P * t};
  };
  auto base_event = [&]() { return base_step(view, at_param(sB), Rational(P * sB)); };

  if (Q == 0) {
    // Vertical ray strictly inside a column: only horizontal gridlines.
    Rational sY = (sy > 0 ? Rational(cy + 1) - y : y - Rational(cy)) / P;
    Threshold Ey;
    if (base_active) Ey = threshold((sB - sY) * P);
    for (std::int64_t j = 0; j < opt.max_walk_steps; ++j) {
      if (base_active && !Ey.below(j)) return base_event();
      CellIndex nb{cx, cy + sy};
      if (view.present(nb)) {
        Rational t = sY + Rational(j, P);
        t.canonicalize();
        return brick_step(at_param(t), Rational(P * t), nb, sy > 0 ? Face::Bottom : Face::Top);
      }
      cy += sy;
    }
    throw RunawayRay("cell walk exceeded max_walk_steps");
  }

  const std::int64_t X1 = sx > 0 ? cx + 1 : cx;
  const std::int64_t Y1 = sy > 0 ? cy + 1 : cy;
  // Crossing i of a vertical gridline happens at parameter sX + i/Q, crossing j
  // of a horizontal one at sY + j/P. Scaling by PQ, the order of the two is
  // the sign of (iP - jQ) - C with C = (sY - sX) PQ.
  const Rational sX = Rational(X1 - x) / (sx * Q);
  const Rational sY = Rational(Y1 - y) / (sy * P);
  const Threshold C = threshold((sY - sX) * P * Q);
  Threshold Ex, Ey;
  if (base_active) {
    Ex = threshold((sB - sX) * P * Q);
    Ey = threshold((sB - sY) * P * Q);
  }
  auto vx_param = [&](std::int64_t i) {
    Rational t = sX + Rational(i, Q);
    t.canonicalize();
    return t;
  };
  auto hy_param = [&](std::int64_t j) {
    Rational t = sY + Rational(j, P);
    t.canonicalize();
    return t;
  };

  std::int64_t i = 0, j = 0;
  for (std::int64_t n = 0; n < opt.max_walk_steps; ++n) {
    const std::int64_t D = i * P - j * Q;
    const bool corner = C.equal(D);
    const bool vertical_first = !corner && C.below(D);
    if (base_active) {
      bool base_first = (vertical_first || corner) ? !Ex.below(i * P) : !Ey.below(j * Q);
      if (base_first) return base_event();
    }
    if (corner) {
      CellIndex a{cx + sx, cy}, b{cx, cy + sy}, d{cx + sx, cy + sy};
      if (view.wall_column(a.z1)) {
        Rational t = vx_param(i);
        if (view.present(b)) return singular_step(at_param(t), Rational(P * t), SingularReason::CornerHit);
        return wall_step(at_param(t), Rational(P * t), a.z1 < 0 ? Wall::Left : Wall::Right);
      }
      if (view.present(a) || view.present(b) || view.present(d)) {
        Rational t = vx_param(i);
        return singular_step(at_param(t), Rational(P * t), SingularReason::CornerHit);
      }
      cx += sx;
      cy += sy;
      ++i;
      ++j;
    } else if (vertical_first) {
      CellIndex nb{cx + sx, cy};
      if (view.wall_column(nb.z1)) {
        Rational t = vx_param(i);
        return wall_step(at_param(t), Rational(P * t), nb.z1 < 0 ? Wall::Left : Wall::Right);
      }
      if (view.present(nb)) {
        Rational t = vx_param(i);
        return brick_step(at_param(t), Rational(P * t), nb, sx > 0 ? Face::Left : Face::Right);
      }
      cx += sx;
      ++i;
    } else {
      CellIndex nb{cx, cy + sy};
      if (view.present(nb)) {
        Rational t = hy_param(j);
        return brick_step(at_param(t), Rational(P * t), nb, sy > 0 ? Face::Bottom : Face::Top);
      }
      cy += sy;
      ++j;
    }
  }
  throw RunawayRay("cell walk exceeded max_walk_steps");
}

inline Step<double> next_event_float(const SimState<double>& s, const Domain<double>& dom,
                                     const TracerOptions& opt) {
  LatticeView<double> view{s.config, dom};
  const double x = s.pos.x;
  const double y = s.pos.y;
  const int sx = s.dir.sx;
  const int sy = s.dir.sy;
  const double run = s.dir.run;
  const double rise = s.dir.rise;
  const double eps = opt.epsilon;
  if (!(rise > 0)) throw InadmissibleState("horizontal motion is excluded");
  const bool base_active = dom.is_strip() && sy < 0;
  double tB = std::numeric_limits<double>::infinity();
  if (base_active) {
    tB = (y + dom.h) / rise;
    if (tB < -eps) throw InadmissibleState("ball below the strip base");
    tB = std::max(tB, 0.0);
  }
  auto at = [&](double t) { return Point<double>{x + sx * run * t, y + sy * rise * t}; };
  // Contact points are put exactly on the gridline they lie on.
  auto on_x = [&](double t, std::int64_t X) { return Point<double>{static_cast<double>(X), y + sy * rise * t}; };
  auto on_y = [&](double t, std::int64_t Y) { return Point<double>{x + sx * run * t, static_cast<double>(Y)}; };
  auto near_int = [&](double v) { return std::abs(v - std::round(v)) <= eps; };
  auto base_event = [&]() {
    Point<double> p = at(tB);
    p.y = -dom.h;
    if (std::abs(p.x) <= eps || std::abs(p.x - dom.K) <= eps) {
      return singular_step(p, rise * tB, SingularReason::CornerHit);
    }
    return base_step(view, p, rise * tB);
  };

  if (run == 0 && is_integer(x)) return grazing_vertical<double>(s, view, base_active, opt);

  std::int64_t cx = current_column(s);
  std::int64_t cy = current_row(s);
  Step<double> immediate;
  if (immediate_contact(s, view, cx, cy, immediate)) return immediate;

  const double inf = std::numeric_limits<double>::infinity();
  const std::int64_t X1 = sx > 0 ? cx + 1 : cx;
  const std::int64_t Y1 = sy > 0 ? cy + 1 : cy;
  const double tX0 = run > 0 ? (static_cast<double>(X1) - x) / (sx * run) : inf;
  const double dX = run > 0 ? 1.0 / run : inf;
  const double tY0 = (static_cast<double>(Y1) - y) / (sy * rise);
  const double dY = 1.0 / rise;
  std::int64_t i = 0, j = 0;
  for (std::int64_t n = 0; n < opt.max_walk_steps; ++n) {
    const double tx = run > 0 ? tX0 + static_cast<double>(i) * dX : inf;
    const double ty = tY0 + static_cast<double>(j) * dY;
    const bool corner = std::abs(tx - ty) <= eps;
    const double t = std::min(tx, ty);
    if (base_active && tB <= t) return base_event();
    const std::int64_t X = X1 + sx * i;
    const std::int64_t Y = Y1 + sy * j;
    if (corner) {
      CellIndex a{cx + sx, cy}, b{cx, cy + sy}, d{cx + sx, cy + sy};
      Point<double> p{static_cast<double>(X), static_cast<double>(Y)};
      if (view.wall_column(a.z1)) {
        if (view.present(b)) return singular_step(p, rise * t, SingularReason::CornerHit);
        return wall_step(p, rise * t, a.z1 < 0 ? Wall::Left : Wall::Right);
      }
      if (view.present(a) || view.present(b) || view.present(d)) {
        return singular_step(p, rise * t, SingularReason::CornerHit);
      }
      cx += sx;
      cy += sy;
      ++i;
      ++j;
    } else if (tx < ty) {
      CellIndex nb{cx + sx, cy};
      if (view.wall_column(nb.z1)) return wall_step(on_x(tx, X), rise * tx, nb.z1 < 0 ? Wall::Left : Wall::Right);
      if (view.present(nb)) return brick_step(on_x(tx, X), rise * tx, nb, sx > 0 ? Face::Left : Face::Right);
      cx += sx;
      ++i;
    } else {
      CellIndex nb{cx, cy + sy};
      if (view.present(nb)) {
        Point<double> p = on_y(ty, Y);
        if (run > 0 && near_int(p.x)) return singular_step(p, rise * ty, SingularReason::CornerHit);
        return brick_step(p, rise * ty, nb, sy > 0 ? Face::Bottom : Face::Top);
      }
      cy += sy;
      ++j;
    }
  }
  throw RunawayRay("cell walk exceeded max_walk_steps");
}

}  // namespace detail

/// First contact of the ray from `state` with a brick, a wall or the base.
template <class Num>
Step<Num> next_event(const SimState<Num>& state, const Domain<Num>& domain, const TracerOptions& opt = {}) {
  if (state.singular) throw InadmissibleState("trajectory already terminated at a singularity");
  if constexpr (is_exact_v<Num>) {
    return detail::next_event_exact(state, domain, opt);
  } else {
    return detail::next_event_float(state, domain, opt);
  }
}

/// In-place version of apply_event.
template <class Num>
void advance(SimState<Num>& s, const Step<Num>& step) {
  s.pos = step.hit;
  s.v_travelled += step.v_delta;
  ++s.events;
  switch (step.event.kind) {
    case EventKind::WallBounce:
      s.dir.sx = -s.dir.sx;
      break;
    case EventKind::BrickHit:
      s.config.destroy(step.event.cell);
      s.dir = reflect(s.dir, step.event.face);
      break;
    case EventKind::BaseCross:
      s.dir.sy = -s.dir.sy;
      break;
    case EventKind::Singularity:
      s.singular = true;
      break;
  }
}

template <class Num>
SimState<Num> apply_event(SimState<Num> s, const Step<Num>& step) {
  advance(s, step);
  return s;
}

enum class TraceEnd { Stopped, Singularity, Truncated };

template <class Num>
struct Trace {
  std::vector<Step<Num>> steps;
  SimState<Num> final_state;
  TraceEnd end = TraceEnd::Truncated;
};

template <class Num>
using StopPredicate = std::function<bool(const SimState<Num>&, const Step<Num>&)>;

/// Runs events until `stop` holds after an event, a singularity, or max_events.
template <class Num>
Trace<Num> run_until(SimState<Num> state, const Domain<Num>& domain, const StopPredicate<Num>& stop,
                     std::int64_t max_events, const TracerOptions& opt = {}, bool record = true) {
  if (max_events < 1) throw InvalidArgument("max_events must be >= 1");
  Trace<Num> trace;
  for (std::int64_t n = 0; n < max_events; ++n) {
    Step<Num> step = next_event(state, domain, opt);
    advance(state, step);
    bool singular = step.event.kind == EventKind::Singularity;
    bool stopped = !singular && stop && stop(state, step);
    if (record) trace.steps.push_back(std::move(step));
    if (singular) {
      trace.end = TraceEnd::Singularity;
      trace.final_state = std::move(state);
      return trace;
    }
    if (stopped) {
      trace.end = TraceEnd::Stopped;
      trace.final_state = std::move(state);
      return trace;
    }
  }
  trace.end = TraceEnd::Truncated;
  trace.final_state = std::move(state);
  return trace;
}

/// Relabels a state by an integer vector (holes and position move together).
template <class Num>
SimState<Num> translate_state(const SimState<Num>& s, CellIndex u) {
  SimState<Num> out = s;
  out.config = s.config.translated(u);
  out.pos.x += from_int<Num>(u.z1);
  out.pos.y += from_int<Num>(u.z2);
  return out;
}

/// The domain seen after the translation by u (a strip base moves with it).
template <class Num>
Domain<Num> translate_domain(const Domain<Num>& d, CellIndex u) {
  if (!d.is_strip()) return d;
  if (u.z1 != 0) throw IllegalTranslate("a strip can only be translated vertically");
  Domain<Num> out = d;
  out.h -= from_int<Num>(u.z2);
  if (out.h < 0) throw IllegalTranslate("translation lifts the base above row 0");
  return out;
}

/// Physical time from travelled vertical distance.
template <class Num>
double physical_time(const Num& v_travelled, const Direction<Num>& dir) {
  double rise = to_double(dir.rise);
  double run = to_double(dir.run);
  return to_double(v_travelled) * std::hypot(rise, run) / rise;
}

template <class Num>
SimState<Num> make_state(Point<Num> pos, Direction<Num> dir, Configuration config) {
  SimState<Num> s;
  s.pos = std::move(pos);
  s.dir = std::move(dir);
  s.config = std::move(config);
  s.v_travelled = Num{};
  return s;
}

namespace detail {
inline void write_num_pair(std::ostream& os, const Rational& r) { os << r.get_num() << ',' << r.get_den(); }
inline void write_num_pair(std::ostream& os, double d) {
  std::ostringstream tmp;
  tmp << std::setprecision(17) << d;
  os << tmp.str();
}
}  // namespace detail

/// CSV with one line per event; rationals are split into numerator/denominator columns.
template <class Num>
void write_trace_csv(std::ostream& os, const std::vector<Step<Num>>& steps, const Num& v_start = Num{}) {
  if constexpr (is_exact_v<Num>) {
    os << "event_index,kind,cell_z1,cell_z2,face,x_num,x_den,y_num,y_den,v_travelled_num,v_travelled_den\n";
  } else {
    os << "event_index,kind,cell_z1,cell_z2,face,x,y,v_travelled\n";
  }
  Num v = v_start;
  std::int64_t index = 0;
  for (const auto& st : steps) {
    v += st.v_delta;
    os << index++ << ',' << event_kind_name(st.event.kind) << ',';
    if (st.event.kind == EventKind::BrickHit) {
      os << st.event.cell.z1 << ',' << st.event.cell.z2 << ',' << face_name(st.event.face);
    } else if (st.event.kind == EventKind::WallBounce) {
      os << ",," << (st.event.wall == Wall::Left ? "wall_left" : "wall_right");
    } else {
      os << ",,";
    }
    os << ',';
    detail::write_num_pair(os, st.hit.x);
    os << ',';
    detail::write_num_pair(os, st.hit.y);
    os << ',';
    detail::write_num_pair(os, v);
    os << '\n';
  }
}

}  // namespace briques
