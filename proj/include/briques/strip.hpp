#pragma once
/**
 * @file strip.hpp
 * @brief The strip [0,K] x [-h, inf): base returns, heights and escape statistics.
 *
 * A base state is a ball on the bottom edge moving upward. One aller-retour
 * runs the tracer until the ball comes back to the bottom edge. Its outcome
 * is one of three kinds:
 *  - U0:  bottom face of a brick of row H hit, row H survives;
 *  - U+:  bottom face hit on the last brick of row H;
 *  - U++: the ball entered row H through a hole, cleared it and bounced under row H+1.
 *
 * Rows below the lowest brick and whole bands of height 2K tan(theta) below
 * it do not influence the return map, so long runs are carried out on a
 * normalized representative with H = 0 and h < 2K tan(theta).
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "briques/configuration.hpp"
#include "briques/dynamics.hpp"
#include "briques/geometry.hpp"
#include "briques/rational.hpp"

namespace briques {

class NonReturn : public std::runtime_error {
 public:
  explicit NonReturn(std::int64_t max_events)
      : std::runtime_error("no base return within " + std::to_string(max_events) + " events") {}
};

template <class Num>
class SingularTrajectory : public std::runtime_error {
 public:
  SingularTrajectory(Point<Num> p, SingularReason r)
      : std::runtime_error("trajectory reached a singularity"), point(std::move(p)), reason(r) {}
  Point<Num> point;
  SingularReason reason;
};

class NotEquilibrated : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lowest row containing a present brick.
inline std::int64_t height_H(const Configuration& c) {
  std::int64_t row = 0;
  while (c.row_empty(row)) ++row;
  return row;
}

/// One plus the highest row containing a hole; 0 without holes.
inline std::int64_t height_Hplus(const Configuration& c) {
  const CellGrid& g = c.grid();
  if (g.count() == 0) return 0;
  for (std::int64_t row = g.max_row(); row >= g.min_row(); --row) {
    if (g.any_in_row(row)) return row + 1;
  }
  return 0;
}

inline bool is_equilibrated(const Configuration& c) { return height_Hplus(c) - height_H(c) <= 1; }

/// Largest admissible tangent 1/(K(K-1)); empty for K = 1 where every non-horizontal slope qualifies.
inline std::optional<Rational> slope_threshold(int K) {
  if (K < 1) throw InvalidArgument("strip width K must be >= 1");
  if (K == 1) return std::nullopt;
  return make_rational(1, static_cast<std::int64_t>(K) * (K - 1));
}

inline bool below_threshold(const Slope& s, int K) {
  auto t = slope_threshold(K);
  if (!t) return !s.is_vertical() || K == 1;
  return !s.is_vertical() && s.tan() < *t;
}

/// Ball on the base y = -h moving upward.
template <class Num>
struct BaseState {
  Num x1{};
  Direction<Num> dir;
  Configuration config;
};

enum class ReturnKind { U0, Uplus, Uplusplus };

inline const char* return_kind_name(ReturnKind k) {
  switch (k) {
    case ReturnKind::U0: return "U0";
    case ReturnKind::Uplus: return "U+";
    case ReturnKind::Uplusplus: return "U++";
  }
  return "?";
}

template <class Num>
struct ReturnRecord {
  BaseState<Num> next;
  Num T_vertical{};
  std::int64_t H_before = 0;
  std::int64_t delta_H = 0;
  ReturnKind kind = ReturnKind::U0;
  std::vector<CellIndex> bricks_destroyed;
};

struct ReturnOptions {
  std::int64_t max_events = 10'000'000;
  TracerOptions tracer;
};

template <class Num>
SimState<Num> launch(const Domain<Num>& dom, const BaseState<Num>& s) {
  if (s.dir.sy != 1) throw InvalidArgument("a base state must move upward");
  if (s.x1 < 0 || s.x1 > dom.K) throw InvalidArgument("base abscissa outside [0,K]");
  return make_state(Point<Num>{s.x1, Num(-dom.h)}, s.dir, s.config);
}

/**
 * One aller-retour from the base. `observer`, when set, sees the state after
 * every event.
 */
template <class Num>
ReturnRecord<Num> base_return(const Domain<Num>& dom, BaseState<Num> state, const ReturnOptions& opt = {},
                              const std::function<void(const SimState<Num>&)>& observer = nullptr) {
  if (!dom.is_strip()) throw InvalidArgument("base returns need a strip domain");
  ReturnRecord<Num> rec;
  rec.H_before = height_H(state.config);
  SimState<Num> sim = make_state(Point<Num>{state.x1, Num(-dom.h)}, state.dir, std::move(state.config));
  if (sim.dir.sy != 1) throw InvalidArgument("a base state must move upward");
  bool first_brick = true;
  bool bottom_on_H = false;
  for (std::int64_t n = 0; n < opt.max_events; ++n) {
    Step<Num> step = next_event(sim, dom, opt.tracer);
    if (step.event.kind == EventKind::Singularity) {
      throw SingularTrajectory<Num>(step.hit, step.event.reason);
    }
    advance(sim, step);
    if (observer) observer(sim);
    if (step.event.kind == EventKind::BrickHit) {
      if (first_brick) {
        bottom_on_H = step.event.face == Face::Bottom && step.event.cell.z2 == rec.H_before;
        first_brick = false;
      }
      rec.bricks_destroyed.push_back(step.event.cell);
    } else if (step.event.kind == EventKind::BaseCross) {
      rec.T_vertical = sim.v_travelled;
      rec.next.x1 = sim.pos.x;
      rec.next.dir = sim.dir;
      rec.next.config = std::move(sim.config);
      rec.delta_H = height_H(rec.next.config) - rec.H_before;
      if (rec.delta_H == 0) {
        rec.kind = ReturnKind::U0;
      } else if (bottom_on_H && rec.bricks_destroyed.size() == 1) {
        rec.kind = ReturnKind::Uplus;
      } else {
        rec.kind = ReturnKind::Uplusplus;
      }
      return rec;
    }
  }
  throw NonReturn(opt.max_events);
}

/// Height 2K tan(theta) of a band whose removal leaves the return map unchanged.
template <class Num>
Num band_height(int K, const Direction<Num>& dir) {
  return from_int<Num>(2 * K) * dir.rise / dir.run;
}

template <class Num>
struct Normalized {
  Domain<Num> domain;
  BaseState<Num> state;
  /// Rows removed below the lowest brick.
  std::int64_t height_offset = 0;
  /// Bands of height 2K tan(theta) removed from the base depth.
  std::int64_t band_count = 0;
  /// Base depth removed in total: height_offset + h - h'.
  Num depth_removed{};
};

/// Representative with H = 0 and h in [0, 2K tan(theta)); vertical motion only drops rows.
template <class Num>
Normalized<Num> trim_normalize(const Domain<Num>& dom, BaseState<Num> state) {
  Normalized<Num> out;
  std::int64_t H = height_H(state.config);
  out.height_offset = H;
  out.domain = dom;
  if (H > 0) state.config = state.config.translated({0, -H});
  Num h = dom.h + from_int<Num>(H);
  if (state.dir.run != 0) {
    Num band = band_height(dom.K, state.dir);
    out.band_count = floor_int(h / band);
    h -= from_int<Num>(out.band_count) * band;
  }
  out.depth_removed = dom.h + from_int<Num>(H) - h;
  out.domain.h = h;
  out.state = std::move(state);
  return out;
}

enum class SeriesStatus { Complete, NonReturn, Singularity };

template <class Num>
struct EscapeSeries {
  /// H_0 .. H_n in the original (untrimmed) frame.
  std::vector<std::int64_t> H;
  /// tau_0 = 0 .. tau_n, cumulative vertical distance.
  std::vector<Num> tau_vertical;
  std::vector<ReturnKind> kinds;
  SeriesStatus status = SeriesStatus::Complete;
  std::string message;

  std::size_t size() const { return kinds.size(); }
};

/**
 * n_returns consecutive base returns. Each return is computed on the
 * normalized representative; heights and times are mapped back to the
 * original frame. `on_return`, when set, receives each normalized record.
 */
template <class Num>
EscapeSeries<Num> escape_series(const Domain<Num>& dom, BaseState<Num> state, std::int64_t n_returns,
                                const ReturnOptions& opt = {},
                                const std::function<void(const ReturnRecord<Num>&)>& on_return = nullptr) {
  EscapeSeries<Num> series;
  std::int64_t H = height_H(state.config);
  series.H.push_back(H);
  series.tau_vertical.push_back(Num{});
  series.H.reserve(static_cast<std::size_t>(n_returns) + 1);
  series.tau_vertical.reserve(static_cast<std::size_t>(n_returns) + 1);
  series.kinds.reserve(static_cast<std::size_t>(n_returns));
  Num tau{};
  Domain<Num> cur = dom;
  for (std::int64_t n = 0; n < n_returns; ++n) {
    Normalized<Num> norm = trim_normalize(cur, std::move(state));
    // The true excursion is longer by twice the depth removed from the original frame.
    Num removed = dom.h + from_int<Num>(H) - norm.domain.h;
    ReturnRecord<Num> rec;
    try {
      rec = base_return(norm.domain, std::move(norm.state), opt);
    } catch (const NonReturn& e) {
      series.status = SeriesStatus::NonReturn;
      series.message = e.what();
      return series;
    } catch (const SingularTrajectory<Num>& e) {
      series.status = SeriesStatus::Singularity;
      series.message = e.what();
      return series;
    }
    if (on_return) on_return(rec);
    tau += rec.T_vertical + 2 * removed;
    H += rec.delta_H;
    series.H.push_back(H);
    series.tau_vertical.push_back(tau);
    series.kinds.push_back(rec.kind);
    state = std::move(rec.next);
    cur = norm.domain;
  }
  return series;
}

struct EscapeEstimates {
  double rate_n = 0;
  double rate_t = 0;
};

/// H_n/n and H_n/sqrt(t_n) at the last index, with t = tau / sin(theta).
template <class Num>
EscapeEstimates escape_estimates(const EscapeSeries<Num>& s, double sin_theta) {
  if (s.kinds.empty()) throw InvalidArgument("empty escape series");
  const auto n = static_cast<double>(s.kinds.size());
  const auto Hn = static_cast<double>(s.H.back() - s.H.front());
  const double t = to_double(s.tau_vertical.back()) / sin_theta;
  return {Hn / n, t > 0 ? Hn / std::sqrt(t) : 0.0};
}

template <class Num>
void write_escape_csv(std::ostream& os, const EscapeSeries<Num>& s) {
  os << "n,H_n,tau_v_num,tau_v_den,kind\n";
  for (std::size_t n = 1; n < s.H.size(); ++n) {
    os << n << ',' << s.H[n] << ',';
    if constexpr (is_exact_v<Num>) {
      os << s.tau_vertical[n].get_num() << ',' << s.tau_vertical[n].get_den();
    } else {
      os << s.tau_vertical[n] << ",1";
    }
    os << ',' << return_kind_name(s.kinds[n - 1]) << '\n';
  }
}

/// Candidate starting abscissas K (2i+1)/2^m, spread in van der Corput order.
inline std::vector<Rational> dyadic_abscissas(int K, std::size_t count) {
  std::vector<Rational> out;
  if (count == 0) return out;
  int m = 1;
  while ((std::size_t{1} << (m - 1)) < count) ++m;
  const std::size_t odd = std::size_t{1} << (m - 1);
  for (std::size_t i = 0; i < odd && out.size() < count; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < m - 1; ++b) r |= ((i >> b) & 1u) << (m - 2 - b);
    out.push_back(make_rational(static_cast<std::int64_t>(K) * static_cast<std::int64_t>(2 * r + 1),
                                std::int64_t{1} << m));
  }
  return out;
}

}  // namespace briques
