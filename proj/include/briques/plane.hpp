#pragma once
/**
 * @file plane.hpp
 * @brief The breakout game on R^2 with every unit cell but the origin filled.
 *
 * Tools to record the order in which cells are destroyed, cut that sequence
 * into branches (one per half-band the ball keeps digging), detect ultimately
 * periodic increment sequences per branch and fit a band to the hole shape.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "briques/configuration.hpp"
#include "briques/dynamics.hpp"
#include "briques/geometry.hpp"
#include "briques/rational.hpp"

namespace briques {

/// Fractional position folded so that both velocity components are nonnegative.
template <class Num>
struct TorusPoint {
  Num fx{};
  Num fy{};

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

template <class Num>
TorusPoint<Num> factor_project(const SimState<Num>& s) {
  Num fx = frac(s.pos.x);
  Num fy = frac(s.pos.y);
  if (s.dir.sx < 0) fx = frac(Num(-fx));
  if (s.dir.sy < 0) fy = frac(Num(-fy));
  return {fx, fy};
}

/// Straight-line flow on the torus after a vertical distance v with speed ratio run/rise.
template <class Num>
TorusPoint<Num> torus_flow(const TorusPoint<Num>& p0, const Num& v, const Direction<Num>& dir) {
  return {frac(Num(p0.fx + v * dir.run / dir.rise)), frac(Num(p0.fy + v))};
}

template <class Num>
struct DestructionLog {
  std::vector<CellIndex> cells;
  Point<Num> start;
  Direction<Num> dir;
  /// Ended before max_hits (singularity or walk budget).
  bool truncated = false;
  bool singular = false;
  std::optional<Point<Num>> singular_point;
  std::int64_t events = 0;
};

struct RecordOptions {
  TracerOptions tracer;
  /// Events without any destruction before the run is abandoned.
  std::int64_t max_idle_events = 1'000'000;
};

/// Destroyed cells in order, starting from the full plane (or `initial`).
template <class Num>
DestructionLog<Num> record_orbit(const Point<Num>& start, const Direction<Num>& dir, std::int64_t max_hits,
                                 const RecordOptions& opt = {}, std::optional<Configuration> initial = std::nullopt) {
  if (!(start.x > 0 && start.x < 1 && start.y > 0 && start.y < 1)) {
    throw InvalidArgument("start must lie in the interior of cell (0,0)");
  }
  if (max_hits < 0) throw InvalidArgument("max_hits must be >= 0");
  DestructionLog<Num> log;
  log.start = start;
  log.dir = dir;
  if (max_hits == 0) return log;
  log.cells.reserve(static_cast<std::size_t>(max_hits));
  SimState<Num> s = make_state(start, dir, initial ? std::move(*initial) : Configuration::plane());
  const Domain<Num> dom = Domain<Num>::plane();
  std::int64_t idle = 0;
  while (static_cast<std::int64_t>(log.cells.size()) < max_hits) {
    Step<Num> step;
    try {
      step = next_event(s, dom, opt.tracer);
    } catch (const RunawayRay&) {
      log.truncated = true;
      break;
    }
    advance(s, step);
    ++log.events;
    if (step.event.kind == EventKind::Singularity) {
      log.truncated = true;
      log.singular = true;
      log.singular_point = step.hit;
      break;
    }
    if (step.event.kind == EventKind::BrickHit) {
      log.cells.push_back(step.event.cell);
      idle = 0;
    } else if (++idle > opt.max_idle_events) {
      log.truncated = true;
      break;
    }
  }
  return log;
}

inline std::int64_t chebyshev(const CellIndex& a, const CellIndex& b) {
  return std::max(std::abs(a.z1 - b.z1), std::abs(a.z2 - b.z2));
}

struct Branch {
  /// Angle of the branch's last cell seen from the origin.
  double alpha_hint = 0;
  std::vector<CellIndex> cells;
  /// Positions of the cells in the full log.
  std::vector<std::int64_t> hit_indices;
};

/**
 * Drops cells within `transient_radius` of the origin, then attaches each
 * remaining cell to the branch whose latest cell is nearest (within
 * `link_radius`), opening a new branch otherwise.
 */
inline std::vector<Branch> split_branches(const std::vector<CellIndex>& cells, std::int64_t link_radius,
                                          std::int64_t transient_radius) {
  std::vector<Branch> out;
  const CellIndex origin{0, 0};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellIndex& c = cells[i];
    if (chebyshev(c, origin) <= transient_radius) continue;
    std::size_t best = out.size();
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    for (std::size_t b = 0; b < out.size(); ++b) {
      std::int64_t d = chebyshev(out[b].cells.back(), c);
      if (d <= link_radius && d < best_d) {
        best = b;
        best_d = d;
      }
    }
    if (best == out.size()) out.emplace_back();
    out[best].cells.push_back(c);
    out[best].hit_indices.push_back(static_cast<std::int64_t>(i));
  }
  for (auto& b : out) {
    b.alpha_hint = std::atan2(static_cast<double>(b.cells.back().z2), static_cast<double>(b.cells.back().z1));
  }
  return out;
}

struct MotifReport {
  /// n0: the increments z_{i+1} - z_i are periodic for i >= n0.
  std::int64_t preperiod = 0;
  std::int64_t period = 0;
  /// z_{n0+p} - z_{n0}.
  CellIndex v{};
  /// Cells z_{n0}..z_{n0+p-1} relative to z_{n0}.
  std::vector<CellIndex> motif;
  /// Whole periods observed after the preperiod.
  std::int64_t periods_observed = 0;
};

/// Largest preperiod searched on a branch of n cells: the tail must stay at least n/2 + 2 max_period long.
inline std::int64_t effective_preperiod_cap(std::int64_t n, std::int64_t max_preperiod, std::int64_t max_period) {
  return std::min(max_preperiod, n / 2 - 2 * max_period);
}

/**
 * Smallest preperiod n0 such that the increments from n0 on are periodic
 * with some period p <= max_period; p is then the smallest period of that
 * tail. Every tail examined holds at least four copies of a candidate period.
 */
inline std::optional<MotifReport> detect_relative_periodicity(const std::vector<CellIndex>& cells,
                                                              std::int64_t max_preperiod, std::int64_t max_period) {
  const std::int64_t n = static_cast<std::int64_t>(cells.size());
  const std::int64_t cap = effective_preperiod_cap(n, max_preperiod, max_period);
  if (cap < 0 || n < 3) return std::nullopt;
  auto at = [&](std::int64_t i) -> const CellIndex& { return cells[static_cast<std::size_t>(i)]; };
  // Increments read backwards, so that every tail becomes a prefix and one border array serves all tails.
  const std::int64_t m = n - 1;
  std::vector<CellIndex> rev(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) rev[static_cast<std::size_t>(i)] = at(n - 1 - i) - at(n - 2 - i);
  std::vector<std::int64_t> border(static_cast<std::size_t>(m), 0);
  for (std::int64_t i = 1; i < m; ++i) {
    std::int64_t k = border[static_cast<std::size_t>(i - 1)];
    while (k > 0 && !(rev[static_cast<std::size_t>(i)] == rev[static_cast<std::size_t>(k)])) {
      k = border[static_cast<std::size_t>(k - 1)];
    }
    if (rev[static_cast<std::size_t>(i)] == rev[static_cast<std::size_t>(k)]) ++k;
    border[static_cast<std::size_t>(i)] = k;
  }
  for (std::int64_t n0 = 0; n0 <= cap; ++n0) {
    const std::int64_t len = m - n0;
    const std::int64_t p = len - border[static_cast<std::size_t>(len - 1)];
    if (p > max_period) continue;
    MotifReport r;
    r.preperiod = n0;
    r.period = p;
    r.v = at(n0 + p) - at(n0);
    for (std::int64_t i = 0; i < p; ++i) r.motif.push_back(at(n0 + i) - at(n0));
    r.periods_observed = (n - n0) / p;
    return r;
  }
  return std::nullopt;
}

/// Checks z_{n0+k} = z_{n0 + k mod p} + (k div p) v over the whole observed tail.
inline bool motif_replays(const std::vector<CellIndex>& cells, const MotifReport& r) {
  const std::int64_t n = static_cast<std::int64_t>(cells.size());
  if (r.period < 1 || r.preperiod < 0 || r.preperiod + r.period > n) return false;
  const CellIndex base = cells[static_cast<std::size_t>(r.preperiod)];
  for (std::int64_t k = 0; r.preperiod + k < n; ++k) {
    const std::int64_t turns = k / r.period;
    CellIndex expect = base + r.motif[static_cast<std::size_t>(k % r.period)] + CellIndex{turns * r.v.z1, turns * r.v.z2};
    if (!(cells[static_cast<std::size_t>(r.preperiod + k)] == expect)) return false;
  }
  return true;
}

struct BandFit {
  /// Direction of the band as an integer vector; slope = dir.z2 / dir.z1.
  CellIndex dir{};
  double slope = 0;
  /// Largest distance of a cell center to the central line.
  double width = 0;
  /// Extent along the band.
  double extent = 0;
  bool half = false;
  /// A point of the central line.
  double origin_x = 0;
  double origin_y = 0;
};

struct FitOptions {
  std::int64_t transient_radius = 8;
  /// Extent over full width needed to call the hole shape a band.
  double min_aspect = 10.0;
};

/// Narrowest band among the candidate directions, or nullopt if the shape is not elongated enough.
inline std::optional<BandFit> directional_fit(const std::vector<CellIndex>& cells, std::vector<CellIndex> candidates,
                                              const FitOptions& opt = {}) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& c : cells) {
    if (chebyshev(c, {0, 0}) > opt.transient_radius) {
      pts.emplace_back(static_cast<double>(c.z1), static_cast<double>(c.z2));
    }
  }
  if (pts.empty()) return std::nullopt;
  for (CellIndex axis : {CellIndex{1, 0}, CellIndex{0, 1}, CellIndex{1, 1}, CellIndex{1, -1}}) {
    candidates.push_back(axis);
  }
  std::optional<BandFit> best;
  for (CellIndex d : candidates) {
    if (d.z1 == 0 && d.z2 == 0) continue;
    if (d.z1 < 0 || (d.z1 == 0 && d.z2 < 0)) d = CellIndex{-d.z1, -d.z2};
    const double len = std::hypot(static_cast<double>(d.z1), static_cast<double>(d.z2));
    const double ux = d.z1 / len, uy = d.z2 / len;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, along_lo = lo, along_hi = -lo;
    for (const auto& [x, y] : pts) {
      const double across = -uy * x + ux * y;
      const double along = ux * x + uy * y;
      lo = std::min(lo, across);
      hi = std::max(hi, across);
      along_lo = std::min(along_lo, along);
      along_hi = std::max(along_hi, along);
    }
    BandFit f;
    f.dir = d;
    f.slope = d.z1 == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(d.z2) / d.z1;
    f.width = (hi - lo) / 2;
    f.extent = along_hi - along_lo;
    f.half = along_lo >= 0 || along_hi <= 0;
    const double mid = (hi + lo) / 2;
    f.origin_x = 0.5 - uy * mid;
    f.origin_y = 0.5 + ux * mid;
    if (!best || f.width < best->width) best = f;
  }
  if (best->extent < opt.min_aspect * std::max(2 * best->width, 1.0)) return std::nullopt;
  return best;
}

struct ClassifyOptions {
  std::int64_t transient_radius = 8;
  /// 0 selects 2(p+q) for the slope p/q.
  std::int64_t link_radius = 0;
  std::int64_t max_preperiod = 10'000;
  std::int64_t max_period = 256;
  /// Branches shorter than this fraction of the post-transient log are ignored.
  double min_branch_share = 0.05;
  double min_aspect = 10.0;
};

inline std::int64_t default_link_radius(const Slope& s) {
  if (s.is_vertical()) return 2;
  return 2 * (s.p() + s.q());
}

enum class OrbitClass { Directional, DigsOnly, Unknown };

inline const char* orbit_class_name(OrbitClass c) {
  switch (c) {
    case OrbitClass::Directional: return "directional";
    case OrbitClass::DigsOnly: return "digs_only";
    case OrbitClass::Unknown: return "unknown";
  }
  return "?";
}

struct BranchReport {
  Branch branch;
  std::optional<MotifReport> motif;
};

struct Classification {
  OrbitClass kind = OrbitClass::Unknown;
  std::vector<BranchReport> branches;
  std::optional<BandFit> fit;
  /// More than two persistent branches: incompatible with a shape covered by half-bands.
  bool excess_branches = false;

  std::size_t branch_count() const { return branches.size(); }
  bool certified() const {
    return !branches.empty() &&
           std::all_of(branches.begin(), branches.end(), [](const BranchReport& b) { return b.motif.has_value(); });
  }
};

inline CellIndex primitive(CellIndex v) {
  std::int64_t g = std::gcd(std::abs(v.z1), std::abs(v.z2));
  return g == 0 ? v : CellIndex{v.z1 / g, v.z2 / g};
}

/**
 * Branches that advance in the same direction dig the same half-band (lanes
 * farther apart than the link radius); they are merged in hit order and
 * checked again as one sequence.
 */
inline std::vector<BranchReport> merge_half_bands(std::vector<BranchReport> branches, const ClassifyOptions& opt) {
  std::vector<BranchReport> out;
  std::vector<bool> used(branches.size(), false);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    if (!branches[i].motif) {
      out.push_back(std::move(branches[i]));
      continue;
    }
    const CellIndex dir = primitive(branches[i].motif->v);
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < branches.size(); ++j) {
      if (!used[j] && branches[j].motif && primitive(branches[j].motif->v) == dir) {
        group.push_back(j);
        used[j] = true;
      }
    }
    if (group.size() == 1) {
      out.push_back(std::move(branches[i]));
      continue;
    }
    std::vector<std::pair<std::int64_t, CellIndex>> merged;
    for (std::size_t g : group) {
      const Branch& b = branches[g].branch;
      for (std::size_t k = 0; k < b.cells.size(); ++k) merged.emplace_back(b.hit_indices[k], b.cells[k]);
    }
    std::sort(merged.begin(), merged.end());
    BranchReport r;
    for (const auto& [idx, cell] : merged) {
      r.branch.hit_indices.push_back(idx);
      r.branch.cells.push_back(cell);
    }
    r.branch.alpha_hint = std::atan2(static_cast<double>(r.branch.cells.back().z2),
                                     static_cast<double>(r.branch.cells.back().z1));
    r.motif = detect_relative_periodicity(r.branch.cells, opt.max_preperiod, opt.max_period);
    if (r.motif) {
      out.push_back(std::move(r));
    } else {
      for (std::size_t g : group) out.push_back(std::move(branches[g]));
    }
  }
  return out;
}

/// Persistent branches with their periodicity certificates and a band fit.
inline Classification classify_orbit(const std::vector<CellIndex>& cells, const Slope& slope,
                                     const ClassifyOptions& opt = {}) {
  Classification out;
  const std::int64_t link = opt.link_radius > 0 ? opt.link_radius : default_link_radius(slope);
  std::vector<Branch> all = split_branches(cells, link, opt.transient_radius);
  std::size_t tail = 0;
  for (const auto& b : all) tail += b.cells.size();
  for (auto& b : all) {
    if (static_cast<double>(b.cells.size()) >= opt.min_branch_share * static_cast<double>(tail) && b.cells.size() >= 3) {
      out.branches.push_back({std::move(b), std::nullopt});
    }
  }
  out.excess_branches = out.branches.size() > 2;
  if (out.branches.empty()) return out;
  for (auto& br : out.branches) {
    br.motif = detect_relative_periodicity(br.branch.cells, opt.max_preperiod, opt.max_period);
  }
  out.branches = merge_half_bands(std::move(out.branches), opt);
  out.excess_branches = out.branches.size() > 2;
  std::vector<CellIndex> candidates;
  for (auto& br : out.branches) {
    if (br.motif && (br.motif->v.z1 != 0 || br.motif->v.z2 != 0)) candidates.push_back(br.motif->v);
  }
  if (!slope.is_vertical()) {
    const auto p = slope.p(), q = slope.q();
    for (CellIndex d : {CellIndex{q, p}, CellIndex{q, -p}, CellIndex{p, q}, CellIndex{p, -q}}) candidates.push_back(d);
  }
  out.fit = directional_fit(cells, candidates, {opt.transient_radius, opt.min_aspect});
  if (!out.certified()) return out;
  out.kind = out.fit ? OrbitClass::Directional : OrbitClass::DigsOnly;
  return out;
}

/// Unit direction v(theta) for a start in cell (0,0), both components positive.
inline Direction<Rational> plane_direction(const Slope& s) { return make_direction(s, +1, +1); }

/// Start position plus holes opened next to the origin before the run.
struct InitialCondition {
  Point<Rational> start;
  std::vector<CellIndex> extra_holes;

  Configuration configuration() const {
    std::vector<CellIndex> holes = extra_holes;
    holes.push_back({0, 0});
    return Configuration::plane_with_holes(holes);
  }
};

/// Starts (i/d, j/d), i, j = 1..d-1, in row-major order.
inline std::vector<Point<Rational>> start_grid(std::int64_t d) {
  std::vector<Point<Rational>> out;
  for (std::int64_t i = 1; i < d; ++i) {
    for (std::int64_t j = 1; j < d; ++j) out.push_back({make_rational(i, d), make_rational(j, d)});
  }
  return out;
}

/// The start grid with the full plane first, then with one extra hole among the 8 neighbours of the origin.
inline std::vector<InitialCondition> default_initial_conditions(std::int64_t d = 7) {
  std::vector<InitialCondition> out;
  for (const auto& p : start_grid(d)) out.push_back({p, {}});
  for (std::int64_t a = -1; a <= 1; ++a) {
    for (std::int64_t b = -1; b <= 1; ++b) {
      if (a == 0 && b == 0) continue;
      for (const auto& p : start_grid(d)) out.push_back({p, {{a, b}}});
    }
  }
  return out;
}

template <class Num = Rational>
struct GridResult {
  InitialCondition initial;
  DestructionLog<Num> log;
  Classification classification;
  bool done = false;
};

/**
 * Records and classifies one orbit per initial condition, fanned out over
 * `workers` threads. Results come back in input order. With `stop_when`
 * set, conditions not yet started are skipped once a result satisfies it
 * (their entries keep an empty log).
 */
template <class Num = Rational>
std::vector<GridResult<Num>> grid_search(const Slope& slope, const std::vector<InitialCondition>& inits,
                                         std::int64_t max_hits, const ClassifyOptions& copt, unsigned workers,
                                         const RecordOptions& ropt = {},
                                         const std::function<bool(const GridResult<Num>&)>& stop_when = nullptr) {
  std::vector<GridResult<Num>> results(inits.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto work = [&] {
    for (std::size_t i = next++; i < inits.size() && !stop; i = next++) {
      GridResult<Num>& r = results[i];
      r.initial = inits[i];
      const Point<Num> start{from_rational<Num>(inits[i].start.x), from_rational<Num>(inits[i].start.y)};
      r.log = record_orbit(start, direction_for<Num>(slope, +1, +1), max_hits, ropt, inits[i].configuration());
      r.classification = classify_orbit(r.log.cells, slope, copt);
      r.done = true;
      if (stop_when && stop_when(r)) stop = true;
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(inits.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

template <class Num>
void write_log_csv(std::ostream& os, const DestructionLog<Num>& log) {
  os << "hit_index,z1,z2\n";
  for (std::size_t i = 0; i < log.cells.size(); ++i) os << i << ',' << log.cells[i].z1 << ',' << log.cells[i].z2 << '\n';
}

}  // namespace briques
