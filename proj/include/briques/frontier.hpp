#pragma once
/**
 * @file frontier.hpp
 * @brief Reparametrized strip dynamics on a union of 2-tori indexed by frontier rows.
 *
 * Under the slope threshold, an equilibrated configuration is described by
 * its lowest row H and the occupancy xi of that row. A base state then maps
 * (via Psi) to a point (x, h, xi) where
 *  - x is the unfolded abscissa divided by 2K (a second copy of [0,K] carries
 *    the left-moving states), taken mod 1,
 *  - h is (H + depth) divided by the band height 2K tan(theta), mod 1.
 * The base return map becomes a piecewise translation phi on these tori.
 *
 * Columns in the unfolded coordinate: k = floor(2K x) in [0, 2K) covers
 * strip column k when k < K (moving right) and column 2K-k-1 otherwise.
 */

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "briques/configuration.hpp"
#include "briques/dynamics.hpp"
#include "briques/geometry.hpp"
#include "briques/rational.hpp"
#include "briques/strip.hpp"

namespace briques {

class OutOfDomain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoReturn : public std::runtime_error {
 public:
  explicit NoReturn(std::int64_t steps)
      : std::runtime_error("no return to the target within " + std::to_string(steps) + " steps") {}
};

/// Occupancy of one row of width K, bit i = column i.
struct Frontier {
  int K = 2;
  std::uint32_t mask = 3;

  static Frontier full(int K) { return {K, (K >= 32 ? 0xFFFFFFFFu : ((1u << K) - 1u))}; }
  static Frontier from_bits(const std::vector<int>& bits) {
    Frontier f{static_cast<int>(bits.size()), 0};
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) f.mask |= 1u << i;
    }
    return f;
  }
  bool test(int i) const { return (mask >> i) & 1u; }
  int count() const { return __builtin_popcount(mask); }
  Frontier without(int i) const { return {K, mask & ~(1u << i)}; }
  bool is_full() const { return mask == full(K).mask; }
  /// Index in the reverse-lexicographic enumeration: full row -> 0.
  std::uint32_t index() const { return full(K).mask - mask; }

  friend bool operator==(const Frontier&, const Frontier&) = default;
  friend auto operator<=>(const Frontier&, const Frontier&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Frontier& f) {
  os << '(';
  for (int i = 0; i < f.K; ++i) os << (i ? "," : "") << (f.test(i) ? 1 : 0);
  return os << ')';
}

template <class Num>
struct FrontierPoint {
  Num x{};
  Num h{};
  Frontier xi;

  friend bool operator==(const FrontierPoint&, const FrontierPoint&) = default;
};

template <class Num>
std::ostream& operator<<(std::ostream& os, const FrontierPoint<Num>& p) {
  return os << '[' << p.x << ", " << p.h << ", " << p.xi << ']';
}

/// One interval of the partition of the circle for fixed (h, xi):
/// x in [start, start+length) maps to (x + 2h + gamma, h + eps_alpha * alpha, xi_next).
template <class Num>
struct PieceSpec {
  int k = 0;
  int epsilon = 0;
  Num start{};
  Num length{};
  Num gamma{};
  int eps_alpha = 0;
  Frontier xi_next;
};

/// Fold of an unfolded column index in [0, 2K) to a strip column.
inline int fold_column(int k, int K) { return k < K ? k : 2 * K - k - 1; }

template <class Num>
class FrontierMap {
 public:
  FrontierMap(int K, Slope slope) : K_(K), slope_(slope) {
    if (K < 1) throw InvalidArgument("strip width K must be >= 1");
    if (slope.is_vertical()) throw InvalidArgument("the frontier map needs a finite slope");
    alpha_raw_ = from_ratio<Num>(slope.q(), 2 * static_cast<std::int64_t>(K) * slope.p());
    alpha_ = frac(alpha_raw_);
  }

  int K() const { return K_; }
  const Slope& slope() const { return slope_; }

  /// q/(2Kp), reduced mod 1; alpha_unreduced keeps the integer part.
  const Num& alpha() const { return alpha_; }
  const Num& alpha_unreduced() const { return alpha_raw_; }

  /// Added to every beta value; zero except for fault-injection checks.
  Num beta_bias{};

  Num beta(const Frontier& xi, int k) const {
    Num s{};
    for (int i = 0; i < k; ++i) {
      if (xi.test(i)) s += from_ratio<Num>(i + 1, K_);
    }
    for (int i = k + 1; i < K_; ++i) {
      if (xi.test(i)) s -= from_ratio<Num>(i, K_);
    }
    return frac(Num(s + beta_bias));
  }

  /// Unfolded column reached at height 0 from (x, h).
  int column(const Num& x, const Num& h) const { return static_cast<int>(floor_int(Num(frac(Num(x + h)) * (2 * K_)))); }

  /// The map, evaluated from the column reached at height 0 and, on hole entry, the column hit one row higher.
  FrontierPoint<Num> phi(const FrontierPoint<Num>& p) const {
    check(p);
    const Num two_h = 2 * p.h;
    const int k = column(p.x, p.h);
    const int kt = fold_column(k, K_);
    if (p.xi.test(kt)) {
      if (p.xi.count() > 1) return {frac(Num(p.x + two_h)), p.h, p.xi.without(kt)};
      return {frac(Num(p.x + two_h)), frac(Num(p.h + alpha_)), Frontier::full(K_)};
    }
    const Num b = beta(p.xi, kt);
    const int m = column(Num(p.x + alpha_ + b), p.h);
    return {frac(Num(p.x + two_h + 2 * alpha_ + b)), frac(Num(p.h + alpha_)),
            Frontier::full(K_).without(fold_column(m, K_))};
  }

  /// Partition of the circle for fixed (h, xi), endpoints as left-closed right-open arcs.
  std::vector<PieceSpec<Num>> pieces(const Num& h, const Frontier& xi) const {
    std::vector<PieceSpec<Num>> out;
    const Num width = from_ratio<Num>(1, 2 * K_);
    for (int k = 0; k < 2 * K_; ++k) {
      const int kt = fold_column(k, K_);
      const Num left = frac(Num(from_ratio<Num>(k, 2 * K_) - h));
      if (xi.test(kt)) {
        PieceSpec<Num> p;
        p.k = k;
        p.start = left;
        p.length = width;
        p.gamma = Num{};
        p.eps_alpha = xi.count() == 1 ? 1 : 0;
        p.xi_next = xi.count() == 1 ? Frontier::full(K_) : xi.without(kt);
        out.push_back(p);
        continue;
      }
      const Num b = beta(xi, kt);
      const Num scaled = Num(alpha_ + b) * (2 * K_);
      const std::int64_t shift = floor_int(scaled);
      const Num gamma_star = Num(scaled - from_int<Num>(shift)) / (2 * K_);
      const int ell = static_cast<int>(((k + shift) % (2 * K_) + 2 * K_) % (2 * K_));
      for (int eps = 0; eps < 2; ++eps) {
        PieceSpec<Num> p;
        p.k = k;
        p.epsilon = eps;
        p.start = eps == 0 ? left : frac(Num(from_ratio<Num>(k + 1, 2 * K_) - h - gamma_star));
        p.length = eps == 0 ? Num(width - gamma_star) : gamma_star;
        p.gamma = Num(2 * alpha_ + b);
        p.eps_alpha = 1;
        p.xi_next = Frontier::full(K_).without(fold_column((ell + eps) % (2 * K_), K_));
        if (p.length > 0) out.push_back(p);
      }
    }
    return out;
  }

  /// The map evaluated through the explicit partition.
  FrontierPoint<Num> phi_by_pieces(const FrontierPoint<Num>& p) const {
    check(p);
    for (const auto& piece : pieces(p.h, p.xi)) {
      if (frac(Num(p.x - piece.start)) < piece.length) {
        return {frac(Num(p.x + 2 * p.h + piece.gamma)), frac(Num(p.h + piece.eps_alpha * alpha_)), piece.xi_next};
      }
    }
    throw std::logic_error("partition does not cover the circle");
  }

  /// 1 when the return raises the lowest row.
  int deltaH_indicator(const FrontierPoint<Num>& p) const {
    const int kt = fold_column(column(p.x, p.h), K_);
    return (!p.xi.test(kt) || p.xi.count() == 1) ? 1 : 0;
  }

  FrontierPoint<Num> psi(const Domain<Num>& dom, const BaseState<Num>& s) const {
    if (dom.K != K_) throw InvalidArgument("domain width differs from the map's K");
    if (!is_equilibrated(s.config)) throw NotEquilibrated("psi needs an equilibrated configuration");
    const std::int64_t H = height_H(s.config);
    FrontierPoint<Num> out;
    const Num u = s.x1 / (2 * K_);
    out.x = frac(s.dir.sx > 0 ? u : Num(1 - u));
    out.h = frac(Num((from_int<Num>(H) + dom.h) * alpha_raw_));
    out.xi = Frontier{K_, 0};
    for (int i = 0; i < K_; ++i) {
      if (s.config.is_present({i, H})) out.xi.mask |= 1u << i;
    }
    return out;
  }

  /// Canonical base state with H = 0 and depth in [0, 2K tan(theta)).
  std::pair<Domain<Num>, BaseState<Num>> psi_star_inverse(const FrontierPoint<Num>& p) const {
    check(p);
    Num depth = p.h / alpha_raw_;
    std::vector<CellIndex> holes;
    for (int i = 0; i < K_; ++i) {
      if (!p.xi.test(i)) holes.push_back({i, 0});
    }
    BaseState<Num> s;
    s.config = Configuration::strip_with_holes(K_, holes);
    const bool right = !(p.x > from_ratio<Num>(1, 2));
    s.x1 = right ? Num(p.x * (2 * K_)) : Num((1 - p.x) * (2 * K_));
    s.dir = direction(right ? +1 : -1);
    return {Domain<Num>::strip(K_, depth), std::move(s)};
  }

  Direction<Num> direction(int sx) const {
    if constexpr (is_exact_v<Num>) {
      return make_direction(slope_, sx, +1);
    } else {
      return Direction<double>{slope_.cos(), slope_.sin(), sx, +1};
    }
  }

 private:
  void check(const FrontierPoint<Num>& p) const {
    if (p.xi.K != K_) throw InvalidArgument("frontier width differs from the map's K");
    if (p.xi.mask == 0) throw InvalidArgument("an empty frontier row is not a frontier");
  }

  int K_;
  Slope slope_;
  Num alpha_raw_;
  Num alpha_;
};

/// Stand-alone K = 2 form of the map, written with I_g = J0 u J3 (column 0) and I_d = J1 u J2 (column 1).
template <class Num>
FrontierPoint<Num> phi_k2(const FrontierPoint<Num>& p, const Num& alpha) {
  auto in_g = [](const Num& v) {
    Num f = frac(v);
    return f < from_ratio<Num>(1, 4) || !(f < from_ratio<Num>(3, 4));
  };
  const Num a = frac(alpha);
  const Num gamma = 2 * p.h;
  const Num beta = Num(2 * p.h + from_ratio<Num>(1, 2) + 2 * a);
  const Num h_up = frac(Num(p.h + a));
  const Num half = from_ratio<Num>(1, 2);
  const Frontier full{2, 3}, left_hole{2, 2}, right_hole{2, 1};
  const bool g = in_g(Num(p.x + p.h));
  if (p.xi == full) {
    return {frac(Num(p.x + gamma)), p.h, g ? left_hole : right_hole};
  }
  const bool hole_entry = p.xi == left_hole ? g : !g;
  if (!hole_entry) return {frac(Num(p.x + gamma)), h_up, full};
  const bool lands_g = in_g(Num(p.x + p.h + a + half));
  return {frac(Num(p.x + beta)), h_up, lands_g ? left_hole : right_hole};
}

/// Outcome of the lockstep comparison of the strip return map and phi.
template <class Num>
struct ConjugacyReport {
  std::int64_t steps = 0;
  bool mismatch = false;
  std::int64_t mismatch_step = -1;
  FrontierPoint<Num> lhs;
  FrontierPoint<Num> rhs;
  std::int64_t deltaH_mismatches = 0;
  std::int64_t height_gain = 0;
  std::int64_t indicator_sum = 0;
  bool singular = false;
  std::string message;

  bool ok() const { return !mismatch && deltaH_mismatches == 0 && !singular; }
};

/// Equality of frontier points, or closeness on the torus when tolerance > 0.
template <class Num>
bool same_point(const FrontierPoint<Num>& a, const FrontierPoint<Num>& b, double tolerance = 0) {
  if (tolerance <= 0) return a == b;
  auto circle = [](double u, double v) {
    double d = std::abs(u - v);
    return std::min(d, 1.0 - d);
  };
  return a.xi == b.xi && circle(to_double(a.x), to_double(b.x)) <= tolerance &&
         circle(to_double(a.h), to_double(b.h)) <= tolerance;
}

/**
 * Iterates the strip return map and phi side by side n times and compares
 * phi(Psi(s)) with Psi(return(s)) at every step: exactly, or up to
 * `tolerance` on the torus.
 */
template <class Num>
ConjugacyReport<Num> conjugacy_check(const FrontierMap<Num>& map, const Domain<Num>& dom, BaseState<Num> state,
                                     std::int64_t n, const ReturnOptions& opt = {}, double tolerance = 0) {
  ConjugacyReport<Num> rep;
  Domain<Num> cur = dom;
  for (std::int64_t i = 0; i < n; ++i) {
    Normalized<Num> norm = trim_normalize(cur, std::move(state));
    FrontierPoint<Num> here = map.psi(norm.domain, norm.state);
    ReturnRecord<Num> rec;
    try {
      rec = base_return(norm.domain, norm.state, opt);
    } catch (const SingularTrajectory<Num>& e) {
      rep.singular = true;
      rep.message = e.what();
      return rep;
    }
    FrontierPoint<Num> predicted = map.phi(here);
    FrontierPoint<Num> actual = map.psi(norm.domain, rec.next);
    int ind = map.deltaH_indicator(here);
    rep.indicator_sum += ind;
    rep.height_gain += rec.delta_H;
    if (ind != rec.delta_H) ++rep.deltaH_mismatches;
    rep.steps = i + 1;
    if (!same_point(predicted, actual, tolerance)) {
      rep.mismatch = true;
      rep.mismatch_step = i;
      rep.lhs = predicted;
      rep.rhs = actual;
      return rep;
    }
    state = std::move(rec.next);
    cur = norm.domain;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Arcs on the circle, for the K = 2, tan = 1/4 analysis near h = 0.

/// Half-open arc [start, start + length) on R/Z tagged with a frontier row.
struct Arc {
  Rational start;
  Rational length;
  Frontier xi;

  bool contains(const Rational& x) const { return frac(Rational(x - start)) < length; }
  /// Membership in the closed arc.
  bool contains_closed(const Rational& x) const {
    return length >= 1 || !(frac(Rational(x - start)) > length);
  }
};

inline Arc make_arc(const Rational& a, const Rational& b, Frontier xi) {
  Rational s = frac(a);
  Rational len = frac(Rational(b - a));
  if (len == 0 && a != b) len = 1;
  return {s, len, xi};
}

/// Union of arcs with overlaps merged, grouped by frontier row and sorted.
class ArcSet {
 public:
  ArcSet() = default;
  explicit ArcSet(std::vector<Arc> arcs) {
    for (auto& a : arcs) add(std::move(a));
  }

  void add(Arc a) {
    if (a.length <= 0) return;
    if (a.length >= 1) {
      by_xi_[a.xi] = {{Rational(0), Rational(1)}};
      return;
    }
    // Split a wrapping arc into [start,1) and [0,rest).
    Rational end = a.start + a.length;
    if (end > 1) {
      insert(a.xi, a.start, Rational(1));
      insert(a.xi, Rational(0), Rational(end - 1));
    } else {
      insert(a.xi, a.start, end);
    }
  }

  void add(const ArcSet& other) {
    for (const auto& [xi, segs] : other.by_xi_) {
      for (const auto& [a, b] : segs) insert(xi, a, b);
    }
  }

  Rational measure() const {
    Rational m = 0;
    for (const auto& [xi, segs] : by_xi_) {
      for (const auto& [a, b] : segs) m += b - a;
    }
    return m;
  }

  Rational measure(const Frontier& xi) const {
    Rational m = 0;
    auto it = by_xi_.find(xi);
    if (it == by_xi_.end()) return m;
    for (const auto& [a, b] : it->second) m += b - a;
    return m;
  }

  bool contains(const Rational& x, const Frontier& xi) const {
    auto it = by_xi_.find(xi);
    if (it == by_xi_.end()) return false;
    Rational f = frac(x);
    for (const auto& [a, b] : it->second) {
      if (!(f < a) && f < b) return true;
    }
    return false;
  }

  bool contains_closed(const Rational& x, const Frontier& xi) const {
    auto it = by_xi_.find(xi);
    if (it == by_xi_.end()) return false;
    Rational f = frac(x);
    for (const auto& [a, b] : it->second) {
      if (!(f < a) && !(f > b)) return true;
      if (b == 1 && f == 0) return true;
    }
    return false;
  }

  /// Every arc of `other` lies inside this set.
  bool includes(const ArcSet& other) const {
    for (const auto& [xi, segs] : other.by_xi_) {
      auto it = by_xi_.find(xi);
      for (const auto& [a, b] : segs) {
        if (it == by_xi_.end()) return false;
        bool inside = false;
        for (const auto& [c, d] : it->second) {
          if (!(a < c) && !(b > d)) inside = true;
        }
        if (!inside) return false;
      }
    }
    return true;
  }

  /// Components as arcs on the circle (segments touching across 0 are joined).
  std::vector<Arc> components() const {
    std::vector<Arc> out;
    for (const auto& [xi, segs] : by_xi_) {
      std::vector<std::pair<Rational, Rational>> s = segs;
      if (s.size() > 1 && s.front().first == 0 && s.back().second == 1) {
        s.front().first = s.back().first - 1;
        s.pop_back();
      }
      for (const auto& [a, b] : s) out.push_back({frac(a), b - a, xi});
    }
    return out;
  }

  friend bool operator==(const ArcSet& a, const ArcSet& b) { return a.by_xi_ == b.by_xi_; }

 private:
  void insert(const Frontier& xi, Rational a, Rational b) {
    if (!(a < b)) return;
    auto& segs = by_xi_[xi];
    segs.emplace_back(std::move(a), std::move(b));
    std::sort(segs.begin(), segs.end());
    std::vector<std::pair<Rational, Rational>> merged;
    for (auto& s : segs) {
      if (!merged.empty() && !(s.first > merged.back().second)) {
        if (s.second > merged.back().second) merged.back().second = s.second;
      } else {
        merged.push_back(std::move(s));
      }
    }
    segs = std::move(merged);
  }

  std::map<Frontier, std::vector<std::pair<Rational, Rational>>> by_xi_;
};

/// Image of a set of arcs of one h-fiber under phi, cut along the partition pieces.
inline ArcSet push_forward(const FrontierMap<Rational>& map, const ArcSet& set, const Rational& h) {
  ArcSet out;
  for (const Arc& arc : set.components()) {
    for (const auto& piece : map.pieces(h, arc.xi)) {
      // Intersection of [arc.start, +len) with [piece.start, +piece.len) on the circle.
      for (int wrap = -1; wrap <= 1; ++wrap) {
        Rational a0 = arc.start, a1 = arc.start + arc.length;
        Rational p0 = piece.start + wrap, p1 = piece.start + piece.length + wrap;
        Rational lo = a0 > p0 ? a0 : p0;
        Rational hi = a1 < p1 ? a1 : p1;
        if (lo < hi) {
          Rational shift = 2 * h + piece.gamma;
          out.add(Arc{frac(Rational(lo + shift)), hi - lo, piece.xi_next});
        }
      }
    }
  }
  return out;
}

/// G_h = [3/4 + 5h, 1/4 - h] on the (0,1) circle, of length 1/2 - 6h (empty when that is negative).
inline Arc arc_Gh(const Rational& h) {
  Rational len = make_rational(1, 2) - 6 * h;
  if (len < 0) len = 0;
  return {frac(Rational(make_rational(3, 4) + 5 * h)), len, Frontier{2, 2}};
}

/// The union of phi^k(G_h) for k = 0..4.
inline ArcSet orbit_set_Gh(const FrontierMap<Rational>& map, const Rational& h) {
  ArcSet current({arc_Gh(h)});
  ArcSet all = current;
  for (int k = 1; k <= 4; ++k) {
    current = push_forward(map, current, h);
    all.add(current);
  }
  return all;
}

/// Two-branch induced map on G_h: x + 4h on [3/4+5h, 1/4-5h), x + 10h - 1/2 on [1/4-5h, 1/4-h].
inline Rational induced_closed_form_Gh(const Rational& x, const Rational& h) {
  if (!(h < make_rational(1, 10)) || h < 0) throw OutOfDomain("induced map needs 0 <= h < 1/10");
  Arc g = arc_Gh(h);
  if (g.length == 0 || !g.contains_closed(x)) throw OutOfDomain("point outside G_h");
  const Rational first = make_rational(1, 2) - 10 * h;
  if (frac(Rational(x - g.start)) < first) return frac(Rational(x + 4 * h));
  return frac(Rational(x + 10 * h - make_rational(1, 2)));
}

/// Angle of the rotation the induced map is conjugate to: 8h/(1-12h).
inline Rational rotation_angle_Gh(const Rational& h) {
  if (!(h < make_rational(1, 10))) throw OutOfDomain("rotation angle needs h < 1/10");
  return 8 * h / (1 - 12 * h);
}

/// First return of `map` to `target`, counted in iterations.
template <class Num, class Map, class Target>
std::pair<FrontierPoint<Num>, std::int64_t> induce(const Map& map, const Target& target, FrontierPoint<Num> p,
                                                    std::int64_t max_steps) {
  if (!target(p)) throw OutOfDomain("starting point outside the target set");
  for (std::int64_t n = 1; n <= max_steps; ++n) {
    p = map(p);
    if (target(p)) return {p, n};
  }
  throw NoReturn(max_steps);
}

/// One sampled point of an orbit.
template <class Num>
struct CloudPoint {
  FrontierPoint<Num> point;
  std::int64_t orbit_id = 0;
  std::int64_t iterate = 0;
};

/// Iterates each initial point `burn` times, then records `keep` iterates.
template <class Num>
std::vector<CloudPoint<Num>> limit_set_sample(const FrontierMap<Num>& map, const std::vector<FrontierPoint<Num>>& starts,
                                              std::int64_t burn, std::int64_t keep) {
  std::vector<CloudPoint<Num>> out;
  out.reserve(starts.size() * static_cast<std::size_t>(keep));
  for (std::size_t id = 0; id < starts.size(); ++id) {
    FrontierPoint<Num> p = starts[id];
    for (std::int64_t i = 0; i < burn; ++i) p = map.phi(p);
    for (std::int64_t i = 0; i < keep; ++i) {
      out.push_back({p, static_cast<std::int64_t>(id), burn + i});
      p = map.phi(p);
    }
  }
  return out;
}

template <class Num>
void write_cloud_csv(std::ostream& os, const std::vector<CloudPoint<Num>>& cloud) {
  os << "x,h,xi_index,orbit_id,iterate_index\n";
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& c : cloud) {
    buf.str("");
    buf << to_double(c.point.x) << ',' << to_double(c.point.h);
    os << buf.str() << ',' << c.point.xi.index() << ',' << c.orbit_id << ',' << c.iterate << '\n';
  }
}

}  // namespace briques
