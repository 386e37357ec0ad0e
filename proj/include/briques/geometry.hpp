#pragma once
/**
 * @file geometry.hpp
 * @brief Lattice vocabulary: slopes, directions, points, cells and faces.
 *
 * Bricks are the unit squares [z1, z1+1] x [z2, z2+1]. Every wall of the
 * system is horizontal or vertical, so a trajectory only ever uses the four
 * headings (+-run, +-rise) obtained from its initial one by sign flips.
 */

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "briques/rational.hpp"

namespace briques {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact tangent of the reduced angle in [0, pi/2]: p/q in lowest terms, or vertical.
class Slope {
 public:
  static Slope rational(std::int64_t p, std::int64_t q) {
    if (q <= 0) throw InvalidArgument("slope denominator must be positive");
    if (p <= 0) throw InvalidArgument("slope numerator must be >= 1 (horizontal motion is excluded)");
    std::int64_t g = std::gcd(p, q);
    return Slope(p / g, q / g, false);
  }
  static Slope vertical() { return Slope(1, 0, true); }

  /// "p/q", "p" or "vertical".
  static Slope parse(const std::string& text) {
    if (text == "vertical" || text == "inf") return vertical();
    Rational r = parse_rational(text);
    return rational(to_int64(r.get_num()), to_int64(r.get_den()));
  }

  bool is_vertical() const { return vertical_; }
  /// Vertical rise per step; 1 for a vertical slope.
  std::int64_t p() const { return p_; }
  /// Horizontal run per step; 0 for a vertical slope.
  std::int64_t q() const { return q_; }

  Rational tan() const {
    if (vertical_) throw InvalidArgument("vertical slope has no finite tangent");
    return make_rational(p_, q_);
  }
  double sin() const {
    if (vertical_) return 1.0;
    return static_cast<double>(p_) / std::hypot(static_cast<double>(p_), static_cast<double>(q_));
  }
  double cos() const {
    if (vertical_) return 0.0;
    return static_cast<double>(q_) / std::hypot(static_cast<double>(p_), static_cast<double>(q_));
  }

  /// Strict order on tangents; vertical is the largest slope.
  friend bool operator<(const Slope& a, const Slope& b) {
    if (a.vertical_ || b.vertical_) return !a.vertical_ && b.vertical_;
    return static_cast<__int128>(a.p_) * b.q_ < static_cast<__int128>(b.p_) * a.q_;
  }
  friend bool operator==(const Slope&, const Slope&) = default;

  std::string str() const {
    return vertical_ ? std::string("vertical") : std::to_string(p_) + "/" + std::to_string(q_);
  }

 private:
  Slope(std::int64_t p, std::int64_t q, bool vertical) : p_(p), q_(q), vertical_(vertical) {}
  std::int64_t p_;
  std::int64_t q_;
  bool vertical_;
};

/**
 * Heading of the ball. `run` and `rise` are the non-negative horizontal and
 * vertical components; the signs carry the quadrant. For the exact backend
 * (run, rise) = (q, p) are integers, for the float backend (cos, sin).
 */
template <class Num>
struct Direction {
  Num run{};
  Num rise{};
  int sx = +1;
  int sy = +1;

  friend bool operator==(const Direction&, const Direction&) = default;
};

inline Direction<Rational> make_direction(const Slope& slope, int sx, int sy) {
  if ((sx != 1 && sx != -1) || (sy != 1 && sy != -1)) throw InvalidArgument("direction signs must be +-1");
  Direction<Rational> d;
  d.run = make_rational(slope.q());
  d.rise = make_rational(slope.p());
  d.sx = slope.is_vertical() ? +1 : sx;
  d.sy = sy;
  return d;
}

/// Float heading from an arbitrary angle; the reduced angle must lie in (0, pi/2].
inline Direction<double> make_float_direction(double theta) {
  double c = std::cos(theta);
  double s = std::sin(theta);
  if (std::abs(s) < 1e-15) throw InvalidArgument("horizontal motion is excluded");
  Direction<double> d;
  d.run = std::abs(c) < 1e-15 ? 0.0 : std::abs(c);
  d.rise = std::abs(s);
  d.sx = (c < 0 && d.run != 0.0) ? -1 : +1;
  d.sy = s < 0 ? -1 : +1;
  return d;
}

/// The heading of `slope` in either backend (run = q, rise = p).
template <class Num>
Direction<Num> direction_for(const Slope& slope, int sx, int sy) {
  Direction<Rational> d = make_direction(slope, sx, sy);
  if constexpr (is_exact_v<Num>) {
    return d;
  } else {
    return Direction<double>{to_double(d.run), to_double(d.rise), d.sx, d.sy};
  }
}

template <class Num>
struct Point {
  Num x{};
  Num y{};
  friend bool operator==(const Point&, const Point&) = default;
};

struct CellIndex {
  std::int64_t z1 = 0;
  std::int64_t z2 = 0;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
  CellIndex operator+(const CellIndex& o) const { return {z1 + o.z1, z2 + o.z2}; }
  CellIndex operator-(const CellIndex& o) const { return {z1 - o.z1, z2 - o.z2}; }
};

inline std::ostream& operator<<(std::ostream& os, const CellIndex& c) {
  return os << "(" << c.z1 << "," << c.z2 << ")";
}

enum class Face { Left, Right, Bottom, Top };

inline const char* face_name(Face f) {
  switch (f) {
    case Face::Left: return "left";
    case Face::Right: return "right";
    case Face::Bottom: return "bottom";
    case Face::Top: return "top";
  }
  return "?";
}

inline bool is_vertical_face(Face f) { return f == Face::Left || f == Face::Right; }

/// Specular reflection on an axis-parallel face.
template <class Num>
Direction<Num> reflect(Direction<Num> dir, Face face) {
  if (is_vertical_face(face)) {
    dir.sx = -dir.sx;
  } else {
    dir.sy = -dir.sy;
  }
  return dir;
}

}  // namespace briques

template <>
struct std::hash<briques::CellIndex> {
  std::size_t operator()(const briques::CellIndex& c) const noexcept {
    auto h = static_cast<std::uint64_t>(c.z1) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(c.z2) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};
