#pragma once
/**
 * @file configuration.hpp
 * @brief Brick configurations: the full lattice minus a finite set of holes.
 */

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "briques/geometry.hpp"

namespace briques {

enum class DomainKind { Strip, Plane };

class DestroyedTwice : public std::logic_error {
 public:
  explicit DestroyedTwice(CellIndex c)
      : std::logic_error("cell (" + std::to_string(c.z1) + "," + std::to_string(c.z2) + ") destroyed twice") {}
};

class IllegalTranslate : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Growable dense bitmap over a rectangle of cells; cells outside the rectangle are unset.
class CellGrid {
 public:
  bool test(CellIndex c) const {
    std::int64_t dx = c.z1 - x0_;
    std::int64_t dy = c.z2 - y0_;
    if (dx < 0 || dy < 0 || dx >= width_ || dy >= height_) return false;
    return bits_[static_cast<std::size_t>(dy * width_ + dx)] != 0;
  }

  /// Returns false when the cell was already set.
  bool set(CellIndex c) {
    reserve(c);
    auto& b = bits_[static_cast<std::size_t>((c.z2 - y0_) * width_ + (c.z1 - x0_))];
    if (b) return false;
    b = 1;
    ++count_;
    return true;
  }

  std::size_t count() const { return count_; }

  template <class F>
  void for_each(F&& f) const {
    for (std::int64_t dy = 0; dy < height_; ++dy) {
      for (std::int64_t dx = 0; dx < width_; ++dx) {
        if (bits_[static_cast<std::size_t>(dy * width_ + dx)]) f(CellIndex{x0_ + dx, y0_ + dy});
      }
    }
  }

  /// Row-major listing (increasing z2, then z1).
  std::vector<CellIndex> cells() const {
    std::vector<CellIndex> out;
    out.reserve(count_);
    for_each([&](CellIndex c) { out.push_back(c); });
    std::sort(out.begin(), out.end(), [](const CellIndex& a, const CellIndex& b) {
      return a.z2 != b.z2 ? a.z2 < b.z2 : a.z1 < b.z1;
    });
    return out;
  }

  bool any_in_row(std::int64_t z2) const {
    std::int64_t dy = z2 - y0_;
    if (dy < 0 || dy >= height_) return false;
    for (std::int64_t dx = 0; dx < width_; ++dx) {
      if (bits_[static_cast<std::size_t>(dy * width_ + dx)]) return true;
    }
    return false;
  }

  std::int64_t min_row() const { return y0_; }
  std::int64_t max_row() const { return y0_ + height_ - 1; }
  bool empty_storage() const { return height_ == 0; }

  void clear() {
    bits_.clear();
    x0_ = y0_ = 0;
    width_ = height_ = 0;
    count_ = 0;
  }

 private:
  void reserve(CellIndex c) {
    if (width_ == 0) {
      x0_ = c.z1 - 4;
      y0_ = c.z2 - 4;
      width_ = height_ = 9;
      bits_.assign(static_cast<std::size_t>(width_ * height_), 0);
      return;
    }
    std::int64_t nx0 = x0_, ny0 = y0_, nw = width_, nh = height_;
    if (c.z1 < nx0) {
      std::int64_t grow = std::max<std::int64_t>(nx0 - c.z1, nw);
      nx0 -= grow;
      nw += grow;
    } else if (c.z1 >= nx0 + nw) {
      nw += std::max<std::int64_t>(c.z1 - (nx0 + nw) + 1, nw);
    }
    if (c.z2 < ny0) {
      std::int64_t grow = std::max<std::int64_t>(ny0 - c.z2, nh);
      ny0 -= grow;
      nh += grow;
    } else if (c.z2 >= ny0 + nh) {
      nh += std::max<std::int64_t>(c.z2 - (ny0 + nh) + 1, nh);
    }
    if (nx0 == x0_ && ny0 == y0_ && nw == width_ && nh == height_) return;
    std::vector<std::uint8_t> next(static_cast<std::size_t>(nw * nh), 0);
    for (std::int64_t dy = 0; dy < height_; ++dy) {
      std::copy_n(bits_.begin() + dy * width_, width_,
                  next.begin() + (dy + y0_ - ny0) * nw + (x0_ - nx0));
    }
    bits_ = std::move(next);
    x0_ = nx0;
    y0_ = ny0;
    width_ = nw;
    height_ = nh;
  }

  std::vector<std::uint8_t> bits_;
  std::int64_t x0_ = 0;
  std::int64_t y0_ = 0;
  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  std::size_t count_ = 0;
};

/**
 * A brick configuration. In a strip of width K the brick index set is
 * {0..K-1} x {0,1,2,...}; in the plane it is all of Z^2. A cell is present
 * when it belongs to the index set and is not a hole.
 */
class Configuration {
 public:
  static Configuration strip(int K) {
    if (K < 1) throw InvalidArgument("strip width K must be >= 1");
    Configuration c;
    c.kind_ = DomainKind::Strip;
    c.K_ = K;
    return c;
  }

  /// Full plane except the starting cell (0,0).
  static Configuration plane() {
    Configuration c;
    c.kind_ = DomainKind::Plane;
    c.holes_.set({0, 0});
    return c;
  }

  static Configuration plane_with_holes(const std::vector<CellIndex>& holes) {
    Configuration c;
    c.kind_ = DomainKind::Plane;
    for (const auto& h : holes) c.holes_.set(h);
    return c;
  }

  static Configuration strip_with_holes(int K, const std::vector<CellIndex>& holes) {
    Configuration c = strip(K);
    for (const auto& h : holes) {
      if (!c.in_index_set(h)) throw InvalidArgument("hole outside the strip index set");
      c.holes_.set(h);
    }
    return c;
  }

  DomainKind kind() const { return kind_; }
  int K() const { return K_; }

  bool in_index_set(CellIndex c) const {
    if (kind_ == DomainKind::Plane) return true;
    return c.z1 >= 0 && c.z1 < K_ && c.z2 >= 0;
  }

  bool is_hole(CellIndex c) const { return holes_.test(c); }
  bool is_present(CellIndex c) const { return in_index_set(c) && !holes_.test(c); }

  void destroy(CellIndex c) {
    if (!in_index_set(c) || !holes_.set(c)) throw DestroyedTwice(c);
  }

  std::size_t hole_count() const { return holes_.count(); }
  std::vector<CellIndex> holes() const { return holes_.cells(); }
  const CellGrid& grid() const { return holes_; }

  /// Relabels every hole by u. Strip translations must be vertical; rows that
  /// leave the index set must be entirely empty, rows entering it are empty.
  Configuration translated(CellIndex u) const {
    Configuration out;
    out.kind_ = kind_;
    out.K_ = K_;
    if (kind_ == DomainKind::Plane) {
      holes_.for_each([&](CellIndex c) { out.holes_.set(c + u); });
      return out;
    }
    if (u.z1 != 0) throw IllegalTranslate("a strip can only be translated vertically");
    holes_.for_each([&](CellIndex c) {
      CellIndex t = c + u;
      if (t.z2 >= 0) {
        out.holes_.set(t);
      } else if (!row_empty(c.z2)) {
        throw IllegalTranslate("translation pushes a partially filled row out of the strip");
      }
    });
    for (std::int64_t row = 0; row < u.z2; ++row) {
      for (int z1 = 0; z1 < K_; ++z1) out.holes_.set({z1, row});
    }
    return out;
  }

  /// True when every cell of strip row z2 is a hole.
  bool row_empty(std::int64_t z2) const {
    for (int z1 = 0; z1 < K_; ++z1) {
      if (!holes_.test({z1, z2})) return false;
    }
    return true;
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.kind_ == b.kind_ && a.K_ == b.K_ && a.holes_.count() == b.holes_.count() &&
           a.holes_.cells() == b.holes_.cells();
  }

 private:
  DomainKind kind_ = DomainKind::Plane;
  int K_ = 0;
  CellGrid holes_;
};

}  // namespace briques
