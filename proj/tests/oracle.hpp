#pragma once
// Brute-force reference for the first contact of a ray: every present cell of a
// finite window is intersected with the ray by the slab method, together with
// the strip walls and base, and the earliest contact wins.

#include <optional>
#include <vector>

#include "briques/dynamics.hpp"

namespace oracle {

using briques::CellIndex;
using briques::Rational;

struct Contact {
  enum Kind { Brick, Wall, Base, Singular } kind;
  Rational t;
  CellIndex cell{};
  briques::Face face{};
};

inline Contact first_contact(const briques::SimState<Rational>& s, const briques::Domain<Rational>& dom,
                             std::int64_t lo1, std::int64_t hi1, std::int64_t lo2, std::int64_t hi2) {
  const Rational dx = s.dir.run * s.dir.sx;
  const Rational dy = s.dir.rise * s.dir.sy;
  std::vector<Contact> hits;
  for (std::int64_t z2 = lo2; z2 <= hi2; ++z2) {
    for (std::int64_t z1 = lo1; z1 <= hi1; ++z1) {
      if (!s.config.is_present({z1, z2})) continue;
      Rational tx0, tx1, ty0, ty1;
      bool has_x = dx != 0;
      if (has_x) {
        Rational a = (Rational(z1) - s.pos.x) / dx, b = (Rational(z1 + 1) - s.pos.x) / dx;
        tx0 = a < b ? a : b;
        tx1 = a < b ? b : a;
      } else if (s.pos.x < z1 || s.pos.x > z1 + 1) {
        continue;
      }
      Rational a = (Rational(z2) - s.pos.y) / dy, b = (Rational(z2 + 1) - s.pos.y) / dy;
      ty0 = a < b ? a : b;
      ty1 = a < b ? b : a;
      Rational enter = has_x ? (tx0 > ty0 ? tx0 : ty0) : ty0;
      Rational exit = has_x ? (tx1 < ty1 ? tx1 : ty1) : ty1;
      if (enter > exit || enter < 0) continue;
      Contact c{Contact::Brick, enter, {z1, z2}, briques::Face::Bottom};
      if (enter == exit || (has_x && tx0 == ty0)) {
        c.kind = Contact::Singular;
      } else if (!has_x && (s.pos.x == z1 || s.pos.x == z1 + 1)) {
        c.kind = Contact::Singular;
      } else if (has_x && tx0 > ty0) {
        c.face = s.dir.sx > 0 ? briques::Face::Left : briques::Face::Right;
      } else {
        c.face = s.dir.sy > 0 ? briques::Face::Bottom : briques::Face::Top;
      }
      hits.push_back(c);
    }
  }
  if (dom.is_strip()) {
    if (dx != 0) {
      Rational wall = s.dir.sx > 0 ? Rational(dom.K) : Rational(0);
      hits.push_back({Contact::Wall, (wall - s.pos.x) / dx});
    }
    if (s.dir.sy < 0) {
      Contact c{Contact::Base, (s.pos.y + dom.h) / s.dir.rise};
      Rational xb = s.pos.x + dx * c.t;
      if (xb == 0 || xb == dom.K) c.kind = Contact::Singular;
      hits.push_back(c);
    }
  }
  Contact best = hits.front();
  for (const auto& c : hits) {
    if (c.t < best.t) best = c;
  }
  int at_best = 0;
  for (const auto& c : hits) at_best += c.t == best.t;
  // Several contacts at once: a domain corner, a brick vertex on a wall, or a
  // point shared by two bricks.
  if (at_best > 1) best.kind = Contact::Singular;
  return best;
}

}  // namespace oracle
