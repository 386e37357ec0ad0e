// Escape velocity in the strip of width 2 with tan(theta) = 1/4: the lowest
// brick rises by about 1 - 4h per return for small base depths h.

#include <cstdio>

#include "briques/briques.hpp"

int main() {
  using namespace briques;
  const Slope slope = Slope::rational(1, 4);
  std::printf("%6s %10s %10s %10s\n", "h", "H_n/n", "1-4h", "H_t/sqrt t");
  for (int i = 1; i <= 9; i += 2) {
    const Rational h = make_rational(i, 100);
    const auto dom = Domain<Rational>::strip(2, h);
    BaseState<Rational> start{make_rational(1, 2), make_direction(slope, +1, +1), Configuration::strip(2)};
    const auto series = escape_series(dom, start, 20000);
    if (series.status != SeriesStatus::Complete) {
      std::printf("%6.2f stopped: %s\n", to_double(h), series.message.c_str());
      continue;
    }
    const auto est = escape_estimates(series, slope.sin());
    std::printf("%6.2f %10.5f %10.5f %10.5f\n", to_double(h), est.rate_n, 1 - 4 * to_double(h), est.rate_t);
  }
}
