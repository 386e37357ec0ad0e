#pragma once
/**
 * @file experiments.hpp
 * @brief Subcommands of the `briques` tool: configuration, experiments and
 * verification suites.
 *
 * Every command reads a flat JSON object of documented keys (unknown keys are
 * rejected, rationals are "num/den" strings), writes its files and prints one
 * `key=value` summary line. Flags given on the command line override the file.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "briques/dynamics.hpp"
#include "briques/frontier.hpp"
#include "briques/plane.hpp"
#include "briques/render.hpp"
#include "briques/strip.hpp"

namespace briques::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kMismatch = 2, kSingular = 3, kBudget = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { Int, Real, Rational, Slope, String, Bool, RationalList, CellList, Backend };

struct KeySpec {
  std::string name;
  KeyType type;
  json fallback;
  std::string help;
};

enum class Backend { Rational, Float };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate-strip", "simulate-plane", "escape", "sweep-h",
                                              "limit-set",      "detect-periodic", "render", "verify"};
  return names;
}

inline const std::vector<KeySpec>& command_keys(const std::string& command) {
  using T = KeyType;
  static const KeySpec backend{"backend", T::Backend, "rational", "numeric backend: rational or float"};
  static const KeySpec epsilon{"epsilon", T::Real, 1e-9, "corner guard of the float tracer"};
  static const std::map<std::string, std::vector<KeySpec>> table{
      {"simulate-strip",
       {{"K", T::Int, 2, "strip width"},
        {"h", T::Rational, "7/100", "base depth"},
        {"slope", T::Slope, "1/4", "tangent p/q or vertical"},
        {"x1", T::Rational, "1/2", "starting abscissa on the base"},
        {"sx", T::Int, 1, "horizontal sign of the heading"},
        {"max_events", T::Int, 1000, "number of events"},
        backend,
        epsilon,
        {"trace", T::String, "", "event CSV output"},
        {"svg", T::String, "", "SVG output"}}},
      {"simulate-plane",
       {{"slope", T::Slope, "1/1", "tangent p/q or vertical"},
        {"angle_pi", T::Real, 0.0, "heading as a multiple of pi (float backend; 0 uses slope)"},
        {"start", T::RationalList, json::array({"1/7", "2/7"}), "starting point inside cell (0,0)"},
        {"sx", T::Int, 1, "horizontal sign of the heading"},
        {"sy", T::Int, 1, "vertical sign of the heading"},
        {"max_hits", T::Int, 1000, "bricks to destroy"},
        {"extra_holes", T::CellList, json::array(), "holes besides (0,0)"},
        backend,
        epsilon,
        {"log", T::String, "", "destruction log CSV output"},
        {"svg", T::String, "", "SVG output"},
        {"pgm", T::String, "", "PGM output"},
        {"path_events", T::Int, 2000, "events of trajectory drawn in the SVG"}}},
      {"escape",
       {{"K", T::Int, 2, "strip width"},
        {"slope", T::Slope, "1/4", "tangent p/q or vertical"},
        {"h", T::Rational, "7/100", "base depth"},
        {"x1", T::Rational, "1/2", "starting abscissa on the base"},
        {"sx", T::Int, 1, "horizontal sign of the heading"},
        {"n_returns", T::Int, 100000, "returns to the base"},
        {"max_events", T::Int, 10000000, "event budget of one return"},
        backend,
        epsilon,
        {"csv", T::String, "", "series CSV output"}}},
      {"sweep-h",
       {{"K", T::Int, 2, "strip width"},
        {"slope", T::Slope, "1/4", "tangent p/q or vertical"},
        {"h_grid", T::RationalList, json::array(), "explicit depths; overrides h_min/h_max/h_count"},
        {"h_min", T::Rational, "1/100", "first depth"},
        {"h_max", T::Rational, "9/100", "last depth"},
        {"h_count", T::Int, 9, "evenly spaced depths from h_min to h_max"},
        {"x1", T::Rational, "1/2", "starting abscissa on the base"},
        {"sx", T::Int, 1, "horizontal sign of the heading"},
        {"n_returns", T::Int, 20000, "returns per depth"},
        {"max_events", T::Int, 10000000, "event budget of one return"},
        {"workers", T::Int, 0, "threads (0: hardware concurrency)"},
        backend,
        epsilon,
        {"csv", T::String, "", "CSV output"}}},
      {"limit-set",
       {{"K", T::Int, 2, "strip width"},
        {"slope", T::Slope, "1/4", "tangent p/q"},
        {"h", T::Rational, "3/100", "depth coordinate of the starting points"},
        {"burn", T::Int, 1000, "iterations skipped"},
        {"keep", T::Int, 1000, "iterations recorded"},
        {"grid", T::Int, 8, "starting abscissas per frontier"},
        backend,
        {"csv", T::String, "", "point cloud CSV output"},
        {"svg", T::String, "", "SVG output"}}},
      {"detect-periodic",
       {{"slope", T::Slope, "1/1", "tangent p/q"},
        {"max_hits", T::Int, 6000, "bricks per initial condition"},
        {"grid", T::Int, 7, "starting points (i/grid, j/grid)"},
        {"neighbours", T::Bool, true, "also start with one extra hole next to the origin"},
        {"stop_at_first", T::Bool, false, "stop once an orbit is certified"},
        {"max_period", T::Int, 256, "largest period searched"},
        {"max_preperiod", T::Int, 10000, "largest preperiod searched"},
        {"workers", T::Int, 0, "threads (0: hardware concurrency)"},
        backend,
        epsilon,
        {"json", T::String, "", "motif report output"},
        {"svg", T::String, "", "SVG of the first certified orbit"},
        {"log", T::String, "", "destruction log of the first certified orbit"}}},
      {"render",
       {{"log_in", T::String, "", "destruction log to draw instead of running"},
        {"slope", T::Slope, "21/22", "tangent p/q or vertical"},
        {"angle_pi", T::Real, 0.0, "heading as a multiple of pi (float backend; 0 uses slope)"},
        {"start", T::RationalList, json::array({"1/7", "2/7"}), "starting point inside cell (0,0)"},
        {"sx", T::Int, 1, "horizontal sign of the heading"},
        {"sy", T::Int, 1, "vertical sign of the heading"},
        {"max_hits", T::Int, 10000, "bricks to destroy"},
        {"extra_holes", T::CellList, json::array(), "holes besides (0,0)"},
        backend,
        epsilon,
        {"svg", T::String, "", "SVG output"},
        {"pgm", T::String, "", "PGM output"},
        {"max_side", T::Int, 2048, "largest PGM side in pixels"},
        {"cell_px", T::Real, 4.0, "SVG cell size"}}},
      {"verify",
       {{"suites", T::String, "all", "comma list of conjugacy,factor,induction,stability,bounds"},
        {"cases", T::Int, 20, "random cases per suite"},
        {"steps", T::Int, 1000, "iterations per case"},
        {"seed", T::Int, 1, "random seed"},
        {"beta_bias", T::Rational, "0", "offset added to beta (fault injection)"},
        {"tolerance", T::Real, 1e-9, "comparison tolerance of the float backend"},
        backend,
        epsilon,
        {"json", T::String, "", "report output"}}},
  };
  auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command: " + command);
  return it->second;
}

namespace detail {

inline const KeySpec& spec_of(const std::string& command, const std::string& key) {
  for (const auto& k : command_keys(command)) {
    if (k.name == key) return k;
  }
  throw ConfigError("unknown key for " + command + ": " + key);
}

inline Rational rational_of(const json& v, const std::string& key) {
  if (v.is_number_integer()) return make_rational(v.get<std::int64_t>());
  if (!v.is_string()) throw ConfigError(key + ": rationals are written as \"num/den\" strings");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Flag text to a JSON value of the key's type.
inline json from_flag(const KeySpec& spec, const std::string& text) {
  switch (spec.type) {
    case KeyType::String:
    case KeyType::Rational:
    case KeyType::Slope:
    case KeyType::Backend:
      return text;
    case KeyType::RationalList:
      if (!text.empty() && text.front() == '[') break;
      return json(split(text, ','));
    case KeyType::Bool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError(spec.name + ": expected true or false");
    default:
      break;
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    throw ConfigError(spec.name + ": cannot parse \"" + text + "\"");
  }
}

}  // namespace detail

/// Validated values of one command.
class Config {
 public:
  Config() = default;
  Config(std::string command, json values) : command_(std::move(command)), values_(std::move(values)) {}

  const std::string& command() const { return command_; }
  const json& values() const { return values_; }

  std::int64_t integer(const std::string& key) const {
    const json& v = at(key, KeyType::Int);
    if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
    return v.get<std::int64_t>();
  }
  double real(const std::string& key) const {
    const json& v = at(key, KeyType::Real);
    if (!v.is_number()) throw ConfigError(key + ": expected a number");
    return v.get<double>();
  }
  Rational rational(const std::string& key) const { return detail::rational_of(at(key, KeyType::Rational), key); }
  Slope slope(const std::string& key) const {
    const json& v = at(key, KeyType::Slope);
    try {
      if (v.is_number_integer()) return Slope::rational(v.get<std::int64_t>(), 1);
      if (!v.is_string()) throw ConfigError(key + ": expected \"p/q\" or \"vertical\"");
      return Slope::parse(v.get<std::string>());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  std::string string(const std::string& key) const {
    const json& v = at(key, KeyType::String);
    if (!v.is_string()) throw ConfigError(key + ": expected a string");
    return v.get<std::string>();
  }
  bool flag(const std::string& key) const {
    const json& v = at(key, KeyType::Bool);
    if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
    return v.get<bool>();
  }
  std::vector<Rational> rationals(const std::string& key) const {
    const json& v = at(key, KeyType::RationalList);
    if (!v.is_array()) throw ConfigError(key + ": expected a list of \"num/den\" strings");
    std::vector<Rational> out;
    for (const auto& item : v) out.push_back(detail::rational_of(item, key));
    return out;
  }
  std::vector<CellIndex> cells(const std::string& key) const {
    const json& v = at(key, KeyType::CellList);
    if (!v.is_array()) throw ConfigError(key + ": expected a list of [z1, z2] pairs");
    std::vector<CellIndex> out;
    for (const auto& item : v) {
      if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() || !item[1].is_number_integer()) {
        throw ConfigError(key + ": expected a list of [z1, z2] pairs");
      }
      out.push_back({item[0].get<std::int64_t>(), item[1].get<std::int64_t>()});
    }
    return out;
  }
  Backend backend() const {
    const json& v = at("backend", KeyType::Backend);
    if (v == "rational") return Backend::Rational;
    if (v == "float") return Backend::Float;
    throw ConfigError("backend: expected rational or float");
  }

  /// Reads every key once so that type errors surface before any work starts.
  void validate() const {
    for (const auto& spec : command_keys(command_)) {
      switch (spec.type) {
        case KeyType::Int: integer(spec.name); break;
        case KeyType::Real: real(spec.name); break;
        case KeyType::Rational: rational(spec.name); break;
        case KeyType::Slope: slope(spec.name); break;
        case KeyType::String: string(spec.name); break;
        case KeyType::Bool: flag(spec.name); break;
        case KeyType::RationalList: rationals(spec.name); break;
        case KeyType::CellList: cells(spec.name); break;
        case KeyType::Backend: backend(); break;
      }
    }
  }

 private:
  const json& at(const std::string& key, KeyType type) const {
    const KeySpec& spec = detail::spec_of(command_, key);
    if (spec.type != type) throw ConfigError(key + ": read with the wrong type");
    return values_.at(key);
  }

  std::string command_;
  json values_;
};

/// Defaults, then the file object, then flag overrides (flags win).
inline Config load_config(const std::string& command, const json& file,
                          const std::vector<std::pair<std::string, std::string>>& flags = {}) {
  json values = json::object();
  for (const auto& spec : command_keys(command)) values[spec.name] = spec.fallback;
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      detail::spec_of(command, key);
      values[key] = value;
    }
  }
  for (const auto& [key, text] : flags) values[key] = detail::from_flag(detail::spec_of(command, key), text);
  Config cfg(command, std::move(values));
  cfg.validate();
  return cfg;
}

inline Config load_config_file(const std::string& command, const std::string& path,
                               const std::vector<std::pair<std::string, std::string>>& flags = {}) {
  json file;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return load_config(command, file, flags);
}

/// The one-line `key=value` report printed by every command.
class Summary {
 public:
  explicit Summary(const std::string& command) { add("command", command); }

  Summary& add(const std::string& key, const std::string& value) {
    fields_.emplace_back(key, value.find(' ') == std::string::npos ? value : "\"" + value + "\"");
    return *this;
  }
  Summary& add(const std::string& key, const char* value) { return add(key, std::string(value)); }
  Summary& add(const std::string& key, double value) {
    std::ostringstream os;
    os << std::setprecision(10) << value;
    return add(key, os.str());
  }
  Summary& add(const std::string& key, std::int64_t value) { return add(key, std::to_string(value)); }
  Summary& add(const std::string& key, int value) { return add(key, std::to_string(value)); }
  Summary& add(const std::string& key, std::size_t value) { return add(key, std::to_string(value)); }
  Summary& add(const std::string& key, bool value) { return add(key, value ? "true" : "false"); }
  Summary& add(const std::string& key, const Rational& value) { return add(key, value.get_str()); }

  std::string line() const {
    std::string out;
    for (const auto& [k, v] : fields_) out += (out.empty() ? "" : " ") + k + "=" + v;
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

inline unsigned worker_count(std::int64_t requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

inline TracerOptions tracer_options(const Config& cfg) {
  TracerOptions t;
  t.epsilon = cfg.real("epsilon");
  return t;
}

inline int sign_of(const Config& cfg, const std::string& key) {
  const std::int64_t s = cfg.integer(key);
  if (s != 1 && s != -1) throw ConfigError(key + ": expected 1 or -1");
  return static_cast<int>(s);
}

inline std::int64_t positive(const Config& cfg, const std::string& key, std::int64_t min = 1) {
  const std::int64_t v = cfg.integer(key);
  if (v < min) throw ConfigError(key + ": must be >= " + std::to_string(min));
  return v;
}

template <class F>
auto with_backend(const Config& cfg, F&& f) {
  if (cfg.backend() == Backend::Float) return f(double{});
  return f(Rational{});
}

inline bool is_tan_quarter_k2(int K, const Slope& s) { return K == 2 && !s.is_vertical() && s.p() == 1 && s.q() == 4; }

inline double target_rate_n(const Rational& h) { return to_double(Rational(1 - 4 * h)); }
inline double target_rate_t(const Rational& h) { return std::sqrt(target_rate_n(h) / std::numbers::sqrt2); }

inline std::string backend_name(Backend b) { return b == Backend::Float ? "float" : "rational"; }

template <class Num>
std::string num_text(const Num& v) {
  if constexpr (is_exact_v<Num>) {
    return v.get_str();
  } else {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  }
}

struct PlaneRun {
  Point<Rational> start;
  std::vector<CellIndex> holes;
  int sx = 1;
  int sy = 1;
  double angle_pi = 0;
  Slope slope = Slope::rational(1, 1);
};

inline PlaneRun plane_run(const Config& cfg) {
  PlaneRun r;
  auto start = cfg.rationals("start");
  if (start.size() != 2) throw ConfigError("start: expected two coordinates");
  r.start = {start[0], start[1]};
  r.holes = cfg.cells("extra_holes");
  r.holes.push_back({0, 0});
  r.sx = sign_of(cfg, "sx");
  r.sy = sign_of(cfg, "sy");
  r.angle_pi = cfg.real("angle_pi");
  r.slope = cfg.slope("slope");
  if (r.angle_pi != 0 && cfg.backend() != Backend::Float) throw ConfigError("angle_pi needs the float backend");
  return r;
}

template <class Num>
Direction<Num> plane_heading(const PlaneRun& r) {
  if constexpr (!is_exact_v<Num>) {
    if (r.angle_pi != 0) return make_float_direction(r.angle_pi * std::numbers::pi);
  }
  return direction_for<Num>(r.slope, r.sx, r.sy);
}

template <class Num>
DestructionLog<Num> run_plane(const Config& cfg, const PlaneRun& r, std::int64_t max_hits) {
  RecordOptions opt;
  opt.tracer = tracer_options(cfg);
  const Point<Num> start{from_rational<Num>(r.start.x), from_rational<Num>(r.start.y)};
  return record_orbit(start, plane_heading<Num>(r), max_hits, opt, Configuration::plane_with_holes(r.holes));
}

inline std::vector<CellIndex> read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<CellIndex> cells;
  std::string line;
  std::getline(in, line);
  if (line.rfind("hit_index,z1,z2", 0) != 0) throw ConfigError(path + ": not a destruction log");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 3) throw ConfigError(path + ": malformed line \"" + line + "\"");
    cells.push_back({std::stoll(parts[1]), std::stoll(parts[2])});
  }
  return cells;
}

inline void add_box(Summary& s, const std::vector<CellIndex>& cells) {
  const CellBox b = bounding_box(cells, 0);
  s.add("bbox", std::to_string(b.x0) + ":" + std::to_string(b.x1) + "," + std::to_string(b.y0) + ":" +
                    std::to_string(b.y1));
}

}  // namespace detail

// ---------------------------------------------------------------------------

template <class Num>
int simulate_strip(const Config& cfg, std::ostream& out) {
  const int K = static_cast<int>(detail::positive(cfg, "K"));
  const Rational h = cfg.rational("h");
  const Slope slope = cfg.slope("slope");
  const std::int64_t max_events = detail::positive(cfg, "max_events");
  const Domain<Num> dom = Domain<Num>::strip(K, from_rational<Num>(h));
  BaseState<Num> base{from_rational<Num>(cfg.rational("x1")), direction_for<Num>(slope, detail::sign_of(cfg, "sx"), 1),
                      Configuration::strip(K)};
  const SimState<Num> start = launch(dom, base);
  Trace<Num> tr = run_until<Num>(start, dom, nullptr, max_events, detail::tracer_options(cfg));
  if (const auto path = cfg.string("trace"); !path.empty()) {
    auto os = detail::open_output(path);
    write_trace_csv(os, tr.steps);
  }
  std::vector<CellIndex> bricks;
  std::vector<std::pair<double, double>> path{{to_double(start.pos.x), to_double(start.pos.y)}};
  std::int64_t base_returns = 0;
  for (const auto& st : tr.steps) {
    if (st.event.kind == EventKind::BrickHit) bricks.push_back(st.event.cell);
    if (st.event.kind == EventKind::BaseCross) ++base_returns;
    path.emplace_back(to_double(st.hit.x), to_double(st.hit.y));
  }
  if (const auto p = cfg.string("svg"); !p.empty()) {
    auto os = detail::open_output(p);
    SvgOptions opt;
    opt.strip_K = K;
    opt.strip_h = to_double(h);
    opt.label_hits = bricks.size() <= 200;
    write_svg(os, bricks, path, opt);
  }
  const bool singular = tr.end == TraceEnd::Singularity;
  Summary s("simulate-strip");
  s.add("status", singular ? "singular" : "ok")
      .add("events", tr.steps.size())
      .add("bricks", bricks.size())
      .add("base_returns", base_returns)
      .add("H", height_H(tr.final_state.config))
      .add("x", detail::num_text(tr.final_state.pos.x))
      .add("y", detail::num_text(tr.final_state.pos.y));
  out << s.line() << '\n';
  return singular ? kSingular : kOk;
}

template <class Num>
int simulate_plane(const Config& cfg, std::ostream& out) {
  const auto run = detail::plane_run(cfg);
  const std::int64_t max_hits = detail::positive(cfg, "max_hits", 0);
  DestructionLog<Num> log = detail::run_plane<Num>(cfg, run, max_hits);
  if (const auto p = cfg.string("log"); !p.empty()) {
    auto os = detail::open_output(p);
    write_log_csv(os, log);
  }
  if (const auto p = cfg.string("pgm"); !p.empty()) {
    auto os = detail::open_output(p);
    write_pgm(os, log.cells);
  }
  if (const auto p = cfg.string("svg"); !p.empty()) {
    const std::int64_t n = std::min(detail::positive(cfg, "path_events", 0), log.events);
    std::vector<std::pair<double, double>> path{{to_double(log.start.x), to_double(log.start.y)}};
    if (n > 0) {
      auto tr = run_until<Num>(make_state(log.start, log.dir, Configuration::plane_with_holes(run.holes)),
                               Domain<Num>::plane(), nullptr, n, detail::tracer_options(cfg));
      for (const auto& st : tr.steps) path.emplace_back(to_double(st.hit.x), to_double(st.hit.y));
    }
    auto os = detail::open_output(p);
    SvgOptions opt;
    opt.label_hits = log.cells.size() <= 200;
    write_svg(os, log.cells, path, opt);
  }
  Summary s("simulate-plane");
  s.add("status", log.singular ? "singular" : (log.truncated ? "budget" : "ok"))
      .add("hits", log.cells.size())
      .add("events", log.events);
  detail::add_box(s, log.cells);
  out << s.line() << '\n';
  if (log.singular) return kSingular;
  return log.truncated ? kBudget : kOk;
}

template <class Num>
int escape(const Config& cfg, std::ostream& out) {
  const int K = static_cast<int>(detail::positive(cfg, "K"));
  const Slope slope = cfg.slope("slope");
  const Rational h = cfg.rational("h");
  ReturnOptions opt;
  opt.max_events = detail::positive(cfg, "max_events");
  opt.tracer = detail::tracer_options(cfg);
  const Domain<Num> dom = Domain<Num>::strip(K, from_rational<Num>(h));
  BaseState<Num> base{from_rational<Num>(cfg.rational("x1")), direction_for<Num>(slope, detail::sign_of(cfg, "sx"), 1),
                      Configuration::strip(K)};
  auto series = escape_series(dom, base, detail::positive(cfg, "n_returns"), opt);
  if (const auto p = cfg.string("csv"); !p.empty()) {
    auto os = detail::open_output(p);
    write_escape_csv(os, series);
  }
  Summary s("escape");
  const char* status = series.status == SeriesStatus::Complete      ? "ok"
                       : series.status == SeriesStatus::Singularity ? "singular"
                                                                    : "budget";
  s.add("status", status).add("returns", series.size()).add("H", series.H.back());
  if (series.size() > 0) {
    auto est = escape_estimates(series, slope.sin());
    s.add("rate_n", est.rate_n).add("rate_t", est.rate_t);
  }
  if (detail::is_tan_quarter_k2(K, slope) && h >= 0 && h < make_rational(1, 10)) {
    s.add("target_rate_n", detail::target_rate_n(h)).add("target_rate_t", detail::target_rate_t(h));
  }
  if (!series.message.empty()) s.add("message", series.message);
  out << s.line() << '\n';
  if (series.status == SeriesStatus::Singularity) return kSingular;
  if (series.status == SeriesStatus::NonReturn) return kBudget;
  return kOk;
}

struct SweepRow {
  Rational h;
  double rate_n = 0;
  double rate_t = 0;
  std::string status;
  std::string message;
};

inline std::vector<Rational> sweep_grid(const Config& cfg) {
  std::vector<Rational> grid = cfg.rationals("h_grid");
  if (!grid.empty()) return grid;
  const std::int64_t n = cfg.integer("h_count");
  const Rational lo = cfg.rational("h_min"), hi = cfg.rational("h_max");
  for (std::int64_t i = 0; i < n; ++i) {
    grid.push_back(n == 1 ? lo : Rational(lo + (hi - lo) * make_rational(i, n - 1)));
  }
  return grid;
}

template <class Num>
int sweep_h(const Config& cfg, std::ostream& out, std::ostream& log) {
  const int K = static_cast<int>(detail::positive(cfg, "K"));
  const Slope slope = cfg.slope("slope");
  const std::vector<Rational> grid = sweep_grid(cfg);
  if (grid.empty()) throw ConfigError("empty h grid");
  for (const auto& h : grid) {
    if (h < 0) throw ConfigError("h_grid: depths must be >= 0");
  }
  const std::int64_t n = detail::positive(cfg, "n_returns");
  const Num x1 = from_rational<Num>(cfg.rational("x1"));
  const int sx = detail::sign_of(cfg, "sx");
  ReturnOptions opt;
  opt.max_events = detail::positive(cfg, "max_events");
  opt.tracer = detail::tracer_options(cfg);

  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      SweepRow& row = rows[i];
      row.h = grid[i];
      try {
        const Domain<Num> dom = Domain<Num>::strip(K, from_rational<Num>(grid[i]));
        auto series = escape_series(dom, BaseState<Num>{x1, direction_for<Num>(slope, sx, 1), Configuration::strip(K)},
                                    n, opt);
        if (series.size() > 0) {
          auto est = escape_estimates(series, slope.sin());
          row.rate_n = est.rate_n;
          row.rate_t = est.rate_t;
        }
        row.status = series.status == SeriesStatus::Complete      ? "ok"
                     : series.status == SeriesStatus::Singularity ? "singular"
                                                                  : "budget";
        row.message = series.message;
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
    }
  };
  const unsigned workers =
      std::min<unsigned>(detail::worker_count(cfg.integer("workers")), static_cast<unsigned>(grid.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const bool targets = detail::is_tan_quarter_k2(K, slope);
  std::size_t ok = 0;
  double worst = 0;
  std::ostringstream csv;
  csv << "h,h_exact,rate_n,rate_t,target_rate_n,status\n" << std::setprecision(17);
  for (const auto& row : rows) {
    const bool in_range = targets && row.h < make_rational(1, 10);
    csv << to_double(row.h) << ',' << row.h.get_str() << ',' << row.rate_n << ',' << row.rate_t << ',';
    if (in_range) csv << detail::target_rate_n(row.h);
    csv << ',' << row.status << '\n';
    if (row.status == "ok") {
      ++ok;
      if (in_range) worst = std::max(worst, std::abs(row.rate_n / detail::target_rate_n(row.h) - 1));
    } else {
      log << "h=" << row.h.get_str() << " status=" << row.status << " message=\"" << row.message << "\"\n";
    }
  }
  if (const auto p = cfg.string("csv"); !p.empty()) {
    auto os = detail::open_output(p);
    os << csv.str();
  }
  Summary s("sweep-h");
  s.add("status", ok == rows.size() ? "ok" : "partial").add("points", rows.size()).add("ok", ok).add("failed",
                                                                                                      rows.size() - ok);
  if (targets) s.add("max_rel_dev_rate_n", worst);
  out << s.line() << '\n';
  return kOk;
}

template <class Num>
int limit_set(const Config& cfg, std::ostream& out) {
  const int K = static_cast<int>(detail::positive(cfg, "K"));
  if (K > 16) throw ConfigError("K: at most 16 frontier columns");
  const Slope slope = cfg.slope("slope");
  if (slope.is_vertical()) throw ConfigError("slope: the frontier map needs a finite slope");
  const std::int64_t grid = detail::positive(cfg, "grid");
  FrontierMap<Num> map(K, slope);
  const Num h = from_rational<Num>(frac(cfg.rational("h")));
  std::vector<FrontierPoint<Num>> starts;
  for (std::uint32_t mask = Frontier::full(K).mask; mask >= 1; --mask) {
    for (std::int64_t i = 0; i < grid; ++i) {
      starts.push_back({from_ratio<Num>(2 * i + 1, 2 * grid), h, Frontier{K, mask}});
    }
  }
  auto cloud = limit_set_sample(map, starts, detail::positive(cfg, "burn", 0), detail::positive(cfg, "keep", 0));
  if (const auto p = cfg.string("csv"); !p.empty()) {
    auto os = detail::open_output(p);
    write_cloud_csv(os, cloud);
  }
  if (const auto p = cfg.string("svg"); !p.empty()) {
    auto os = detail::open_output(p);
    write_cloud_svg(os, cloud, K);
  }
  std::set<std::tuple<std::uint32_t, std::string, std::string>> distinct;
  for (const auto& c : cloud) {
    distinct.emplace(c.point.xi.mask, detail::num_text(c.point.x), detail::num_text(c.point.h));
  }
  Summary s("limit-set");
  s.add("status", "ok").add("orbits", starts.size()).add("points", cloud.size()).add("distinct", distinct.size());
  out << s.line() << '\n';
  return kOk;
}

/// The distinct certified shapes found by a grid search, keyed by branch periods.
struct OrbitFamily {
  std::vector<std::int64_t> periods;
  std::size_t count = 0;
  std::size_t first = 0;
};

inline json motif_json(const MotifReport& m) {
  json motif = json::array();
  for (const auto& c : m.motif) motif.push_back({c.z1, c.z2});
  return {{"preperiod", m.preperiod},
          {"period", m.period},
          {"v", {m.v.z1, m.v.z2}},
          {"periods_observed", m.periods_observed},
          {"motif", motif}};
}

inline json initial_json(const InitialCondition& init) {
  json holes = json::array();
  for (const auto& c : init.extra_holes) holes.push_back({c.z1, c.z2});
  return {{"start", {init.start.x.get_str(), init.start.y.get_str()}}, {"extra_holes", holes}};
}

/// Certified, with every branch replaying its motif over at least `min_periods` periods.
inline bool replay_certified(const Classification& c, std::int64_t min_periods = 10) {
  if (!c.certified()) return false;
  return std::all_of(c.branches.begin(), c.branches.end(), [&](const BranchReport& b) {
    return b.motif->periods_observed >= min_periods && motif_replays(b.branch.cells, *b.motif);
  });
}

template <class Num>
int detect_periodic(const Config& cfg, std::ostream& out) {
  const Slope slope = cfg.slope("slope");
  const Backend backend = cfg.backend();
  const std::int64_t grid = detail::positive(cfg, "grid", 2);
  std::vector<InitialCondition> inits = default_initial_conditions(grid);
  if (!cfg.flag("neighbours")) inits.resize(static_cast<std::size_t>((grid - 1) * (grid - 1)));
  ClassifyOptions copt;
  copt.max_period = detail::positive(cfg, "max_period");
  copt.max_preperiod = detail::positive(cfg, "max_preperiod", 0);
  RecordOptions ropt;
  ropt.tracer = detail::tracer_options(cfg);
  std::function<bool(const GridResult<Num>&)> stop;
  if (cfg.flag("stop_at_first")) stop = [](const GridResult<Num>& r) { return replay_certified(r.classification); };
  auto results = grid_search<Num>(slope, inits, detail::positive(cfg, "max_hits"), copt,
                                  detail::worker_count(cfg.integer("workers")), ropt, stop);

  std::vector<OrbitFamily> families;
  std::size_t certified = 0, singular = 0, run = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.done) continue;
    ++run;
    if (r.log.singular) ++singular;
    if (!replay_certified(r.classification)) continue;
    ++certified;
    std::vector<std::int64_t> periods;
    for (const auto& b : r.classification.branches) periods.push_back(b.motif->period);
    std::sort(periods.begin(), periods.end());
    auto it = std::find_if(families.begin(), families.end(), [&](const OrbitFamily& f) { return f.periods == periods; });
    if (it == families.end()) {
      families.push_back({periods, 1, i});
    } else {
      ++it->count;
    }
  }

  json report{{"slope", slope.str()},
              {"backend", detail::backend_name(backend)},
              {"indicative", backend == Backend::Float},
              {"max_hits", cfg.integer("max_hits")},
              {"conditions", run},
              {"certified", certified},
              {"status", families.empty() ? "NotFound" : "Found"},
              {"orbits", json::array()}};
  for (const auto& f : families) {
    const auto& r = results[f.first];
    json orbit{{"periods", f.periods},
               {"count", f.count},
               {"initial", initial_json(r.initial)},
               {"kind", orbit_class_name(r.classification.kind)},
               {"slope", slope.str()},
               {"branches", json::array()}};
    for (const auto& b : r.classification.branches) orbit["branches"].push_back(motif_json(*b.motif));
    if (r.classification.fit) {
      const auto& fit = *r.classification.fit;
      orbit["fit"] = {{"direction", {fit.dir.z1, fit.dir.z2}},
                      {"slope", std::isinf(fit.slope) ? json("vertical") : json(fit.slope)},
                      {"width", fit.width},
                      {"half", fit.half}};
    }
    report["orbits"].push_back(orbit);
  }
  if (const auto p = cfg.string("json"); !p.empty()) {
    auto os = detail::open_output(p);
    os << report.dump(2) << '\n';
  }
  if (!families.empty()) {
    const auto& first = results[families.front().first];
    if (const auto p = cfg.string("svg"); !p.empty()) {
      auto os = detail::open_output(p);
      write_svg(os, first.log.cells);
    }
    if (const auto p = cfg.string("log"); !p.empty()) {
      auto os = detail::open_output(p);
      write_log_csv(os, first.log);
    }
  }
  std::string signatures;
  for (const auto& f : families) {
    if (!signatures.empty()) signatures += ';';
    for (std::size_t i = 0; i < f.periods.size(); ++i) signatures += (i ? "," : "") + std::to_string(f.periods[i]);
  }
  Summary s("detect-periodic");
  s.add("status", families.empty() ? "NotFound" : "Found")
      .add("slope", slope.str())
      .add("backend", detail::backend_name(backend))
      .add("conditions", run)
      .add("certified", certified)
      .add("singular", singular)
      .add("signatures", signatures.empty() ? "-" : signatures);
  if (backend == Backend::Float) s.add("indicative", true);
  out << s.line() << '\n';
  return families.empty() ? kBudget : kOk;
}

template <class Num>
int render(const Config& cfg, std::ostream& out) {
  std::vector<CellIndex> cells;
  std::string status = "ok";
  int code = kOk;
  if (const auto in = cfg.string("log_in"); !in.empty()) {
    cells = detail::read_log_csv(in);
  } else {
    auto log = detail::run_plane<Num>(cfg, detail::plane_run(cfg), detail::positive(cfg, "max_hits", 0));
    cells = std::move(log.cells);
    if (log.singular) {
      status = "singular";
      code = kSingular;
    } else if (log.truncated) {
      status = "budget";
      code = kBudget;
    }
  }
  const std::string svg = cfg.string("svg"), pgm = cfg.string("pgm");
  if (svg.empty() && pgm.empty()) throw ConfigError("render needs an svg or pgm output");
  if (!pgm.empty()) {
    auto os = detail::open_output(pgm);
    write_pgm(os, cells, detail::positive(cfg, "max_side"));
  }
  if (!svg.empty()) {
    auto os = detail::open_output(svg);
    SvgOptions opt;
    opt.cell_px = cfg.real("cell_px");
    write_svg(os, cells, {}, opt);
  }
  Summary s("render");
  s.add("status", status).add("cells", cells.size());
  detail::add_box(s, cells);
  out << s.line() << '\n';
  return code;
}

// ---------------------------------------------------------------------------
// Verification suites.

struct SuiteResult {
  std::string name;
  std::int64_t cases = 0;
  std::int64_t passed = 0;
  std::int64_t skipped = 0;
  std::string first_failure;

  bool ok() const { return cases > 0 && passed == cases; }
};

struct VerifyParams {
  std::int64_t cases = 20;
  std::int64_t steps = 1000;
  std::uint64_t seed = 1;
  Rational beta_bias = 0;
  double tolerance = 1e-9;
  TracerOptions tracer;
};

namespace detail {

inline std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

/// A slope strictly below 1/(K(K-1)).
inline Slope small_slope(std::mt19937_64& rng, int K) {
  const std::int64_t p = uniform(rng, 1, 3);
  const std::int64_t q = p * K * (K - 1) + uniform(rng, 1, 20);
  return Slope::rational(p, q);
}

struct StripCase {
  int K = 2;
  Slope slope = Slope::rational(1, 4);
  Rational h;
  Rational x1;
  int sx = 1;
};

inline StripCase strip_case(std::mt19937_64& rng) {
  StripCase c;
  c.K = static_cast<int>(uniform(rng, 2, 3));
  c.slope = small_slope(rng, c.K);
  c.h = make_rational(uniform(rng, 0, 299), 97);
  c.x1 = make_rational(c.K * uniform(rng, 1, 199), 200);
  c.sx = uniform(rng, 0, 1) ? 1 : -1;
  return c;
}

/// Runs `attempt` until `cases` non-skipped outcomes are collected.
template <class F>
SuiteResult run_cases(const std::string& name, const VerifyParams& p, F&& attempt) {
  SuiteResult r;
  r.name = name;
  std::mt19937_64 rng(p.seed);
  const std::int64_t max_attempts = 20 * p.cases + 20;
  for (std::int64_t a = 0; a < max_attempts && r.cases < p.cases; ++a) {
    std::string failure;
    std::optional<bool> outcome;
    try {
      outcome = attempt(rng, failure);
    } catch (const std::exception& e) {
      outcome = false;
      failure = e.what();
    }
    if (!outcome) {
      ++r.skipped;
      continue;
    }
    ++r.cases;
    if (*outcome) {
      ++r.passed;
    } else if (r.first_failure.empty()) {
      r.first_failure = failure;
    }
  }
  return r;
}

template <class Num>
bool torus_equal(const TorusPoint<Num>& a, const TorusPoint<Num>& b, double tol) {
  if constexpr (is_exact_v<Num>) {
    return a == b;
  } else {
    auto circle = [](double u, double v) {
      double d = std::abs(u - v);
      return std::min(d, 1.0 - d);
    };
    return circle(a.fx, b.fx) <= tol && circle(a.fy, b.fy) <= tol;
  }
}

}  // namespace detail

/// Lockstep comparison of the strip return map with the frontier map.
template <class Num>
SuiteResult verify_conjugacy(const VerifyParams& p) {
  return detail::run_cases("conjugacy", p, [&](std::mt19937_64& rng, std::string& failure) -> std::optional<bool> {
    const auto c = detail::strip_case(rng);
    FrontierMap<Num> map(c.K, c.slope);
    map.beta_bias = from_rational<Num>(p.beta_bias);
    ReturnOptions opt;
    opt.tracer = p.tracer;
    const Domain<Num> dom = Domain<Num>::strip(c.K, from_rational<Num>(c.h));
    BaseState<Num> s{from_rational<Num>(c.x1), direction_for<Num>(c.slope, c.sx, 1), Configuration::strip(c.K)};
    auto rep = conjugacy_check(map, dom, s, p.steps, opt, is_exact_v<Num> ? 0.0 : p.tolerance);
    if (rep.singular) return std::nullopt;
    if (!rep.ok()) {
      std::ostringstream os;
      os << "K=" << c.K << " slope=" << c.slope.str() << " h=" << c.h << " x1=" << c.x1 << " step=" << rep.mismatch_step
         << " predicted=" << rep.lhs << " actual=" << rep.rhs;
      failure = os.str();
      return false;
    }
    return true;
  });
}

/// Folded projection against the linear torus flow on plane and strip traces.
template <class Num>
SuiteResult verify_factor(const VerifyParams& p) {
  return detail::run_cases("factor", p, [&](std::mt19937_64& rng, std::string& failure) -> std::optional<bool> {
    const bool strip = detail::uniform(rng, 0, 1) == 1;
    const Slope slope = Slope::rational(detail::uniform(rng, 1, 30), detail::uniform(rng, 1, 30));
    Domain<Num> dom = Domain<Num>::plane();
    SimState<Num> st;
    if (strip) {
      const int K = static_cast<int>(detail::uniform(rng, 1, 3));
      const Rational h = make_rational(detail::uniform(rng, 1, 4), 2);
      dom = Domain<Num>::strip(K, from_rational<Num>(h));
      const Rational x = make_rational(K * detail::uniform(rng, 1, 96), 97);
      st = make_state(Point<Num>{from_rational<Num>(x), from_rational<Num>(Rational(-h))},
                      direction_for<Num>(slope, 1, 1), Configuration::strip(K));
    } else {
      const Point<Num> start{from_ratio<Num>(detail::uniform(rng, 1, 30), 31),
                             from_ratio<Num>(detail::uniform(rng, 1, 36), 37)};
      st = make_state(start, direction_for<Num>(slope, 1, 1), Configuration::plane());
    }
    const auto p0 = factor_project(st);
    auto tr = run_until<Num>(st, dom, nullptr, p.steps, p.tracer);
    SimState<Num> cur = st;
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      if (tr.steps[i].event.kind == EventKind::Singularity) break;
      advance(cur, tr.steps[i]);
      if (!detail::torus_equal(factor_project(cur), torus_flow(p0, cur.v_travelled, cur.dir), p.tolerance)) {
        failure = std::string(strip ? "strip" : "plane") + " slope=" + slope.str() + " event=" + std::to_string(i);
        return false;
      }
    }
    return true;
  });
}

/// First return to G_h against the two-branch closed form, for h < 1/20 (exact).
inline SuiteResult verify_induction(const VerifyParams& p) {
  const FrontierMap<Rational> map(2, Slope::rational(1, 4));
  const Frontier left{2, 2};
  return detail::run_cases("induction", p, [&](std::mt19937_64& rng, std::string& failure) -> std::optional<bool> {
    const Rational h = make_rational(detail::uniform(rng, 1, 49), 1000);
    const Arc g = arc_Gh(h);
    auto in_g = [&](const FrontierPoint<Rational>& q) { return q.xi == left && q.h == h && g.contains_closed(q.x); };
    auto step = [&](const FrontierPoint<Rational>& q) { return map.phi(q); };
    for (int i = 0; i < 50; ++i) {
      const Rational x = frac(Rational(g.start + g.length * make_rational(2 * i + 1, 100)));
      auto [img, n] = induce<Rational>(step, in_g, FrontierPoint<Rational>{x, h, left}, 100);
      if (img.x != induced_closed_form_Gh(x, h) || (n != 2 && n != 5)) {
        failure = "h=" + h.get_str() + " x=" + x.get_str() + " return_time=" + std::to_string(n);
        return false;
      }
    }
    return true;
  });
}

/// An equilibrated configuration stays equilibrated under returns below the slope threshold.
template <class Num>
SuiteResult verify_stability(const VerifyParams& p) {
  return detail::run_cases("stability", p, [&](std::mt19937_64& rng, std::string& failure) -> std::optional<bool> {
    const auto c = detail::strip_case(rng);
    const std::int64_t H = detail::uniform(rng, 0, 3);
    std::vector<CellIndex> holes;
    for (std::int64_t row = 0; row < H; ++row) {
      for (int z1 = 0; z1 < c.K; ++z1) holes.push_back({z1, row});
    }
    const std::int64_t keep = detail::uniform(rng, 0, c.K - 1);
    for (int z1 = 0; z1 < c.K; ++z1) {
      if (z1 != keep && detail::uniform(rng, 0, 1)) holes.push_back({z1, H});
    }
    ReturnOptions opt;
    opt.tracer = p.tracer;
    Domain<Num> dom = Domain<Num>::strip(c.K, from_rational<Num>(c.h));
    BaseState<Num> s{from_rational<Num>(c.x1), direction_for<Num>(c.slope, c.sx, 1),
                     Configuration::strip_with_holes(c.K, holes)};
    const std::int64_t returns = std::min<std::int64_t>(p.steps, 200);
    for (std::int64_t n = 0; n < returns; ++n) {
      auto norm = trim_normalize(dom, std::move(s));
      ReturnRecord<Num> rec;
      try {
        rec = base_return(norm.domain, std::move(norm.state), opt);
      } catch (const SingularTrajectory<Num>&) {
        return n == 0 ? std::nullopt : std::optional<bool>(true);
      }
      if (!is_equilibrated(rec.next.config)) {
        failure = "K=" + std::to_string(c.K) + " slope=" + c.slope.str() + " return=" + std::to_string(n);
        return false;
      }
      s = std::move(rec.next);
      dom = norm.domain;
    }
    return true;
  });
}

/// 0 <= H_n - H_0 <= n and n <= K (H_n - H_0) + K - 1 from the full strip.
template <class Num>
SuiteResult verify_bounds(const VerifyParams& p) {
  return detail::run_cases("bounds", p, [&](std::mt19937_64& rng, std::string& failure) -> std::optional<bool> {
    const auto c = detail::strip_case(rng);
    ReturnOptions opt;
    opt.tracer = p.tracer;
    const Domain<Num> dom = Domain<Num>::strip(c.K, from_rational<Num>(c.h));
    auto series = escape_series(
        dom, BaseState<Num>{from_rational<Num>(c.x1), direction_for<Num>(c.slope, c.sx, 1), Configuration::strip(c.K)},
        p.steps, opt);
    if (series.size() == 0) return std::nullopt;
    for (std::size_t n = 1; n < series.H.size(); ++n) {
      const std::int64_t gain = series.H[n] - series.H[0];
      const auto nn = static_cast<std::int64_t>(n);
      if (gain < 0 || gain > nn || nn > c.K * gain + c.K - 1) {
        failure = "K=" + std::to_string(c.K) + " slope=" + c.slope.str() + " n=" + std::to_string(n) +
                  " gain=" + std::to_string(gain);
        return false;
      }
    }
    return true;
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"conjugacy", "factor", "induction", "stability", "bounds"};
  return names;
}

template <class Num>
SuiteResult run_suite(const std::string& name, const VerifyParams& p) {
  if (name == "conjugacy") return verify_conjugacy<Num>(p);
  if (name == "factor") return verify_factor<Num>(p);
  if (name == "induction") return verify_induction(p);
  if (name == "stability") return verify_stability<Num>(p);
  if (name == "bounds") return verify_bounds<Num>(p);
  throw ConfigError("suites: unknown suite " + name);
}

template <class Num>
int verify(const Config& cfg, std::ostream& out) {
  VerifyParams p;
  p.cases = detail::positive(cfg, "cases");
  p.steps = detail::positive(cfg, "steps");
  p.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  p.beta_bias = cfg.rational("beta_bias");
  p.tolerance = cfg.real("tolerance");
  p.tracer = detail::tracer_options(cfg);
  std::vector<std::string> names = detail::split(cfg.string("suites"), ',');
  if (names.size() == 1 && names[0] == "all") names = suite_names();
  if (names.empty()) throw ConfigError("suites: nothing to run");
  for (const auto& n : names) {
    if (std::find(suite_names().begin(), suite_names().end(), n) == suite_names().end()) {
      throw ConfigError("suites: unknown suite " + n);
    }
  }
  bool all_ok = true;
  json report{{"backend", detail::backend_name(cfg.backend())},
              {"mode", is_exact_v<Num> ? "exact" : "tolerance"},
              {"suites", json::array()}};
  Summary s("verify");
  std::vector<std::pair<std::string, std::string>> fields;
  for (const auto& n : names) {
    SuiteResult r = run_suite<Num>(n, p);
    all_ok = all_ok && r.ok();
    report["suites"].push_back({{"name", r.name},
                                {"cases", r.cases},
                                {"passed", r.passed},
                                {"skipped", r.skipped},
                                {"ok", r.ok()},
                                {"first_failure", r.first_failure}});
    fields.emplace_back(n, std::to_string(r.passed) + "/" + std::to_string(r.cases));
  }
  s.add("status", all_ok ? "pass" : "fail").add("mode", is_exact_v<Num> ? "exact" : "tolerance");
  for (const auto& [k, v] : fields) s.add(k, v);
  if (const auto path = cfg.string("json"); !path.empty()) {
    auto os = detail::open_output(path);
    os << report.dump(2) << '\n';
  }
  out << s.line() << '\n';
  return all_ok ? kOk : kMismatch;
}

/// Runs `command`; configuration problems become exit code 1 with a summary line.
inline int run_command(const Config& cfg, std::ostream& out, std::ostream& err) {
  const std::string& c = cfg.command();
  try {
    return detail::with_backend(cfg, [&](auto tag) -> int {
      using Num = decltype(tag);
      if (c == "simulate-strip") return simulate_strip<Num>(cfg, out);
      if (c == "simulate-plane") return simulate_plane<Num>(cfg, out);
      if (c == "escape") return escape<Num>(cfg, out);
      if (c == "sweep-h") return sweep_h<Num>(cfg, out, err);
      if (c == "limit-set") return limit_set<Num>(cfg, out);
      if (c == "detect-periodic") return detect_periodic<Num>(cfg, out);
      if (c == "render") return render<Num>(cfg, out);
      if (c == "verify") return verify<Num>(cfg, out);
      throw ConfigError("unknown command: " + c);
    });
  } catch (const ConfigError& e) {
    out << Summary(c).add("status", "usage_error").add("message", e.what()).line() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    out << Summary(c).add("status", "usage_error").add("message", e.what()).line() << '\n';
    return kUsage;
  } catch (const SingularTrajectory<Rational>& e) {
    out << Summary(c).add("status", "singular").add("message", e.what()).line() << '\n';
    return kSingular;
  } catch (const SingularTrajectory<double>& e) {
    out << Summary(c).add("status", "singular").add("message", e.what()).line() << '\n';
    return kSingular;
  } catch (const InadmissibleState& e) {
    out << Summary(c).add("status", "usage_error").add("message", e.what()).line() << '\n';
    return kUsage;
  }
}

}  // namespace briques::cli
