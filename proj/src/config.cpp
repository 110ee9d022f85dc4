#include "csb/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "csb/errors.hpp"

namespace csb {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double to_double(std::string_view v, int line, std::string_view key) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    fail(line, "'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return x;
}

int to_int(std::string_view v, int line, std::string_view key) {
  int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(line, "'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
  return x;
}

void require(bool ok, int line, const std::string& msg) {
  if (!ok) fail(line, msg);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Handler = std::function<void(RunConfig&, std::string_view, int)>;

const std::map<std::string, std::string, std::less<>>& aliases() {
  static const std::map<std::string, std::string, std::less<>> a{{"N", "order"}, {"e", "energy"}};
  return a;
}

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> h = [] {
    std::map<std::string, Handler, std::less<>> m;
    const auto positive = [](double RunConfig::*field) {
      return [field](RunConfig& c, std::string_view v, int line) {
        const double x = to_double(v, line, "value");
        require(x > 0.0, line, "value must be positive");
        c.*field = x;
      };
    };
    m["order"] = [](RunConfig& c, std::string_view v, int line) {
      c.order = to_int(v, line, "order");
      require(c.order >= 2, line, "order must be at least 2");
      require(c.order <= 8, line, "order above 8 is not supported");
    };
    m["energy"] = [](RunConfig& c, std::string_view v, int line) { c.energy = to_double(v, line, "energy"); };
    m["q2"] = [](RunConfig& c, std::string_view v, int line) { c.q2 = to_double(v, line, "q2"); };
    m["epsilon"] = [](RunConfig& c, std::string_view v, int line) {
      const double x = to_double(v, line, "epsilon");
      require(x > 0.0, line, "epsilon must be positive");
      c.epsilon = x;
    };
    m["epsilon_fraction"] = [](RunConfig& c, std::string_view v, int line) {
      c.epsilon_fraction = to_double(v, line, "epsilon_fraction");
      require(c.epsilon_fraction > 0.0 && c.epsilon_fraction < 1.0, line, "epsilon_fraction must lie in (0, 1)");
    };
    m["t0_policy"] = [](RunConfig& c, std::string_view v, int line) {
      if (v == "runtime") c.t0_policy = T0Policy::Runtime;
      else if (v == "fixed") c.t0_policy = T0Policy::Fixed;
      else fail(line, "t0_policy must be 'runtime' or 'fixed'");
    };
    m["t0"] = positive(&RunConfig::t0);
    m["t0_correction_bound"] = positive(&RunConfig::t0_correction_bound);
    m["direction"] = [](RunConfig& c, std::string_view v, int line) {
      if (v == "forward") c.direction = Direction::Forward;
      else if (v == "backward") c.direction = Direction::Backward;
      else fail(line, "direction must be 'forward' or 'backward'");
    };
    m["half_width"] = positive(&RunConfig::half_width);
    m["profile_points"] = [](RunConfig& c, std::string_view v, int line) {
      c.profile_points = to_int(v, line, "profile_points");
      require(c.profile_points >= 101 && c.profile_points % 2 == 1, line, "profile_points must be odd and >= 101");
    };
    m["profile_plateau"] = [](RunConfig& c, std::string_view v, int line) {
      c.profile_window.plateau = to_double(v, line, "profile_plateau");
    };
    m["profile_support"] = [](RunConfig& c, std::string_view v, int line) {
      c.profile_window.support = to_double(v, line, "profile_support");
    };
    m["localization_plateau"] = [](RunConfig& c, std::string_view v, int line) {
      c.localization_window.plateau = to_double(v, line, "localization_plateau");
    };
    m["localization_support"] = [](RunConfig& c, std::string_view v, int line) {
      c.localization_window.support = to_double(v, line, "localization_support");
    };
    m["solvability_tolerance"] = positive(&RunConfig::solvability_tolerance);
    m["solver_tolerance"] = positive(&RunConfig::solver_tolerance);
    m["energy_probes"] = [](RunConfig& c, std::string_view v, int line) {
      ProbeTimes p{};
      std::size_t k = 0;
      while (true) {
        const auto comma = v.find(',');
        require(k < 3, line, "energy_probes takes exactly three times");
        p[k++] = to_double(trim(v.substr(0, comma)), line, "energy_probes");
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
      }
      require(k == 3, line, "energy_probes takes exactly three times");
      for (double x : p) require(x > 0.0, line, "energy probe times must be positive");
      require(p[0] != p[1] && p[1] != p[2] && p[0] != p[2], line, "energy probe times must be distinct");
      c.energy_probes = p;
    };
    m["tune_tolerance"] = positive(&RunConfig::tune_tolerance);
    m["residual_fit_min"] = positive(&RunConfig::residual_fit_min);
    m["residual_fit_max"] = positive(&RunConfig::residual_fit_max);
    m["radius"] = [](RunConfig& c, std::string_view v, int line) {
      const double x = to_double(v, line, "radius");
      require(x > 0.0, line, "radius must be positive");
      c.radius = x;
    };
    m["radius_factor"] = [](RunConfig& c, std::string_view v, int line) {
      c.radius_factor = to_double(v, line, "radius_factor");
      require(c.radius_factor >= 1.0, line, "radius_factor must be at least 1");
    };
    m["radial_points"] = [](RunConfig& c, std::string_view v, int line) {
      const int x = to_int(v, line, "radial_points");
      require(x >= 16, line, "radial_points must be at least 16");
      c.radial_points = x;
    };
    m["points_per_width"] = positive(&RunConfig::points_per_width);
    m["dt_factor"] = positive(&RunConfig::dt_factor);
    m["check_interval"] = [](RunConfig& c, std::string_view v, int line) {
      c.check_interval = to_int(v, line, "check_interval");
      require(c.check_interval >= 1, line, "check_interval must be at least 1");
    };
    m["min_points_per_width"] = positive(&RunConfig::min_points_per_width);
    m["samples"] = [](RunConfig& c, std::string_view v, int line) {
      c.samples = to_int(v, line, "samples");
      require(c.samples >= 8, line, "samples must be at least 8 for the rate fits");
    };
    m["output_dir"] = [](RunConfig& c, std::string_view v, int line) {
      require(!v.empty(), line, "output_dir must not be empty");
      c.output_dir = std::string(v);
    };
    return m;
  }();
  return h;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (const auto a = aliases().find(key); a != aliases().end()) key = a->second;
    const auto h = handlers().find(key);
    if (h == handlers().end()) fail(line_no, "unknown key '" + key + "'");
    if (value.empty()) fail(line_no, "missing value for '" + key + "'");
    if (!seen.emplace(key, line_no).second) fail(line_no, "key '" + key + "' given twice");
    h->second(c, value, line_no);
  }

  const auto line_of = [&](std::initializer_list<const char*> keys) {
    int l = 0;
    for (const char* k : keys)
      if (const auto it = seen.find(k); it != seen.end()) l = std::max(l, it->second);
    return l;
  };
  try {
    validate_window(c.profile_window);
  } catch (const InvalidArgument& e) {
    fail(line_of({"profile_plateau", "profile_support"}), std::string("profile window: ") + e.what());
  }
  try {
    validate_window(c.localization_window);
  } catch (const InvalidArgument& e) {
    fail(line_of({"localization_plateau", "localization_support"}), std::string("localization window: ") + e.what());
  }
  require(c.profile_window.support <= c.localization_window.plateau,
          line_of({"profile_support", "localization_plateau"}),
          "profile support must lie inside the localization plateau");
  if (c.t0_policy == T0Policy::Fixed) {
    require(seen.contains("t0"), line_of({"t0_policy"}), "t0_policy = fixed needs t0");
    if (c.epsilon)
      require(*c.epsilon < c.t0, line_of({"epsilon", "t0", "t0_policy"}),
              "epsilon = " + num(*c.epsilon) + " must be below t0 = " + num(c.t0));
  } else {
    require(!seen.contains("t0"), line_of({"t0"}), "t0 is only used with t0_policy = fixed");
  }
  require(c.residual_fit_max >= 10.0 * c.residual_fit_min * (1.0 - 1e-12),
          line_of({"residual_fit_min", "residual_fit_max"}), "residual fit window must span a decade");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_text(const RunConfig& c) {
  std::ostringstream o;
  o << "order = " << c.order << '\n';
  o << "energy = " << num(c.energy) << '\n';
  if (c.q2) o << "q2 = " << num(*c.q2) << '\n';
  if (c.epsilon) o << "epsilon = " << num(*c.epsilon) << '\n';
  o << "epsilon_fraction = " << num(c.epsilon_fraction) << '\n';
  o << "t0_policy = " << (c.t0_policy == T0Policy::Fixed ? "fixed" : "runtime") << '\n';
  if (c.t0_policy == T0Policy::Fixed) o << "t0 = " << num(c.t0) << '\n';
  o << "t0_correction_bound = " << num(c.t0_correction_bound) << '\n';
  o << "direction = " << (c.direction == Direction::Backward ? "backward" : "forward") << '\n';
  o << "half_width = " << num(c.half_width) << '\n';
  o << "profile_points = " << c.profile_points << '\n';
  o << "profile_plateau = " << num(c.profile_window.plateau) << '\n';
  o << "profile_support = " << num(c.profile_window.support) << '\n';
  o << "localization_plateau = " << num(c.localization_window.plateau) << '\n';
  o << "localization_support = " << num(c.localization_window.support) << '\n';
  o << "solvability_tolerance = " << num(c.solvability_tolerance) << '\n';
  o << "solver_tolerance = " << num(c.solver_tolerance) << '\n';
  o << "energy_probes = " << num(c.energy_probes[0]) << ", " << num(c.energy_probes[1]) << ", "
    << num(c.energy_probes[2]) << '\n';
  o << "tune_tolerance = " << num(c.tune_tolerance) << '\n';
  o << "residual_fit_min = " << num(c.residual_fit_min) << '\n';
  o << "residual_fit_max = " << num(c.residual_fit_max) << '\n';
  if (c.radius) o << "radius = " << num(*c.radius) << '\n';
  o << "radius_factor = " << num(c.radius_factor) << '\n';
  if (c.radial_points) o << "radial_points = " << *c.radial_points << '\n';
  o << "points_per_width = " << num(c.points_per_width) << '\n';
  o << "dt_factor = " << num(c.dt_factor) << '\n';
  o << "check_interval = " << c.check_interval << '\n';
  o << "min_points_per_width = " << num(c.min_points_per_width) << '\n';
  o << "samples = " << c.samples << '\n';
  o << "output_dir = " << c.output_dir << '\n';
  return o.str();
}

}  // namespace csb
