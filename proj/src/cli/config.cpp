#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"
#include "modgrad/cli.hpp"

namespace modgrad::cli {

namespace {

using nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.contains(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + ": must be finite");
  return d;
}

double positive(const json& v, const std::string& where) {
  const double d = number(v, where);
  if (!(d > 0.0)) throw ConfigError(where + ": must be positive");
  return d;
}

std::size_t count(const json& v, const std::string& where, std::size_t min = 1) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
    throw ConfigError(where + ": expected an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

Vec vector_of(const json& v, const std::string& where, std::optional<std::size_t> n = std::nullopt) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vec out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
  if (n && out.size() != *n) throw ConfigError(where + ": expected " + std::to_string(*n) + " entries");
  return out;
}

std::string entry_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ConfigError(where + ": expected an expression string or a number");
}

MatrixPath parse_matrix(const json& p, std::size_t n, std::string& text) {
  if (p.is_string()) {
    if (p.get<std::string>() != "identity") throw ConfigError("P: expected \"identity\" or an n x n array");
    text = "identity";
    return MatrixPath::identity(n);
  }
  if (!p.is_array() || p.size() != n) throw ConfigError("P: expected " + std::to_string(n) + " rows");
  std::vector<std::vector<Expression>> upper(n);
  std::vector<std::vector<std::optional<Expression>>> lower(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = p[i];
    if (!row.is_array() || row.size() != n) throw ConfigError("P: row " + std::to_string(i + 1) + " must have " +
                                                             std::to_string(n) + " entries");
    for (std::size_t j = 0; j < n; ++j) {
      const std::string where = "P[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (j < i && row[j].is_null()) {
        upper[i].push_back(Expression::parse("0", 0, true));
        lower[i].emplace_back();
        continue;
      }
      Expression e = [&] {
        try {
          return Expression::parse(entry_text(row[j], where), 0, true);
        } catch (const ParseError& err) {
          throw ConfigError(where + ": " + err.what());
        }
      }();
      if (j < i) lower[i].emplace_back(e);
      upper[i].push_back(std::move(e));
    }
  }
  // The lower triangle is mirrored from the upper one; when given it must agree.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      if (!lower[i][j]) continue;
      for (double t : {0.0, 0.5, 1.0, 10.0, 1e3}) {
        double a = 0.0, b = 0.0;
        try {
          a = lower[i][j]->eval({}, t);
          b = upper[j][i].eval({}, t);
        } catch (const DomainError&) {
          continue;
        }
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(b)))
          throw ConfigError("P is not symmetric: entries (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            ") and (" + std::to_string(j + 1) + "," + std::to_string(i + 1) + ") differ at t=" +
                            json(t).dump());
      }
    }
  text = p.dump();
  return MatrixPath::from_expressions(std::move(upper));
}

void parse_options(const json& o, AnalysisConfig& cfg, std::size_t n) {
  require_keys(o, {"h0", "finder", "isolation", "certify", "ec", "ode", "simulate", "basin"}, "options");
  if (o.contains("h0")) {
    const auto& h = o["h0"];
    require_keys(h, {"psd_tol", "sample_times"}, "options.h0");
    if (h.contains("psd_tol")) cfg.psd_tol = positive(h["psd_tol"], "options.h0.psd_tol");
    if (h.contains("sample_times")) {
      for (double t : vector_of(h["sample_times"], "options.h0.sample_times")) {
        if (t < 0.0) throw ConfigError("options.h0.sample_times: times must be >= 0");
        cfg.h0_times.push_back(t);
      }
    }
  }
  if (o.contains("finder")) {
    const auto& f = o["finder"];
    require_keys(f, {"grid", "newton_tol", "max_iters", "degeneracy_tol"}, "options.finder");
    if (f.contains("grid")) cfg.finder.grid_per_axis = count(f["grid"], "options.finder.grid", 2);
    if (f.contains("newton_tol")) cfg.finder.newton_tol = positive(f["newton_tol"], "options.finder.newton_tol");
    if (f.contains("max_iters")) cfg.finder.max_newton_iters = count(f["max_iters"], "options.finder.max_iters");
    if (f.contains("degeneracy_tol"))
      cfg.finder.degeneracy_tol = positive(f["degeneracy_tol"], "options.finder.degeneracy_tol");
  }
  auto& c = cfg.certify;
  if (o.contains("isolation")) {
    const auto& s = o["isolation"];
    require_keys(s, {"grad_floor", "samples_per_shell", "shells", "max_radius", "radii", "ray_samples"},
                 "options.isolation");
    if (s.contains("grad_floor")) c.grad_floor = positive(s["grad_floor"], "options.isolation.grad_floor");
    if (s.contains("samples_per_shell"))
      c.samples_per_shell = count(s["samples_per_shell"], "options.isolation.samples_per_shell", 8);
    if (s.contains("shells")) c.isolation_shells = count(s["shells"], "options.isolation.shells", 2);
    if (s.contains("max_radius")) c.isolation_max_radius = positive(s["max_radius"], "options.isolation.max_radius");
    if (s.contains("radii")) {
      c.isolation_radii = vector_of(s["radii"], "options.isolation.radii");
      for (double r : c.isolation_radii)
        if (!(r > 0.0)) throw ConfigError("options.isolation.radii: radii must be positive");
    }
    if (s.contains("ray_samples")) c.ray_samples = count(s["ray_samples"], "options.isolation.ray_samples", 0);
  }
  if (o.contains("certify")) {
    const auto& s = o["certify"];
    require_keys(s, {"h1_probe_radius", "h1_probes_per_shell", "descent_trajectories", "descent_radius",
                     "descent_duration", "start_times"},
                 "options.certify");
    if (s.contains("h1_probe_radius")) c.h1_probe_radius = positive(s["h1_probe_radius"], "options.certify.h1_probe_radius");
    if (s.contains("h1_probes_per_shell"))
      c.h1_probes_per_shell = count(s["h1_probes_per_shell"], "options.certify.h1_probes_per_shell");
    if (s.contains("descent_trajectories"))
      c.descent_trajectories = count(s["descent_trajectories"], "options.certify.descent_trajectories");
    if (s.contains("descent_radius")) c.descent_radius = positive(s["descent_radius"], "options.certify.descent_radius");
    if (s.contains("descent_duration"))
      c.descent_duration = positive(s["descent_duration"], "options.certify.descent_duration");
    if (s.contains("start_times")) {
      c.start_times = vector_of(s["start_times"], "options.certify.start_times");
      if (c.start_times.empty()) throw ConfigError("options.certify.start_times: must not be empty");
      for (double t : c.start_times)
        if (t < 0.0) throw ConfigError("options.certify.start_times: times must be >= 0");
    }
  }
  if (o.contains("ec")) {
    const auto& s = o["ec"];
    require_keys(s, {"horizon", "quad_tol"}, "options.ec");
    if (s.contains("horizon")) {
      c.ec_horizon = number(s["horizon"], "options.ec.horizon");
      if (c.ec_horizon < 100.0) throw ConfigError("options.ec.horizon: must be >= 100");
    }
    if (s.contains("quad_tol")) c.quad_tol = positive(s["quad_tol"], "options.ec.quad_tol");
  }
  if (o.contains("ode")) {
    const auto& s = o["ode"];
    require_keys(s, {"rel_tol", "abs_tol", "h_init", "h_min", "h_max", "max_steps"}, "options.ode");
    auto& d = c.ode;
    if (s.contains("rel_tol")) d.rel_tol = positive(s["rel_tol"], "options.ode.rel_tol");
    if (s.contains("abs_tol")) d.abs_tol = positive(s["abs_tol"], "options.ode.abs_tol");
    if (s.contains("h_init")) d.h_init = positive(s["h_init"], "options.ode.h_init");
    if (s.contains("h_min")) d.h_min = positive(s["h_min"], "options.ode.h_min");
    if (s.contains("h_max")) d.h_max = positive(s["h_max"], "options.ode.h_max");
    if (s.contains("max_steps")) d.max_steps = count(s["max_steps"], "options.ode.max_steps");
  }
  if (o.contains("simulate")) {
    const auto& s = o["simulate"];
    require_keys(s, {"x0", "t0", "t_end", "convergence_radius"}, "options.simulate");
    auto& d = cfg.simulate;
    if (s.contains("x0")) d.x0 = vector_of(s["x0"], "options.simulate.x0", n);
    if (s.contains("t0")) d.t0 = number(s["t0"], "options.simulate.t0");
    if (s.contains("t_end")) d.t_end = number(s["t_end"], "options.simulate.t_end");
    if (s.contains("convergence_radius"))
      d.convergence_radius = positive(s["convergence_radius"], "options.simulate.convergence_radius");
  }
  if (o.contains("basin")) {
    const auto& s = o["basin"];
    require_keys(s, {"anchor", "c", "resolution", "samples", "t_end", "converge_radius", "tol_boundary",
                     "sample_radius"},
                 "options.basin");
    auto& d = cfg.basin;
    if (s.contains("anchor")) d.anchor = vector_of(s["anchor"], "options.basin.anchor", n);
    if (s.contains("c")) d.c = number(s["c"], "options.basin.c");
    if (s.contains("resolution")) {
      const auto& r = s["resolution"];
      if (r.is_number_integer()) {
        d.resolution.assign(n, count(r, "options.basin.resolution", kMinResolution));
      } else {
        if (!r.is_array() || r.size() != n) throw ConfigError("options.basin.resolution: expected an integer or one per axis");
        for (const auto& v : r) d.resolution.push_back(count(v, "options.basin.resolution", kMinResolution));
      }
    }
    if (s.contains("samples")) d.samples = count(s["samples"], "options.basin.samples");
    if (s.contains("t_end")) d.t_end = positive(s["t_end"], "options.basin.t_end");
    if (s.contains("converge_radius")) d.converge_radius = positive(s["converge_radius"], "options.basin.converge_radius");
    if (s.contains("tol_boundary")) d.tol_boundary = positive(s["tol_boundary"], "options.basin.tol_boundary");
    if (s.contains("sample_radius")) d.sample_radius = positive(s["sample_radius"], "options.basin.sample_radius");
  }
}

}  // namespace

AnalysisConfig gallery_config(GalleryId id) {
  return parse_config(json{{"gallery", std::string(to_string(id))}}.dump());
}

AnalysisConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(doc, {"gallery", "depth", "dimension", "f", "P", "box", "options", "output", "seed"}, "config");

  AnalysisConfig cfg;
  std::size_t n = 0;
  if (doc.contains("gallery")) {
    for (const char* k : {"dimension", "f", "box"})
      if (doc.contains(k)) throw ConfigError(std::string("config: \"") + k + "\" cannot be combined with \"gallery\"");
    if (!doc["gallery"].is_string()) throw ConfigError("gallery: expected an id string");
    const auto id = gallery_id_from_string(doc["gallery"].get<std::string>());
    if (!id) throw ConfigError("gallery: unknown id \"" + doc["gallery"].get<std::string>() + "\"");
    cfg.gallery = id;
    if (doc.contains("depth")) {
      if (*id != GalleryId::Ex22) throw ConfigError("depth: only applies to ex22");
      const auto d = count(doc["depth"], "depth", 2);
      if (d > static_cast<std::size_t>(kMaxSplineDepth)) throw ConfigError("depth: must be <= 40");
      cfg.depth = static_cast<int>(d);
    }
    GalleryEntry entry = *id == GalleryId::Ex22 ? example_2_2(cfg.depth) : gallery_entry(*id);
    // An odd grid puts a seed on the origin, which the circle seeds would otherwise capture.
    if (*id == GalleryId::Ex22) cfg.finder.grid_per_axis = 41;
    n = entry.system.dimension();
    cfg.f_text = entry.system.field().describe();
    if (doc.contains("P")) {
      cfg.system.emplace(entry.system.field(), parse_matrix(doc["P"], n, cfg.p_text));
    } else {
      cfg.p_text = entry.system.matrix().describe();
      cfg.system.emplace(entry.system);
    }
  } else {
    if (doc.contains("depth")) throw ConfigError("depth: only applies to gallery ex22");
    for (const char* k : {"dimension", "f", "P", "box"})
      if (!doc.contains(k)) throw ConfigError(std::string("config: missing \"") + k + "\"");
    n = count(doc["dimension"], "dimension");
    if (!doc["f"].is_string()) throw ConfigError("f: expected an expression string");
    cfg.f_text = doc["f"].get<std::string>();
    const auto& b = doc["box"];
    if (!b.is_array() || b.size() != n) throw ConfigError("box: expected " + std::to_string(n) + " [lo, hi] pairs");
    std::vector<std::pair<double, double>> bounds;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec lh = vector_of(b[i], "box[" + std::to_string(i) + "]", 2);
      if (!(lh[0] < lh[1])) throw ConfigError("box[" + std::to_string(i) + "]: lo must be below hi");
      bounds.emplace_back(lh[0], lh[1]);
    }
    Expression f = [&] {
      try {
        return Expression::parse(cfg.f_text, n, false);
      } catch (const ParseError& e) {
        throw ConfigError(std::string("f: ") + e.what());
      }
    }();
    cfg.system.emplace(ScalarField(std::move(f), Box(std::move(bounds))), parse_matrix(doc["P"], n, cfg.p_text));
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw ConfigError("output: expected a directory path");
    cfg.output = doc["output"].get<std::string>();
  }
  if (doc.contains("options")) parse_options(doc["options"], cfg, n);
  return cfg;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace modgrad::cli
