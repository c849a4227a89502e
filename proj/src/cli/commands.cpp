#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "CLI11.hpp"
#include "modgrad/cli.hpp"
#include "report.hpp"

namespace modgrad::cli {

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct Context {
  AnalysisConfig cfg;
  std::filesystem::path out_dir;
  bool quiet;
  std::ostream& out;

  const System& system() const { return *cfg.system; }
  const ScalarField& field() const { return cfg.system->field(); }
  std::size_t dimension() const { return cfg.system->dimension(); }
  void say(const std::string& line) const {
    if (!quiet) out << line << '\n';
  }
  std::filesystem::path file(const char* name) const { return out_dir / name; }
};

Context make_context(AnalysisConfig cfg, const CommonFlags& flags, std::ostream& out) {
  if (flags.seed) cfg.seed = *flags.seed;
  std::filesystem::path dir = flags.out.empty() ? cfg.output : std::filesystem::path(flags.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return Context{std::move(cfg), dir, flags.quiet, out};
}

AnalysisConfig config_from_flags(const CommonFlags& flags) {
  if (flags.config.empty()) throw ConfigError("--config is required");
  return load_config(flags.config);
}

Json system_json(const Context& ctx) {
  Json box = Json::array();
  for (const auto& [lo, hi] : ctx.field().domain().bounds()) box.push_back({lo, hi});
  return {{"gallery", ctx.cfg.gallery ? Json(to_string(*ctx.cfg.gallery)) : Json(nullptr)},
          {"dimension", ctx.dimension()},
          {"f", ctx.cfg.f_text},
          {"P", ctx.cfg.p_text},
          {"box", box}};
}

Vec checked_point(const Vec& x, const Context& ctx, const char* what) {
  if (x.size() != ctx.dimension())
    throw ConfigError(std::string(what) + ": expected " + std::to_string(ctx.dimension()) + " coordinates");
  if (!ctx.field().domain().contains(x)) throw ConfigError(std::string(what) + " " + format_point(x) + " lies outside D");
  return x;
}

std::vector<double> h0_times(const AnalysisConfig& cfg) {
  auto times = default_h0_sample_times();
  times.insert(times.end(), cfg.h0_times.begin(), cfg.h0_times.end());
  return times;
}

H0Report require_h0(const Context& ctx) {
  const auto times = h0_times(ctx.cfg);
  auto report = validate_h0(ctx.system(), times, ctx.cfg.psd_tol);
  if (!report.pass) {
    const auto worst = std::min_element(report.samples.begin(), report.samples.end(),
                                        [](const PsdSample& a, const PsdSample& b) { return a.lambda_min < b.lambda_min; });
    throw ConfigError("H0 fails: P(t) is not positive semi-definite, smallest eigenvalue " +
                      format_value(worst->lambda_min) + " at t = " + format_value(worst->t) + " (psd_tol " +
                      format_value(ctx.cfg.psd_tol) + ")");
  }
  return report;
}

int cmd_analyze(const Context& ctx) {
  const auto h0 = require_h0(ctx);
  const auto found = find_critical_points(ctx.field(), ctx.cfg.finder);
  const auto& copts = ctx.cfg.certify;
  const auto ec = ec_check(ctx.system().matrix(), copts.ec_horizon, copts.quad_tol);

  Json equilibria = Json::array();
  for (const auto& cp : found.points) {
    const auto r = certify(ctx.system(), cp, ec, copts);
    equilibria.push_back(to_json(r, ctx.field()));
    ctx.say("equilibrium " + format_point(cp.location) + ": " + to_string(cp.classification) + ", f = " +
            format_value(ctx.field().value(cp.location)) + " -> " + to_string(r.conclusion) + " (H1 " +
            (r.h1.pass ? "pass" : "fail") + ", H2 " + to_string(r.h2.kind) + ", H3 " + to_string(r.h3.kind) + ")");
  }
  if (found.points.empty()) ctx.say("no critical points found in D");

  const Json finder{{"grid_per_axis", ctx.cfg.finder.grid_per_axis},
                    {"newton_tol", ctx.cfg.finder.newton_tol},
                    {"seeds", found.seeds},
                    {"converged", found.converged},
                    {"not_converged", found.not_converged},
                    {"left_box", found.left_box},
                    {"points", found.points.size()}};
  const Json doc{{"command", "analyze"}, {"system", system_json(ctx)}, {"h0", to_json(h0)},
                 {"finder", finder},     {"ec", to_json(ec)},          {"equilibria", equilibria}};
  write_json(ctx.file("report.json"), doc);
  return kExitOk;
}

int cmd_simulate(const Context& ctx, const std::vector<double>& x0_flag, std::optional<double> t0_flag,
                 std::optional<double> t_end_flag, const std::vector<double>& anchor_flag) {
  const auto& s = ctx.cfg.simulate;
  if (x0_flag.empty() && !s.x0) throw ConfigError("simulate needs an initial point (--x0 or options.simulate.x0)");
  const Vec x0 = checked_point(x0_flag.empty() ? *s.x0 : x0_flag, ctx, "x0");
  const double t0 = t0_flag.value_or(s.t0);
  const double t_end = t_end_flag.value_or(s.t_end);
  if (!(t0 >= 0.0) || !(t_end > t0)) throw ConfigError("simulate needs 0 <= t0 < t_end");
  require_h0(ctx);

  const auto found = find_critical_points(ctx.field(), ctx.cfg.finder);
  OdeOptions o = ctx.cfg.certify.ode;
  for (const auto& cp : found.points) o.convergence_targets.push_back(cp.location);
  o.convergence_radius = s.convergence_radius;
  o.checkpoints = long_horizon_checkpoints();
  const auto traj = simulate(ctx.system(), x0, t0, t_end, o);

  // Level M of V = M - f: the anchor if given, else the equilibrium reached or
  // the nearest local maximum, else the largest f along the trajectory.
  std::optional<Vec> anchor;
  std::string anchor_source;
  if (!anchor_flag.empty()) {
    anchor = checked_point(anchor_flag, ctx, "anchor");
    anchor_source = "given";
  } else if (traj.converged_target) {
    anchor = o.convergence_targets[*traj.converged_target];
    anchor_source = "equilibrium reached";
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cp : found.points) {
      if (cp.classification != Classification::IsolatedLocalMax) continue;
      const double d = distance(cp.location, traj.final_state());
      if (d < best) {
        best = d;
        anchor = cp.location;
        anchor_source = "nearest local maximum";
      }
    }
  }
  double level = -std::numeric_limits<double>::infinity();
  if (anchor) {
    level = ctx.field().value(*anchor);
  } else {
    for (const auto& smp : traj.samples) level = std::max(level, ctx.field().value(smp.x));
    anchor_source = "max of f along the trajectory";
  }
  const auto trace = lyapunov_trace_with_level(ctx.system(), traj, level);
  const auto descent = check_descent(trace);

  {
    std::ofstream f(ctx.file("trajectory.csv"), std::ios::binary);
    write_trajectory_csv(f, traj);
    std::ofstream l(ctx.file("lyapunov.csv"), std::ios::binary);
    write_lyapunov_csv(l, trace);
  }
  Json checkpoints = Json::array();
  for (const auto& c : traj.checkpoints) checkpoints.push_back({{"t", c.t}, {"x", to_json(c.x)}});
  const Json doc{
      {"command", "simulate"},
      {"system", system_json(ctx)},
      {"x0", to_json(x0)},
      {"t0", t0},
      {"t_end", t_end},
      {"status", to_string(traj.status)},
      {"converged_to", traj.converged_target ? to_json(o.convergence_targets[*traj.converged_target]) : Json(nullptr)},
      {"hit_time", traj.status == TrajectoryStatus::Converged ? Json(traj.hit_time) : Json(nullptr)},
      {"exit_point", traj.exit_point.empty() ? Json(nullptr) : to_json(traj.exit_point)},
      {"final_time", traj.final_time()},
      {"final_state", to_json(traj.final_state())},
      {"accepted_steps", traj.accepted_steps},
      {"rejected_steps", traj.rejected_steps},
      {"checkpoints", checkpoints},
      {"lyapunov",
       {{"level", level},
        {"level_source", anchor_source},
        {"monotone", descent.monotone},
        {"bound_holds", descent.bound_holds},
        {"max_increase", descent.max_increase},
        {"max_bound_excess", descent.max_bound_excess}}},
      {"message", traj.message}};
  write_json(ctx.file("simulate.json"), doc);

  std::string status = std::string("status ") + to_string(traj.status);
  if (traj.status == TrajectoryStatus::Converged)
    status += " to " + format_point(o.convergence_targets[*traj.converged_target]) + " at t = " +
              format_value(traj.hit_time);
  if (traj.status == TrajectoryStatus::LeftDomain) status += " near " + format_point(traj.exit_point);
  ctx.say(status);
  for (const auto& c : traj.checkpoints) ctx.say("checkpoint t = " + format_value(c.t) + ": x = " + format_point(c.x));
  ctx.say("final state at t = " + format_value(traj.final_time()) + ": x = " + format_point(traj.final_state()));
  if (traj.status == TrajectoryStatus::StepFailure) throw NumericFailure("integration failed: " + traj.message);
  return kExitOk;
}

int cmd_basin(const Context& ctx, const std::vector<double>& anchor_flag, std::optional<double> c_flag,
              const std::vector<std::size_t>& resolution_flag) {
  const auto& b = ctx.cfg.basin;
  if (anchor_flag.empty() && !b.anchor) throw ConfigError("basin needs an anchor (--anchor or options.basin.anchor)");
  const Vec anchor = checked_point(anchor_flag.empty() ? *b.anchor : anchor_flag, ctx, "anchor");
  require_h0(ctx);
  const std::size_t n = ctx.dimension();

  const auto found = find_critical_points(ctx.field(), ctx.cfg.finder);
  const double m = ctx.field().value(anchor);
  std::optional<double> c = c_flag ? c_flag : b.c;
  std::string c_source = "given";
  if (!c) {
    c = suggest_level(ctx.field(), anchor, found.points);
    if (!c) throw ConfigError("basin needs a level c: no lower critical value to suggest one from");
    c_source = "heuristic: just above the highest critical value below f(anchor)";
    ctx.say("c not given; heuristic level c = " + format_value(*c));
  }
  if (!(*c < m)) throw ConfigError("c must be below f(anchor) = " + format_value(m));

  Json cps = Json::array();
  for (const auto& cp : found.points) cps.push_back(to_json(cp, ctx.field()));
  OdeOptions ode = ctx.cfg.certify.ode;

  Json hyp_doc{{"command", "basin"}, {"system", system_json(ctx)}, {"anchor", to_json(anchor)}, {"c", *c},
               {"c_source", c_source}, {"M", m}};
  BasinVerification ver;
  if (n <= kMaxGridDimension) {
    std::vector<std::size_t> res = resolution_flag.empty() ? b.resolution : resolution_flag;
    if (res.empty()) res.assign(n, n == 2 ? 512 : 64);
    if (res.size() == 1) res.assign(n, res.front());
    if (res.size() != n) throw ConfigError("resolution: expected one value or one per axis");
    for (auto r : res)
      if (r < kMinResolution) throw ConfigError("resolution: must be >= " + std::to_string(kMinResolution));
    const auto comp = extract_component(ctx.field(), anchor, *c, res);
    const auto hyp = check_hypotheses(comp, ctx.field(), found.points, b.tol_boundary);
    ver = verify_basin(ctx.system(), comp, b.samples, b.t_end, b.converge_radius, ctx.cfg.seed, ode);

    hyp_doc["mode"] = "grid";
    hyp_doc["grid"] = {{"resolution", res},
                       {"cell_diagonal", comp.grid.cell_diagonal()},
                       {"masked_cells", comp.masked_count},
                       {"masked_volume", comp.masked_volume()},
                       {"boundary_cells", comp.boundary_cells.size()}};
    hyp_doc["critical_points"] = cps;
    hyp_doc["hypotheses"] = to_json(hyp);
    {
      std::ofstream cells(ctx.file("cells.csv"), std::ios::binary);
      write_cells_csv(cells, comp);
    }
    if (n == 2) {
      std::ofstream pgm(ctx.file("mask.pgm"), std::ios::binary);
      write_mask_pgm(pgm, comp);
      std::ofstream bnd(ctx.file("boundary.csv"), std::ios::binary);
      write_boundary_csv(bnd, comp);
      std::ofstream svg(ctx.file("basin.svg"), std::ios::binary);
      write_basin_svg(svg, comp, found.points);
    }
    auto line = [&](const char* name, const HypothesisCheck& h) {
      std::string s = std::string(name) + (h.pass ? " pass" : " FAIL");
      if (!h.pass && !h.witnesses.empty()) {
        s += " (witnesses";
        for (std::size_t i = 0; i < h.witnesses.size() && i < 4; ++i) s += " " + format_point(h.witnesses[i]);
        if (h.witnesses.size() > 4) s += " ... " + std::to_string(h.witnesses.size()) + " total";
        s += ")";
      }
      return s + ": " + h.detail;
    };
    ctx.say("component: " + std::to_string(comp.masked_count) + " cells, volume " + format_value(comp.masked_volume()));
    ctx.say(line("H4", hyp.h4));
    ctx.say(line("H5", hyp.h5));
    ctx.say(line("H6", hyp.h6));
  } else {
    ver = verify_basin_sampled(ctx.system(), anchor, *c, b.sample_radius, b.samples, b.t_end, b.converge_radius,
                               ctx.cfg.seed, ode);
    hyp_doc["mode"] = "sampled";
    hyp_doc["grid"] = nullptr;
    hyp_doc["critical_points"] = cps;
    hyp_doc["hypotheses"] = nullptr;
    hyp_doc["note"] = "grid extraction supports n <= 4; H4-H6 not evaluated";
    ctx.say("dimension " + std::to_string(n) + " > 4: grid hypotheses skipped, sampled verification only");
  }
  write_json(ctx.file("hypotheses.json"), hyp_doc);
  Json ver_doc{{"command", "basin"},          {"anchor", to_json(anchor)}, {"c", *c},
               {"t_end", b.t_end},            {"converge_radius", b.converge_radius},
               {"seed", ctx.cfg.seed}};
  const Json ver_json = to_json(ver);
  ver_doc.update(ver_json);
  write_json(ctx.file("verification.json"), ver_doc);
  ctx.say("verification: " + std::to_string(ver.converged_count) + "/" + std::to_string(ver.sample_count) +
          " sampled starts converged to the anchor");
  return kExitOk;
}

int cmd_ec(const Context& ctx, std::optional<double> horizon_flag) {
  const double horizon = horizon_flag.value_or(ctx.cfg.certify.ec_horizon);
  if (!(horizon >= 100.0)) throw ConfigError("horizon must be >= 100");
  const auto v = ec_check(ctx.system().matrix(), horizon, ctx.cfg.certify.quad_tol);
  Json doc{{"command", "ec"}, {"system", system_json(ctx)}};
  const Json v_json = to_json(v);
  doc.update(v_json);
  write_json(ctx.file("ec.json"), doc);
  ctx.say(std::string("EC verdict: ") + to_string(v.kind));
  ctx.say("I(T) = " + format_value(v.horizon_integral) + " at T = " + format_value(v.horizon));
  ctx.say("fitted tail exponent p = " +
          (v.tail_exponent ? (std::isfinite(*v.tail_exponent) ? format_value(*v.tail_exponent) : "inf (tail vanishes)")
                           : std::string("n/a")));
  ctx.say("evidence: " + v.evidence);
  return kExitOk;
}

int cmd_gallery_list(std::ostream& out) {
  for (auto id : {GalleryId::Ex21, GalleryId::Ex22, GalleryId::Ex31}) {
    const auto e = gallery_entry(id);
    const auto nl = e.notes.find('\n');
    out << to_string(id) << "  " << e.notes.substr(0, nl) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability analysis of modified-gradient systems x' = P(t) grad f(x).", "modgrad"};
  app.require_subcommand(1);
  CommonFlags flags;
  app.add_option("--config", flags.config, "JSON configuration file");
  app.add_option("--out", flags.out, "output directory (overrides the config)");
  app.add_option("--seed", flags.seed, "seed for sampled verification");
  app.add_flag("--quiet", flags.quiet, "suppress console summaries");

  auto* analyze = app.add_subcommand("analyze", "H0 check, critical points, and stability certificates");
  auto* sim = app.add_subcommand("simulate", "integrate one trajectory with its Lyapunov trace");
  std::vector<double> x0, anchor;
  std::optional<double> t0, t_end, level, horizon;
  std::vector<std::size_t> resolution;
  sim->add_option("--x0", x0, "initial point, comma separated")->delimiter(',');
  sim->add_option("--t0", t0, "start time");
  sim->add_option("--t-end", t_end, "end time");
  sim->add_option("--anchor", anchor, "equilibrium defining V = f(anchor) - f")->delimiter(',');
  auto* basin = app.add_subcommand("basin", "extract a sublevel component and check H4-H6");
  basin->add_option("--anchor", anchor, "local maximum, comma separated")->delimiter(',');
  basin->add_option("--c", level, "level c < f(anchor)");
  basin->add_option("--resolution", resolution, "cells per axis (one value or one per axis)")->delimiter(',');
  auto* ec = app.add_subcommand("ec", "eigenvalue condition verdict for P(t)");
  ec->add_option("--horizon", horizon, "integration horizon T >= 100");
  auto* gallery = app.add_subcommand("gallery", "built-in examples");
  gallery->require_subcommand(1);
  auto* list = gallery->add_subcommand("list", "list the examples");
  auto* grun = gallery->add_subcommand("run", "analyze one example");
  std::string gallery_id;
  grun->add_option("id", gallery_id, "example id")->required();
  for (auto* sub : {analyze, sim, basin, ec, gallery, list, grun}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*list) return cmd_gallery_list(out);
    if (*grun) {
      if (!flags.config.empty()) throw ConfigError("gallery run takes no --config; use {\"gallery\": id} with analyze");
      const auto id = gallery_id_from_string(gallery_id);
      if (!id) throw ConfigError("unknown gallery id \"" + gallery_id + "\"");
      return cmd_analyze(make_context(gallery_config(*id), flags, out));
    }
    const Context ctx = make_context(config_from_flags(flags), flags, out);
    if (*analyze) return cmd_analyze(ctx);
    if (*sim) return cmd_simulate(ctx, x0, t0, t_end, anchor);
    if (*basin) return cmd_basin(ctx, anchor, level, resolution);
    if (*ec) return cmd_ec(ctx, horizon);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace modgrad::cli
