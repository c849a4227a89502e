#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "modgrad/cli.hpp"

namespace modgrad::cli {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_point(std::span<const double> v) {
  std::string s = "(";
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", v[i]);
    s += (i ? ", " : "") + std::string(buf);
  }
  return s + ")";
}

Json to_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json to_json(const H0Report& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) samples.push_back({{"t", s.t}, {"lambda_min", s.lambda_min}});
  return {{"pass", r.pass},
          {"min_lambda", r.min_lambda},
          {"psd_tol", r.psd_tol},
          {"symmetry", "structural (upper triangle mirrored)"},
          {"method", "sampled, not proven"},
          {"samples", samples}};
}

Json to_json(const EcVerdict& v) {
  Json j{{"kind", to_string(v.kind)},
         {"horizon", v.horizon},
         {"horizon_integral", v.horizon_integral},
         {"half_integral", v.half_integral}};
  if (v.tail_exponent && std::isfinite(*v.tail_exponent)) {
    j["tail_exponent"] = *v.tail_exponent;
    j["tail_vanishes"] = false;
  } else {
    j["tail_exponent"] = nullptr;
    j["tail_vanishes"] = v.tail_exponent.has_value();
  }
  j["clipped"] = v.clipped;
  j["evidence"] = v.evidence;
  return j;
}

Json to_json(const IsolationVerdict& v) {
  return {{"kind", to_string(v.kind)},
          {"witness", v.witness ? to_json(*v.witness) : Json(nullptr)},
          {"min_grad_norm", v.min_grad_norm},
          {"samples", v.samples},
          {"note", v.note},
          {"status", "sampled evidence, not proof"}};
}

Json to_json(const CriticalPoint& cp, const ScalarField& field) {
  return {{"location", to_json(cp.location)},
          {"f", field.value(cp.location)},
          {"classification", to_string(cp.classification)},
          {"hessian_spectrum", to_json(cp.hessian_spectrum)},
          {"grad_norm", cp.grad_norm}};
}

Json to_json(const StabilityReport& r, const ScalarField& field) {
  const Json h1{{"pass", r.h1.pass},
                {"classification", to_string(r.h1.classification)},
                {"probes", r.h1.probes},
                {"probe_radius", r.h1.probe_radius},
                {"min_drop", r.h1.pass || r.h1.probes ? Json(r.h1.min_drop) : Json(nullptr)},
                {"evidence", r.h1.evidence}};
  const Json descent{{"ok", r.descent.ok},
                     {"trajectories", r.descent.trajectories},
                     {"passed", r.descent.passed},
                     {"start_times", to_json(r.descent.start_times)},
                     {"max_increase", r.descent.max_increase},
                     {"max_bound_excess", r.descent.max_bound_excess},
                     {"evidence", r.descent.evidence}};
  return {{"equilibrium", to_json(r.equilibrium, field)},
          {"h1", h1},
          {"h2", to_json(r.h2)},
          {"h3", to_json(r.h3)},
          {"descent", descent},
          {"conclusion", to_string(r.conclusion)},
          {"summary", r.summary}};
}

namespace {

Json to_json(const HypothesisCheck& h) {
  Json w = Json::array();
  for (const auto& x : h.witnesses) w.push_back(cli::to_json(std::span<const double>(x)));
  return {{"pass", h.pass}, {"checked", h.checked}, {"max_residual", h.max_residual}, {"witnesses", w},
          {"detail", h.detail}};
}

}  // namespace

Json to_json(const BasinHypotheses& h) {
  return {{"h4", to_json(h.h4)},
          {"h5", to_json(h.h5)},
          {"h6", to_json(h.h6)},
          {"tol_boundary", h.tol_boundary},
          {"lipschitz_estimate", h.lipschitz_estimate},
          {"all_pass", h.all_pass()}};
}

Json to_json(const BasinVerification& v, std::size_t failure_limit) {
  Json failures = Json::array();
  for (std::size_t i = 0; i < v.failures.size() && i < failure_limit; ++i) {
    const auto& f = v.failures[i];
    failures.push_back({{"start", to_json(f.start)},
                        {"status", to_string(f.status)},
                        {"final_state", to_json(f.final_state)},
                        {"final_time", f.final_time}});
  }
  return {{"sample_count", v.sample_count},
          {"converged_count", v.converged_count},
          {"failure_count", v.failures.size()},
          {"failures", failures},
          {"note", v.note}};
}

namespace {

// nlohmann prints the shortest round-trip form; reports use %.17g instead so
// JSON and CSV share one number format.
void emit(std::ostream& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out << ",\n";
        first = false;
        out << pad << Json(k).dump() << ": ";
        emit(out, v, indent + 2);
      }
      out << '\n' << close << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        emit(out, j[i], indent + 2);
      }
      out << '\n' << close << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out << format_number(v);
      else
        out << "null";
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace

std::string to_report_text(const Json& doc) {
  std::ostringstream out;
  emit(out, doc, 0);
  out << '\n';
  return out.str();
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_report_text(doc);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t n = traj.samples.front().x.size();
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i + 1;
  out << '\n';
  for (const auto& s : traj.samples) {
    out << format_number(s.t);
    for (double x : s.x) out << ',' << format_number(x);
    out << '\n';
  }
}

void write_lyapunov_csv(std::ostream& out, const LyapunovTrace& trace) {
  out << "t,V,Vdot,lambda1,gradnorm2\n";
  for (const auto& r : trace)
    out << format_number(r.t) << ',' << format_number(r.v) << ',' << format_number(r.vdot) << ','
        << format_number(r.lambda1) << ',' << format_number(r.grad_norm2) << '\n';
}

void write_basin_svg(std::ostream& out, const GridComponent& comp, std::span<const CriticalPoint> points) {
  const Box& box = comp.grid.box();
  const double w = box.width(0), h = box.width(1);
  const double scale = 600.0 / std::max(w, h);
  auto px = [&](double x) { return format_number((x - box.lo(0)) * scale); };
  auto py = [&](double y) { return format_number((box.hi(1) - y) * scale); };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(w * scale) << "\" height=\""
      << format_number(h * scale) << "\" viewBox=\"0 0 " << format_number(w * scale) << ' ' << format_number(h * scale)
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"black\"/>\n";
  out << "<path fill=\"#cfe3f7\" fill-rule=\"evenodd\" stroke=\"#1f5fa8\" stroke-width=\"1\" d=\"";
  for (const auto& loop : mask_outline(comp)) {
    for (std::size_t k = 0; k < loop.size(); ++k) out << (k ? " L" : "M") << px(loop[k][0]) << ',' << py(loop[k][1]);
    out << " Z ";
  }
  out << "\"/>\n";
  for (const auto& cp : points) {
    const char* color = cp.classification == Classification::IsolatedLocalMax ? "#2a9d2a"
                        : cp.classification == Classification::Saddle       ? "#d08a00"
                                                                            : "#777777";
    out << "<circle cx=\"" << px(cp.location[0]) << "\" cy=\"" << py(cp.location[1]) << "\" r=\"4\" fill=\"" << color
        << "\"><title>" << to_string(cp.classification) << ' ' << format_point(cp.location) << "</title></circle>\n";
  }
  out << "<path stroke=\"#c0392b\" stroke-width=\"2\" d=\"M" << px(comp.anchor[0]) << ',' << py(comp.anchor[1])
      << " m-6,-6 l12,12 m0,-12 l-12,12\"><title>anchor " << format_point(comp.anchor) << "</title></path>\n";
  out << "<text x=\"6\" y=\"16\" font-family=\"monospace\" font-size=\"12\">c = " << format_value(comp.c)
      << ", M = " << format_value(comp.M) << "</text>\n</svg>\n";
}

}  // namespace modgrad::cli
