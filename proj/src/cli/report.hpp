#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "modgrad/basin.hpp"
#include "modgrad/stability.hpp"

namespace modgrad::cli {

using Json = nlohmann::ordered_json;

Json to_json(std::span<const double> v);
Json to_json(const H0Report& r);
Json to_json(const EcVerdict& v);
Json to_json(const IsolationVerdict& v);
Json to_json(const CriticalPoint& cp, const ScalarField& field);
Json to_json(const StabilityReport& r, const ScalarField& field);
Json to_json(const BasinHypotheses& h);
Json to_json(const BasinVerification& v, std::size_t failure_limit = 25);

/// "%.17g"
std::string format_number(double v);
/// "%.10g", for console output and plot labels.
std::string format_value(double v);
/// "(a, b, ...)" with 10 significant digits, for console output.
std::string format_point(std::span<const double> v);

/// Indented JSON with every float printed as "%.17g" (non-finite as null).
std::string to_report_text(const Json& doc);
void write_json(const std::filesystem::path& path, const Json& doc);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_lyapunov_csv(std::ostream& out, const LyapunovTrace& trace);
/// Standalone SVG of a 2-D component: mask outline, anchor, critical points.
void write_basin_svg(std::ostream& out, const GridComponent& comp, std::span<const CriticalPoint> points);

}  // namespace modgrad::cli
