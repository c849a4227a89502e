#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modgrad/basin.hpp"
#include "modgrad/errors.hpp"
#include "modgrad/gallery.hpp"
#include "modgrad/stability.hpp"

namespace modgrad::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3 };

/// Invalid configuration or command-line input (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct BasinSettings {
  std::optional<Vec> anchor;
  std::optional<double> c;
  std::vector<std::size_t> resolution;  // empty: 512 per axis for n = 2, 64 otherwise
  std::size_t samples = 100;
  double t_end = 50.0;
  double converge_radius = 1e-3;
  std::optional<double> tol_boundary;
  double sample_radius = 0.5;  // n > 4 only
};

struct SimulateSettings {
  std::optional<Vec> x0;
  double t0 = 0.0;
  double t_end = 100.0;
  double convergence_radius = 1e-6;
};

/// Everything a command needs, validated before any computation.
struct AnalysisConfig {
  std::optional<GalleryId> gallery;
  int depth = kDefaultSplineDepth;
  std::string f_text;  // expression source or gallery description
  std::string p_text;  // "identity", a gallery default, or the matrix as JSON
  std::optional<System> system;
  std::vector<double> h0_times;
  double psd_tol = kDefaultPsdTol;
  FinderOptions finder;
  CertifyOptions certify;  // carries the EC horizon, quadrature tolerance and ODE options
  SimulateSettings simulate;
  BasinSettings basin;
  std::uint64_t seed = 0;
  std::filesystem::path output = ".";
};

/// Parses a JSON configuration document. Unknown keys are errors.
AnalysisConfig parse_config(const std::string& text);
AnalysisConfig load_config(const std::filesystem::path& path);
/// Configuration of a built-in example with default options.
AnalysisConfig gallery_config(GalleryId id);

/// Entry point of the command-line tool. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modgrad::cli
