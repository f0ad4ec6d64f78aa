#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbmes/limit_covariance.hpp"
#include "sbmes/linalg.hpp"

namespace sbmes {

enum class Family { kMixtureOnly, kSbm };
enum class LabelMode { kAuto, kFixed, kCategorical };

struct Preset {
  std::string name;
  Family family;
  Vector pi;
  std::optional<Matrix> b;  // SBM presets
  std::optional<Matrix> x;  // printed latent positions (mixture presets, connectome)
  LabelMode labels = LabelMode::kCategorical;
  std::string description;
};

/// m1-m4 (mixture), affinity1/2, coreperiph3/4, connectome.
const std::vector<Preset>& builtin_presets();

const Preset& find_preset(const std::string& name);

/// Method identifiers: "<engine>_<embedding>" with engine in {kmeans, em, es}
/// and embedding in {ase, lse}.
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  Family family = Family::kSbm;
  std::string model;       // preset name or "inline"
  Matrix b;                // SBM block matrix (family == kSbm)
  Matrix x;                // latent positions used as ground truth
  Vector pi;
  std::vector<int> n_grid;
  int replications = 100;
  std::vector<std::string> methods;
  std::uint64_t seed = 1;
  double tol_ase = 1e-5;
  double tol_lse = 1e-6;
  int max_iter = 10000;
  LabelMode labels = LabelMode::kAuto;
  bool empirical_moments = false;
  LseForm lse_form = LseForm::kHalfBoth;
  std::string output = "results";

  int dim() const { return static_cast<int>(x.cols()); }
  int blocks() const { return static_cast<int>(pi.size()); }
  /// Labels actually used for SBM sampling once kAuto is resolved.
  LabelMode resolved_labels() const;
};

/// Parses the INI-style experiment file (sections [experiment] and,
/// for model = inline, [model]); throws Error(kConfig) on bad input.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Builds a config from a preset with the standard protocol defaults.
ExperimentConfig preset_config(const std::string& preset, std::vector<int> n_grid,
                               int replications, std::vector<std::string> methods,
                               std::uint64_t seed);

/// Re-validates after command-line overrides.
void validate(const ExperimentConfig& config);

/// Deterministic text rendering of the resolved config; hashed into the
/// run manifest.
std::string canonical_text(const ExperimentConfig& config);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace sbmes
