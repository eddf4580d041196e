#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lagdyn/energy.hpp"
#include "lagdyn/oracle.hpp"
#include "lagdyn/parameters.hpp"
#include "lagdyn/signals.hpp"

namespace lagdyn {

/// Every tunable of a run. Keys are kebab-case in files and on the command
/// line (see config_keys()).
struct RunConfig {
  // files
  std::string topology;
  std::string poses;
  std::string data;
  std::string output_dir = "out";

  // constrained estimators and energy loss
  double inertia_floor = 1e-5;  ///< ε
  energy::EnergyOptions energy;
  double lambda_ec = 0.1;  ///< λ₃
  long warmup_start = 20;  ///< 𝒵, epochs
  long warmup_ramp = 4;    ///< 𝒵_w, epochs

  // optimization
  double learning_rate = 1e-3;
  long epochs = 100;
  long batch_size = 8;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
  long torque_skip_frames = 2;  ///< leading frames left out of the torque loss
  BundleShape shape;

  // coordinates
  bool pad_replicate = false;
  bool strict = false;

  // boundaries
  signals::BoundaryOptions boundary;
  signals::BoundarySignal boundary_signal = signals::BoundarySignal::TorqueChange;
  signals::Polarity polarity = signals::Polarity::Peak;

  // synthetic data
  oracle::DatasetOptions dataset;

  /// Throws ConfigInvalid on out-of-range values.
  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment. Throws ConfigInvalid on
/// malformed lines or a file that cannot be opened.
ConfigMap parse_config_file(const std::filesystem::path& path);
ConfigMap parse_config_text(const std::string& text);

/// Applies `entries` on top of `config`. Unknown keys and unparsable values
/// throw ConfigInvalid naming the key.
void apply_config(RunConfig& config, const ConfigMap& entries);

/// All keys, in a fixed order.
std::vector<std::string> config_keys();

/// Current value of every key, suitable for parse_config_text.
std::string dump_config(const RunConfig& config);

/// λ₃^(e): 0 before 𝒵, linear over [𝒵, 𝒵 + 𝒵_w), λ₃ afterwards. A zero
/// ramp switches on at 𝒵.
double warmup_weight(long epoch, long warmup_start, long warmup_ramp, double lambda);

}  // namespace lagdyn
