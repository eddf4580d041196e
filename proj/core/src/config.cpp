#include "lagdyn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace lagdyn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) {
    return {};
  }
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigInvalid("invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ConfigInvalid("invalid boolean '" + value + "' for " + key);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<double>(key, trim(item)));
  }
  return out;
}

std::string format(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + format(v[i]);
  }
  return out;
}

const char* signal_name(signals::BoundarySignal s) {
  switch (s) {
    case signals::BoundarySignal::Power:
      return "power";
    case signals::BoundarySignal::Torque:
      return "torque";
    case signals::BoundarySignal::TorqueChange:
      return "torque-change";
    case signals::BoundarySignal::Average:
      return "average";
  }
  return "torque-change";
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number(std::string key, Access access) {
  return {std::move(key),
          [access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_number<T>(k, v); },
          [access](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format(access(c));
            } else {
              return std::to_string(access(c));
            }
          }};
}

template <typename Access>
Field text(std::string key, Access access) {
  return {std::move(key), [access](RunConfig& c, const std::string&, const std::string& v) { access(c) = v; },
          [access](const RunConfig& c) { return access(c); }};
}

template <typename Access>
Field flag(std::string key, Access access) {
  return {std::move(key),
          [access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_bool(k, v); },
          [access](const RunConfig& c) { return std::string(access(c) ? "true" : "false"); }};
}

template <typename Access>
Field list(std::string key, Access access) {
  return {std::move(key),
          [access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_list(k, v); },
          [access](const RunConfig& c) { return format_list(access(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      text("topology", [](auto& c) -> auto& { return c.topology; }),
      text("poses", [](auto& c) -> auto& { return c.poses; }),
      text("data", [](auto& c) -> auto& { return c.data; }),
      text("output-dir", [](auto& c) -> auto& { return c.output_dir; }),
      number<double>("epsilon", [](auto& c) -> auto& { return c.inertia_floor; }),
      number<double>("delta", [](auto& c) -> auto& { return c.energy.delta; }),
      number<double>("mask-threshold", [](auto& c) -> auto& { return c.energy.mask_threshold; }),
      number<double>("huber-knee", [](auto& c) -> auto& { return c.energy.huber_knee; }),
      number<double>("lambda-ec", [](auto& c) -> auto& { return c.lambda_ec; }),
      number<long>("warmup-start", [](auto& c) -> auto& { return c.warmup_start; }),
      number<long>("warmup-ramp", [](auto& c) -> auto& { return c.warmup_ramp; }),
      number<double>("learning-rate", [](auto& c) -> auto& { return c.learning_rate; }),
      number<long>("epochs", [](auto& c) -> auto& { return c.epochs; }),
      number<long>("batch-size", [](auto& c) -> auto& { return c.batch_size; }),
      number<std::uint64_t>("seed", [](auto& c) -> auto& { return c.seed; }),
      number<double>("holdout-fraction", [](auto& c) -> auto& { return c.holdout_fraction; }),
      number<long>("torque-skip-frames", [](auto& c) -> auto& { return c.torque_skip_frames; }),
      number<Index>("hidden-width", [](auto& c) -> auto& { return c.shape.hidden_width; }),
      number<Index>("hidden-layers", [](auto& c) -> auto& { return c.shape.hidden_layers; }),
      number<Index>("channels", [](auto& c) -> auto& { return c.shape.channels; }),
      number<Index>("stages", [](auto& c) -> auto& { return c.shape.stages; }),
      number<Index>("kernel-size", [](auto& c) -> auto& { return c.shape.kernel_size; }),
      flag("pad-replicate", [](auto& c) -> auto& { return c.pad_replicate; }),
      flag("strict", [](auto& c) -> auto& { return c.strict; }),
      number<Index>("smoothing-window", [](auto& c) -> auto& { return c.boundary.smoothing_window; }),
      {"prominence-threshold",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "iqr") {
           c.boundary.prominence_threshold.reset();
         } else {
           c.boundary.prominence_threshold = parse_number<double>(k, v);
         }
       },
       [](const RunConfig& c) {
         return c.boundary.prominence_threshold ? format(*c.boundary.prominence_threshold) : std::string("iqr");
       }},
      number<Index>("min-separation", [](auto& c) -> auto& { return c.boundary.min_separation; }),
      {"boundary-signal",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         for (auto s : {signals::BoundarySignal::Power, signals::BoundarySignal::Torque,
                        signals::BoundarySignal::TorqueChange, signals::BoundarySignal::Average}) {
           if (v == signal_name(s)) {
             c.boundary_signal = s;
             return;
           }
         }
         throw ConfigInvalid("invalid value '" + v + "' for " + k + " (power, torque, torque-change, average)");
       },
       [](const RunConfig& c) { return std::string(signal_name(c.boundary_signal)); }},
      {"polarity",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "peak") {
           c.polarity = signals::Polarity::Peak;
         } else if (v == "trough") {
           c.polarity = signals::Polarity::Trough;
         } else {
           throw ConfigInvalid("invalid value '" + v + "' for " + k + " (peak, trough)");
         }
       },
       [](const RunConfig& c) { return std::string(c.polarity == signals::Polarity::Peak ? "peak" : "trough"); }},
      number<Index>("sequences", [](auto& c) -> auto& { return c.dataset.sequences; }),
      number<Index>("frames", [](auto& c) -> auto& { return c.dataset.frames; }),
      number<Index>("regimes", [](auto& c) -> auto& { return c.dataset.regimes; }),
      number<Index>("min-regime-frames", [](auto& c) -> auto& { return c.dataset.min_regime_frames; }),
      number<double>("dt", [](auto& c) -> auto& { return c.dataset.sequence.dt; }),
      number<Index>("substeps", [](auto& c) -> auto& { return c.dataset.sequence.substeps; }),
      number<double>("drive-noise", [](auto& c) -> auto& { return c.dataset.sequence.drive_noise_std; }),
      number<double>("position-noise", [](auto& c) -> auto& { return c.dataset.sequence.position_noise_std; }),
      number<double>("step-ratio", [](auto& c) -> auto& { return c.dataset.step_ratio; }),
      number<double>("min-step", [](auto& c) -> auto& { return c.dataset.min_step; }),
      number<double>("initial-angle", [](auto& c) -> auto& { return c.dataset.initial_angle; }),
      list("masses", [](auto& c) -> auto& { return c.dataset.chain.masses; }),
      list("lengths", [](auto& c) -> auto& { return c.dataset.chain.lengths; }),
      list("friction", [](auto& c) -> auto& { return c.dataset.chain.friction; }),
      number<double>("gravity", [](auto& c) -> auto& { return c.dataset.chain.gravity; }),
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw ConfigInvalid(what);
    }
  };
  require(inertia_floor >= 0.0, "epsilon must be >= 0");
  require(energy.delta >= 0.0, "delta must be >= 0");
  require(energy.mask_threshold >= 0.0, "mask-threshold must be >= 0");
  require(energy.huber_knee > 0.0, "huber-knee must be > 0");
  require(lambda_ec >= 0.0, "lambda-ec must be >= 0");
  require(warmup_start >= 0 && warmup_ramp >= 0, "warmup-start and warmup-ramp must be >= 0");
  require(learning_rate > 0.0, "learning-rate must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch-size must be >= 1");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "holdout-fraction must lie in [0, 1)");
  require(torque_skip_frames >= 0, "torque-skip-frames must be >= 0");
  require(shape.dof >= 1 && shape.hidden_width >= 1 && shape.hidden_layers >= 0, "invalid estimator shape");
  require(shape.channels >= 1 && shape.stages >= 0, "invalid gating shape");
  require(shape.kernel_size >= 1 && shape.kernel_size % 2 == 1, "kernel-size must be odd");
  require(boundary.smoothing_window >= 1, "smoothing-window must be >= 1");
  require(boundary.min_separation >= 1, "min-separation must be >= 1");
  require(!boundary.prominence_threshold || *boundary.prominence_threshold >= 0.0,
          "prominence-threshold must be >= 0");
  require(dataset.sequences >= 1 && dataset.frames >= 2, "need at least one sequence of two frames");
  require(dataset.sequence.dt > 0.0 && dataset.sequence.substeps >= 1, "dt must be > 0 and substeps >= 1");
  require(dataset.sequence.drive_noise_std >= 0.0 && dataset.sequence.position_noise_std >= 0.0,
          "noise levels must be >= 0");
  dataset.chain.validate();
  for (const auto* path : {&topology, &poses, &data}) {
    if (!path->empty() && !std::filesystem::exists(*path)) {
      throw ConfigInvalid("path does not exist: " + *path);
    }
  }
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigInvalid("line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigInvalid("cannot open config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(RunConfig& config, const ConfigMap& entries) {
  for (const auto& [key, value] : entries) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      throw ConfigInvalid("unknown config key '" + key + "'");
    }
    it->set(config, key, value);
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) {
    keys.push_back(f.key);
  }
  return keys;
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

double warmup_weight(long epoch, long warmup_start, long warmup_ramp, double lambda) {
  if (epoch < warmup_start) {
    return 0.0;
  }
  if (warmup_ramp <= 0 || epoch >= warmup_start + warmup_ramp) {
    return lambda;
  }
  const double ratio = static_cast<double>(epoch - warmup_start) / static_cast<double>(warmup_ramp);
  return ratio * lambda;
}

}  // namespace lagdyn
