#include "physproj/config.hpp"

#include "physproj/csv.hpp"
#include "physproj/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace physproj {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::SpringSingle, "spring-single"}, {ExperimentKind::SpringMany, "spring-many"},
      {ExperimentKind::LtpCompare, "ltp-compare"},     {ExperimentKind::AblationArch, "ablation-arch"},
      {ExperimentKind::SmallSamples, "small-samples"}, {ExperimentKind::Timing, "timing"}};
  return names;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && ptr == end && std::isfinite(v),
          "config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && ptr == end, "config: '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  require(v >= -2147483647LL && v <= 2147483647LL, "config: '" + key + "' is out of range");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && ptr == end,
          "config: '" + key + "' expects an unsigned integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "off" || text == "no" || text == "0") return false;
  throw ValidationError("config: '" + key + "' expects true/false, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& p : split(text, ',')) out.push_back(parse_double(key, p));
  return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& p : split(text, ',')) out.push_back(parse_int(key, p));
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string num(double v) { return csv::format_shortest(v); }

std::string ints(const std::vector<int>& v) {
  std::vector<std::string> parts;
  for (int x : v) parts.push_back(std::to_string(x));
  return join(parts, ",");
}

std::string doubles(const double* v, std::size_t n) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < n; ++i) parts.push_back(num(v[i]));
  return join(parts, ",");
}

std::string boolean(bool b) { return b ? "true" : "false"; }

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    auto add = [&](std::string name, auto set, auto get) {
      k.push_back(Key{std::move(name), set, get});
    };
    add("kind",
        [](ExperimentConfig& c, const std::string& v) {
          c.kind = parse_experiment_kind(v);
          c.system = system_of(c.kind);
        },
        [](const ExperimentConfig& c) { return to_string(c.kind); });
    add("system",
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "spring") c.system = PhysicalSystem::Spring;
          else if (v == "ltp") c.system = PhysicalSystem::Ltp;
          else throw ValidationError("config: 'system' must be spring or ltp");
        },
        [](const ExperimentConfig& c) { return to_string(c.system); });
    add("seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); });
    add("out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
        [](const ExperimentConfig& c) { return c.out_dir.string(); });
    add("split",
        [](ExperimentConfig& c, const std::string& v) {
          auto f = parse_doubles("split", v);
          require(f.size() == 3, "config: 'split' needs three fractions");
          c.fractions = {f[0], f[1], f[2]};
        },
        [](const ExperimentConfig& c) { return doubles(c.fractions.data(), 3); });
    add("threads", [](ExperimentConfig& c, const std::string& v) { c.threads = parse_int("threads", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.threads); });

    // spring-mass
    add("spring.m1", [](ExperimentConfig& c, const std::string& v) { c.spring.params.m1 = parse_double("spring.m1", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.m1); });
    add("spring.m2", [](ExperimentConfig& c, const std::string& v) { c.spring.params.m2 = parse_double("spring.m2", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.m2); });
    add("spring.k1", [](ExperimentConfig& c, const std::string& v) { c.spring.params.k1 = parse_double("spring.k1", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.k1); });
    add("spring.k2", [](ExperimentConfig& c, const std::string& v) { c.spring.params.k2 = parse_double("spring.k2", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.k2); });
    add("spring.L1", [](ExperimentConfig& c, const std::string& v) { c.spring.params.L1 = parse_double("spring.L1", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.L1); });
    add("spring.L2", [](ExperimentConfig& c, const std::string& v) { c.spring.params.L2 = parse_double("spring.L2", v); },
        [](const ExperimentConfig& c) { return num(c.spring.params.L2); });
    add("spring.samples", [](ExperimentConfig& c, const std::string& v) { c.spring.samples = parse_int("spring.samples", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.spring.samples); });
    add("spring.dt", [](ExperimentConfig& c, const std::string& v) { c.spring.delta_t = parse_double("spring.dt", v); },
        [](const ExperimentConfig& c) { return num(c.spring.delta_t); });
    add("spring.substeps", [](ExperimentConfig& c, const std::string& v) { c.spring.substeps = parse_int("spring.substeps", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.spring.substeps); });
    add("spring.e_max", [](ExperimentConfig& c, const std::string& v) { c.spring.e_max = parse_double("spring.e_max", v); },
        [](const ExperimentConfig& c) { return num(c.spring.e_max); });
    add("spring.initial_state",
        [](ExperimentConfig& c, const std::string& v) {
          auto s = parse_doubles("spring.initial_state", v);
          require(s.size() == 4, "config: 'spring.initial_state' needs x1,v1,x2,v2");
          c.spring.initial = spring::make_state(s[0], s[1], s[2], s[3]);
        },
        [](const ExperimentConfig& c) { return doubles(c.spring.initial.data(), 4); });
    add("spring.steps", [](ExperimentConfig& c, const std::string& v) { c.spring.steps = parse_int("spring.steps", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.spring.steps); });
    add("spring.trajectories",
        [](ExperimentConfig& c, const std::string& v) { c.spring.trajectories = parse_int("spring.trajectories", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.spring.trajectories); });
    add("spring.anchor",
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "initial") c.spring.anchor = spring::EnergyAnchor::Initial;
          else if (v == "previous") c.spring.anchor = spring::EnergyAnchor::Previous;
          else throw ValidationError("config: 'spring.anchor' must be initial or previous");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.spring.anchor == spring::EnergyAnchor::Initial ? "initial" : "previous");
        });

    // plasma
    add("ltp.samples", [](ExperimentConfig& c, const std::string& v) { c.ltp.samples = parse_int("ltp.samples", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.ltp.samples); });
    add("ltp.dataset", [](ExperimentConfig& c, const std::string& v) { c.ltp.dataset = v; },
        [](const ExperimentConfig& c) { return c.ltp.dataset; });
    add("ltp.column_mapping", [](ExperimentConfig& c, const std::string& v) { c.ltp.column_mapping = v; },
        [](const ExperimentConfig& c) { return c.ltp.column_mapping; });
    add("ltp.skew_threshold",
        [](ExperimentConfig& c, const std::string& v) { c.ltp.skew_threshold = parse_double("ltp.skew_threshold", v); },
        [](const ExperimentConfig& c) { return num(c.ltp.skew_threshold); });
    add("ltp.electrons_in_pressure",
        [](ExperimentConfig& c, const std::string& v) {
          c.ltp.electrons_in_pressure = parse_bool("ltp.electrons_in_pressure", v);
        },
        [](const ExperimentConfig& c) { return boolean(c.ltp.electrons_in_pressure); });
    add("ltp.electron_scale_floor",
        [](ExperimentConfig& c, const std::string& v) {
          c.ltp.electron_scale_floor = parse_double("ltp.electron_scale_floor", v);
        },
        [](const ExperimentConfig& c) { return num(c.ltp.electron_scale_floor); });
    add("ltp.pinn_electron_scale_floor",
        [](ExperimentConfig& c, const std::string& v) {
          c.ltp.pinn_electron_scale_floor = parse_double("ltp.pinn_electron_scale_floor", v);
        },
        [](const ExperimentConfig& c) { return num(c.ltp.pinn_electron_scale_floor); });

    // model
    add("model.hidden", [](ExperimentConfig& c, const std::string& v) { c.model.hidden = parse_ints("model.hidden", v); },
        [](const ExperimentConfig& c) { return ints(c.model.hidden); });
    add("model.activation",
        [](ExperimentConfig& c, const std::string& v) {
          if (v == "leaky_relu") c.model.activation = Activation::LeakyReLU;
          else if (v == "identity") c.model.activation = Activation::Identity;
          else throw ValidationError("config: 'model.activation' must be leaky_relu or identity");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.model.activation == Activation::LeakyReLU ? "leaky_relu" : "identity");
        });
    add("model.leaky_slope",
        [](ExperimentConfig& c, const std::string& v) { c.model.leaky_slope = parse_double("model.leaky_slope", v); },
        [](const ExperimentConfig& c) { return num(c.model.leaky_slope); });
    add("model.ensemble_members",
        [](ExperimentConfig& c, const std::string& v) {
          c.model.ensemble_members = parse_int("model.ensemble_members", v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.model.ensemble_members); });
    add("model.pinn", [](ExperimentConfig& c, const std::string& v) { c.model.train_pinn = parse_bool("model.pinn", v); },
        [](const ExperimentConfig& c) { return boolean(c.model.train_pinn); });
    add("pinn.lambda", [](ExperimentConfig& c, const std::string& v) { c.model.pinn_lambda = parse_double("pinn.lambda", v); },
        [](const ExperimentConfig& c) { return num(c.model.pinn_lambda); });
    add("pinn.lambda_split",
        [](ExperimentConfig& c, const std::string& v) {
          auto s = parse_doubles("pinn.lambda_split", v);
          if (s.empty()) {
            c.model.pinn_lambda_split.reset();
            return;
          }
          require(s.size() == 3, "config: 'pinn.lambda_split' needs three values");
          c.model.pinn_lambda_split = std::array<double, 3>{s[0], s[1], s[2]};
        },
        [](const ExperimentConfig& c) {
          return c.model.pinn_lambda_split ? doubles(c.model.pinn_lambda_split->data(), 3) : std::string();
        });

    // training
    add("train.learning_rate",
        [](ExperimentConfig& c, const std::string& v) { c.train.adam.learning_rate = parse_double("train.learning_rate", v); },
        [](const ExperimentConfig& c) { return num(c.train.adam.learning_rate); });
    add("train.beta1", [](ExperimentConfig& c, const std::string& v) { c.train.adam.beta1 = parse_double("train.beta1", v); },
        [](const ExperimentConfig& c) { return num(c.train.adam.beta1); });
    add("train.beta2", [](ExperimentConfig& c, const std::string& v) { c.train.adam.beta2 = parse_double("train.beta2", v); },
        [](const ExperimentConfig& c) { return num(c.train.adam.beta2); });
    add("train.epsilon", [](ExperimentConfig& c, const std::string& v) { c.train.adam.epsilon = parse_double("train.epsilon", v); },
        [](const ExperimentConfig& c) { return num(c.train.adam.epsilon); });
    add("train.max_epochs", [](ExperimentConfig& c, const std::string& v) { c.train.max_epochs = parse_int("train.max_epochs", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.train.max_epochs); });
    add("train.batch_size", [](ExperimentConfig& c, const std::string& v) { c.train.batch_size = parse_int("train.batch_size", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.train.batch_size); });
    add("train.early_stop",
        [](ExperimentConfig& c, const std::string& v) {
          if (parse_bool("train.early_stop", v)) {
            if (!c.train.early_stop) c.train.early_stop = EarlyStopping{};
          } else {
            c.train.early_stop.reset();
          }
        },
        [](const ExperimentConfig& c) { return boolean(c.train.early_stop.has_value()); });
    add("train.early_stop_alpha",
        [](ExperimentConfig& c, const std::string& v) {
          if (!c.train.early_stop) c.train.early_stop = EarlyStopping{};
          c.train.early_stop->alpha = parse_double("train.early_stop_alpha", v);
        },
        [](const ExperimentConfig& c) { return num(c.train.early_stop ? c.train.early_stop->alpha : EarlyStopping{}.alpha); });
    add("train.early_stop_strip",
        [](ExperimentConfig& c, const std::string& v) {
          if (!c.train.early_stop) c.train.early_stop = EarlyStopping{};
          c.train.early_stop->strip_length = parse_int("train.early_stop_strip", v);
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.train.early_stop ? c.train.early_stop->strip_length : EarlyStopping{}.strip_length);
        });
    add("train.lr_plateau",
        [](ExperimentConfig& c, const std::string& v) {
          if (parse_bool("train.lr_plateau", v)) {
            if (!c.train.lr_plateau) c.train.lr_plateau = PlateauSchedule{};
          } else {
            c.train.lr_plateau.reset();
          }
        },
        [](const ExperimentConfig& c) { return boolean(c.train.lr_plateau.has_value()); });
    add("train.plateau_patience",
        [](ExperimentConfig& c, const std::string& v) {
          if (!c.train.lr_plateau) c.train.lr_plateau = PlateauSchedule{};
          c.train.lr_plateau->patience = parse_int("train.plateau_patience", v);
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.train.lr_plateau ? c.train.lr_plateau->patience : PlateauSchedule{}.patience);
        });
    add("train.plateau_factor",
        [](ExperimentConfig& c, const std::string& v) {
          if (!c.train.lr_plateau) c.train.lr_plateau = PlateauSchedule{};
          c.train.lr_plateau->factor = parse_double("train.plateau_factor", v);
        },
        [](const ExperimentConfig& c) { return num(c.train.lr_plateau ? c.train.lr_plateau->factor : PlateauSchedule{}.factor); });
    add("train.plateau_threshold",
        [](ExperimentConfig& c, const std::string& v) {
          if (!c.train.lr_plateau) c.train.lr_plateau = PlateauSchedule{};
          c.train.lr_plateau->threshold = parse_double("train.plateau_threshold", v);
        },
        [](const ExperimentConfig& c) {
          return num(c.train.lr_plateau ? c.train.lr_plateau->threshold : PlateauSchedule{}.threshold);
        });

    // projection
    add("projection.tolerance",
        [](ExperimentConfig& c, const std::string& v) { c.projection.tolerance = parse_double("projection.tolerance", v); },
        [](const ExperimentConfig& c) { return num(c.projection.tolerance); });
    add("projection.max_iterations",
        [](ExperimentConfig& c, const std::string& v) {
          c.projection.max_iterations = parse_int("projection.max_iterations", v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.projection.max_iterations); });
    add("projection.damping",
        [](ExperimentConfig& c, const std::string& v) { c.projection.damping = parse_double("projection.damping", v); },
        [](const ExperimentConfig& c) { return num(c.projection.damping); });
    add("projection.weights",
        [](ExperimentConfig& c, const std::string& v) {
          auto w = parse_doubles("projection.weights", v);
          c.projection.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        },
        [](const ExperimentConfig& c) {
          return doubles(c.projection.weights.data(), static_cast<std::size_t>(c.projection.weights.size()));
        });

    // sweeps
    add("sweep.architectures",
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep.architectures.clear();
          if (trim(v).empty()) return;
          for (const auto& arch : split(v, ';')) c.sweep.architectures.push_back(parse_ints("sweep.architectures", arch));
        },
        [](const ExperimentConfig& c) {
          std::vector<std::string> parts;
          for (const auto& a : c.sweep.architectures) parts.push_back(ints(a));
          return join(parts, "; ");
        });
    add("sweep.sizes", [](ExperimentConfig& c, const std::string& v) { c.sweep.sizes = parse_ints("sweep.sizes", v); },
        [](const ExperimentConfig& c) { return ints(c.sweep.sizes); });
    add("sweep.resamples", [](ExperimentConfig& c, const std::string& v) { c.sweep.resamples = parse_int("sweep.resamples", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.sweep.resamples); });
    add("sweep.pool_size", [](ExperimentConfig& c, const std::string& v) { c.sweep.pool_size = parse_int("sweep.pool_size", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.sweep.pool_size); });
    add("sweep.test_size", [](ExperimentConfig& c, const std::string& v) { c.sweep.test_size = parse_int("sweep.test_size", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.sweep.test_size); });
    add("sweep.validation_fraction",
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep.validation_fraction = parse_double("sweep.validation_fraction", v);
        },
        [](const ExperimentConfig& c) { return num(c.sweep.validation_fraction); });
    add("trend.points", [](ExperimentConfig& c, const std::string& v) { c.sweep.trend_points = parse_int("trend.points", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.sweep.trend_points); });
    add("trend.current", [](ExperimentConfig& c, const std::string& v) { c.sweep.trend_current = parse_double("trend.current", v); },
        [](const ExperimentConfig& c) { return num(c.sweep.trend_current); });
    add("trend.radius", [](ExperimentConfig& c, const std::string& v) { c.sweep.trend_radius = parse_double("trend.radius", v); },
        [](const ExperimentConfig& c) { return num(c.sweep.trend_radius); });
    add("trend.pressure_min_torr",
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep.trend_pressure_min = parse_double("trend.pressure_min_torr", v);
        },
        [](const ExperimentConfig& c) { return num(c.sweep.trend_pressure_min); });
    add("trend.pressure_max_torr",
        [](ExperimentConfig& c, const std::string& v) {
          c.sweep.trend_pressure_max = parse_double("trend.pressure_max_torr", v);
        },
        [](const ExperimentConfig& c) { return num(c.sweep.trend_pressure_max); });

    // io
    add("io.data", [](ExperimentConfig& c, const std::string& v) { c.io.data = v; },
        [](const ExperimentConfig& c) { return c.io.data; });
    add("io.model_dir", [](ExperimentConfig& c, const std::string& v) { c.io.model_dir = v; },
        [](const ExperimentConfig& c) { return c.io.model_dir; });
    add("io.inputs", [](ExperimentConfig& c, const std::string& v) { c.io.inputs = v; },
        [](const ExperimentConfig& c) { return c.io.inputs; });
    return k;
  }();
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_names())
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (const auto& [k, name] : kind_names())
    if (name == text) return k;
  throw ValidationError("unknown experiment kind '" + text + "'");
}

std::string to_string(PhysicalSystem system) { return system == PhysicalSystem::Spring ? "spring" : "ltp"; }

PhysicalSystem system_of(ExperimentKind kind) {
  return kind == ExperimentKind::SpringSingle || kind == ExperimentKind::SpringMany ? PhysicalSystem::Spring
                                                                                     : PhysicalSystem::Ltp;
}

std::vector<int> ExperimentConfig::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(system == PhysicalSystem::Spring ? 4 : 3);
  dims.insert(dims.end(), model.hidden.begin(), model.hidden.end());
  dims.push_back(system == PhysicalSystem::Spring ? 4 : 17);
  return dims;
}

TrainConfig ExperimentConfig::pinn_train() const {
  TrainConfig t = train;
  t.lambda_physics = model.pinn_lambda;
  if (system == PhysicalSystem::Ltp) {
    const double third = model.pinn_lambda / 3.0;
    t.lambda_split = model.pinn_lambda_split.value_or(std::array<double, 3>{third, third, third});
    // keep the sum exactly consistent with lambda_physics
    t.lambda_physics = (*t.lambda_split)[0] + (*t.lambda_split)[1] + (*t.lambda_split)[2];
  } else {
    t.lambda_split.reset();
  }
  return t;
}

void ExperimentConfig::validate() const {
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) < 1e-9 && fractions[0] > 0.0 &&
              fractions[1] >= 0.0 && fractions[2] >= 0.0,
          "config: split fractions must be non-negative, sum to 1, with a positive training share");
  require(threads >= 0, "config: threads must be non-negative");
  require(system_of(kind) == system, "config: system does not match experiment kind");
  spring.params.validate();
  require(spring.samples >= 10, "config: spring.samples must be at least 10");
  require(spring.delta_t > 0.0 && spring.substeps >= 1, "config: spring.dt and spring.substeps must be positive");
  require(spring.e_max > 0.0, "config: spring.e_max must be positive");
  require(spring.initial.allFinite(), "config: spring.initial_state must be finite");
  require(spring.steps >= 1 && spring.trajectories >= 1, "config: spring.steps and spring.trajectories must be >= 1");
  require(ltp.samples >= 10, "config: ltp.samples must be at least 10");
  require(ltp.skew_threshold > 0.0, "config: ltp.skew_threshold must be positive");
  require(ltp.electron_scale_floor > 0.0 && ltp.pinn_electron_scale_floor > 0.0,
          "config: electron scale floors must be positive");
  if (!ltp.dataset.empty())
    require(std::filesystem::exists(ltp.dataset), "config: ltp.dataset not found: " + ltp.dataset);
  if (!ltp.column_mapping.empty())
    require(std::filesystem::exists(ltp.column_mapping), "config: ltp.column_mapping not found: " + ltp.column_mapping);
  for (int h : model.hidden) require(h > 0, "config: model.hidden sizes must be positive");
  require(model.leaky_slope >= 0.0, "config: model.leaky_slope must be non-negative");
  require(model.ensemble_members >= 1, "config: model.ensemble_members must be >= 1");
  train.validate();
  pinn_train().validate();
  if (model.pinn_lambda_split) {
    const auto& s = *model.pinn_lambda_split;
    require(std::abs(s[0] + s[1] + s[2] - model.pinn_lambda) <= 1e-12 * std::max(1.0, model.pinn_lambda),
            "config: pinn.lambda_split must sum to pinn.lambda");
  }
  projection.validate(system == PhysicalSystem::Spring ? 4 : 17);
  switch (kind) {
    case ExperimentKind::AblationArch:
      require(!sweep.architectures.empty(), "config: sweep.architectures must be nonempty");
      for (const auto& a : sweep.architectures)
        for (int h : a) require(h > 0, "config: architecture sizes must be positive");
      break;
    case ExperimentKind::SmallSamples:
    case ExperimentKind::Timing:
      require(!sweep.sizes.empty(), "config: sweep.sizes must be nonempty");
      require(sweep.resamples >= 1, "config: sweep.resamples must be >= 1");
      require(sweep.test_size >= 1 && sweep.pool_size > sweep.test_size,
              "config: sweep.pool_size must exceed sweep.test_size");
      for (int s : sweep.sizes) {
        require(s >= 4, "config: sweep sizes must be at least 4");
        require(s <= sweep.pool_size - sweep.test_size, "config: sweep size exceeds the draw pool");
      }
      require(sweep.validation_fraction > 0.0 && sweep.validation_fraction < 1.0,
              "config: sweep.validation_fraction must lie in (0, 1)");
      break;
    default:
      break;
  }
  if (kind == ExperimentKind::AblationArch || kind == ExperimentKind::SmallSamples) {
    require(sweep.trend_points >= 1, "config: trend.points must be >= 1");
    require(sweep.trend_current > 0.0 && sweep.trend_radius > 0.0, "config: trend current and radius must be positive");
    require(sweep.trend_pressure_min > 0.0 && sweep.trend_pressure_max >= sweep.trend_pressure_min,
            "config: trend pressure range must be positive and ordered");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.system = system_of(kind);
  if (c.system == PhysicalSystem::Spring) {
    c.model.hidden = {22, 98, 9};
    c.model.pinn_lambda = 0.005;
    c.train.adam.learning_rate = 1e-4;
    c.train.max_epochs = 60;
    c.train.batch_size = 32;
    c.projection.tolerance = 1e-3;
    c.spring.steps = kind == ExperimentKind::SpringMany ? 200 : 165;
  } else {
    c.model.hidden = {50, 50};
    c.model.pinn_lambda = 0.015;
    c.model.ensemble_members = kind == ExperimentKind::LtpCompare ? 10 : 1;
    c.train.adam.learning_rate = 1e-3;
    c.train.max_epochs = 1000;
    c.train.batch_size = 64;
    c.train.early_stop = EarlyStopping{};
    c.train.lr_plateau = PlateauSchedule{};
    c.projection.tolerance = 1e-8;
  }
  c.sweep.architectures = {{1, 1},     {2, 2},     {5, 5},     {10, 10},   {20, 20},   {30, 30},
                           {40, 40},   {50, 50},   {75, 75},   {100, 100}, {150, 150}, {200, 200},
                           {300, 300}, {400, 400}, {500, 500}, {600, 600}, {800, 800}, {1000, 1000}};
  if (kind == ExperimentKind::Timing) {
    c.sweep.sizes = {50, 2500};
    c.sweep.resamples = 1;
  } else {
    c.sweep.sizes = {20, 50, 100, 150, 200, 300, 500, 750, 1000, 1500, 2500};
  }
  return c;
}

ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
    require(seen.insert(key).second, "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

void apply_config(ExperimentConfig& config, const ConfigEntries& entries) {
  for (const auto& [key, value] : entries)
    require(find_key(key) != nullptr, "config: unknown key '" + key + "'");
  for (const char* first : {"kind", "system"})
    for (const auto& [key, value] : entries)
      if (key == first) find_key(key)->set(config, value);
  // switches last, so that parameters listed before them do not re-enable
  const std::set<std::string> early{"kind", "system"};
  const std::set<std::string> late{"train.early_stop", "train.lr_plateau"};
  for (const auto& [key, value] : entries)
    if (!early.count(key) && !late.count(key)) find_key(key)->set(config, value);
  for (const auto& [key, value] : entries)
    if (late.count(key)) find_key(key)->set(config, value);
}

ExperimentConfig load_config(ExperimentKind kind, const std::filesystem::path& path) {
  ExperimentConfig config = default_config(kind);
  if (!path.empty()) {
    ConfigEntries entries = parse_config_text(read_file(path));
    for (const auto& [key, value] : entries)
      if (key == "kind")
        require(parse_experiment_kind(value) == kind,
                "config: file declares kind '" + value + "' but '" + to_string(kind) + "' was requested");
    apply_config(config, entries);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback) {
  ConfigEntries entries;
  if (!path.empty()) entries = parse_config_text(read_file(path));
  ExperimentKind kind = fallback;
  for (const auto& [key, value] : entries) {
    if (key == "kind") kind = parse_experiment_kind(value);
  }
  bool has_kind = false;
  for (const auto& [key, value] : entries) has_kind = has_kind || key == "kind";
  if (!has_kind)
    for (const auto& [key, value] : entries)
      if (key == "system") {
        if (value == "spring") kind = ExperimentKind::SpringSingle;
        else if (value == "ltp") kind = ExperimentKind::LtpCompare;
      }
  ExperimentConfig config = default_config(kind);
  apply_config(config, entries);
  return config;
}

std::string manifest_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const auto& k : keys()) names.push_back(k.name);
  return names;
}

} // namespace physproj
