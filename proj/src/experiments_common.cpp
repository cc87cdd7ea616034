#include "physproj/experiments.hpp"

#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/springmass.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace physproj {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::set<std::string> csv_files(const std::filesystem::path& dir) {
  std::set<std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.insert(std::filesystem::relative(entry.path(), dir).generic_string());
  return files;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

const ModelMetrics& MetricsReport::model(const std::string& name) const {
  for (const auto& m : models)
    if (m.model == name) return m;
  throw ValidationError("report has no model '" + name + "'");
}

bool MetricsReport::has_model(const std::string& name) const {
  for (const auto& m : models)
    if (m.model == name) return true;
  return false;
}

int MetricsReport::total_nonconverged() const {
  int n = 0;
  for (const auto& m : models) n += m.nonconverged;
  return n;
}

void PhaseTimer::start(std::string phase) {
  if (!current_.empty()) stop();
  current_ = std::move(phase);
  started_ = now_seconds();
}

void PhaseTimer::stop() {
  if (current_.empty()) return;
  phases_.emplace_back(current_, now_seconds() - started_);
  current_.clear();
}

void PhaseTimer::write(const std::filesystem::path& path) const {
  csv::Table t({"phase", "wall_seconds"});
  for (const auto& [name, secs] : phases_) t.add_row({name, csv::format_shortest(secs)});
  t.write(path);
}

bool is_wallclock_column(const std::string& name) {
  return ends_with(name, "_seconds") || ends_with(name, "_wallclock_pct");
}

std::vector<std::string> compare_csv_outputs(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::vector<std::string> diffs;
  const std::set<std::string> fa = csv_files(a), fb = csv_files(b);
  for (const auto& f : fa)
    if (!fb.count(f)) diffs.push_back(f + ": only in " + a.string());
  for (const auto& f : fb)
    if (!fa.count(f)) diffs.push_back(f + ": only in " + b.string());
  for (const auto& f : fa) {
    if (!fb.count(f)) continue;
    const auto la = read_lines(a / f), lb = read_lines(b / f);
    if (la.empty() || lb.empty() || la.front() != lb.front()) {
      diffs.push_back(f + ": headers differ");
      continue;
    }
    if (la.size() != lb.size()) {
      diffs.push_back(f + ": row counts differ");
      continue;
    }
    const auto header = split_cells(la.front());
    for (std::size_t r = 1; r < la.size(); ++r) {
      const auto ca = split_cells(la[r]), cb = split_cells(lb[r]);
      if (ca.size() != cb.size()) {
        diffs.push_back(f + ": line " + std::to_string(r + 1) + " cell counts differ");
        continue;
      }
      for (std::size_t c = 0; c < ca.size(); ++c) {
        if (c < header.size() && is_wallclock_column(header[c])) continue;
        if (ca[c] != cb[c]) {
          diffs.push_back(f + ": line " + std::to_string(r + 1) + " column " +
                          (c < header.size() ? header[c] : std::to_string(c)) + ": " + ca[c] + " vs " + cb[c]);
          break;
        }
      }
    }
  }
  return diffs;
}

void write_manifest(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "manifest.txt", std::ios::binary);
  require(static_cast<bool>(out), "cannot write manifest in " + out_dir.string());
  out << manifest_text(config);
}

SplitData split_dataset(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed) {
  const SplitIndices idx = split_indices(data.size(), fractions, seed);
  return {data.subset(idx.train), data.subset(idx.validation), data.subset(idx.test)};
}

SpringData prepare_spring_data(const ExperimentConfig& config) {
  SpringData d;
  if (!config.io.data.empty()) {
    d.samples = spring::read_dataset_csv(config.io.data);
  } else {
    d.samples = spring::generate_dataset(config.spring.params, config.spring.e_max, config.spring.samples,
                                         config.spring.delta_t, config.spring.substeps, config.seed);
  }
  std::tie(d.inputs, d.targets) = spring::to_matrices(d.samples);
  d.split = split_indices(d.inputs.rows(), config.fractions, config.seed);
  Eigen::MatrixXd stacked(2 * static_cast<Eigen::Index>(d.split.train.size()), 4);
  for (std::size_t i = 0; i < d.split.train.size(); ++i) {
    stacked.row(static_cast<Eigen::Index>(i)) = d.inputs.row(d.split.train[i]);
    stacked.row(static_cast<Eigen::Index>(i + d.split.train.size())) = d.targets.row(d.split.train[i]);
  }
  d.transform = fit_minmax(stacked, spring::state_names());
  const Dataset all{normalize_rows(d.inputs, d.transform), normalize_rows(d.targets, d.transform)};
  d.normalized = {all.subset(d.split.train), all.subset(d.split.validation), all.subset(d.split.test)};
  return d;
}

ltp::LtpData load_or_generate_ltp(const ExperimentConfig& config, int n, std::uint64_t seed) {
  if (!config.ltp.dataset.empty()) {
    std::optional<ltp::ColumnMapping> mapping;
    if (!config.ltp.column_mapping.empty()) mapping = ltp::ColumnMapping::load(config.ltp.column_mapping);
    return ltp::load_ltp_csv(config.ltp.dataset, mapping);
  }
  return ltp::generate_synthetic_ltp(n, seed, config.ltp.electrons_in_pressure);
}

LtpPrepared prepare_ltp(const ltp::LtpData& data, const SplitIndices& split, const ExperimentConfig& config) {
  LtpPrepared p;
  p.data = data;
  p.split = split;
  const ltp::LtpData train = data.subset(split.train);
  const auto& schema = ltp::standard_schema();
  p.input_transform = fit_minmax(train.inputs, schema.input_names);
  p.output_transform = fit_transform(train.outputs, schema.output_names, config.ltp.skew_threshold);
  const Dataset all{normalize_rows(data.inputs, p.input_transform), normalize_rows(data.outputs, p.output_transform)};
  p.normalized = {all.subset(split.train), all.subset(split.validation), all.subset(split.test)};
  return p;
}

ltp::LtpOptions ltp_options(const ExperimentConfig& config) {
  ltp::LtpOptions o;
  o.electrons_in_pressure = config.ltp.electrons_in_pressure;
  o.electron_scale_floor = config.ltp.electron_scale_floor;
  return o;
}

void save_model(const std::filesystem::path& dir, const StoredModel& model) {
  require(!model.ensemble.members.empty(), "save_model: empty ensemble");
  std::filesystem::create_directories(dir);
  save_transform((dir / "input_transform.txt").string(), model.input_transform);
  save_transform((dir / "output_transform.txt").string(), model.output_transform);
  for (std::size_t i = 0; i < model.ensemble.members.size(); ++i) {
    Network net = model.ensemble.members[i];
    net.transform_ref = "output_transform.txt";
    save_network((dir / ("member_" + std::to_string(i) + ".net")).string(), net);
  }
  std::ofstream out(dir / "model.txt", std::ios::binary);
  require(static_cast<bool>(out), "save_model: cannot write " + (dir / "model.txt").string());
  out << "system = " << to_string(model.system) << "\n";
  out << "members = " << model.ensemble.members.size() << "\n";
}

StoredModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.txt");
  require(static_cast<bool>(in), "load_model: no model.txt in " + dir.string());
  std::stringstream ss;
  ss << in.rdbuf();
  StoredModel m;
  int members = -1;
  bool have_system = false;
  for (const auto& [key, value] : parse_config_text(ss.str())) {
    if (key == "system") {
      require(value == "spring" || value == "ltp", "load_model: unknown system '" + value + "'");
      m.system = value == "spring" ? PhysicalSystem::Spring : PhysicalSystem::Ltp;
      have_system = true;
    } else if (key == "members") {
      members = std::stoi(value);
    } else {
      throw ValidationError("load_model: unknown key '" + key + "' in model.txt");
    }
  }
  require(have_system && members >= 1, "load_model: model.txt needs system and members >= 1");
  m.input_transform = load_transform((dir / "input_transform.txt").string());
  m.output_transform = load_transform((dir / "output_transform.txt").string());
  for (int i = 0; i < members; ++i)
    m.ensemble.members.push_back(load_network((dir / ("member_" + std::to_string(i) + ".net")).string()));
  m.ensemble.transform_ref = "output_transform.txt";
  const Eigen::Index in_dim = m.system == PhysicalSystem::Spring ? Eigen::Index{4} : Eigen::Index{ltp::kInputCount};
  const Eigen::Index out_dim = m.system == PhysicalSystem::Spring ? Eigen::Index{4} : Eigen::Index{ltp::kOutputCount};
  for (const auto& net : m.ensemble.members)
    require_shape(net.layer_dims.front() == in_dim && net.layer_dims.back() == out_dim,
                  "load_model: network dimensions do not match the system");
  require_shape(m.input_transform.size() == in_dim && m.output_transform.size() == out_dim,
                "load_model: transform dimensions do not match the system");
  return m;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& h) {
  csv::Table t({"epoch", "train_loss", "val_loss", "data_loss", "physics_loss", "learning_rate", "epoch_seconds"});
  for (std::size_t e = 0; e < h.epochs(); ++e) {
    auto at = [](const std::vector<double>& v, std::size_t i) {
      return i < v.size() ? csv::format_shortest(v[i]) : std::string("nan");
    };
    t.add_row({std::to_string(e + 1), at(h.train_loss, e), at(h.val_loss, e), at(h.data_loss, e),
               at(h.physics_loss, e), at(h.learning_rate, e), at(h.epoch_seconds, e)});
  }
  t.write(path);
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  switch (config.kind) {
    case ExperimentKind::SpringSingle: run_spring_single(config); break;
    case ExperimentKind::SpringMany: run_spring_many(config); break;
    case ExperimentKind::LtpCompare: run_ltp_compare(config); break;
    case ExperimentKind::AblationArch: run_ablation_arch(config); break;
    case ExperimentKind::SmallSamples: run_small_samples(config); break;
    case ExperimentKind::Timing: run_timing(config); break;
  }
}

} // namespace physproj
