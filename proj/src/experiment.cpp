#include "resode/experiment.hpp"

#include "resode/io.hpp"

#include <json.hpp>

#include <set>

namespace resode {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object())
    throw std::runtime_error("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw std::runtime_error("config: unknown key '" + key + "' in " +
                               where);
  }
}

DatasetConfig parse_dataset(const json& j) {
  require_keys(j,
               {"source", "n_train", "n_test", "noise_std", "standardize",
                "path", "header", "label_column", "encodings",
                "missing_markers", "label_bins", "train_fraction",
                "stratified"},
               "dataset");
  DatasetConfig d;
  const std::string source = j.value("source", std::string("moons"));
  if (source == "moons") {
    d.kind = DatasetConfig::Kind::Moons;
  } else if (source == "csv") {
    d.kind = DatasetConfig::Kind::Csv;
  } else {
    throw std::runtime_error("config: dataset.source must be moons or csv");
  }
  d.moons.n_train = j.value("n_train", d.moons.n_train);
  d.moons.n_test = j.value("n_test", d.moons.n_test);
  d.moons.noise_std = j.value("noise_std", d.moons.noise_std);
  if (j.contains("standardize")) d.standardize = j["standardize"].get<bool>();

  if (d.kind == DatasetConfig::Kind::Csv) {
    if (!j.contains("path"))
      throw std::runtime_error("config: dataset.path required for csv source");
    d.csv.path = j["path"].get<std::string>();
    d.csv.spec.header = j.value("header", true);
    if (!j.contains("label_column"))
      throw std::runtime_error(
          "config: dataset.label_column required for csv source");
    d.csv.spec.label_column = j["label_column"].get<std::string>();
    if (j.contains("encodings")) {
      for (const auto& [col, enc] : j["encodings"].items()) {
        const std::string name = enc.get<std::string>();
        if (name == "onehot")
          d.csv.spec.encodings[col] = ColumnEncoding::OneHot;
        else if (name == "integer")
          d.csv.spec.encodings[col] = ColumnEncoding::Integer;
        else
          throw std::runtime_error("config: encoding for '" + col +
                                   "' must be onehot or integer");
      }
    }
    if (j.contains("missing_markers")) {
      d.csv.spec.missing_markers.clear();
      for (const auto& m : j["missing_markers"])
        d.csv.spec.missing_markers.push_back(m.get<std::string>());
    }
    if (j.contains("label_bins")) {
      for (const auto& bin : j["label_bins"]) {
        require_keys(bin, {"name", "min", "max"}, "dataset.label_bins[]");
        LabelBin b;
        b.name = bin.at("name").get<std::string>();
        if (bin.contains("min")) b.lo = bin["min"].get<double>();
        if (bin.contains("max")) b.hi = bin["max"].get<double>();
        d.csv.spec.label_bins.push_back(std::move(b));
      }
    }
    d.csv.train_fraction = j.value("train_fraction", d.csv.train_fraction);
    d.csv.stratified = j.value("stratified", d.csv.stratified);
  }
  return d;
}

NetworkConfig parse_network(const json& j) {
  require_keys(j, {"depth", "width", "h", "block", "batchnorm", "activation"},
               "network");
  NetworkConfig n;
  n.depth = j.value("depth", 100);
  n.width = j.value("width", 0);  // 0: match the dataset feature count
  n.h = j.value("h", 1.0);
  n.block_kind =
      block_kind_from_string(j.value("block", std::string("residual")));
  n.use_batchnorm = j.value("batchnorm", false);
  n.activation =
      activation_from_string(j.value("activation", std::string("tanh")));
  return n;
}

TrainSpec parse_train(const json& j) {
  require_keys(j, {"epochs", "batch_size", "learning_rate", "momentum"},
               "train");
  TrainSpec t;
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.momentum = j.value("momentum", t.momentum);
  return t;
}

SweepConfig parse_sweep(const json& j) {
  require_keys(j, {"h_grid", "n_trials", "variants"}, "sweep");
  SweepConfig s;
  if (j.contains("h_grid")) {
    s.h_grid.clear();
    for (const auto& h : j["h_grid"]) s.h_grid.push_back(h.get<double>());
  }
  s.n_trials = j.value("n_trials", s.n_trials);
  if (j.contains("variants")) {
    s.variants.clear();
    for (const auto& v : j["variants"])
      s.variants.push_back(variant_from_name(v.get<std::string>()));
  }
  return s;
}

TrajectoryConfig parse_trajectory(const json& j) {
  require_keys(j, {"enabled", "layers"}, "trajectory");
  TrajectoryConfig t;
  t.enabled = j.value("enabled", false);
  if (j.contains("layers")) {
    for (const auto& l : j["layers"]) t.layers.push_back(l.get<int>());
  }
  return t;
}

DiagnosticsConfig parse_diagnostics(const json& j) {
  require_keys(j, {"epsilon", "n_directions", "margin"}, "diagnostics");
  DiagnosticsConfig d;
  d.epsilon = j.value("epsilon", d.epsilon);
  d.n_directions = j.value("n_directions", d.n_directions);
  const std::string margin = j.value("margin", std::string("modulus"));
  if (margin == "modulus")
    d.margin = MarginKind::Modulus;
  else if (margin == "real_part")
    d.margin = MarginKind::RealPart;
  else
    throw std::runtime_error(
        "config: diagnostics.margin must be modulus or real_part");
  return d;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  require_keys(doc,
               {"seed", "out_dir", "dataset", "network", "train", "sweep",
                "trajectory", "diagnostics"},
               "top level");
  auto section = [&](const char* name) {
    return doc.contains(name) ? doc[name] : json::object();
  };
  ExperimentConfig cfg;
  cfg.seed = doc.value("seed", std::uint64_t{0});
  cfg.out_dir = doc.value("out_dir", std::string("out"));
  cfg.dataset = parse_dataset(section("dataset"));
  cfg.network = parse_network(section("network"));
  cfg.train = parse_train(section("train"));
  cfg.sweep = parse_sweep(section("sweep"));
  cfg.trajectory = parse_trajectory(section("trajectory"));
  cfg.diagnostics = parse_diagnostics(section("diagnostics"));
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text(path));
}

BuiltData build_dataset(const ExperimentConfig& cfg) {
  BuiltData out;
  if (cfg.dataset.kind == DatasetConfig::Kind::Moons) {
    out.train = generate_moons(cfg.dataset.moons.n_train,
                               cfg.dataset.moons.noise_std, cfg.seed);
    out.test = generate_moons(cfg.dataset.moons.n_test,
                              cfg.dataset.moons.noise_std, cfg.seed + 1);
  } else {
    CsvLoadReport report;
    const Dataset full = load_csv(cfg.dataset.csv.path, cfg.dataset.csv.spec,
                                  &report);
    out.csv_rows_dropped = report.rows_dropped;
    SplitSpec split_spec;
    split_spec.train_fraction = cfg.dataset.csv.train_fraction;
    split_spec.stratified = cfg.dataset.csv.stratified;
    split_spec.seed = cfg.seed;
    auto [train, test] = split(full, split_spec);
    out.train = std::move(train);
    out.test = std::move(test);
  }
  if (cfg.dataset.standardize_effective()) {
    out.train = standardize(out.train);
    out.test = apply_standardization(out.test, *out.train.standardization);
  }
  return out;
}

NetworkConfig resolve_network(const ExperimentConfig& cfg,
                              const BuiltData& data) {
  NetworkConfig n = cfg.network;
  n.input_dim = static_cast<int>(data.train.dim());
  if (n.width == 0) n.width = n.input_dim;
  int k = data.train.n_classes();
  for (int lab : data.test.labels) k = std::max(k, lab + 1);
  n.n_classes = std::max(k, 2);
  n.seed = cfg.seed;
  validate(n);
  return n;
}

}  // namespace resode
