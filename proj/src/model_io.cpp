#include "resode/model_io.hpp"

#include "resode/io.hpp"

#include <json.hpp>

namespace resode {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "resode-model/1";

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::runtime_error("model file: " + what +
                             " must be an array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols)
      throw std::runtime_error("model file: ragged rows in " + what);
    for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array())
    throw std::runtime_error("model file: " + what + " must be an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const Model& m, const NetworkConfig& cfg) {
  json doc;
  doc["format"] = kFormat;
  doc["config"] = {{"depth", cfg.depth},
                   {"width", cfg.width},
                   {"h", cfg.h},
                   {"block", to_string(cfg.block_kind)},
                   {"batchnorm", cfg.use_batchnorm},
                   {"activation", to_string(cfg.activation)},
                   {"input_dim", cfg.input_dim},
                   {"n_classes", cfg.n_classes},
                   {"seed", cfg.seed}};
  if (m.identity_input) {
    doc["input_proj"] = {{"identity", true}};
  } else {
    doc["input_proj"] = {{"identity", false},
                         {"w", matrix_to_json(m.input_w)},
                         {"b", vector_to_json(m.input_b)}};
  }
  json blocks = json::array();
  for (size_t i = 0; i < m.blocks.size(); ++i) {
    const auto& p = m.blocks[i];
    json b;
    b["kind"] = to_string(p.kind);
    b["k1"] = matrix_to_json(p.k1);
    if (p.kind == BlockKind::Residual) b["k2"] = matrix_to_json(p.k2);
    b["b1"] = vector_to_json(p.b1);
    b["b2"] = vector_to_json(p.b2);
    if (!m.bn.empty()) {
      const auto& bn = m.bn[i];
      b["batchnorm"] = {{"gamma", vector_to_json(bn.gamma)},
                        {"beta", vector_to_json(bn.beta)},
                        {"running_mean", vector_to_json(bn.running_mean)},
                        {"running_var", vector_to_json(bn.running_var)},
                        {"epsilon", bn.epsilon},
                        {"momentum", bn.momentum}};
    }
    blocks.push_back(std::move(b));
  }
  doc["blocks"] = std::move(blocks);
  doc["head"] = {{"w", matrix_to_json(m.head_w)},
                 {"b", vector_to_json(m.head_b)}};
  return doc.dump(1);
}

std::pair<Model, NetworkConfig> model_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (!doc.contains("format") || doc["format"] != kFormat)
    throw std::runtime_error("model file: unsupported format tag");

  const json& c = doc.at("config");
  NetworkConfig cfg;
  cfg.depth = c.at("depth").get<int>();
  cfg.width = c.at("width").get<int>();
  cfg.h = c.at("h").get<double>();
  cfg.block_kind = block_kind_from_string(c.at("block").get<std::string>());
  cfg.use_batchnorm = c.at("batchnorm").get<bool>();
  cfg.activation = activation_from_string(c.at("activation").get<std::string>());
  cfg.input_dim = c.at("input_dim").get<int>();
  cfg.n_classes = c.at("n_classes").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();

  Model m;
  const json& proj = doc.at("input_proj");
  m.identity_input = proj.at("identity").get<bool>();
  if (!m.identity_input) {
    m.input_w = matrix_from_json(proj.at("w"), "input_proj.w");
    m.input_b = vector_from_json(proj.at("b"), "input_proj.b");
  }
  for (const json& b : doc.at("blocks")) {
    BlockParams p;
    p.kind = block_kind_from_string(b.at("kind").get<std::string>());
    p.k1 = matrix_from_json(b.at("k1"), "k1");
    if (p.kind == BlockKind::Residual)
      p.k2 = matrix_from_json(b.at("k2"), "k2");
    p.b1 = vector_from_json(b.at("b1"), "b1");
    p.b2 = vector_from_json(b.at("b2"), "b2");
    m.blocks.push_back(std::move(p));
    if (b.contains("batchnorm")) {
      const json& bn = b["batchnorm"];
      BatchNormParams q;
      q.gamma = vector_from_json(bn.at("gamma"), "gamma");
      q.beta = vector_from_json(bn.at("beta"), "beta");
      q.running_mean = vector_from_json(bn.at("running_mean"), "running_mean");
      q.running_var = vector_from_json(bn.at("running_var"), "running_var");
      q.epsilon = bn.at("epsilon").get<double>();
      q.momentum = bn.at("momentum").get<double>();
      m.bn.push_back(std::move(q));
    }
  }
  m.head_w = matrix_from_json(doc.at("head").at("w"), "head.w");
  m.head_b = vector_from_json(doc.at("head").at("b"), "head.b");

  if (static_cast<int>(m.blocks.size()) != cfg.depth)
    throw std::runtime_error("model file: block count differs from depth");
  if (cfg.use_batchnorm && m.bn.size() != m.blocks.size())
    throw std::runtime_error("model file: missing batchnorm parameters");
  return {std::move(m), cfg};
}

void save_model(const std::string& path, const Model& m,
                const NetworkConfig& cfg) {
  write_text_atomic(path, model_to_json(m, cfg));
}

std::pair<Model, NetworkConfig> load_model(const std::string& path) {
  return model_from_json(read_text(path));
}

}  // namespace resode
