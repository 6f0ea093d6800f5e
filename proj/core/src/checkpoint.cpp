#include "focovil/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "focovil/errors.hpp"

namespace focovil::model {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "focovil-checkpoint";
constexpr int kVersion = 1;

json flat(const ad::Matrix& m) {
  return json(std::vector<double>(m.data(), m.data() + m.size()));
}

ad::Matrix unflat(const json& values, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw ParseError(what + ": expected " + std::to_string(rows * cols) + " values");
  }
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!values[i].is_number()) throw ParseError(what + ": non-numeric value");
    m.data()[i] = values[i].get<double>();
  }
  return m;
}

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.contains(key)) throw ParseError(std::string("checkpoint missing '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  const auto& c = ckpt.params.config;
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["model"] = {{"input_dim", c.input_dim},           {"hidden", c.hidden},
                  {"layers", c.layers},                 {"projection_mid", c.projection_mid},
                  {"decoder_hidden", c.decoder_hidden}, {"use_projection", c.use_projection},
                  {"seed", c.seed}};
  doc["epochs_completed"] = ckpt.epochs_completed;
  doc["next_lr"] = ckpt.next_lr;
  if (ckpt.optimizer) {
    json m = json::array(), v = json::array();
    for (const auto& x : ckpt.optimizer->m) m.push_back(flat(x));
    for (const auto& x : ckpt.optimizer->v) v.push_back(flat(x));
    doc["optimizer"] = {{"step", ckpt.optimizer->step}, {"m", std::move(m)}, {"v", std::move(v)}};
  } else {
    doc["optimizer"] = nullptr;
  }
  doc["run_config"] =
      ckpt.run_config_json.empty() ? json(nullptr) : json::parse(ckpt.run_config_json);
  json params = json::array();
  for (const auto& [name, t] : ckpt.params.named_parameters()) {
    params.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"values", flat(t.value())}});
  }
  doc["parameters"] = std::move(params);
  return doc.dump();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || field<std::string>(doc, "format") != kFormat) {
    throw ParseError("not a focovil checkpoint");
  }
  if (field<int>(doc, "version") != kVersion) throw ParseError("unsupported checkpoint version");

  const json& m = doc.at("model");
  ModelConfig cfg;
  cfg.input_dim = field<int>(m, "input_dim");
  cfg.hidden = field<int>(m, "hidden");
  cfg.layers = field<int>(m, "layers");
  cfg.projection_mid = field<int>(m, "projection_mid");
  cfg.decoder_hidden = field<int>(m, "decoder_hidden");
  cfg.use_projection = field<bool>(m, "use_projection");
  cfg.seed = field<std::uint64_t>(m, "seed");

  Checkpoint ckpt;
  ckpt.params = ModelParams::zeros(cfg);
  ckpt.epochs_completed = field<int>(doc, "epochs_completed");
  ckpt.next_lr = field<double>(doc, "next_lr");

  auto named = ckpt.params.named_parameters();
  const json& params = doc.at("parameters");
  if (!params.is_array() || params.size() != named.size()) {
    throw ParseError("checkpoint parameter list does not match the model configuration");
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const json& p = params[i];
    const auto name = field<std::string>(p, "name");
    if (name != named[i].name) {
      throw ParseError("checkpoint parameter '" + name + "' where '" + named[i].name + "' expected");
    }
    const auto shape = field<std::vector<Eigen::Index>>(p, "shape");
    auto& t = named[i].tensor;
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw ParseError("checkpoint parameter '" + name + "' has the wrong shape");
    }
    t.mutable_value() = unflat(p.at("values"), t.rows(), t.cols(), name);
  }

  if (doc.contains("optimizer") && !doc["optimizer"].is_null()) {
    const json& o = doc["optimizer"];
    train::AdamState st;
    st.step = field<std::int64_t>(o, "step");
    const json& jm = o.at("m");
    const json& jv = o.at("v");
    if (jm.size() != named.size() || jv.size() != named.size()) {
      throw ParseError("optimizer state does not match parameter count");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      const auto& t = named[i].tensor;
      st.m.push_back(unflat(jm[i], t.rows(), t.cols(), "optimizer.m"));
      st.v.push_back(unflat(jv[i], t.rows(), t.cols(), "optimizer.v"));
    }
    ckpt.optimizer = std::move(st);
  }
  if (doc.contains("run_config") && !doc["run_config"].is_null()) {
    ckpt.run_config_json = doc["run_config"].dump();
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = checkpoint_to_string(ckpt);
  // Write-then-rename so an interrupted run never leaves a torn checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text << '\n';
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace focovil::model
