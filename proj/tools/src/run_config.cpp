#include "run_config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "focovil/errors.hpp"

namespace focovil::cli {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

// Reads keys of one JSON object, remembering which were consumed so
// leftovers can be reported.
class Section {
 public:
  Section(const json* obj, std::string name) : obj_(obj), name_(std::move(name)) {}

  template <typename T>
  void read(const char* key, T& out) {
    if (!obj_ || !obj_->contains(key)) return;
    seen_.insert(key);
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned()) {
            throw std::invalid_argument("expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      throw InvalidConfig(name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.contains(key)) throw InvalidConfig("unknown key '" + name_ + "." + key + "'");
    }
  }

  std::string key(const char* k) const { return name_ + "." + k; }

 private:
  const json* obj_;
  std::string name_;
  std::set<std::string> seen_;
};

// Runs a validate() and prefixes its message with the section name.
template <typename F>
void check(const std::string& section, F&& f) {
  try {
    f();
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(section + ": " + e.what());
  } catch (const InvalidTopology& e) {
    throw InvalidConfig(section + ": " + e.what());
  }
}

}  // namespace

skeleton::Topology RunConfig::topology(int n_joints) const {
  auto t = landmarks;
  t.n_joints = n_joints;
  t.validate();
  return t;
}

ablation::AblationConfig RunConfig::ablation_config() const {
  ablation::AblationConfig a;
  a.model = model;
  a.train = train;
  a.preprocess = preprocess;
  a.split = eval.split;
  a.variants = ablation_variants;
  a.seeds = ablation_seeds;
  a.threads = ablation_threads;
  return a;
}

RunConfig parse_run_config(const std::string& text,
                           std::initializer_list<const char*> required_sections) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidConfig("config must be a JSON object");

  static const std::set<std::string> kSections = {"generator", "skeleton", "preprocess", "model",
                                                  "loss",      "train",    "eval",       "ablation"};
  for (const auto& [key, value] : doc.items()) {
    if (!kSections.contains(key)) throw InvalidConfig("unknown key '" + key + "'");
    if (!value.is_object()) throw InvalidConfig("section '" + key + "' must be an object");
  }
  for (const char* s : required_sections) {
    if (!doc.contains(s)) throw InvalidConfig("missing required section '" + std::string(s) + "'");
  }
  auto section = [&](const char* name) {
    return Section(doc.contains(name) ? &doc.at(name) : nullptr, name);
  };

  RunConfig cfg;
  {
    auto s = section("generator");
    auto& g = cfg.generator;
    s.read("n_classes", g.n_classes);
    s.read("scenes_per_class", g.scenes_per_class);
    s.read("n_views", g.n_views);
    s.read("n_joints", g.n_joints);
    s.read("seq_len", g.seq_len);
    s.read("view_azimuths_deg", g.view_azimuths_deg);
    s.read("occlusion_noise_std", g.occlusion_noise_std);
    s.read("rng_seed", g.rng_seed);
    s.read("view_offset_scale", g.view_offset_scale);
    s.read("facing_yaw_range_deg", g.facing_yaw_range_deg);
    s.read("occluded_joints_per_view", g.occluded_joints_per_view);
    s.read("scene_jitter", g.scene_jitter);
    s.read("class_separation", g.class_separation);
    s.finish();
    check("generator", [&] { g.validate(); });
  }
  {
    auto s = section("skeleton");
    s.read("root", cfg.landmarks.root);
    s.read("spine", cfg.landmarks.spine);
    s.read("lhip", cfg.landmarks.lhip);
    s.read("rhip", cfg.landmarks.rhip);
    s.finish();
    cfg.landmarks.n_joints = std::max({cfg.landmarks.root, cfg.landmarks.spine, cfg.landmarks.lhip,
                                       cfg.landmarks.rhip}) + 1;
    check("skeleton", [&] { cfg.landmarks.validate(); });
  }
  {
    auto s = section("preprocess");
    s.read("target_len", cfg.preprocess.target_len);
    s.finish();
    if (cfg.preprocess.target_len < 2) throw InvalidConfig("preprocess.target_len must be >= 2");
  }
  {
    auto s = section("model");
    auto& m = cfg.model;
    s.read("hidden", m.hidden);
    s.read("layers", m.layers);
    s.read("projection_mid", m.projection_mid);
    s.read("decoder_hidden", m.decoder_hidden);
    s.read("seed", m.seed);
    s.finish();
    check("model", [&] { m.validate(); });
  }
  {
    auto s = section("loss");
    auto& l = cfg.train.loss;
    s.read("tau", l.tau);
    s.read("alpha", l.alpha);
    s.read("beta", l.beta);
    s.read("stop_grad_weights", l.stop_grad_weights);
    s.finish();
  }
  {
    auto s = section("train");
    auto& t = cfg.train;
    s.read("batch_anchors", t.batch_anchors);
    s.read("epochs", t.epochs);
    s.read("lr", t.lr);
    s.read("lr_decay", t.lr_decay);
    s.read("adam_beta1", t.adam.beta1);
    s.read("adam_beta2", t.adam.beta2);
    s.read("adam_eps", t.adam.eps);
    s.read("clip_norm", t.clip_norm);
    s.read("seed", t.seed);
    std::string name(train::to_string(t.ablation));
    s.read("ablation", name);
    s.finish();
    const auto a = train::parse_ablation(name);
    if (!a) throw InvalidConfig("train.ablation: unknown variant '" + name + "'");
    t.ablation = *a;
    check("train", [&] { t.validate(); });
  }
  {
    auto s = section("eval");
    auto& e = cfg.eval;
    std::string split = e.split.to_string();
    s.read("split", split);
    s.read("probe_lr", e.probe.lr);
    s.read("probe_epochs", e.probe.epochs);
    s.read("cluster_seed", e.cluster_seed);
    s.read("n_clusters", e.n_clusters);
    s.finish();
    check("eval.split", [&] { e.split = eval::Split::parse(split); });
    if (!(e.probe.lr > 0.0)) throw InvalidConfig("eval.probe_lr must be positive");
    if (e.probe.epochs < 0) throw InvalidConfig("eval.probe_epochs must be >= 0");
    if (e.n_clusters < 0) throw InvalidConfig("eval.n_clusters must be >= 0");
  }
  {
    auto s = section("ablation");
    std::vector<std::string> names;
    bool has_variants = doc.contains("ablation") && doc.at("ablation").contains("variants");
    s.read("variants", names);
    s.read("seeds", cfg.ablation_seeds);
    s.read("threads", cfg.ablation_threads);
    s.finish();
    if (has_variants) {
      cfg.ablation_variants.clear();
      for (const auto& n : names) {
        const auto a = train::parse_ablation(n);
        if (!a) throw InvalidConfig("ablation.variants: unknown variant '" + n + "'");
        cfg.ablation_variants.push_back(*a);
      }
    }
    check("ablation", [&] { cfg.ablation_config().validate(); });
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          std::initializer_list<const char*> required_sections) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), required_sections);
}

std::string run_config_to_json(const RunConfig& cfg) {
  const auto& g = cfg.generator;
  const auto& m = cfg.model;
  const auto& t = cfg.train;
  const auto& e = cfg.eval;
  ordered doc;
  doc["generator"] = {{"n_classes", g.n_classes},
                      {"scenes_per_class", g.scenes_per_class},
                      {"n_views", g.n_views},
                      {"n_joints", g.n_joints},
                      {"seq_len", g.seq_len},
                      {"view_azimuths_deg", g.view_azimuths_deg},
                      {"occlusion_noise_std", g.occlusion_noise_std},
                      {"rng_seed", g.rng_seed},
                      {"view_offset_scale", g.view_offset_scale},
                      {"facing_yaw_range_deg", g.facing_yaw_range_deg},
                      {"occluded_joints_per_view", g.occluded_joints_per_view},
                      {"scene_jitter", g.scene_jitter},
                      {"class_separation", g.class_separation}};
  doc["skeleton"] = {{"root", cfg.landmarks.root},
                     {"spine", cfg.landmarks.spine},
                     {"lhip", cfg.landmarks.lhip},
                     {"rhip", cfg.landmarks.rhip}};
  doc["preprocess"] = {{"target_len", cfg.preprocess.target_len}};
  doc["model"] = {{"hidden", m.hidden},
                  {"layers", m.layers},
                  {"projection_mid", m.projection_mid},
                  {"decoder_hidden", m.decoder_hidden},
                  {"seed", m.seed}};
  doc["loss"] = {{"tau", t.loss.tau},
                 {"alpha", t.loss.alpha},
                 {"beta", t.loss.beta},
                 {"stop_grad_weights", t.loss.stop_grad_weights}};
  doc["train"] = {{"batch_anchors", t.batch_anchors},
                  {"epochs", t.epochs},
                  {"lr", t.lr},
                  {"lr_decay", t.lr_decay},
                  {"adam_beta1", t.adam.beta1},
                  {"adam_beta2", t.adam.beta2},
                  {"adam_eps", t.adam.eps},
                  {"clip_norm", t.clip_norm},
                  {"seed", t.seed},
                  {"ablation", std::string(train::to_string(t.ablation))}};
  doc["eval"] = {{"split", e.split.to_string()},
                 {"probe_lr", e.probe.lr},
                 {"probe_epochs", e.probe.epochs},
                 {"cluster_seed", e.cluster_seed},
                 {"n_clusters", e.n_clusters}};
  std::vector<std::string> names;
  for (auto a : cfg.ablation_variants) names.emplace_back(train::to_string(a));
  doc["ablation"] = {{"variants", names},
                     {"seeds", cfg.ablation_seeds},
                     {"threads", cfg.ablation_threads}};
  return doc.dump(2) + "\n";
}

}  // namespace focovil::cli
