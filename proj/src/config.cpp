#include "tglink/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tglink {

using nlohmann::json;

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");

  static const std::set<std::string> known = {
      "dataset",      "output_dir",   "epochs",       "batch_size",
      "learning_rate", "seed",         "patience",     "n_nearest",
      "p_parametric", "m_candidates", "alpha",        "embed_dim",
      "time_scale",   "train_fraction", "val_fraction"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::runtime_error("unknown config key: " + key);
  }

  RunConfig c;
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("patience")) c.patience = j.at("patience").get<int>();
  if (j.contains("n_nearest")) c.n_nearest = j.at("n_nearest").get<int>();
  if (j.contains("p_parametric")) c.p_parametric = j.at("p_parametric").get<int>();
  if (j.contains("m_candidates")) c.m_candidates = j.at("m_candidates").get<int>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim").get<int>();
  if (j.contains("time_scale")) {
    const auto& v = j.at("time_scale");
    if (v.is_string()) {
      if (v.get<std::string>() != "auto") {
        throw std::runtime_error("time_scale must be a positive number or \"auto\"");
      }
      c.time_scale = 0.0;
    } else {
      c.time_scale = v.get<double>();
    }
  }
  if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
  if (j.contains("val_fraction")) c.val_fraction = j.at("val_fraction").get<double>();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::runtime_error(std::string("invalid config: ") + what);
  };
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate >= 0, "learning_rate must be non-negative");
  require(patience > 0, "patience must be positive");
  require(n_nearest >= 0, "n_nearest must be non-negative");
  require(p_parametric >= 0, "p_parametric must be non-negative");
  require(n_nearest + p_parametric > 0, "n_nearest + p_parametric must be positive");
  require(m_candidates >= 0, "m_candidates must be non-negative");
  require(p_parametric == 0 || resolved_m() >= p_parametric, "m_candidates must be >= p_parametric");
  require(alpha > 0, "alpha must be positive");
  require(embed_dim > 0, "embed_dim must be positive");
  require(time_scale >= 0, "time_scale must be positive or \"auto\"");
  require(train_fraction > 0 && val_fraction >= 0 && train_fraction + val_fraction < 1,
          "split fractions must leave room for the test range");
}

std::string RunConfig::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["output_dir"] = output_dir;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["patience"] = patience;
  j["n_nearest"] = n_nearest;
  j["p_parametric"] = p_parametric;
  j["m_candidates"] = m_candidates;
  j["alpha"] = alpha;
  j["embed_dim"] = embed_dim;
  if (time_scale == 0.0) {
    j["time_scale"] = "auto";
  } else {
    j["time_scale"] = time_scale;
  }
  j["train_fraction"] = train_fraction;
  j["val_fraction"] = val_fraction;
  return j.dump(2);
}

std::string RunConfig::digest() const {
  // FNV-1a over the canonical serialization; 8 hex chars is plenty for
  // distinguishing run directories.
  const std::string s = to_json();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

}  // namespace tglink
