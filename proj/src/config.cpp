// Copyright 2026 The bal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bal/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace bal {

using nlohmann::json;

namespace {

const std::vector<std::pair<Strategy, const char*>> kStrategyNames = {
    {Strategy::uniform, "uniform"},         {Strategy::max_entropy, "max_entropy"},
    {Strategy::kcenter, "kcenter"},         {Strategy::consistency, "consistency"},
    {Strategy::bilevel, "bilevel"},         {Strategy::bilevel_mixed, "bilevel_mixed"},
};

std::string join_messages(const std::vector<FieldError>& errors) {
  std::string out = "invalid configuration:";
  for (const auto& e : errors) out += " " + e.field + ": " + e.message + ";";
  if (!errors.empty()) out.pop_back();
  return out;
}

// Reads typed fields into a config while collecting every problem.
class Reader {
 public:
  explicit Reader(std::vector<FieldError>& errors) : errors_(errors) {}

  void error(const std::string& field, const std::string& message) { errors_.push_back({field, message}); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      error(path.empty() ? "(root)" : path, "must be an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) error(join(path, key), "unknown field");
    }
    return true;
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

  void get(const json& j, const std::string& path, const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))
      out = v.get<std::size_t>();
    else
      error(join(path, key), "must be a non-negative integer");
  }
  void get(const json& j, const std::string& path, const char* key, int& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number_integer())
      out = v.get<int>();
    else
      error(join(path, key), "must be an integer");
  }
  void get(const json& j, const std::string& path, const char* key, double& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number())
      out = v.get<double>();
    else
      error(join(path, key), "must be a number");
  }
  void get(const json& j, const std::string& path, const char* key, bool& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_boolean())
      out = v.get<bool>();
    else
      error(join(path, key), "must be true or false");
  }
  void get(const json& j, const std::string& path, const char* key, std::string& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_string())
      out = v.get<std::string>();
    else
      error(join(path, key), "must be a string");
  }
  void get(const json& j, const std::string& path, const char* key, std::array<double, 2>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      out = {v[0].get<double>(), v[1].get<double>()};
    else
      error(join(path, key), "must be a two-element numeric array [lo, hi]");
  }
  void get(const json& j, const std::string& path, const char* key, std::vector<std::string>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    bool ok = v.is_array();
    for (const auto& e : v) ok = ok && e.is_string();
    if (ok)
      out = v.get<std::vector<std::string>>();
    else
      error(join(path, key), "must be an array of strings");
  }
  void get(const json& j, const std::string& path, const char* key, std::vector<std::uint64_t>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    bool ok = v.is_array();
    for (const auto& e : v) ok = ok && (e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0));
    if (ok)
      out = v.get<std::vector<std::uint64_t>>();
    else
      error(join(path, key), "must be an array of non-negative integers");
  }

  template <class E, class F>
  void get_enum(const json& j, const std::string& path, const char* key, E& out, F parse) {
    std::string s;
    if (!j.contains(key)) return;
    get(j, path, key, s);
    if (!j.at(key).is_string()) return;
    try {
      out = parse(s);
    } catch (const std::exception& e) {
      error(join(path, key), e.what());
    }
  }

 private:
  std::vector<FieldError>& errors_;
};

}  // namespace

std::string to_string(Strategy s) {
  for (const auto& [k, n] : kStrategyNames)
    if (k == s) return n;
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  for (const auto& [k, n] : kStrategyNames)
    if (name == n) return k;
  throw InvalidArgument("unknown strategy '" + name +
                        "' (expected uniform, max_entropy, kcenter, consistency, bilevel or bilevel_mixed)");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = [] {
    std::vector<Strategy> v;
    for (const auto& [k, n] : kStrategyNames) v.push_back(k);
    return v;
  }();
  return all;
}

std::string to_string(OracleKind k) { return k == OracleKind::simulated ? "simulated" : "service"; }

std::string DatasetRef::describe() const {
  if (!name.empty()) return name;
  if (!cache.empty()) return cache;
  if (synthetic) return "synthetic";
  return "(unset)";
}

ConfigError::ConfigError(std::vector<FieldError> errors) : InvalidArgument(join_messages(errors)), errors_(std::move(errors)) {}

std::vector<FieldError> validate_config(const CampaignConfig& cfg) {
  std::vector<FieldError> e;
  const auto& d = cfg.dataset;
  const int refs = static_cast<int>(!d.name.empty()) + static_cast<int>(!d.cache.empty()) + static_cast<int>(d.synthetic.has_value());
  if (refs != 1) e.push_back({"dataset", "exactly one of a name, {\"cache\": ...} or {\"synthetic\": {...}} is required"});
  if (d.synthetic) {
    const auto& s = *d.synthetic;
    if (s.classes < 1) e.push_back({"dataset.synthetic.classes", "must be at least 1"});
    if (s.dim < 1) e.push_back({"dataset.synthetic.dim", "must be at least 1"});
    if (s.points < static_cast<std::size_t>(std::max(1, s.classes)))
      e.push_back({"dataset.synthetic.points", "must be at least the class count"});
    if (!(s.spread > 0.0)) e.push_back({"dataset.synthetic.spread", "must be positive"});
    if (!(s.center_scale >= 0.0)) e.push_back({"dataset.synthetic.center_scale", "must be non-negative"});
    if (!(s.test_fraction >= 0.0 && s.test_fraction < 1.0)) e.push_back({"dataset.synthetic.test_fraction", "must lie in [0, 1)"});
  }
  if (cfg.b < 1) e.push_back({"b", "must be at least 1"});
  if (cfg.start_labels < 1) e.push_back({"start_labels", "must be at least 1"});
  if (cfg.end_labels < cfg.start_labels) e.push_back({"end_labels", "must be at least start_labels"});
  else if (cfg.b >= 1 && (cfg.end_labels - cfg.start_labels) % cfg.b != 0)
    e.push_back({"end_labels", "end_labels - start_labels must be divisible by b"});
  if (cfg.seeds.empty()) e.push_back({"seeds", "must list at least one seed"});
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    e.push_back({"seeds", "must be distinct"});

  const auto& s = cfg.selection;
  if (s.nr_it < 0) e.push_back({"selection.nr_it", "must be non-negative"});
  if (s.batch_size < 1) e.push_back({"selection.batch_size", "must be at least 1"});
  if (!(s.lambda > 0.0)) e.push_back({"selection.lambda", "must be positive"});
  if (s.cg_steps < 1) e.push_back({"selection.cg_steps", "must be at least 1"});
  if (s.m < 1) e.push_back({"selection.m", "must be at least 1"});
  if (!(s.random_fraction >= 0.0 && s.random_fraction <= 1.0)) e.push_back({"selection.random_fraction", "must lie in [0, 1]"});
  if (s.score_sign != 1.0 && s.score_sign != -1.0) e.push_back({"selection.score_sign", "must be 1 or -1"});
  if (s.cached_variants < 1) e.push_back({"selection.cached_variants", "must be at least 1"});
  if (!(s.adam.learning_rate > 0.0)) e.push_back({"selection.learning_rate", "must be positive"});
  if (cfg.kernel.kind == KernelKind::rbf && !std::isfinite(cfg.kernel.rbf_gamma))
    e.push_back({"kernel.rbf_gamma", "must be finite (<= 0 selects the median heuristic)"});
  if (cfg.kernel.kind == KernelKind::relu_ntk && cfg.kernel.ntk_depth < 1) e.push_back({"kernel.ntk_depth", "must be at least 1"});
  if (cfg.entropy_augmentations < 1) e.push_back({"entropy_augmentations", "must be at least 1"});
  if (cfg.consistency_augmentations < 1) e.push_back({"consistency_augmentations", "must be at least 1"});

  if (!(cfg.ssl_alpha >= 0.0 && cfg.ssl_alpha < 1.0)) e.push_back({"ssl.alpha", "must lie in [0, 1)"});
  if (!(cfg.ssl_tolerance > 0.0)) e.push_back({"ssl.tolerance", "must be positive"});
  if (cfg.ssl_max_iterations < 1) e.push_back({"ssl.max_iterations", "must be at least 1"});
  if (!std::isfinite(cfg.ssl_gamma)) e.push_back({"ssl.gamma", "must be finite (<= 0 selects the median heuristic)"});

  const auto& a = cfg.augmentation;
  if (!(a.apply_prob >= 0.0 && a.apply_prob <= 1.0)) e.push_back({"augmentation.apply_prob", "must lie in [0, 1]"});
  auto range = [&](const std::array<double, 2>& r, const char* name) {
    if (!(r[0] <= r[1])) e.push_back({std::string("augmentation.") + name, "range must satisfy lo <= hi"});
  };
  range(a.amplitude_range, "amplitude_range");
  range(a.speed_range, "speed_range");
  range(a.shift_range_ms, "shift_range_ms");
  range(a.snr_range_db, "snr_range_db");
  if (!(a.speed_range[0] > 0.0)) e.push_back({"augmentation.speed_range", "must be positive"});
  if (!(cfg.feature_jitter >= 0.0)) e.push_back({"augmentation.feature_jitter", "must be non-negative"});
  return e;
}

std::vector<FieldError> validate_config(const CampaignConfig& cfg, const Dataset& dataset) {
  auto e = validate_config(cfg);
  if (cfg.start_labels < static_cast<std::size_t>(dataset.classes))
    e.push_back({"start_labels", "must be at least the class count (" + std::to_string(dataset.classes) + ")"});
  const auto train = dataset.indices(Split::train);
  if (cfg.end_labels > train.size())
    e.push_back({"end_labels", "exceeds the " + std::to_string(train.size()) + " train-split samples"});
  if (dataset.indices(Split::test).empty()) e.push_back({"dataset", "has no test-split samples"});
  std::vector<int> per_class(static_cast<std::size_t>(std::max(0, dataset.classes)), 0);
  for (auto i : train)
    if (dataset.labels[i] >= 0) ++per_class[static_cast<std::size_t>(dataset.labels[i])];
  for (int k = 0; k < dataset.classes; ++k)
    if (per_class[static_cast<std::size_t>(k)] == 0)
      e.push_back({"dataset", "class " + std::to_string(k) + " has no labeled train-split sample"});
  if (cfg.oracle == OracleKind::simulated) {
    for (auto i : train)
      if (dataset.labels[i] < 0) {
        e.push_back({"oracle", "simulated oracle needs every train-split label; '" + dataset.ids[i] + "' is unknown"});
        break;
      }
  }
  return e;
}

CampaignConfig parse_campaign_config(const json& j) {
  std::vector<FieldError> errors;
  Reader r(errors);
  CampaignConfig cfg;
  if (!r.object(j, "", {"dataset", "standardize", "strategy", "start_labels", "end_labels", "b", "seeds",
                        "warmup_labels", "selection", "kernel", "entropy_augmentations", "consistency_augmentations",
                        "ssl", "augmentation", "oracle", "checkpoint_dir"}))
    throw ConfigError(errors);

  if (!j.contains("dataset")) {
    r.error("dataset", "is required");
  } else if (j["dataset"].is_string()) {
    cfg.dataset.name = j["dataset"].get<std::string>();
  } else if (r.object(j["dataset"], "dataset", {"cache", "synthetic"})) {
    const auto& d = j["dataset"];
    r.get(d, "dataset", "cache", cfg.dataset.cache);
    if (d.contains("synthetic") &&
        r.object(d["synthetic"], "dataset.synthetic",
                 {"classes", "points", "dim", "center_scale", "spread", "test_fraction", "seed"})) {
      GaussianClustersConfig g;
      const auto& s = d["synthetic"];
      const std::string p = "dataset.synthetic";
      r.get(s, p, "classes", g.classes);
      r.get(s, p, "points", g.points);
      r.get(s, p, "dim", g.dim);
      r.get(s, p, "center_scale", g.center_scale);
      r.get(s, p, "spread", g.spread);
      r.get(s, p, "test_fraction", g.test_fraction);
      r.get(s, p, "seed", g.seed);
      cfg.dataset.synthetic = g;
    }
  }
  r.get(j, "", "standardize", cfg.standardize);
  r.get_enum(j, "", "strategy", cfg.strategy, strategy_from_string);
  r.get(j, "", "start_labels", cfg.start_labels);
  r.get(j, "", "end_labels", cfg.end_labels);
  r.get(j, "", "b", cfg.b);
  r.get(j, "", "seeds", cfg.seeds);
  r.get(j, "", "warmup_labels", cfg.warmup_labels);
  r.get(j, "", "entropy_augmentations", cfg.entropy_augmentations);
  r.get(j, "", "consistency_augmentations", cfg.consistency_augmentations);
  r.get(j, "", "checkpoint_dir", cfg.checkpoint_dir);
  r.get_enum(j, "", "oracle", cfg.oracle, [](const std::string& s) {
    if (s == "simulated") return OracleKind::simulated;
    if (s == "service") return OracleKind::service;
    throw InvalidArgument("must be simulated or service");
  });

  if (j.contains("selection") &&
      r.object(j["selection"], "selection",
               {"nr_it", "batch_size", "lambda", "cg_steps", "m", "random_fraction", "warm_start", "score_sign",
                "augment_path", "cached_variants", "learning_rate"})) {
    const auto& s = j["selection"];
    auto& c = cfg.selection;
    r.get(s, "selection", "nr_it", c.nr_it);
    r.get(s, "selection", "batch_size", c.batch_size);
    r.get(s, "selection", "lambda", c.lambda);
    r.get(s, "selection", "cg_steps", c.cg_steps);
    r.get(s, "selection", "m", c.m);
    r.get(s, "selection", "random_fraction", c.random_fraction);
    r.get(s, "selection", "warm_start", c.warm_start);
    r.get(s, "selection", "score_sign", c.score_sign);
    r.get(s, "selection", "cached_variants", c.cached_variants);
    r.get(s, "selection", "learning_rate", c.adam.learning_rate);
    r.get_enum(s, "selection", "augment_path", c.augment_path, [](const std::string& v) {
      if (v == "cached") return AugmentPath::cached;
      if (v == "literal") return AugmentPath::literal;
      throw InvalidArgument("must be cached or literal");
    });
  }
  if (j.contains("kernel") && r.object(j["kernel"], "kernel", {"kind", "rbf_gamma", "ntk_depth"})) {
    const auto& k = j["kernel"];
    r.get_enum(k, "kernel", "kind", cfg.kernel.kind, kernel_kind_from_string);
    r.get(k, "kernel", "rbf_gamma", cfg.kernel.rbf_gamma);
    r.get(k, "kernel", "ntk_depth", cfg.kernel.ntk_depth);
  }
  if (j.contains("ssl") && r.object(j["ssl"], "ssl", {"kind", "alpha", "gamma", "tolerance", "max_iterations"})) {
    const auto& s = j["ssl"];
    r.get_enum(s, "ssl", "kind", cfg.ssl, ssl_kind_from_string);
    r.get(s, "ssl", "alpha", cfg.ssl_alpha);
    r.get(s, "ssl", "gamma", cfg.ssl_gamma);
    r.get(s, "ssl", "tolerance", cfg.ssl_tolerance);
    r.get(s, "ssl", "max_iterations", cfg.ssl_max_iterations);
  }
  if (j.contains("augmentation") &&
      r.object(j["augmentation"], "augmentation",
               {"apply_prob", "amplitude_range", "speed_range", "shift_range_ms", "snr_range_db", "amplitude", "speed",
                "shift", "noise", "noise_bank", "feature_jitter"})) {
    const auto& a = j["augmentation"];
    auto& c = cfg.augmentation;
    const std::string p = "augmentation";
    r.get(a, p, "apply_prob", c.apply_prob);
    r.get(a, p, "amplitude_range", c.amplitude_range);
    r.get(a, p, "speed_range", c.speed_range);
    r.get(a, p, "shift_range_ms", c.shift_range_ms);
    r.get(a, p, "snr_range_db", c.snr_range_db);
    r.get(a, p, "amplitude", c.amplitude);
    r.get(a, p, "speed", c.speed);
    r.get(a, p, "shift", c.shift);
    r.get(a, p, "noise", c.noise);
    r.get(a, p, "noise_bank", cfg.noise_bank);
    r.get(a, p, "feature_jitter", cfg.feature_jitter);
  }
  cfg.selection.b = cfg.b;

  if (errors.empty()) errors = validate_config(cfg);
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

CampaignConfig read_campaign_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<FieldError>{{"(file)", path.string() + ": " + e.what()}});
  }
  auto cfg = parse_campaign_config(j);
  if (!cfg.dataset.cache.empty() && std::filesystem::path(cfg.dataset.cache).is_relative())
    cfg.dataset.cache = (path.parent_path() / cfg.dataset.cache).string();
  for (auto& p : cfg.noise_bank)
    if (std::filesystem::path(p).is_relative()) p = (path.parent_path() / p).string();
  return cfg;
}

json to_json(const CampaignConfig& cfg) {
  json j;
  if (!cfg.dataset.name.empty()) j["dataset"] = cfg.dataset.name;
  else if (!cfg.dataset.cache.empty()) j["dataset"] = {{"cache", cfg.dataset.cache}};
  else if (cfg.dataset.synthetic) {
    const auto& s = *cfg.dataset.synthetic;
    j["dataset"] = {{"synthetic",
                     {{"classes", s.classes}, {"points", s.points}, {"dim", s.dim}, {"center_scale", s.center_scale},
                      {"spread", s.spread}, {"test_fraction", s.test_fraction}, {"seed", s.seed}}}};
  }
  j["standardize"] = cfg.standardize;
  j["strategy"] = to_string(cfg.strategy);
  j["start_labels"] = cfg.start_labels;
  j["end_labels"] = cfg.end_labels;
  j["b"] = cfg.b;
  j["seeds"] = cfg.seeds;
  j["warmup_labels"] = cfg.warmup_labels;
  const auto& s = cfg.selection;
  j["selection"] = {{"nr_it", s.nr_it},
                    {"batch_size", s.batch_size},
                    {"lambda", s.lambda},
                    {"cg_steps", s.cg_steps},
                    {"m", s.m},
                    {"random_fraction", s.random_fraction},
                    {"warm_start", s.warm_start},
                    {"score_sign", s.score_sign},
                    {"augment_path", s.augment_path == AugmentPath::cached ? "cached" : "literal"},
                    {"cached_variants", s.cached_variants},
                    {"learning_rate", s.adam.learning_rate}};
  j["kernel"] = {{"kind", to_string(cfg.kernel.kind)}, {"rbf_gamma", cfg.kernel.rbf_gamma}, {"ntk_depth", cfg.kernel.ntk_depth}};
  j["entropy_augmentations"] = cfg.entropy_augmentations;
  j["consistency_augmentations"] = cfg.consistency_augmentations;
  j["ssl"] = {{"kind", to_string(cfg.ssl)},
              {"alpha", cfg.ssl_alpha},
              {"gamma", cfg.ssl_gamma},
              {"tolerance", cfg.ssl_tolerance},
              {"max_iterations", cfg.ssl_max_iterations}};
  const auto& a = cfg.augmentation;
  j["augmentation"] = {{"apply_prob", a.apply_prob},
                       {"amplitude_range", a.amplitude_range},
                       {"speed_range", a.speed_range},
                       {"shift_range_ms", a.shift_range_ms},
                       {"snr_range_db", a.snr_range_db},
                       {"amplitude", a.amplitude},
                       {"speed", a.speed},
                       {"shift", a.shift},
                       {"noise", a.noise},
                       {"noise_bank", cfg.noise_bank},
                       {"feature_jitter", cfg.feature_jitter}};
  j["oracle"] = to_string(cfg.oracle);
  j["checkpoint_dir"] = cfg.checkpoint_dir;
  return j;
}

Dataset load_dataset(const CampaignConfig& cfg, const std::filesystem::path& base) {
  if (cfg.dataset.synthetic) {
    return make_gaussian_clusters(*cfg.dataset.synthetic);
  } else if (!cfg.dataset.cache.empty()) {
    std::filesystem::path p = cfg.dataset.cache;
    if (p.is_relative() && !base.empty()) p = base / p;
    return read_feature_cache(p);
  }
  throw InvalidArgument("dataset '" + cfg.dataset.name + "' must be resolved by the session service registry");
}

}  // namespace bal
