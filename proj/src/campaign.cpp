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

#include "bal/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "bal/matrix_io.hpp"
#include "bal/random.hpp"

namespace bal {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<audio::AudioClip> load_noise_bank(const std::vector<std::string>& paths) {
  std::vector<audio::AudioClip> bank;
  for (const auto& p : paths) {
    const auto wav = audio::read_wav(p);
    audio::AudioClip clip;
    clip.samples = wav.sample_rate == audio::kSampleRate ? wav.mono : audio::resample(wav.mono, wav.sample_rate, audio::kSampleRate);
    clip.source_id = p;
    bank.push_back(std::move(clip));
  }
  return bank;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::vector<RoundSummary> aggregate(const std::vector<SeedLog>& seeds) {
  std::vector<RoundSummary> out;
  if (seeds.empty()) return out;
  const std::size_t rounds = seeds.front().rounds.size();
  for (const auto& s : seeds)
    if (s.rounds.size() != rounds) throw InvalidArgument("aggregate: seeds cover different numbers of rounds");
  const double n = static_cast<double>(seeds.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    RoundSummary row;
    row.round = seeds.front().rounds[r].round;
    row.labeled = seeds.front().rounds[r].labeled;
    row.seeds = seeds.size();
    double sum = 0.0, psum = 0.0;
    for (const auto& s : seeds) {
      sum += s.rounds[r].test_accuracy;
      psum += s.rounds[r].pseudo_label_accuracy;
    }
    row.mean = sum / n;
    row.pseudo_mean = psum / n;
    double var = 0.0, pvar = 0.0;
    for (const auto& s : seeds) {
      var += (s.rounds[r].test_accuracy - row.mean) * (s.rounds[r].test_accuracy - row.mean);
      pvar += (s.rounds[r].pseudo_label_accuracy - row.pseudo_mean) * (s.rounds[r].pseudo_label_accuracy - row.pseudo_mean);
    }
    row.std = std::sqrt(var / n);
    row.pseudo_std = std::sqrt(pvar / n);
    out.push_back(row);
  }
  return out;
}

PoolState seed_initial_pool(const Dataset& dataset, std::size_t start_labels, std::uint64_t seed) {
  if (start_labels < static_cast<std::size_t>(dataset.classes))
    throw InvalidArgument("seed_initial_pool: start_labels " + std::to_string(start_labels) + " is below the class count " +
                          std::to_string(dataset.classes));
  const auto train_split = dataset.indices(Split::train);
  std::vector<std::vector<SampleIndex>> by_class(static_cast<std::size_t>(dataset.classes));
  std::vector<SampleIndex> known;
  for (auto i : train_split) {
    if (dataset.labels[i] < 0) continue;
    by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    known.push_back(i);
  }
  if (known.size() < start_labels)
    throw InvalidArgument("seed_initial_pool: only " + std::to_string(known.size()) + " labeled train samples for " +
                          std::to_string(start_labels) + " seed labels");
  Rng rng(seed);
  PoolState state;
  std::set<SampleIndex> chosen;
  for (int k = 0; k < dataset.classes; ++k) {
    const auto& members = by_class[static_cast<std::size_t>(k)];
    if (members.empty()) throw InvalidArgument("seed_initial_pool: class " + std::to_string(k) + " has no samples");
    const SampleIndex pick = sample_without_replacement(members, 1, rng).front();
    state.train.push_back(pick);
    chosen.insert(pick);
  }
  std::vector<SampleIndex> rest;
  for (auto i : known)
    if (!chosen.count(i)) rest.push_back(i);
  for (auto i : sample_without_replacement(rest, start_labels - state.train.size(), rng)) {
    state.train.push_back(i);
    chosen.insert(i);
  }
  for (auto i : state.train) state.train_labels.push_back(dataset.labels[i]);
  for (auto i : train_split)
    if (!chosen.count(i)) state.pool.push_back(i);
  state.validate();
  return state;
}

std::optional<std::vector<int>> SimulatedOracle::labels(const Dataset& dataset, const std::vector<SampleIndex>& batch) {
  std::vector<int> out;
  for (auto i : batch) {
    if (dataset.labels.at(i) < 0) throw InvalidArgument("simulated oracle: no ground truth for '" + dataset.ids[i] + "'");
    out.push_back(dataset.labels[i]);
  }
  return out;
}

// ---------------------------------------------------------------- Campaign

Campaign::Campaign(CampaignConfig cfg, std::shared_ptr<const Dataset> dataset, std::uint64_t seed)
    : cfg_(std::move(cfg)), dataset_(std::move(dataset)), seed_(seed) {
  if (!dataset_) throw InvalidArgument("Campaign: dataset is null");
  cfg_.selection.b = cfg_.b;
  const auto errors = validate_config(cfg_, *dataset_);
  if (!errors.empty()) throw ConfigError(errors);

  features_ = std::make_shared<RowMatrix>(dataset_->features);
  std::optional<Standardizer> standardizer;
  if (cfg_.standardize) {
    Dataset copy = *dataset_;
    standardizer = standardize_dataset(copy);
    *features_ = std::move(copy.features);
  }
  if (dataset_->has_audio() && cfg_.augmentation.apply_prob > 0.0) {
    audio::AugmentationConfig aug = cfg_.augmentation;
    aug.noise_bank = load_noise_bank(cfg_.noise_bank);
    augmenter_ = std::make_unique<AudioFeatureAugmenter>(load_dataset_clips(*dataset_), std::move(aug), standardizer);
  } else if (!dataset_->has_audio() && cfg_.feature_jitter > 0.0) {
    augmenter_ = std::make_unique<GaussianJitterAugmenter>(*features_, cfg_.feature_jitter, cfg_.augmentation.apply_prob);
  }
}

std::uint64_t Campaign::round_seed(std::uint64_t tag) const {
  return derive_seed(seed_, {static_cast<std::uint64_t>(logs_.empty() ? 0 : logs_.back().round), tag});
}

RowMatrix Campaign::rows_of(const std::vector<SampleIndex>& ids) const {
  RowMatrix out(static_cast<Eigen::Index>(ids.size()), features_->cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features_->row(static_cast<Eigen::Index>(ids[i]));
  return out;
}

void Campaign::retrain() {
  SslConfig ssl;
  ssl.kind = cfg_.ssl;
  ssl.classes = dataset_->classes;
  ssl.alpha = cfg_.ssl_alpha;
  ssl.affinity_gamma = cfg_.ssl_gamma;
  ssl.tolerance = cfg_.ssl_tolerance;
  ssl.max_iterations = cfg_.ssl_max_iterations;
  ssl.kernel = cfg_.kernel;
  if (ssl.kernel.kind == KernelKind::rbf && !(ssl.kernel.rbf_gamma > 0.0)) {
    std::vector<SampleIndex> ids = state_.train;
    ids.insert(ids.end(), state_.pool.begin(), state_.pool.end());
    ssl.kernel.rbf_gamma = nn_median_gamma(rows_of(ids));
  }
  ssl.nystrom_m = cfg_.selection.m;
  ssl.train.iterations = cfg_.selection.nr_it;
  ssl.train.batch_size = cfg_.selection.batch_size;
  ssl.train.lambda = cfg_.selection.lambda;
  ssl.train.adam = cfg_.selection.adam;
  ssl.seed = round_seed(0x551);
  model_ = ssl_train(rows_of(state_.train), state_.train_labels, rows_of(state_.pool), ssl);
}

RoundLog Campaign::evaluate_round(std::size_t round) const {
  RoundLog log;
  log.round = round;
  log.labeled = state_.train.size();
  const auto test = dataset_->indices(Split::test);
  std::vector<int> test_labels;
  for (auto i : test) test_labels.push_back(dataset_->labels[i]);
  log.test_accuracy = evaluate(*model_, rows_of(test), test_labels);
  if (state_.pool.empty()) {
    log.pseudo_label_accuracy = nan();
  } else {
    std::vector<int> pool_labels;
    for (auto i : state_.pool) pool_labels.push_back(dataset_->labels[i]);
    log.pseudo_label_accuracy = accuracy(pseudo_label(*model_, rows_of(state_.pool)), pool_labels);
  }
  return log;
}

void Campaign::start() {
  if (started()) throw InvalidArgument("Campaign::start: already started");
  const auto t0 = Clock::now();
  state_ = seed_initial_pool(*dataset_, cfg_.start_labels, derive_seed(seed_, {0x5EED}));
  retrain();
  RoundLog log = evaluate_round(0);
  log.wall_time_ms = elapsed_ms(t0);
  logs_.push_back(std::move(log));
}

bool Campaign::finished() const { return started() && state_.train.size() >= cfg_.end_labels; }

NystromMap Campaign::round_nystrom() const {
  std::vector<SampleIndex> ids = state_.train;
  ids.insert(ids.end(), state_.pool.begin(), state_.pool.end());
  const RowMatrix candidates = rows_of(ids);
  KernelSpec spec = cfg_.kernel;
  if (spec.kind == KernelKind::rbf && !(spec.rbf_gamma > 0.0)) spec.rbf_gamma = nn_median_gamma(candidates);
  const std::size_t m = std::min<std::size_t>(cfg_.selection.m, ids.size());
  NystromMap nm = build_nystrom(spec, candidates, m, round_seed(0x4E5));
  for (auto& idx : nm.landmark_indices) idx = ids[idx];
  return nm;
}

const std::vector<SampleIndex>& Campaign::propose() {
  if (!started()) throw InvalidArgument("Campaign::propose: campaign not started");
  if (finished()) throw InvalidArgument("Campaign::propose: campaign finished");
  if (!pending_.empty()) return pending_;
  const auto t0 = Clock::now();

  state_.batch.clear();
  state_.pseudo_labels = pseudo_label(*model_, rows_of(state_.pool));
  SelectionInputs inputs{features_.get(), augmenter_.get(), dataset_->classes};
  SelectionConfig sel = cfg_.selection;
  sel.b = cfg_.b;
  sel.seed = round_seed(0x5E1);

  Strategy strategy = cfg_.strategy;
  if (state_.train.size() < cfg_.warmup_labels) strategy = Strategy::uniform;
  pending_trace_.clear();
  switch (strategy) {
    case Strategy::uniform:
      pending_ = select_uniform(state_, cfg_.b, sel.seed);
      break;
    case Strategy::max_entropy:
      pending_ = select_max_entropy(state_, *model_, cfg_.b, inputs, cfg_.entropy_augmentations, sel.seed);
      break;
    case Strategy::consistency:
      pending_ = select_consistency(state_, *model_, cfg_.b, inputs, cfg_.consistency_augmentations, sel.seed);
      break;
    case Strategy::kcenter: {
      const NystromMap nm = round_nystrom();
      EmbeddingMap emb;
      auto add = [&](const std::vector<SampleIndex>& ids) {
        const RowMatrix Z = map_features_rows(nm, rows_of(ids));
        for (std::size_t i = 0; i < ids.size(); ++i) emb[ids[i]] = Z.row(static_cast<Eigen::Index>(i)).transpose();
      };
      add(state_.train);
      add(state_.pool);
      pending_ = select_kcenter(state_, emb, cfg_.b);
      break;
    }
    case Strategy::bilevel:
    case Strategy::bilevel_mixed: {
      const NystromMap nm = round_nystrom();
      SelectionResult r = strategy == Strategy::bilevel ? select_batch_bilevel(state_, sel, nm, inputs)
                                                        : select_batch_mixed(state_, sel, nm, inputs);
      pending_ = std::move(r.batch);
      pending_trace_ = std::move(r.trace);
      break;
    }
  }
  for (auto& s : pending_trace_) {
    s.w.resize(0, 0);
    s.v.resize(0, 0);
  }
  pending_ms_ = elapsed_ms(t0);
  return pending_;
}

void Campaign::commit(const std::vector<int>& labels) {
  if (pending_.empty()) throw InvalidArgument("Campaign::commit: no pending batch");
  if (labels.size() != pending_.size())
    throw InvalidArgument("Campaign::commit: " + std::to_string(labels.size()) + " labels for a batch of " +
                          std::to_string(pending_.size()));
  for (int y : labels)
    if (y < 0 || y >= dataset_->classes) throw InvalidArgument("Campaign::commit: label " + std::to_string(y) + " out of range");
  const auto t0 = Clock::now();
  const std::set<SampleIndex> moved(pending_.begin(), pending_.end());
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    state_.train.push_back(pending_[i]);
    state_.train_labels.push_back(labels[i]);
  }
  std::erase_if(state_.pool, [&](SampleIndex id) { return moved.count(id) > 0; });
  state_.pseudo_labels.resize(0, 0);
  state_.batch.clear();
  state_.validate();

  const std::size_t round = logs_.back().round + 1;
  RoundLog log;
  log.round = round;
  logs_.push_back(log);  // advances round_seed() for the retrain
  retrain();
  log = evaluate_round(round);
  for (auto id : pending_) log.selected.push_back(dataset_->ids[id]);
  log.trace = std::move(pending_trace_);
  log.wall_time_ms = pending_ms_ + elapsed_ms(t0);
  logs_.back() = std::move(log);
  pending_.clear();
  pending_trace_.clear();
}

SeedLog Campaign::seed_log() const { return SeedLog{cfg_.strategy, seed_, logs_}; }

// ---------------------------------------------------------------- checkpoints

namespace {

json log_to_json(const RoundLog& r) {
  json steps = json::array();
  for (const auto& s : r.trace)
    steps.push_back({{"step", s.step}, {"chosen", s.chosen}, {"score", s.score}, {"cg_residual", s.cg_residual},
                     {"cg_iterations", s.cg_iterations}});
  auto num = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
  return {{"round", r.round},
          {"labeled", r.labeled},
          {"test_accuracy", num(r.test_accuracy)},
          {"pseudo_label_accuracy", num(r.pseudo_label_accuracy)},
          {"selected", r.selected},
          {"trace", steps},
          {"wall_time_ms", r.wall_time_ms}};
}

RoundLog log_from_json(const json& j) {
  RoundLog r;
  auto num = [](const json& x) { return x.is_null() ? nan() : x.get<double>(); };
  r.round = j.at("round").get<std::size_t>();
  r.labeled = j.at("labeled").get<std::size_t>();
  r.test_accuracy = num(j.at("test_accuracy"));
  r.pseudo_label_accuracy = num(j.at("pseudo_label_accuracy"));
  r.selected = j.at("selected").get<std::vector<std::string>>();
  for (const auto& s : j.at("trace")) {
    SelectionStep step;
    step.step = s.at("step").get<std::size_t>();
    step.chosen = s.at("chosen").get<SampleIndex>();
    step.score = s.at("score").get<double>();
    step.cg_residual = s.at("cg_residual").get<double>();
    step.cg_iterations = s.at("cg_iterations").get<int>();
    r.trace.push_back(step);
  }
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  return r;
}

}  // namespace

void Campaign::save_checkpoint(const std::filesystem::path& dir) const {
  if (!started()) throw InvalidArgument("Campaign::save_checkpoint: campaign not started");
  std::filesystem::create_directories(dir);
  RowMatrix train(static_cast<Eigen::Index>(state_.train.size()), 2);
  for (std::size_t i = 0; i < state_.train.size(); ++i) {
    train(static_cast<Eigen::Index>(i), 0) = static_cast<double>(state_.train[i]);
    train(static_cast<Eigen::Index>(i), 1) = state_.train_labels[i];
  }
  RowMatrix pool(static_cast<Eigen::Index>(state_.pool.size()), 1);
  for (std::size_t i = 0; i < state_.pool.size(); ++i) pool(static_cast<Eigen::Index>(i), 0) = static_cast<double>(state_.pool[i]);
  if (dataset_->size() > (1u << 24)) throw InvalidArgument("checkpoint: sample indices exceed float32 exact range");
  write_matrix_file(dir / "train.bin", MatrixFile::from_rows(train, 1, 2));
  write_matrix_file(dir / "pool.bin", MatrixFile::from_rows(pool, 1, 1));

  json logs = json::array();
  for (const auto& r : logs_) logs.push_back(log_to_json(r));
  const json j = {{"format", "bal-checkpoint-1"},
                  {"dataset", dataset_->name},
                  {"samples", dataset_->size()},
                  {"seed", seed_},
                  {"config", to_json(cfg_)},
                  {"logs", logs}};
  const auto tmp = dir / "state.json.tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error("cannot write checkpoint " + tmp.string());
    os << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir / "state.json");
}

Campaign Campaign::restore(const std::filesystem::path& dir, std::shared_ptr<const Dataset> dataset) {
  std::ifstream is(dir / "state.json");
  if (!is) throw InvalidArgument("no checkpoint at " + dir.string());
  const json j = json::parse(is);
  if (j.at("format") != "bal-checkpoint-1") throw InvalidArgument(dir.string() + ": unknown checkpoint format");
  if (j.at("samples").get<std::size_t>() != dataset->size())
    throw InvalidArgument(dir.string() + ": checkpoint was written for a dataset of a different size");
  Campaign c(parse_campaign_config(j.at("config")), std::move(dataset), j.at("seed").get<std::uint64_t>());
  const RowMatrix train = read_matrix_file(dir / "train.bin").as_rows();
  const RowMatrix pool = read_matrix_file(dir / "pool.bin").as_rows();
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    c.state_.train.push_back(static_cast<SampleIndex>(train(i, 0)));
    c.state_.train_labels.push_back(static_cast<int>(train(i, 1)));
  }
  for (Eigen::Index i = 0; i < pool.rows(); ++i) c.state_.pool.push_back(static_cast<SampleIndex>(pool(i, 0)));
  c.state_.validate();
  for (const auto& r : j.at("logs")) c.logs_.push_back(log_from_json(r));
  if (c.logs_.empty()) throw InvalidArgument(dir.string() + ": checkpoint has no rounds");
  c.retrain();
  return c;
}

std::filesystem::path seed_checkpoint_dir(const CampaignConfig& cfg, std::uint64_t seed) {
  return std::filesystem::path(cfg.checkpoint_dir) / (to_string(cfg.strategy) + "_seed_" + std::to_string(seed));
}

ExperimentResult run_campaign(const CampaignConfig& cfg, std::shared_ptr<const Dataset> dataset, LabelOracle* oracle,
                              const RunOptions& options) {
  SimulatedOracle simulated;
  if (!oracle) oracle = &simulated;
  const bool checkpoints = !cfg.checkpoint_dir.empty();
  ExperimentResult result;
  result.strategy = cfg.strategy;
  for (auto seed : cfg.seeds) {
    const auto dir = checkpoints ? seed_checkpoint_dir(cfg, seed) : std::filesystem::path();
    std::optional<Campaign> c;
    if (options.resume && checkpoints && std::filesystem::exists(dir / "state.json")) {
      c.emplace(Campaign::restore(dir, dataset));
    } else {
      c.emplace(cfg, dataset, seed);
      c->start();
      if (checkpoints) c->save_checkpoint(dir);
    }
    while (!c->finished()) {
      const auto batch = c->propose();
      const auto labels = oracle->labels(*dataset, batch);
      if (!labels) {
        if (checkpoints) c->save_checkpoint(dir);
        throw CampaignAborted("oracle aborted seed " + std::to_string(seed) + " at round " + std::to_string(c->round() + 1), dir);
      }
      c->commit(*labels);
      if (checkpoints) c->save_checkpoint(dir);
    }
    result.seeds.push_back(c->seed_log());
  }
  result.summary = aggregate(result.seeds);
  return result;
}

}  // namespace bal
