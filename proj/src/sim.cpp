#include "latroute/sim.hpp"

#include "latroute/common.hpp"
#include "latroute/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace latroute::sim {

namespace {

// splitmix64 finaliser, used to derive independent stream seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t k = 0) {
  return mix(mix(seed ^ mix(tag)) + k);
}

constexpr std::array<const char*, 48> kVocabulary = {
    "compute", "the",     "value",   "of",      "prove",   "that",     "a",       "function", "given",  "list",
    "explain", "why",     "how",     "which",   "number",  "integral", "matrix",  "graph",    "string", "sort",
    "derive",  "series",  "prime",   "vector",  "summary", "history",  "protein", "reaction", "court",  "ruling",
    "market",  "policy",  "poem",    "rhyme",   "angle",   "triangle", "circle",  "energy",   "force",  "orbit",
    "code",    "bug",     "loop",    "theorem", "lemma",   "bound",    "estimate", "where"};

std::string make_text(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(6, 40), word(0, static_cast<int>(kVocabulary.size()) - 1), digit(0, 999);
  std::bernoulli_distribution numeric(0.1), question(0.5);
  const int n = len(rng);
  std::string out;
  for (int w = 0; w < n; ++w) {
    if (w) out.push_back(' ');
    if (numeric(rng))
      out += std::to_string(digit(rng));
    else
      out += kVocabulary[static_cast<std::size_t>(word(rng))];
  }
  out += question(rng) ? "?" : ".";
  return out;
}

SyntheticModel draw_model(std::string id, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  SyntheticModel m;
  m.model_id = std::move(id);
  m.theta.resize(dim);
  for (int d = 0; d < dim; ++d) m.theta(d) = normal(rng);
  m.pricing.price_in = 1e-4 + unit(rng) * 1.9e-3;
  m.pricing.price_out = 5e-4 + unit(rng) * 5.5e-3;
  m.latency.ttft = 0.1 + unit(rng) * 0.7;
  m.latency.tpot = 0.005 + unit(rng) * 0.035;
  m.verbosity = 0.5 + unit(rng) * 1.5;
  return m;
}

double draw_score(double p, double noise, ScoreMode mode, std::mt19937_64& rng) {
  if (mode == ScoreMode::kBernoulli) return std::uniform_real_distribution<double>()(rng) < p ? 1.0 : 0.0;
  if (noise == 0.0) return p;
  return std::clamp(p + noise * std::normal_distribution<double>()(rng), 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// world

SyntheticWorld generate_world(std::uint64_t seed, int models, int items, int dim, double noise, ScoreMode mode) {
  if (models < 1 || items < 1 || dim < 1)
    throw Error(fmt::format("generate_world: need models, items, dim >= 1 (got {}, {}, {})", models, items, dim));
  if (!(noise >= 0.0)) throw Error("generate_world: noise must be >= 0");
  SyntheticWorld w;
  w.seed = seed;
  w.dim = dim;
  w.noise = noise;
  w.mode = mode;

  std::mt19937_64 rng(derive(seed, 0));
  std::normal_distribution<double> normal;
  for (int m = 0; m < models; ++m) w.models.push_back(draw_model(fmt::format("model-{:03}", m), dim, rng));
  for (int i = 0; i < items; ++i) {
    ItemParams it{fmt::format("item-{:04}", i), Vec(dim), Vec(dim)};
    for (int d = 0; d < dim; ++d) it.alpha(d) = std::abs(normal(rng));
    for (int d = 0; d < dim; ++d) it.b(d) = normal(rng);
    w.items.push_back(std::move(it));
  }
  std::mt19937_64 text_rng(derive(seed, 1));
  for (int i = 0; i < items; ++i) w.texts.push_back(make_text(text_rng));
  return w;
}

std::size_t SyntheticWorld::item_index(const std::string& item_id) const {
  // ids are generated in sorted order
  auto it = std::lower_bound(items.begin(), items.end(), item_id,
                             [](const ItemParams& a, const std::string& id) { return a.item_id < id; });
  if (it == items.end() || it->item_id != item_id) throw Error(fmt::format("world has no item '{}'", item_id));
  return static_cast<std::size_t>(it - items.begin());
}

double SyntheticWorld::probability(const Vec& theta, std::size_t item) const {
  return predict_prob(theta, items[item].alpha, items[item].b);
}

double SyntheticWorld::true_length(const SyntheticModel& model, std::size_t item) const {
  return model.verbosity * (20.0 + 200.0 * sigmoid(complexity_score(items[item])));
}

double SyntheticWorld::true_latency(const SyntheticModel& model, double length) const {
  return model.latency.ttft + model.latency.tpot * length;
}

double SyntheticWorld::true_cost(const SyntheticModel& model, std::size_t item) const {
  return estimate_cost(model.pricing, static_cast<double>(count_whitespace_tokens(texts[item])),
                       true_length(model, item));
}

CalibratedSpace SyntheticWorld::planted_space() const {
  CalibratedSpace s;
  s.dim = dim;
  for (const auto& it : items) s.items[it.item_id] = it;
  for (const auto& m : models) s.abilities[m.model_id] = {m.model_id, m.theta};
  return s;
}

ResponseMatrix SyntheticWorld::responses() const {
  std::vector<std::string> model_ids, item_ids;
  for (const auto& m : models) model_ids.push_back(m.model_id);
  for (const auto& it : items) item_ids.push_back(it.item_id);
  ResponseMatrix r(model_ids, item_ids);
  std::mt19937_64 rng(derive(seed, 2));
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t i = 0; i < items.size(); ++i) r.set(m, i, draw_score(probability(models[m].theta, i), noise, mode, rng));
  return r;
}

std::vector<ProfilingObservation> SyntheticWorld::observe(const SyntheticModel& model,
                                                          const std::vector<std::string>& item_ids,
                                                          std::uint64_t obs_seed) const {
  std::mt19937_64 rng(derive(seed, 3, obs_seed));
  std::vector<ProfilingObservation> out;
  for (const auto& id : item_ids)
    out.push_back({id, draw_score(probability(model.theta, item_index(id)), noise, mode, rng)});
  return out;
}

std::vector<AnchorMeasurement> SyntheticWorld::measure(const SyntheticModel& model,
                                                       const std::vector<std::string>& item_ids,
                                                       std::uint64_t obs_seed) const {
  std::mt19937_64 rng(derive(seed, 4, obs_seed));
  std::normal_distribution<double> normal;
  std::vector<AnchorMeasurement> out;
  for (const auto& id : item_ids) {
    const auto i = item_index(id);
    AnchorMeasurement a;
    a.item_id = id;
    a.score = probability(model.theta, i);
    a.output_tokens = true_length(model, i);
    if (noise > 0.0) a.output_tokens = std::max(1.0, a.output_tokens * (1.0 + noise * normal(rng)));
    // Latency follows the length actually produced; timing noise comes on top.
    a.latency_seconds = true_latency(model, a.output_tokens);
    if (noise > 0.0) a.latency_seconds = std::max(0.0, a.latency_seconds * (1.0 + noise * normal(rng)));
    a.has_output = a.has_latency = true;
    out.push_back(a);
  }
  return out;
}

SyntheticModel SyntheticWorld::sample_model(std::string model_id, std::uint64_t model_seed) const {
  std::mt19937_64 rng(derive(seed, 5, model_seed));
  return draw_model(std::move(model_id), dim, rng);
}

// ---------------------------------------------------------------------------
// strategies

std::string_view to_string(AnchorStrategy s) {
  switch (s) {
    case AnchorStrategy::kRandom: return "random";
    case AnchorStrategy::kDiffBased: return "diff-based";
    case AnchorStrategy::kDiscBased: return "disc-based";
    case AnchorStrategy::kTaskAware: return "task-aware";
    case AnchorStrategy::kDOptimal: return "d-optimality";
  }
  return "?";
}

namespace {

// Indices of the n largest keys, ties to the smaller id.
std::vector<std::size_t> top_by(const std::vector<ItemParams>& items, const std::vector<double>& key, std::size_t n) {
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return items[a].item_id < items[b].item_id;
  });
  idx.resize(n);
  return idx;
}

}  // namespace

std::vector<std::string> select_by_strategy(AnchorStrategy strategy, const std::vector<ItemParams>& items,
                                            std::size_t n, std::uint64_t seed, double epsilon) {
  if (n > items.size()) throw Error(fmt::format("cannot pick {} anchors from {} items", n, items.size()));
  std::vector<std::size_t> picked;
  std::vector<double> key(items.size());
  switch (strategy) {
    case AnchorStrategy::kRandom: {
      std::vector<std::size_t> idx(items.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::mt19937_64 rng(seed);
      // partial Fisher-Yates
      for (std::size_t k = 0; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
      }
      picked.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
      break;
    }
    case AnchorStrategy::kDiffBased:
      for (std::size_t i = 0; i < items.size(); ++i) key[i] = items[i].b.norm();
      picked = top_by(items, key, n);
      break;
    case AnchorStrategy::kDiscBased:
      for (std::size_t i = 0; i < items.size(); ++i) key[i] = items[i].alpha.norm();
      picked = top_by(items, key, n);
      break;
    case AnchorStrategy::kTaskAware: {
      if (n == 0) break;
      std::vector<std::size_t> order(items.size());
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> s(items.size());
      for (std::size_t i = 0; i < items.size(); ++i) s[i] = complexity_score(items[i]);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return s[a] < s[b];
        return items[a].item_id < items[b].item_id;
      });
      for (std::size_t k = 0; k < n; ++k) {
        const auto lo = k * order.size() / n, hi = (k + 1) * order.size() / n;
        std::size_t best = order[lo];
        for (auto j = lo + 1; j < hi; ++j) {
          const auto c = order[j];
          const double a = items[c].alpha.norm(), ab = items[best].alpha.norm();
          if (a > ab || (a == ab && items[c].item_id < items[best].item_id)) best = c;
        }
        picked.push_back(best);
      }
      break;
    }
    case AnchorStrategy::kDOptimal: {
      AnchorOptions opts;
      opts.parallel = false;
      return select_anchors(items, n, epsilon, opts).item_ids;
    }
  }
  std::vector<std::string> out;
  for (auto i : picked) out.push_back(items[i].item_id);
  return out;
}

std::vector<StrategyReport> compare_sampling_strategies(const SyntheticWorld& world, std::size_t n, int trials,
                                                        const StrategyOptions& options) {
  if (trials < 1) throw Error("compare_sampling_strategies: trials must be >= 1");
  if (n > world.items.size()) throw Error(fmt::format("cannot pick {} anchors from {} items", n, world.items.size()));
  const auto space = world.planted_space();
  constexpr std::size_t kStrategies = std::size(kAllStrategies);

  // Deterministic selections do not depend on the trial.
  std::vector<std::vector<std::string>> fixed(kStrategies);
  for (std::size_t s = 0; s < kStrategies; ++s)
    if (kAllStrategies[s] != AnchorStrategy::kRandom)
      fixed[s] = select_by_strategy(kAllStrategies[s], world.items, n, 0, options.epsilon);

  std::vector<std::array<TrialResult, kStrategies>> results(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int t = 0; t < trials; ++t) {
    const auto model = world.sample_model(fmt::format("heldout-{:03}", t), static_cast<std::uint64_t>(t));
    for (std::size_t s = 0; s < kStrategies; ++s) {
      const auto anchors = kAllStrategies[s] == AnchorStrategy::kRandom
                               ? select_by_strategy(AnchorStrategy::kRandom, world.items, n,
                                                    derive(world.seed, 6, static_cast<std::uint64_t>(t)))
                               : fixed[s];
      const auto obs = world.observe(model, anchors, static_cast<std::uint64_t>(t));
      const auto est = profile_new_model(obs, space, options.profiling, model.model_id);
      double mae = 0.0;
      for (std::size_t i = 0; i < world.items.size(); ++i)
        mae += std::abs(world.probability(est.theta, i) - world.probability(model.theta, i));
      results[static_cast<std::size_t>(t)][s] = {t, (est.theta - model.theta).norm(),
                                                 mae / static_cast<double>(world.items.size())};
    }
  }

  std::vector<StrategyReport> reports;
  for (std::size_t s = 0; s < kStrategies; ++s) {
    StrategyReport r;
    r.strategy = kAllStrategies[s];
    r.anchors = n;
    for (const auto& row : results) r.trials.push_back(row[s]);
    // trials are already in index order, so the sums are reproducible
    for (const auto& tr : r.trials) {
      r.mean_theta_error += tr.theta_error;
      r.mean_mae += tr.mae;
    }
    r.mean_theta_error /= trials;
    r.mean_mae /= trials;
    reports.push_back(std::move(r));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// evolving pool

PoolSetup prepare_pool(const SyntheticWorld& world, std::size_t anchors, std::size_t eval_batch,
                       const CalibrationConfig& calibration) {
  PoolSetup setup;
  setup.space = fit_calibration(world.responses(), calibration);
  setup.anchors = select_anchors(setup.space.item_list(), anchors);
  std::vector<std::string> chosen = setup.anchors.item_ids;
  std::sort(chosen.begin(), chosen.end());
  for (const auto& it : world.items) {
    if (setup.eval_items.size() == eval_batch) break;
    if (!std::binary_search(chosen.begin(), chosen.end(), it.item_id)) setup.eval_items.push_back(it.item_id);
  }
  if (setup.eval_items.size() < eval_batch)
    throw Error(fmt::format("only {} non-anchor items for an evaluation batch of {}", setup.eval_items.size(), eval_batch));
  return setup;
}

ModelProfile onboard_model(const SyntheticWorld& world, const PoolSetup& setup, const SyntheticModel& model,
                           const CalibrationConfig& profiling, std::uint64_t seed) {
  ModelProfile p;
  p.model_id = model.model_id;
  p.ability = profile_new_model(world.observe(model, setup.anchors.item_ids, seed), setup.space, profiling,
                                model.model_id);
  p.pricing = model.pricing;
  std::vector<VerbosityRecord> records;
  std::vector<LatencyMeasurement> timings;
  for (const auto& m : world.measure(model, setup.anchors.item_ids, seed)) {
    records.push_back({m.item_id, complexity_score(setup.space.item(m.item_id)), m.output_tokens});
    timings.push_back({m.output_tokens, m.latency_seconds});
  }
  p.verbosity = calibrate_verbosity(records, std::min<std::size_t>(10, records.size()));
  p.latency = calibrate_latency(timings);
  p.metadata.display_name = model.model_id;
  p.metadata.anchor_set_id = "default";
  return p;
}

std::vector<SyntheticModel> dominance_stream(const std::vector<SyntheticModel>& pool, int steps, double delta) {
  if (pool.empty()) throw Error("dominance_stream: empty pool");
  if (!(delta > 0.0)) throw Error("dominance_stream: delta must be > 0");
  Vec top = pool.front().theta;
  for (const auto& m : pool) top = top.cwiseMax(m.theta);
  std::vector<SyntheticModel> out;
  for (int k = 0; k < steps; ++k) {
    SyntheticModel m = pool.front();
    m.model_id = fmt::format("rising-{:03}", k);
    top.array() += delta;
    m.theta = top;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<SyntheticModel> with_shared_economics(std::vector<SyntheticModel> models, const SyntheticModel& reference) {
  for (auto& m : models) {
    m.pricing = reference.pricing;
    m.latency = reference.latency;
    m.verbosity = reference.verbosity;
  }
  return models;
}

std::string pool_hash(std::vector<std::string> model_ids) {
  std::sort(model_ids.begin(), model_ids.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : model_ids) {
    for (unsigned char c : id) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

PoolRun simulate_evolving_pool(const SyntheticWorld& world, const PoolSetup& setup,
                               const std::vector<SyntheticModel>& initial_pool,
                               const std::vector<SyntheticModel>& stream, const PoolScenario& scenario) {
  if (initial_pool.size() < 2) throw Error("simulate_evolving_pool: pool size must be >= 2");
  scenario.weights.validate();
  scenario.constraints.validate();
  auto& counters = training_counters();
  const auto calibrations0 = counters.calibrations.load();
  const auto trainings0 = counters.predictor_trainings.load();

  std::vector<QueryInput> queries;
  for (const auto& id : setup.eval_items) queries.push_back({id, setup.space.item(id), world.texts[world.item_index(id)]});

  struct Member {
    SyntheticModel truth;
    ModelProfile profile;
  };
  std::vector<Member> pool;
  std::uint64_t onboard_seq = 0;
  auto onboard = [&](const SyntheticModel& m) {
    return Member{m, onboard_model(world, setup, m, scenario.profiling, derive(scenario.seed, 7, onboard_seq++))};
  };
  for (const auto& m : initial_pool) pool.push_back(onboard(m));

  const TokenizerRegistry tokenizers;
  RouteOptions route_opts;
  route_opts.normalize = scenario.normalize;
  auto estimates_for = [&](const std::vector<Member>& members) {
    std::vector<ModelProfile> profiles;
    for (const auto& m : members) profiles.push_back(m.profile);
    return score_matrix(queries, profiles, tokenizers, false);
  };

  PoolRun run;
  for (std::size_t k = 0; k <= stream.size(); ++k) {
    PoolStep step;
    step.step = static_cast<int>(k);
    if (k > 0) {
      pool.push_back(onboard(stream[k - 1]));
      step.onboarded = pool.back().truth.model_id;
      const auto est = estimates_for(pool);
      const auto u = utility_matrix(est, scenario.weights, scenario.normalize);
      std::size_t worst = pool.size() - 1;
      double worst_u = 0.0;
      for (std::size_t m = pool.size(); m-- > 0;) {
        double mean = 0.0;
        for (std::size_t q = 0; q < est.num_queries(); ++q) mean += u[q * est.num_models() + m];
        mean /= static_cast<double>(est.num_queries());
        if (m == pool.size() - 1 || mean < worst_u) {
          worst = m;
          worst_u = mean;
        }
      }
      step.evicted = pool[worst].truth.model_id;
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    const auto est = estimates_for(pool);
    const auto a = scenario.constraints.empty()
                       ? route_unconstrained(est, scenario.weights, route_opts)
                       : route_constrained(est, scenario.weights, scenario.constraints, route_opts);
    step.feasible = a.feasible;
    step.solver = std::string(to_string(a.solver));
    step.planned_cost = a.total_cost;
    step.planned_latency = a.total_latency;
    for (std::size_t q = 0; q < a.choices.size(); ++q) {
      const auto& truth = pool[a.choices[q].model_index].truth;
      const auto i = world.item_index(queries[q].query_id);
      LoggedChoice c;
      c.query_id = queries[q].query_id;
      c.model_id = truth.model_id;
      c.accuracy = world.probability(truth.theta, i);
      c.cost = world.true_cost(truth, i);
      c.latency = world.true_latency(truth, world.true_length(truth, i));
      step.reward += scenario.weights.w_p * c.accuracy - scenario.weights.w_c * c.cost - scenario.weights.w_t * c.latency;
      step.total_cost += c.cost;
      step.total_latency += c.latency;
      step.choices.push_back(std::move(c));
    }
    for (const auto& m : pool) step.pool.push_back(m.truth.model_id);
    std::sort(step.pool.begin(), step.pool.end());
    step.pool_hash = pool_hash(step.pool);
    run.steps.push_back(std::move(step));
  }
  run.calibrations = counters.calibrations.load() - calibrations0;
  run.trainings = counters.predictor_trainings.load() - trainings0;
  return run;
}

void write_pool_metrics_csv(const PoolRun& run, const std::string& policy, const std::string& path) {
  csv::Table t;
  t.header = {"step",         "policy",          "reward",   "total_cost", "total_latency", "pool_hash",
              "planned_cost", "planned_latency", "feasible", "onboarded",  "evicted"};
  for (const auto& s : run.steps)
    t.rows.push_back({std::to_string(s.step), policy, fmt::format("{:.17g}", s.reward),
                      fmt::format("{:.17g}", s.total_cost), fmt::format("{:.17g}", s.total_latency), s.pool_hash,
                      fmt::format("{:.17g}", s.planned_cost), fmt::format("{:.17g}", s.planned_latency),
                      s.feasible ? "1" : "0", s.onboarded, s.evicted});
  csv::write(path, t);
}

void write_pool_log_csv(const PoolRun& run, const std::string& path) {
  csv::Table t;
  t.header = {"step", "query_id", "model_id", "accuracy", "cost", "latency"};
  for (const auto& s : run.steps)
    for (const auto& c : s.choices)
      t.rows.push_back({std::to_string(s.step), c.query_id, c.model_id, fmt::format("{:.17g}", c.accuracy),
                        fmt::format("{:.17g}", c.cost), fmt::format("{:.17g}", c.latency)});
  csv::write(path, t);
}

// ---------------------------------------------------------------------------
// statistics

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (auto k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("pearson: need two equal-length samples of size >= 2");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

}  // namespace latroute::sim
