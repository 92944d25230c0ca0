// Command-line driver for every pipeline stage.
//
// Any option can also come from a TOML/INI style file passed with --config,
// or from the environment as LATROUTE_<OPTION> (upper case, dashes become
// underscores), e.g. LATROUTE_SEED=3. Command-line values win over both.
#include "latroute/anchor.hpp"
#include "latroute/csv.hpp"
#include "latroute/embedding.hpp"
#include "latroute/estimators.hpp"
#include "latroute/irt.hpp"
#include "latroute/predictor.hpp"
#include "latroute/registry.hpp"
#include "latroute/serialize.hpp"
#include "latroute/service.hpp"
#include "latroute/sim.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

using namespace latroute;

namespace {

void attach_env(CLI::App& app) {
  for (auto* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config") continue;
    std::string env = "LATROUTE_" + names.front();
    std::transform(env.begin(), env.end(), env.begin(), [](unsigned char c) {
      return c == '-' ? '_' : static_cast<char>(std::toupper(c));
    });
    opt->envname(env);
  }
}

std::map<std::string, std::string> read_texts(const std::string& path) {
  const auto t = csv::read(path);
  const auto id = t.column("item_id"), text = t.column("text");
  std::map<std::string, std::string> out;
  for (const auto& row : t.rows) out[row[id]] = row[text];
  return out;
}

volatile std::sig_atomic_t g_stop = 0;

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string responses, out;
  CalibrationConfig config;
  bool serial = false;
};

void run_calibrate(const CalibrateArgs& a) {
  auto cfg = a.config;
  cfg.parallel = !a.serial;
  const auto space = fit_calibration(read_response_csv(a.responses), cfg);
  write_json_file(a.out, to_json(space));
  fmt::print("calibrated {} models x {} items in D={} (loss {:.6g}, {} rejected checkpoints) -> {}\n",
             space.abilities.size(), space.items.size(), space.dim, space.fit_report.final_loss,
             space.fit_report.rejected_checkpoints, a.out);
}

struct AnchorArgs {
  std::string space, out, gains;
  std::size_t count = 40;
  double epsilon = 1e-6;
};

void run_select_anchors(const AnchorArgs& a) {
  const auto space = space_from_json(read_json_file(a.space));
  const auto anchors = select_anchors(space.item_list(), a.count, a.epsilon);
  write_json_file(a.out, to_json(anchors));
  csv::Table t;
  t.header = {"step", "item_id", "gain", "log_det"};
  double log_det = space.dim * std::log(a.epsilon);
  for (std::size_t k = 0; k < anchors.item_ids.size(); ++k) {
    log_det += anchors.gains[k];
    t.rows.push_back({std::to_string(k + 1), anchors.item_ids[k], fmt::format("{:.17g}", anchors.gains[k]),
                      fmt::format("{:.17g}", log_det)});
  }
  if (a.gains.empty()) {
    std::cout << csv::join_line(t.header) << '\n';
    for (const auto& r : t.rows) std::cout << csv::join_line(r) << '\n';
  } else {
    csv::write(a.gains, t);
  }
}

struct ProfileArgs {
  std::string space, anchors, anchor_set_id = "default", observations, out, model_id, display_name, tokenizer = "whitespace",
                                  onboarded_at;
  double price_in = 0.0, price_out = 0.0;
  std::size_t bins = 10;
};

void calibrate_estimators_into(ModelProfile& p, const CalibratedSpace& space, const std::vector<AnchorMeasurement>& rows,
                               std::size_t bins) {
  std::vector<VerbosityRecord> records;
  std::vector<LatencyMeasurement> timings;
  for (const auto& r : rows) {
    if (r.has_output) records.push_back({r.item_id, complexity_score(space.item(r.item_id)), r.output_tokens});
    if (r.has_output && r.has_latency) timings.push_back({r.output_tokens, r.latency_seconds});
  }
  if (records.empty()) throw Error("no output_tokens measurements to calibrate verbosity from");
  p.verbosity = calibrate_verbosity(records, std::min(bins, records.size()));
  p.latency = calibrate_latency(timings);
}

void run_profile_model(const ProfileArgs& a) {
  const auto space = space_from_json(read_json_file(a.space));
  auto rows = read_measurement_csv(a.observations);
  if (!a.anchors.empty()) {
    const auto anchors = anchors_from_json(read_json_file(a.anchors));
    std::vector<std::string> ids = anchors.item_ids;
    std::sort(ids.begin(), ids.end());
    std::erase_if(rows, [&](const AnchorMeasurement& r) { return !std::binary_search(ids.begin(), ids.end(), r.item_id); });
    if (rows.size() != ids.size())
      fmt::print(stderr, "warning: {} of {} anchors have observations\n", rows.size(), ids.size());
  }
  std::vector<ProfilingObservation> obs;
  for (const auto& r : rows) obs.push_back({r.item_id, r.score});
  CalibrationConfig cfg;
  cfg.dim = space.dim;
  ModelProfile p;
  p.model_id = a.model_id;
  p.ability = profile_new_model(obs, space, cfg, a.model_id);
  p.pricing = {a.price_in, a.price_out};
  p.tokenizer_id = a.tokenizer;
  p.metadata = {a.display_name.empty() ? a.model_id : a.display_name, a.onboarded_at,
                a.anchors.empty() ? std::string() : a.anchor_set_id};
  const bool measured = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.has_output && r.has_latency; });
  if (measured && !rows.empty()) {
    calibrate_estimators_into(p, space, rows, a.bins);
  } else {
    // Placeholder until calibrate-estimators runs: one bin, zero length.
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double s = complexity_score(space.item(rows[k].item_id));
      lo = k ? std::min(lo, s) : s;
      hi = k ? std::max(hi, s) : s;
    }
    p.verbosity = {{lo, hi > lo ? hi : lo + 1.0}, {0.0}, 0.0};
    fmt::print(stderr, "warning: no length/latency columns; run calibrate-estimators before routing\n");
  }
  write_json_file(a.out, to_json(p));
  fmt::print("profiled '{}' from {} anchor observations -> {}\n", p.model_id, obs.size(), a.out);
}

struct EstimatorArgs {
  std::string profile, space, measurements, out;
  std::size_t bins = 10;
};

void run_calibrate_estimators(const EstimatorArgs& a) {
  auto p = profile_from_json(read_json_file(a.profile));
  const auto space = space_from_json(read_json_file(a.space));
  calibrate_estimators_into(p, space, read_measurement_csv(a.measurements), a.bins);
  const auto out = a.out.empty() ? a.profile : a.out;
  write_json_file(out, to_json(p));
  fmt::print("'{}': {} verbosity bins, ttft {:.6g}s, tpot {:.6g}s -> {}\n", p.model_id, p.verbosity.bins(),
             p.latency.ttft, p.latency.tpot, out);
}

struct TrainArgs {
  std::string space, texts, embeddings, out;
  TrainConfig config;
  bool serial = false;
};

void run_train_predictor(const TrainArgs& a) {
  const auto space = space_from_json(read_json_file(a.space));
  const auto texts = read_texts(a.texts);
  std::optional<EmbeddingTable> table;
  if (!a.embeddings.empty()) table = read_embeddings(a.embeddings);
  const HashingEmbedder hashing;
  std::vector<TrainingExample> examples;
  for (const auto& [id, text] : texts) {
    const auto& item = space.item(id);
    TrainingExample ex{id, text, {}, item.alpha, item.b};
    if (table) {
      ex.features.semantic = table->lookup(id);
      ex.features.structural = extract_structural_features(text);
    } else {
      ex.features = make_features(text, hashing);
    }
    examples.push_back(std::move(ex));
  }
  auto cfg = a.config;
  cfg.embedder = table ? EmbedderKind::kFile : EmbedderKind::kHashing;
  cfg.parallel = !a.serial;
  const auto model = train(examples, space, cfg);
  write_json_file(a.out, to_json(model));
  fmt::print("trained on {} examples, final epoch loss {:.6g} -> {}\n", examples.size(),
             model.loss_history.empty() ? 0.0 : model.loss_history.back(), a.out);
}

struct RegistryArgs {
  std::string registry, space, anchors, anchor_set_id = "default", predictor, profile;
  bool overwrite = false;
};

void run_registry_init(const RegistryArgs& a) {
  Registry r;
  r.space = space_from_json(read_json_file(a.space));
  if (!a.anchors.empty()) r = add_anchor_set(std::move(r), a.anchor_set_id, anchors_from_json(read_json_file(a.anchors)));
  if (!a.predictor.empty()) r = set_predictor(std::move(r), predictor_from_json(read_json_file(a.predictor)));
  save_registry(r, a.registry);
  fmt::print("initialised registry at {} (version {})\n", a.registry, r.version);
}

void run_register(const RegistryArgs& a) {
  auto r = load_registry(a.registry);
  r = register_model(std::move(r), profile_from_json(read_json_file(a.profile)), a.overwrite);
  save_registry(r, a.registry);
  fmt::print("registered; {} models, version {}\n", r.profiles.size(), r.version);
}

struct RouteArgs {
  std::string registry, queries, out, policy;
  double w_p = -1, w_c = -1, w_t = -1;
  std::optional<double> max_cost, max_latency, min_accuracy;
  bool normalize = false;
};

void run_route(const RouteArgs& a) {
  const auto registry = load_registry(a.registry);
  Json req;
  req["id"] = "cli";
  req["queries"] = Json::array();
  std::ifstream in(a.queries);
  if (!in) throw Error(fmt::format("cannot open '{}'", a.queries));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      req["queries"].push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(fmt::format("{}:{}: {}", a.queries, n, e.what()));
    }
  }
  if (a.w_p >= 0 || a.w_c >= 0 || a.w_t >= 0)
    req["weights"] = {{"p", std::max(a.w_p, 0.0)}, {"c", std::max(a.w_c, 0.0)}, {"t", std::max(a.w_t, 0.0)}};
  else if (!a.policy.empty())
    req["policy"] = a.policy;
  Json c = Json::object();
  if (a.max_cost) c["max_total_cost"] = *a.max_cost;
  if (a.max_latency) c["max_total_latency"] = *a.max_latency;
  if (a.min_accuracy) c["min_mean_accuracy"] = *a.min_accuracy;
  req["constraints"] = c;
  req["normalize"] = a.normalize;
  const auto batch = route_request(registry, req, true);
  write_assignment_csv(batch.assignment, batch.estimates, batch.weights, batch.options.normalize, a.out);
  fmt::print("routed {} queries over {} models ({} solver, {}feasible, objective {:.6g}) -> {}\n",
             batch.estimates.num_queries(), batch.estimates.num_models(), to_string(batch.assignment.solver),
             batch.assignment.feasible ? "" : "in", batch.assignment.objective, a.out);
}

struct ServeArgs {
  std::string registry;
  int port = 7311;
};

void run_serve(const ServeArgs& a) {
  RegistryStore store(load_registry(a.registry));
  RouteServer server(store, static_cast<std::uint16_t>(a.port));
  fmt::print("listening on 127.0.0.1:{}\n", server.port());
  std::fflush(stdout);
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

struct SimulateArgs {
  std::uint64_t seed = 0;
  int models = 50, items = 500, dim = 3, pool_size = 6, steps = 10;
  std::size_t anchors = 40, eval_batch = 40;
  double noise = 0.0, delta = 0.25;
  std::string policy = "max-acc", stream = "dominance", out, log;
  std::optional<double> max_cost, max_latency, min_accuracy;
  bool normalize = false;
};

void run_simulate(const SimulateArgs& a) {
  const auto world = sim::generate_world(a.seed, a.models, a.items, a.dim, a.noise);
  if (a.pool_size < 2 || a.pool_size > a.models) throw Error("pool-size must be in [2, models]");
  CalibrationConfig cfg;
  cfg.dim = a.dim;
  cfg.seed = a.seed;
  const auto setup = sim::prepare_pool(world, a.anchors, a.eval_batch, cfg);
  std::vector<sim::SyntheticModel> pool(world.models.begin(), world.models.begin() + a.pool_size);
  std::vector<sim::SyntheticModel> stream;
  if (a.stream == "dominance") {
    pool = sim::with_shared_economics(pool, pool.front());
    stream = sim::dominance_stream(pool, a.steps, a.delta);
  } else if (a.stream == "random") {
    for (int k = 0; k < a.steps; ++k) stream.push_back(world.sample_model(fmt::format("new-{:03}", k), k));
  } else {
    throw Error(fmt::format("unknown stream '{}' (dominance or random)", a.stream));
  }
  sim::PoolScenario sc;
  sc.policy_name = a.policy;
  sc.weights = policy_by_name(a.policy);
  sc.constraints = {a.max_cost, a.max_latency, a.min_accuracy};
  sc.normalize = a.normalize;
  sc.seed = a.seed;
  sc.profiling.dim = a.dim;
  const auto run = sim::simulate_evolving_pool(world, setup, pool, stream, sc);
  if (run.calibrations != 0 || run.trainings != 0)
    throw Error("calibration or training ran during the simulation");
  sim::write_pool_metrics_csv(run, a.policy, a.out);
  if (!a.log.empty()) sim::write_pool_log_csv(run, a.log);
  fmt::print("{} steps -> {}\n", run.steps.size(), a.out);
}

struct SynthArgs {
  std::uint64_t seed = 0;
  int models = 50, items = 500, dim = 3, holdout = 1;
  double noise = 0.0;
  std::string out_dir;
};

void run_synth(const SynthArgs& a) {
  const auto world = sim::generate_world(a.seed, a.models, a.items, a.dim, a.noise);
  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  write_response_csv(world.responses(), (fs::path(a.out_dir) / "responses.csv").string());
  csv::Table texts;
  texts.header = {"item_id", "text"};
  for (std::size_t i = 0; i < world.items.size(); ++i) texts.rows.push_back({world.items[i].item_id, world.texts[i]});
  csv::write((fs::path(a.out_dir) / "texts.csv").string(), texts);
  std::vector<std::string> all;
  for (const auto& it : world.items) all.push_back(it.item_id);
  csv::Table models;
  models.header = {"model_id", "price_in", "price_out"};
  for (int h = 0; h < a.holdout; ++h) {
    const auto m = world.sample_model(fmt::format("holdout-{:02}", h), static_cast<std::uint64_t>(h));
    auto rows = world.measure(m, all, static_cast<std::uint64_t>(h));
    const auto obs = world.observe(m, all, static_cast<std::uint64_t>(h));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].score = obs[i].score;
    write_measurement_csv(rows, (fs::path(a.out_dir) / (m.model_id + ".csv")).string());
    models.rows.push_back({m.model_id, fmt::format("{:.17g}", m.pricing.price_in), fmt::format("{:.17g}", m.pricing.price_out)});
  }
  csv::write((fs::path(a.out_dir) / "holdout_models.csv").string(), models);
  std::ofstream q((fs::path(a.out_dir) / "queries.jsonl").string());
  for (std::size_t i = 0; i < std::min<std::size_t>(20, world.items.size()); ++i)
    q << Json{{"id", fmt::format("q{:02}", i)}, {"text", world.texts[i]}}.dump() << '\n';
  fmt::print("wrote synthetic world (seed {}) to {}\n", a.seed, a.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latroute: latent-ability LLM routing"};
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "fit the latent space to a response matrix");
  c->add_option("--responses", cal.responses, "response matrix CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--out", cal.out, "space JSON")->required();
  c->add_option("--dim", cal.config.dim, "latent dimension")->capture_default_str();
  c->add_option("--epochs", cal.config.epochs)->capture_default_str();
  c->add_option("--learning-rate", cal.config.learning_rate)->capture_default_str();
  c->add_option("--prior-precision", cal.config.prior_precision)->capture_default_str();
  c->add_option("--seed", cal.config.seed)->capture_default_str();
  c->add_flag("--serial", cal.serial, "use the serial kernels");
  c->callback([&] { run_calibrate(cal); });

  AnchorArgs anc;
  auto* s = app.add_subcommand("select-anchors", "greedy D-optimal anchor selection");
  s->add_option("--space", anc.space)->required()->check(CLI::ExistingFile);
  s->add_option("--count", anc.count)->capture_default_str();
  s->add_option("--epsilon", anc.epsilon)->capture_default_str();
  s->add_option("--out", anc.out, "anchor set JSON")->required();
  s->add_option("--gains", anc.gains, "gain curve CSV (stdout if omitted)");
  s->callback([&] { run_select_anchors(anc); });

  ProfileArgs prof;
  auto* p = app.add_subcommand("profile-model", "estimate a new model's ability from anchor answers");
  p->add_option("--space", prof.space)->required()->check(CLI::ExistingFile);
  p->add_option("--anchors", prof.anchors, "restrict observations to this anchor set");
  p->add_option("--anchor-set-id", prof.anchor_set_id)->capture_default_str();
  p->add_option("--observations", prof.observations, "item_id,score[,output_tokens,latency_seconds]")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--model-id", prof.model_id)->required();
  p->add_option("--display-name", prof.display_name);
  p->add_option("--price-in", prof.price_in)->capture_default_str();
  p->add_option("--price-out", prof.price_out)->capture_default_str();
  p->add_option("--tokenizer", prof.tokenizer)->capture_default_str();
  p->add_option("--onboarded-at", prof.onboarded_at, "timestamp recorded in the metadata");
  p->add_option("--bins", prof.bins)->capture_default_str();
  p->add_option("--out", prof.out)->required();
  p->callback([&] { run_profile_model(prof); });

  EstimatorArgs est;
  auto* e = app.add_subcommand("calibrate-estimators", "fit verbosity and latency into a profile");
  e->add_option("--profile", est.profile)->required()->check(CLI::ExistingFile);
  e->add_option("--space", est.space)->required()->check(CLI::ExistingFile);
  e->add_option("--measurements", est.measurements)->required()->check(CLI::ExistingFile);
  e->add_option("--bins", est.bins)->capture_default_str();
  e->add_option("--out", est.out, "defaults to rewriting --profile");
  e->callback([&] { run_calibrate_estimators(est); });

  TrainArgs tr;
  auto* t = app.add_subcommand("train-predictor", "train the query parameter predictor");
  t->add_option("--space", tr.space)->required()->check(CLI::ExistingFile);
  t->add_option("--texts", tr.texts, "CSV item_id,text")->required()->check(CLI::ExistingFile);
  t->add_option("--embeddings", tr.embeddings, "EMB v1 file; hashing embedder if omitted");
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  t->add_option("--learning-rate", tr.config.learning_rate)->capture_default_str();
  t->add_option("--clusters", tr.config.clusters)->capture_default_str();
  t->add_option("--disc-weight", tr.config.disc_weight)->capture_default_str();
  t->add_option("--seed", tr.config.seed)->capture_default_str();
  t->add_flag("--serial", tr.serial);
  t->add_option("--out", tr.out)->required();
  t->callback([&] { run_train_predictor(tr); });

  RegistryArgs reg;
  auto* ri = app.add_subcommand("registry-init", "create a registry directory");
  ri->add_option("--registry", reg.registry)->required();
  ri->add_option("--space", reg.space)->required()->check(CLI::ExistingFile);
  ri->add_option("--anchors", reg.anchors);
  ri->add_option("--anchor-set-id", reg.anchor_set_id)->capture_default_str();
  ri->add_option("--predictor", reg.predictor);
  ri->callback([&] { run_registry_init(reg); });

  auto* rg = app.add_subcommand("register", "add a model profile to a registry");
  rg->add_option("--registry", reg.registry)->required();
  rg->add_option("--profile", reg.profile)->required()->check(CLI::ExistingFile);
  rg->add_flag("--overwrite", reg.overwrite);
  rg->callback([&] { run_register(reg); });

  RouteArgs rt;
  auto* r = app.add_subcommand("route", "route a batch of queries");
  r->add_option("--registry", rt.registry)->required();
  r->add_option("--queries", rt.queries, "JSONL, one {\"id\", \"text\"} per line")->required()->check(CLI::ExistingFile);
  r->add_option("--policy", rt.policy, "max-acc, min-cost, min-lat or balanced");
  r->add_option("--w-p", rt.w_p);
  r->add_option("--w-c", rt.w_c);
  r->add_option("--w-t", rt.w_t);
  r->add_option("--max-cost", rt.max_cost);
  r->add_option("--max-latency", rt.max_latency);
  r->add_option("--min-accuracy", rt.min_accuracy);
  r->add_flag("--normalize", rt.normalize);
  r->add_option("--out", rt.out, "assignment CSV")->required();
  r->callback([&] { run_route(rt); });

  ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "serve routing requests as NDJSON over TCP");
  srv->add_option("--registry", sv.registry)->required();
  srv->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  srv->callback([&] { run_serve(sv); });

  SimulateArgs sm;
  auto* sim_cmd = app.add_subcommand("simulate", "evolving-pool simulation on a synthetic world");
  sim_cmd->add_option("--seed", sm.seed)->capture_default_str();
  sim_cmd->add_option("--models", sm.models)->capture_default_str();
  sim_cmd->add_option("--items", sm.items)->capture_default_str();
  sim_cmd->add_option("--dim", sm.dim)->capture_default_str();
  sim_cmd->add_option("--noise", sm.noise)->capture_default_str();
  sim_cmd->add_option("--pool-size", sm.pool_size)->capture_default_str();
  sim_cmd->add_option("--steps", sm.steps)->capture_default_str();
  sim_cmd->add_option("--anchors", sm.anchors)->capture_default_str();
  sim_cmd->add_option("--eval-batch", sm.eval_batch)->capture_default_str();
  sim_cmd->add_option("--policy", sm.policy)->capture_default_str();
  sim_cmd->add_option("--stream", sm.stream, "dominance or random")->capture_default_str();
  sim_cmd->add_option("--delta", sm.delta, "ability step of the dominance stream")->capture_default_str();
  sim_cmd->add_option("--max-cost", sm.max_cost);
  sim_cmd->add_option("--max-latency", sm.max_latency);
  sim_cmd->add_option("--min-accuracy", sm.min_accuracy);
  sim_cmd->add_flag("--normalize", sm.normalize);
  sim_cmd->add_option("--out", sm.out, "metrics CSV")->required();
  sim_cmd->add_option("--log", sm.log, "per-query assignment log CSV");
  sim_cmd->callback([&] { run_simulate(sm); });

  SynthArgs sy;
  auto* syn = app.add_subcommand("synth", "write a synthetic world as input files");
  syn->add_option("--seed", sy.seed)->capture_default_str();
  syn->add_option("--models", sy.models)->capture_default_str();
  syn->add_option("--items", sy.items)->capture_default_str();
  syn->add_option("--dim", sy.dim)->capture_default_str();
  syn->add_option("--noise", sy.noise)->capture_default_str();
  syn->add_option("--holdout", sy.holdout, "held-out models to write measurements for")->capture_default_str();
  syn->add_option("--out-dir", sy.out_dir)->required();
  syn->callback([&] { run_synth(sy); });

  for (auto* sub : app.get_subcommands({})) attach_env(*sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    fmt::print(stderr, "error: {}\n", err.what());
    return 1;
  }
  return 0;
}
