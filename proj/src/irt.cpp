#include "latroute/irt.hpp"

#include "latroute/csv.hpp"
#include "latroute/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace latroute {

// ---------------------------------------------------------------------------
// ResponseMatrix

ResponseMatrix::ResponseMatrix(std::vector<std::string> model_ids, std::vector<std::string> item_ids)
    : models(std::move(model_ids)), items(std::move(item_ids)) {
  const auto m = static_cast<Eigen::Index>(models.size());
  const auto p = static_cast<Eigen::Index>(items.size());
  scores = Mat::Zero(m, p);
  present.setConstant(m, p, false);
}

void ResponseMatrix::set(std::size_t model, std::size_t item, double score) {
  const auto u = static_cast<Eigen::Index>(model);
  const auto i = static_cast<Eigen::Index>(item);
  scores(u, i) = score;
  present(u, i) = true;
}

void ResponseMatrix::validate() const {
  if (models.empty() || items.empty()) throw Error("response matrix is empty");
  require_same_dim("response matrix rows", models.size(), static_cast<std::size_t>(scores.rows()));
  require_same_dim("response matrix columns", items.size(), static_cast<std::size_t>(scores.cols()));
  require_same_dim("response mask rows", models.size(), static_cast<std::size_t>(present.rows()));
  require_same_dim("response mask columns", items.size(), static_cast<std::size_t>(present.cols()));
  for (Eigen::Index u = 0; u < scores.rows(); ++u) {
    bool any = false;
    for (Eigen::Index i = 0; i < scores.cols(); ++i) {
      if (!present(u, i)) continue;
      any = true;
      const double s = scores(u, i);
      if (!(s >= 0.0 && s <= 1.0))
        throw Error(fmt::format("score for ({}, {}) = {} is outside [0, 1]", models[u], items[i], s));
    }
    if (!any) throw Error(fmt::format("model '{}' has no observed scores", models[u]));
  }
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    if (!present.col(i).any()) throw Error(fmt::format("item '{}' has no observed scores", items[i]));
  }
}

// ---------------------------------------------------------------------------
// config / space

Vec CalibrationConfig::mean_vector() const {
  if (prior_mean) {
    require_same_dim("prior_mean", static_cast<std::size_t>(dim), static_cast<std::size_t>(prior_mean->size()));
    return *prior_mean;
  }
  return Vec::Zero(dim);
}

void CalibrationConfig::validate() const {
  if (dim < 1) throw Error("calibration: latent dimension must be >= 1");
  if (epochs < 1) throw Error("calibration: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("calibration: learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("calibration: lr_decay must lie in (0, 1]");
  if (!(prior_precision > 0.0)) throw Error("calibration: prior precision must be positive");
  (void)mean_vector();
}

const ItemParams& CalibratedSpace::item(const std::string& id) const {
  auto it = items.find(id);
  if (it == items.end()) throw Error(fmt::format("unknown item id '{}'", id));
  return it->second;
}

std::vector<ItemParams> CalibratedSpace::item_list() const {
  std::vector<ItemParams> out;
  out.reserve(items.size());
  for (const auto& [id, item] : items) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// probability model

double predict_prob(const Vec& theta, const Vec& alpha, const Vec& b) {
  require_same_dim("predict_prob alpha vs theta", static_cast<std::size_t>(theta.size()),
                   static_cast<std::size_t>(alpha.size()));
  require_same_dim("predict_prob b vs theta", static_cast<std::size_t>(theta.size()),
                   static_cast<std::size_t>(b.size()));
  const double p = sigmoid(alpha.dot(theta - b));
  // Keep the open-interval contract even where the logistic saturates.
  return std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

double predict_prob(const LatentAbility& ability, const ItemParams& item) {
  return predict_prob(ability.theta, item.alpha, item.b);
}

double bce(double y, double p) noexcept {
  constexpr double kEps = 1e-7;
  p = std::clamp(p, kEps, 1.0 - kEps);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double bce_logit(double y, double z) noexcept {
  // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
  return softplus(z) - y * z;
}

// ---------------------------------------------------------------------------
// calibration

namespace {

struct Adam {
  Mat m, v;
  void init(const Mat& like) {
    m.setZero(like.rows(), like.cols());
    v.setZero(like.rows(), like.cols());
  }
  void step(Mat& param, const Mat& grad, double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

double prior_penalty(const kernels::IrtParams& p, const Vec& mean, double precision) {
  const double theta_term = (p.theta.rowwise() - mean.transpose()).squaredNorm();
  return 0.5 * precision * theta_term + 0.5 * p.b.squaredNorm() + 0.5 * p.raw_alpha.squaredNorm();
}

}  // namespace

CalibratedSpace fit_calibration(const ResponseMatrix& responses, const CalibrationConfig& config) {
  responses.validate();
  config.validate();
  training_counters().calibrations.fetch_add(1);

  const auto models = static_cast<Eigen::Index>(responses.num_models());
  const auto items = static_cast<Eigen::Index>(responses.num_items());
  const int dim = config.dim;
  const Vec mean = config.mean_vector();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> jitter(0.0, 0.1);
  kernels::IrtParams params{Mat(models, dim), Mat(items, dim), Mat(items, dim)};
  for (Eigen::Index u = 0; u < models; ++u)
    for (int d = 0; d < dim; ++d) params.theta(u, d) = mean(d) + jitter(rng);
  const double raw_one = softplus_inverse(1.0);
  for (Eigen::Index i = 0; i < items; ++i)
    for (int d = 0; d < dim; ++d) params.raw_alpha(i, d) = raw_one + jitter(rng);
  for (Eigen::Index i = 0; i < items; ++i)
    for (int d = 0; d < dim; ++d) params.b(i, d) = jitter(rng);

  auto objective = [&](const kernels::IrtParams& p) {
    const double data = config.parallel ? kernels::omp::irt_loss(responses.scores, responses.present, p)
                                        : kernels::serial::irt_loss(responses.scores, responses.present, p);
    return data + prior_penalty(p, mean, config.prior_precision);
  };

  Adam adam_theta, adam_raw, adam_b;
  adam_theta.init(params.theta);
  adam_raw.init(params.raw_alpha);
  adam_b.init(params.b);

  FitReport report;
  report.seed = config.seed;
  double checkpoint_loss = objective(params);
  if (!std::isfinite(checkpoint_loss)) throw Error("calibration: non-finite loss at epoch 0");
  report.checkpoints.push_back(checkpoint_loss);

  // Last accepted checkpoint: parameters and optimiser state.
  kernels::IrtParams saved = params;
  Adam saved_theta = adam_theta, saved_raw = adam_raw, saved_b = adam_b;
  int saved_step = 0;

  kernels::IrtGradient grad;
  double lr_scale = 1.0;
  int step = 0;
  int epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    if (config.parallel)
      kernels::omp::irt_loss_grad(responses.scores, responses.present, params, grad);
    else
      kernels::serial::irt_loss_grad(responses.scores, responses.present, params, grad);
    grad.theta += config.prior_precision * (params.theta.rowwise() - mean.transpose());
    grad.b += params.b;
    grad.raw_alpha += params.raw_alpha;

    const double lr = config.learning_rate * std::pow(config.lr_decay, epoch / 100) * lr_scale;
    ++step;
    adam_theta.step(params.theta, grad.theta, lr, step);
    adam_raw.step(params.raw_alpha, grad.raw_alpha, lr, step);
    adam_b.step(params.b, grad.b, lr, step);

    const bool at_checkpoint = (epoch + 1) % 100 == 0 || epoch + 1 == config.epochs;
    if (!at_checkpoint) continue;
    const double loss = objective(params);
    if (!std::isfinite(loss)) throw Error(fmt::format("calibration: non-finite loss at epoch {}", epoch + 1));
    if (loss > checkpoint_loss + 1e-9) {
      // Overshoot: roll back to the last accepted checkpoint with a smaller step.
      params = saved;
      adam_theta = saved_theta;
      adam_raw = saved_raw;
      adam_b = saved_b;
      step = saved_step;
      lr_scale *= 0.5;
      ++report.rejected_checkpoints;
      if (lr_scale < 1e-6) {
        ++epoch;
        break;
      }
      continue;
    }
    checkpoint_loss = loss;
    report.checkpoints.push_back(loss);
    saved = params;
    saved_theta = adam_theta;
    saved_raw = adam_raw;
    saved_b = adam_b;
    saved_step = step;
  }
  params = saved;
  report.final_loss = checkpoint_loss;
  report.epochs = epoch;

  CalibratedSpace space;
  space.dim = dim;
  space.fit_report = std::move(report);
  for (Eigen::Index u = 0; u < models; ++u) {
    const auto& id = responses.models[static_cast<std::size_t>(u)];
    space.abilities[id] = LatentAbility{id, params.theta.row(u).transpose()};
  }
  for (Eigen::Index i = 0; i < items; ++i) {
    const auto& id = responses.items[static_cast<std::size_t>(i)];
    Vec alpha = params.raw_alpha.row(i).transpose().unaryExpr([](double x) { return softplus(x); });
    space.items[id] = ItemParams{id, std::move(alpha), params.b.row(i).transpose()};
  }
  return space;
}

// ---------------------------------------------------------------------------
// profiling

namespace {

struct ResolvedObservation {
  const ItemParams* item;
  double score;
};

std::vector<ResolvedObservation> resolve(const std::vector<ProfilingObservation>& observations,
                                         const CalibratedSpace& space) {
  if (observations.empty()) throw Error("profiling: no anchor observations");
  std::vector<ResolvedObservation> out;
  out.reserve(observations.size());
  for (const auto& obs : observations) {
    auto it = space.items.find(obs.item_id);
    if (it == space.items.end()) throw Error(fmt::format("profiling: unknown item id '{}'", obs.item_id));
    if (!(obs.score >= 0.0 && obs.score <= 1.0))
      throw Error(fmt::format("profiling: score {} for '{}' is outside [0, 1]", obs.score, obs.item_id));
    out.push_back({&it->second, obs.score});
  }
  return out;
}

double loss_at(const Vec& theta, const std::vector<ResolvedObservation>& obs, const Vec& mean, double precision) {
  double total = 0.0;
  for (const auto& o : obs) total += bce_logit(o.score, o.item->alpha.dot(theta - o.item->b));
  return total + 0.5 * precision * (theta - mean).squaredNorm();
}

Vec grad_at(const Vec& theta, const std::vector<ResolvedObservation>& obs, const Vec& mean, double precision) {
  Vec g = precision * (theta - mean);
  for (const auto& o : obs) g += (sigmoid(o.item->alpha.dot(theta - o.item->b)) - o.score) * o.item->alpha;
  return g;
}

}  // namespace

double profile_loss(const Vec& theta, const std::vector<ProfilingObservation>& observations,
                    const CalibratedSpace& space, const CalibrationConfig& config) {
  require_same_dim("profile theta", static_cast<std::size_t>(space.dim), static_cast<std::size_t>(theta.size()));
  return loss_at(theta, resolve(observations, space), config.mean_vector(), config.prior_precision);
}

Vec profile_gradient(const Vec& theta, const std::vector<ProfilingObservation>& observations,
                     const CalibratedSpace& space, const CalibrationConfig& config) {
  require_same_dim("profile theta", static_cast<std::size_t>(space.dim), static_cast<std::size_t>(theta.size()));
  return grad_at(theta, resolve(observations, space), config.mean_vector(), config.prior_precision);
}

LatentAbility profile_new_model(const std::vector<ProfilingObservation>& observations,
                                const CalibratedSpace& space, const CalibrationConfig& config,
                                std::string model_id) {
  CalibrationConfig cfg = config;
  cfg.dim = space.dim;
  if (cfg.prior_mean) require_same_dim("prior_mean", static_cast<std::size_t>(space.dim),
                                       static_cast<std::size_t>(cfg.prior_mean->size()));
  if (!(cfg.prior_precision > 0.0)) throw Error("profiling: prior precision must be positive");
  const auto obs = resolve(observations, space);
  const Vec mean = cfg.mean_vector();
  const double precision = cfg.prior_precision;

  // Newton-preconditioned descent; the objective is strictly convex because of
  // the Gaussian prior, so the Hessian is always positive definite.
  Vec theta = mean;
  double loss = loss_at(theta, obs, mean, precision);
  for (int iter = 0; iter < cfg.profile_max_iters; ++iter) {
    const Vec g = grad_at(theta, obs, mean, precision);
    if (g.norm() <= cfg.profile_tolerance) break;
    Mat hessian = precision * Mat::Identity(space.dim, space.dim);
    for (const auto& o : obs) {
      const double p = sigmoid(o.item->alpha.dot(theta - o.item->b));
      hessian += p * (1.0 - p) * o.item->alpha * o.item->alpha.transpose();
    }
    const Vec direction = -hessian.ldlt().solve(g);
    const double slope = g.dot(direction);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vec candidate = theta + t * direction;
      const double next = loss_at(candidate, obs, mean, precision);
      if (next <= loss + 1e-4 * t * slope) {
        theta = candidate;
        loss = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Roundoff floor: a full Newton step is the best we can do.
      theta += direction;
      loss = loss_at(theta, obs, mean, precision);
    }
  }
  return LatentAbility{std::move(model_id), std::move(theta)};
}

// ---------------------------------------------------------------------------
// CSV

ResponseMatrix read_response_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.header.size() < 2) throw Error(fmt::format("'{}': expected model_id column plus item columns", path));
  std::vector<std::string> item_ids(table.header.begin() + 1, table.header.end());
  std::vector<std::string> model_ids;
  for (const auto& row : table.rows) {
    if (row.empty()) throw Error(fmt::format("'{}': empty row", path));
    model_ids.push_back(row[0]);
  }
  ResponseMatrix rm(model_ids, item_ids);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() > table.header.size())
      throw Error(fmt::format("'{}': row {} has {} fields, header has {}", path, r + 2, row.size(), table.header.size()));
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) continue;
      rm.set(r, c - 1, csv::to_double(row[c], fmt::format("{} row {}", path, r + 2)));
    }
  }
  return rm;
}

void write_response_csv(const ResponseMatrix& responses, const std::string& path) {
  csv::Table table;
  table.header.push_back("model_id");
  table.header.insert(table.header.end(), responses.items.begin(), responses.items.end());
  for (std::size_t u = 0; u < responses.models.size(); ++u) {
    std::vector<std::string> row{responses.models[u]};
    for (std::size_t i = 0; i < responses.items.size(); ++i) {
      const auto ui = static_cast<Eigen::Index>(u), ii = static_cast<Eigen::Index>(i);
      row.push_back(responses.present(ui, ii) ? fmt::format("{}", responses.scores(ui, ii)) : std::string());
    }
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

}  // namespace latroute
