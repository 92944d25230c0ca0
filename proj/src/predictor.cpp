#include "latroute/predictor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace latroute {

// ---------------------------------------------------------------------------
// dimension clustering

int ClusterAssignment::dim() const {
  int n = 0;
  for (const auto& c : clusters) n += static_cast<int>(c.size());
  return n;
}

void ClusterAssignment::validate(int dim) const {
  if (clusters.empty()) throw Error("cluster assignment is empty");
  std::vector<int> seen(static_cast<std::size_t>(dim), 0);
  for (const auto& c : clusters) {
    if (c.empty()) throw Error("cluster assignment has an empty group");
    for (int d : c) {
      if (d < 0 || d >= dim) throw Error(fmt::format("cluster member {} outside [0, {})", d, dim));
      if (seen[static_cast<std::size_t>(d)]++) throw Error(fmt::format("dimension {} appears in two clusters", d));
    }
  }
  require_same_dim("cluster assignment coverage", static_cast<std::size_t>(dim), static_cast<std::size_t>(this->dim()));
}

ClusterAssignment cluster_dimensions(const Mat& item_alphas, int count) {
  const auto items = item_alphas.rows();
  const int dim = static_cast<int>(item_alphas.cols());
  if (items < 2) throw Error("cluster_dimensions: need at least 2 items");
  if (count < 1 || count > dim) throw Error(fmt::format("cluster_dimensions: cluster count {} outside [1, {}]", count, dim));

  ClusterAssignment out;
  Mat centered = item_alphas.rowwise() - item_alphas.colwise().mean();
  Vec norms = centered.colwise().norm().transpose();
  out.abs_correlation = Mat::Identity(dim, dim);
  for (int d = 0; d < dim; ++d)
    if (!(norms(d) > 0.0)) out.constant_dims.push_back(d);
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      double r = 0.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) r = std::abs(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)));
      out.abs_correlation(i, j) = out.abs_correlation(j, i) = std::min(r, 1.0);
    }
  }

  std::vector<std::vector<int>> groups;
  for (int d = 0; d < dim; ++d) groups.push_back({d});
  auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
    double total = 0.0;
    for (int i : a)
      for (int j : b) total += 1.0 - out.abs_correlation(i, j);
    return total / static_cast<double>(a.size() * b.size());
  };
  while (static_cast<int>(groups.size()) > count) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const double dist = linkage(groups[i], groups[j]);
        if (dist < best) {
          best = dist;
          bi = i;
          bj = j;
        }
      }
    }
    groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
    std::sort(groups[bi].begin(), groups[bi].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  out.clusters = std::move(groups);
  return out;
}

// ---------------------------------------------------------------------------
// scaler

Vec FeatureScaler::apply(const Vec& raw) const {
  require_same_dim("structural features", static_cast<std::size_t>(mean.size()), static_cast<std::size_t>(raw.size()));
  Vec out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) out(i) = stddev(i) > 0.0 ? (raw(i) - mean(i)) / stddev(i) : 0.0;
  return out;
}

FeatureScaler FeatureScaler::identity(std::size_t n) {
  return {Vec::Zero(static_cast<Eigen::Index>(n)), Vec::Ones(static_cast<Eigen::Index>(n))};
}

FeatureScaler FeatureScaler::fit(const std::vector<Vec>& rows) {
  if (rows.empty()) throw Error("feature scaler: no rows");
  const auto n = rows.front().size();
  FeatureScaler s{Vec::Zero(n), Vec::Zero(n)};
  for (const auto& r : rows) s.mean += r;
  s.mean /= static_cast<double>(rows.size());
  for (const auto& r : rows) s.stddev.array() += (r - s.mean).array().square();
  s.stddev = (s.stddev / static_cast<double>(rows.size())).cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    // Relative cut-off: a feature that only varies by roundoff is constant.
    if (s.stddev(i) <= 1e-12 * std::max(1.0, std::abs(s.mean(i)))) s.stddev(i) = 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// model layout

namespace {

struct Dense {
  std::size_t w = 0, b = 0;
  int out = 0, in = 0;
};

struct Layout {
  std::size_t se_w = 0, st_w = 0, st_b = 0;
  std::vector<Dense> trunk;
  Dense diff0, diff1;
  std::vector<std::pair<Dense, Dense>> experts;
};

Dense dense_of(const PredictorModel& m, const std::string& prefix) {
  const auto& w = m.block(prefix + ".W");
  const auto& b = m.block(prefix + ".b");
  return {w.offset, b.offset, w.rows, w.cols};
}

Layout resolve(const PredictorModel& m) {
  Layout l;
  l.se_w = m.block("se.W").offset;
  l.st_w = m.block("st.W").offset;
  l.st_b = m.block("st.b").offset;
  for (int t = 0; t < m.shape.trunk_depth; ++t) l.trunk.push_back(dense_of(m, fmt::format("trunk{}", t)));
  l.diff0 = dense_of(m, "diff0");
  l.diff1 = dense_of(m, "diff1");
  for (std::size_t c = 0; c < m.num_clusters(); ++c)
    l.experts.emplace_back(dense_of(m, fmt::format("expert{}.0", c)), dense_of(m, fmt::format("expert{}.1", c)));
  return l;
}

using CMap = Eigen::Map<const Mat>;
using CVMap = Eigen::Map<const Vec>;

CMap weights(const double* base, const Dense& d) { return CMap(base + d.w, d.out, d.in); }
CVMap bias(const double* base, const Dense& d) { return CVMap(base + d.b, d.out); }

Vec relu(const Vec& x) { return x.cwiseMax(0.0); }
Vec relu_grad(const Vec& pre, const Vec& upstream) {
  return (pre.array() > 0.0).select(upstream, Vec::Zero(upstream.size()));
}

struct Cache {
  Vec x_se, x_st, z0;
  std::vector<Vec> trunk_in, trunk_pre;
  Vec h;
  Vec diff_pre, diff_hidden;
  std::vector<Vec> exp_pre, exp_hidden;
  Vec raw_alpha;
  Prediction pred;
};

void run_forward(const PredictorModel& m, const Layout& l, const FeatureVector& f, Cache& c) {
  const double* p = m.params.data();
  const int d = m.shape.d_sem;
  require_same_dim("semantic features", static_cast<std::size_t>(d), static_cast<std::size_t>(f.semantic.size()));
  require_same_dim("structural features", kStructuralFeatures, static_cast<std::size_t>(f.structural.size()));
  c.x_se = f.semantic;
  c.x_st = m.scaler.apply(f.structural);
  c.z0.resize(d + static_cast<Eigen::Index>(kStructuralFeatures));
  const auto st = static_cast<int>(kStructuralFeatures);
  c.z0.head(d) = CMap(p + l.se_w, d, d) * c.x_se + c.x_se;
  c.z0.tail(st) = CMap(p + l.st_w, st, st) * c.x_st + CVMap(p + l.st_b, st);

  c.trunk_in.resize(l.trunk.size());
  c.trunk_pre.resize(l.trunk.size());
  Vec h = c.z0;
  for (std::size_t t = 0; t < l.trunk.size(); ++t) {
    c.trunk_in[t] = h;
    c.trunk_pre[t] = weights(p, l.trunk[t]) * h + bias(p, l.trunk[t]);
    h = relu(c.trunk_pre[t]);
  }
  c.h = h;

  c.diff_pre = weights(p, l.diff0) * c.h + bias(p, l.diff0);
  c.diff_hidden = relu(c.diff_pre);
  c.pred.b = m.mean_b + weights(p, l.diff1) * c.diff_hidden + bias(p, l.diff1);

  c.raw_alpha.setZero(m.shape.dim);
  c.exp_pre.resize(l.experts.size());
  c.exp_hidden.resize(l.experts.size());
  for (std::size_t e = 0; e < l.experts.size(); ++e) {
    const auto& [first, second] = l.experts[e];
    c.exp_pre[e] = weights(p, first) * c.h + bias(p, first);
    c.exp_hidden[e] = relu(c.exp_pre[e]);
    const Vec out = weights(p, second) * c.exp_hidden[e] + bias(p, second);
    const auto& members = m.clusters.clusters[e];
    for (std::size_t j = 0; j < members.size(); ++j) c.raw_alpha(members[j]) = out(static_cast<Eigen::Index>(j));
  }
  c.pred.alpha = c.raw_alpha.unaryExpr([](double x) { return softplus(x); });
}

using GMap = Eigen::Map<Mat>;
using GVMap = Eigen::Map<Vec>;

// Accumulates dL/dparams into `g` given dL/db_hat and dL/draw_alpha.
void run_backward(const PredictorModel& m, const Layout& l, const Cache& c, const Vec& d_b, const Vec& d_raw,
                  double* g) {
  const double* p = m.params.data();
  Vec d_h = Vec::Zero(c.h.size());

  // difficulty head
  GMap(g + l.diff1.w, l.diff1.out, l.diff1.in).noalias() += d_b * c.diff_hidden.transpose();
  GVMap(g + l.diff1.b, l.diff1.out) += d_b;
  const Vec d_diff_pre = relu_grad(c.diff_pre, weights(p, l.diff1).transpose() * d_b);
  GMap(g + l.diff0.w, l.diff0.out, l.diff0.in).noalias() += d_diff_pre * c.h.transpose();
  GVMap(g + l.diff0.b, l.diff0.out) += d_diff_pre;
  d_h.noalias() += weights(p, l.diff0).transpose() * d_diff_pre;

  // expert heads
  for (std::size_t e = 0; e < l.experts.size(); ++e) {
    const auto& [first, second] = l.experts[e];
    const auto& members = m.clusters.clusters[e];
    Vec d_out(static_cast<Eigen::Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) d_out(static_cast<Eigen::Index>(j)) = d_raw(members[j]);
    GMap(g + second.w, second.out, second.in).noalias() += d_out * c.exp_hidden[e].transpose();
    GVMap(g + second.b, second.out) += d_out;
    const Vec d_pre = relu_grad(c.exp_pre[e], weights(p, second).transpose() * d_out);
    GMap(g + first.w, first.out, first.in).noalias() += d_pre * c.h.transpose();
    GVMap(g + first.b, first.out) += d_pre;
    d_h.noalias() += weights(p, first).transpose() * d_pre;
  }

  // trunk
  Vec d_x = d_h;
  for (std::size_t t = l.trunk.size(); t-- > 0;) {
    const Vec d_pre = relu_grad(c.trunk_pre[t], d_x);
    GMap(g + l.trunk[t].w, l.trunk[t].out, l.trunk[t].in).noalias() += d_pre * c.trunk_in[t].transpose();
    GVMap(g + l.trunk[t].b, l.trunk[t].out) += d_pre;
    d_x = weights(p, l.trunk[t]).transpose() * d_pre;
  }

  // input projections; the semantic residual path carries no parameters
  const int d = m.shape.d_sem;
  const auto st = static_cast<int>(kStructuralFeatures);
  GMap(g + l.se_w, d, d).noalias() += d_x.head(d) * c.x_se.transpose();
  GMap(g + l.st_w, st, st).noalias() += d_x.tail(st) * c.x_st.transpose();
  GVMap(g + l.st_b, st) += d_x.tail(st);
}

}  // namespace

PredictorModel PredictorModel::create(const PredictorShape& shape, ClusterAssignment clusters, std::uint64_t seed) {
  if (shape.d_sem < 1 || shape.dim < 1 || shape.trunk_width < 1 || shape.trunk_depth < 1 || shape.head_width < 1)
    throw Error("predictor: every layer size must be >= 1");
  clusters.validate(shape.dim);
  PredictorModel m;
  m.shape = shape;
  m.clusters = std::move(clusters);
  m.mean_b = Vec::Zero(shape.dim);
  m.scaler = FeatureScaler::identity(kStructuralFeatures);

  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    m.blocks.push_back({std::move(name), rows, cols, offset});
    offset += m.blocks.back().size();
  };
  const int st = static_cast<int>(kStructuralFeatures);
  add("se.W", shape.d_sem, shape.d_sem);
  add("st.W", st, st);
  add("st.b", st, 1);
  int in = shape.d_sem + st;
  for (int t = 0; t < shape.trunk_depth; ++t) {
    add(fmt::format("trunk{}.W", t), shape.trunk_width, in);
    add(fmt::format("trunk{}.b", t), shape.trunk_width, 1);
    in = shape.trunk_width;
  }
  add("diff0.W", shape.head_width, shape.trunk_width);
  add("diff0.b", shape.head_width, 1);
  add("diff1.W", shape.dim, shape.head_width);
  add("diff1.b", shape.dim, 1);
  for (std::size_t c = 0; c < m.clusters.size(); ++c) {
    add(fmt::format("expert{}.0.W", c), shape.head_width, shape.trunk_width);
    add(fmt::format("expert{}.0.b", c), shape.head_width, 1);
    add(fmt::format("expert{}.1.W", c), static_cast<int>(m.clusters.clusters[c].size()), shape.head_width);
    add(fmt::format("expert{}.1.b", c), static_cast<int>(m.clusters.clusters[c].size()), 1);
  }
  m.params.assign(offset, 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& blk : m.blocks) {
    if (blk.cols == 1) continue;  // biases start at zero
    double scale = std::sqrt(2.0 / blk.cols);
    if (blk.name == "se.W" || blk.name == "st.W") scale = 0.1 / std::sqrt(static_cast<double>(blk.cols));
    for (std::size_t i = 0; i < blk.size(); ++i) m.params[blk.offset + i] = scale * normal(rng);
  }
  return m;
}

const ParamBlock& PredictorModel::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw Error(fmt::format("predictor: no parameter block '{}'", name));
}

Eigen::Map<Mat> PredictorModel::view(const std::string& name) {
  const auto& b = block(name);
  return {params.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Mat> PredictorModel::view(const std::string& name) const {
  const auto& b = block(name);
  return {params.data() + b.offset, b.rows, b.cols};
}

void PredictorModel::validate() const {
  clusters.validate(shape.dim);
  std::size_t total = 0;
  for (const auto& b : blocks) {
    if (b.offset != total) throw Error(fmt::format("predictor: block '{}' is not contiguous", b.name));
    total += b.size();
  }
  require_same_dim("predictor parameter count", total, params.size());
  require_same_dim("predictor mean_b", static_cast<std::size_t>(shape.dim), static_cast<std::size_t>(mean_b.size()));
  require_same_dim("predictor scaler", kStructuralFeatures, static_cast<std::size_t>(scaler.mean.size()));
  for (double x : params)
    if (!std::isfinite(x)) throw Error("predictor: non-finite parameter");
  (void)resolve(*this);
}

Prediction forward(const PredictorModel& model, const FeatureVector& features) {
  Cache cache;
  run_forward(model, resolve(model), features, cache);
  return cache.pred;
}

FeatureVector make_features(std::string_view text, const HashingEmbedder& embedder) {
  return {embedder.embed(text), extract_structural_features(text)};
}

// ---------------------------------------------------------------------------
// training

double batch_loss(const PredictorModel& model, std::span<const TrainingExample> batch, double disc_weight,
                  std::vector<double>* grad, bool parallel) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  const Layout layout = resolve(model);
  const int dim = model.shape.dim;
  const double scale = 1.0 / (static_cast<double>(batch.size()) * dim);
  const auto n = static_cast<std::ptrdiff_t>(batch.size());

  std::vector<double> losses(batch.size(), 0.0);
  std::vector<std::vector<double>> grads;
  if (grad) grads.assign(batch.size(), std::vector<double>(model.params.size(), 0.0));

#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& ex = batch[static_cast<std::size_t>(k)];
    Cache cache;
    run_forward(model, layout, ex.features, cache);
    const Vec eb = cache.pred.b - ex.b;
    const Vec ea = cache.pred.alpha - ex.alpha;
    losses[static_cast<std::size_t>(k)] = scale * (eb.squaredNorm() + disc_weight * ea.squaredNorm());
    if (grad) {
      const Vec d_b = 2.0 * scale * eb;
      const Vec sig = cache.raw_alpha.unaryExpr([](double x) { return sigmoid(x); });
      const Vec d_raw = (2.0 * scale * disc_weight * ea).cwiseProduct(sig);
      run_backward(model, layout, cache, d_b, d_raw, grads[static_cast<std::size_t>(k)].data());
    }
  }

  double total = 0.0;
  for (double l : losses) total += l;
  if (grad) {
    grad->assign(model.params.size(), 0.0);
    for (const auto& g : grads)
      for (std::size_t i = 0; i < g.size(); ++i) (*grad)[i] += g[i];
  }
  return total;
}

PredictorModel train(const std::vector<TrainingExample>& examples, const CalibratedSpace& space,
                     const TrainConfig& config) {
  if (examples.empty()) throw Error("train: no training examples");
  if (config.epochs < 1 || config.batch_size < 1) throw Error("train: epochs and batch size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw Error("train: learning rate must be positive");
  const int dim = space.dim;
  const auto d_sem = examples.front().features.semantic.size();
  for (const auto& ex : examples) {
    require_same_dim(("train target alpha of " + ex.query_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(ex.alpha.size()));
    require_same_dim(("train target b of " + ex.query_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(ex.b.size()));
    require_same_dim(("train semantic features of " + ex.query_id).c_str(), static_cast<std::size_t>(d_sem),
                     static_cast<std::size_t>(ex.features.semantic.size()));
    require_same_dim(("train structural features of " + ex.query_id).c_str(), kStructuralFeatures,
                     static_cast<std::size_t>(ex.features.structural.size()));
  }
  training_counters().predictor_trainings.fetch_add(1);

  Mat alphas;
  if (space.items.size() >= 2) {
    alphas.resize(static_cast<Eigen::Index>(space.items.size()), dim);
    Eigen::Index r = 0;
    for (const auto& [id, item] : space.items) alphas.row(r++) = item.alpha.transpose();
  } else {
    alphas.resize(static_cast<Eigen::Index>(examples.size()), dim);
    for (std::size_t r = 0; r < examples.size(); ++r) alphas.row(static_cast<Eigen::Index>(r)) = examples[r].alpha.transpose();
  }
  const int clusters = std::clamp(config.clusters, 1, dim);
  ClusterAssignment assignment;
  if (alphas.rows() >= 2) {
    assignment = cluster_dimensions(alphas, clusters);
  } else {
    // One example and no space items: correlations are undefined.
    for (int d = 0; d < dim; ++d) assignment.clusters.push_back({d});
    while (static_cast<int>(assignment.clusters.size()) > clusters) {
      auto last = assignment.clusters.back();
      assignment.clusters.pop_back();
      assignment.clusters.back().insert(assignment.clusters.back().end(), last.begin(), last.end());
    }
    assignment.abs_correlation = Mat::Identity(dim, dim);
  }

  PredictorShape shape{static_cast<int>(d_sem), dim, config.trunk_width, config.trunk_depth, config.head_width};
  PredictorModel model = PredictorModel::create(shape, std::move(assignment), config.seed);
  model.embedder = config.embedder;

  model.mean_b = Vec::Zero(dim);
  std::vector<Vec> structural;
  for (const auto& ex : examples) {
    model.mean_b += ex.b;
    structural.push_back(ex.features.structural);
  }
  model.mean_b /= static_cast<double>(examples.size());
  model.scaler = FeatureScaler::fit(structural);

  const std::size_t np = model.params.size();
  std::vector<double> m1(np, 0.0), m2(np, 0.0), grad;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingExample> batch;
  long step = 0;
  long batch_index = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(examples[order[k]]);
      const double loss = batch_loss(model, batch, config.disc_weight, &grad, config.parallel);
      if (!std::isfinite(loss)) throw Error(fmt::format("train: non-finite loss at batch {}", batch_index));
      ++batch_index;
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t i = 0; i < np; ++i) {
        m1[i] = b1 * m1[i] + (1.0 - b1) * grad[i];
        m2[i] = b2 * m2[i] + (1.0 - b2) * grad[i] * grad[i];
        model.params[i] -= config.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
      }
      epoch_loss += loss;
      ++batches;
    }
    model.loss_history.push_back(epoch_loss / batches);
  }
  return model;
}

}  // namespace latroute
