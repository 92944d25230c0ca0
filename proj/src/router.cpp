#include "latroute/router.hpp"

#include "latroute/csv.hpp"
#include "latroute/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace latroute {

// ---------------------------------------------------------------------------
// policy / constraints

void PolicyWeights::validate() const {
  if (!(w_p >= 0.0 && w_c >= 0.0 && w_t >= 0.0))
    throw Error(fmt::format("policy weights must be >= 0 (got {}, {}, {})", w_p, w_c, w_t));
  if (std::abs(w_p + w_c + w_t - 1.0) > 1e-9)
    throw Error(fmt::format("policy weights must sum to 1 (got {})", w_p + w_c + w_t));
}

PolicyWeights policy_by_name(std::string_view name) {
  if (name == "max-acc") return presets::kMaxAccuracy;
  if (name == "min-cost") return presets::kMinCost;
  if (name == "min-lat") return presets::kMinLatency;
  if (name == "balanced") return presets::kBalanced;
  throw Error(fmt::format("unknown policy '{}' (expected max-acc, min-cost, min-lat or balanced)", name));
}

void GlobalConstraints::validate() const {
  if (max_total_cost && !(*max_total_cost >= 0.0)) throw Error("max_total_cost must be >= 0");
  if (max_total_latency && !(*max_total_latency >= 0.0)) throw Error("max_total_latency must be >= 0");
  if (min_mean_accuracy && !(*min_mean_accuracy >= 0.0 && *min_mean_accuracy <= 1.0))
    throw Error("min_mean_accuracy must lie in [0, 1]");
}

std::string_view to_string(SolverKind kind) { return kind == SolverKind::kExact ? "exact" : "heuristic"; }

void EstimateMatrix::validate() const {
  if (model_ids.empty()) throw Error("routing: empty model set");
  if (cells.size() != query_ids.size() * model_ids.size())
    throw Error(fmt::format("routing: estimate matrix has {} cells for {}x{}", cells.size(), query_ids.size(),
                            model_ids.size()));
}

// ---------------------------------------------------------------------------
// estimates

EstimateMatrix score_matrix(const std::vector<QueryInput>& queries, const std::vector<ModelProfile>& profiles,
                            const TokenizerRegistry& tokenizers, bool parallel) {
  EstimateMatrix out;
  if (profiles.empty()) throw Error("score_matrix: no model profiles");
  const auto dim = profiles.front().ability.theta.size();
  for (const auto& prof : profiles) {
    require_same_dim(("score_matrix ability of " + prof.model_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(prof.ability.theta.size()));
    if (!tokenizers.contains(prof.tokenizer_id))
      throw Error(fmt::format("score_matrix: model '{}' uses unknown tokenizer '{}'", prof.model_id, prof.tokenizer_id));
    if (prof.verbosity.bins() == 0)
      throw Error(fmt::format("score_matrix: model '{}' has no verbosity table", prof.model_id));
    prof.verbosity.validate();
    out.model_ids.push_back(prof.model_id);
  }
  const std::size_t nq = queries.size(), nm = profiles.size();
  Mat alphas(static_cast<Eigen::Index>(nq), dim), bs(static_cast<Eigen::Index>(nq), dim);
  for (std::size_t q = 0; q < nq; ++q) {
    const auto& p = queries[q].params;
    require_same_dim(("score_matrix alpha of " + queries[q].query_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(p.alpha.size()));
    require_same_dim(("score_matrix b of " + queries[q].query_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(p.b.size()));
    alphas.row(static_cast<Eigen::Index>(q)) = p.alpha.transpose();
    bs.row(static_cast<Eigen::Index>(q)) = p.b.transpose();
    out.query_ids.push_back(queries[q].query_id);
  }
  Mat thetas(static_cast<Eigen::Index>(nm), dim);
  for (std::size_t m = 0; m < nm; ++m) thetas.row(static_cast<Eigen::Index>(m)) = profiles[m].ability.theta.transpose();

  Mat probs;
  if (parallel)
    kernels::omp::prob_matrix(alphas, bs, thetas, probs);
  else
    kernels::serial::prob_matrix(alphas, bs, thetas, probs);

  out.cells.resize(nq * nm);
  const auto rows = static_cast<std::ptrdiff_t>(nq);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t qi = 0; qi < rows; ++qi) {
    const auto q = static_cast<std::size_t>(qi);
    const double s = alphas.row(qi).dot(bs.row(qi));
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& prof = profiles[m];
      const double in_tokens = static_cast<double>(tokenizers.count(prof.tokenizer_id, queries[q].text));
      const double out_tokens = estimate_output_length(prof.verbosity, s);
      auto& cell = out.cells[q * nm + m];
      cell.query_id = queries[q].query_id;
      cell.model_id = prof.model_id;
      cell.p = std::clamp(probs(qi, static_cast<Eigen::Index>(m)), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
      cell.cost = estimate_cost(prof.pricing, in_tokens, out_tokens);
      cell.latency = estimate_latency(prof.latency, out_tokens);
    }
  }
  return out;
}

std::vector<double> utility_matrix(const EstimateMatrix& estimates, const PolicyWeights& weights, bool normalize) {
  double c_lo = 0.0, c_span = 1.0, t_lo = 0.0, t_span = 1.0;
  if (normalize && !estimates.cells.empty()) {
    auto [cmin, cmax] = std::minmax_element(estimates.cells.begin(), estimates.cells.end(),
                                            [](const auto& a, const auto& b) { return a.cost < b.cost; });
    auto [tmin, tmax] = std::minmax_element(estimates.cells.begin(), estimates.cells.end(),
                                            [](const auto& a, const auto& b) { return a.latency < b.latency; });
    c_lo = cmin->cost;
    c_span = cmax->cost - cmin->cost;
    t_lo = tmin->latency;
    t_span = tmax->latency - tmin->latency;
  }
  std::vector<double> u(estimates.cells.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto& c = estimates.cells[k];
    const double cost = normalize ? (c_span > 0.0 ? (c.cost - c_lo) / c_span : 0.0) : c.cost;
    const double lat = normalize ? (t_span > 0.0 ? (c.latency - t_lo) / t_span : 0.0) : c.latency;
    u[k] = weights.w_p * c.p - weights.w_c * cost - weights.w_t * lat;
  }
  return u;
}

// ---------------------------------------------------------------------------
// solvers

namespace {

struct Problem {
  const EstimateMatrix& est;
  std::vector<double> utility;
  GlobalConstraints constraints;
  double tol;
  std::size_t nq, nm;

  double u(std::size_t q, std::size_t m) const { return utility[q * nm + m]; }
  const QueryModelEstimate& cell(std::size_t q, std::size_t m) const { return est.at(q, m); }
  double need_p() const { return constraints.min_mean_accuracy ? *constraints.min_mean_accuracy * nq : 0.0; }
  bool better_model(std::size_t a, std::size_t b) const { return est.model_ids[a] < est.model_ids[b]; }
};

Assignment finalize(const Problem& pr, const std::vector<std::size_t>& pick, SolverKind solver) {
  Assignment a;
  a.solver = solver;
  for (std::size_t q = 0; q < pr.nq; ++q) {
    const auto m = pick[q];
    a.choices.push_back({pr.est.query_ids[q], pr.est.model_ids[m], m});
    a.objective += pr.u(q, m);
    a.total_cost += pr.cell(q, m).cost;
    a.total_latency += pr.cell(q, m).latency;
    a.total_p += pr.cell(q, m).p;
  }
  const auto& c = pr.constraints;
  if (c.max_total_cost) a.slack.cost = *c.max_total_cost - a.total_cost;
  if (c.max_total_latency) a.slack.latency = *c.max_total_latency - a.total_latency;
  if (c.min_mean_accuracy) a.slack.accuracy = a.total_p - pr.need_p();
  a.feasible = (!a.slack.cost || *a.slack.cost >= -pr.tol) && (!a.slack.latency || *a.slack.latency >= -pr.tol) &&
               (!a.slack.accuracy || *a.slack.accuracy >= -pr.tol);
  return a;
}

std::vector<std::size_t> argmax_choices(const Problem& pr) {
  std::vector<std::size_t> pick(pr.nq, 0);
  for (std::size_t q = 0; q < pr.nq; ++q) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < pr.nm; ++m) {
      const double a = pr.u(q, m), b = pr.u(q, best);
      if (a > b || (a == b && pr.better_model(m, best))) best = m;
    }
    pick[q] = best;
  }
  return pick;
}

Problem make_problem(const EstimateMatrix& estimates, const PolicyWeights& weights,
                     const GlobalConstraints& constraints, const RouteOptions& options) {
  estimates.validate();
  weights.validate();
  constraints.validate();
  return Problem{estimates, utility_matrix(estimates, weights, options.normalize), constraints, options.tolerance,
                 estimates.num_queries(), estimates.num_models()};
}

// Corner totals: the smallest achievable cost and latency and the largest
// achievable accuracy. If any bound is violated even there, nothing is feasible.
bool corner_infeasible(const Problem& pr) {
  double min_c = 0.0, min_t = 0.0, max_p = 0.0;
  for (std::size_t q = 0; q < pr.nq; ++q) {
    double c = std::numeric_limits<double>::infinity(), t = c, p = -c;
    for (std::size_t m = 0; m < pr.nm; ++m) {
      c = std::min(c, pr.cell(q, m).cost);
      t = std::min(t, pr.cell(q, m).latency);
      p = std::max(p, pr.cell(q, m).p);
    }
    min_c += c;
    min_t += t;
    max_p += p;
  }
  const auto& k = pr.constraints;
  return (k.max_total_cost && min_c > *k.max_total_cost + pr.tol) ||
         (k.max_total_latency && min_t > *k.max_total_latency + pr.tol) ||
         (k.min_mean_accuracy && max_p < pr.need_p() - pr.tol);
}

// Depth-first branch and bound over queries; candidates per query are tried
// in decreasing utility. Bounds: remaining best utilities (objective), and
// remaining extreme resource totals (feasibility).
class BranchAndBound {
 public:
  BranchAndBound(const Problem& pr, std::size_t node_limit) : pr_(pr), node_limit_(node_limit) {
    order_.resize(pr.nq);
    suf_u_.assign(pr.nq + 1, 0.0);
    suf_c_.assign(pr.nq + 1, 0.0);
    suf_t_.assign(pr.nq + 1, 0.0);
    suf_p_.assign(pr.nq + 1, 0.0);
    for (std::size_t q = pr.nq; q-- > 0;) {
      auto& ord = order_[q];
      ord.resize(pr.nm);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
        if (pr.u(q, a) != pr.u(q, b)) return pr.u(q, a) > pr.u(q, b);
        return pr.better_model(a, b);
      });
      double c = std::numeric_limits<double>::infinity(), t = c, p = -c;
      for (std::size_t m = 0; m < pr.nm; ++m) {
        c = std::min(c, pr.cell(q, m).cost);
        t = std::min(t, pr.cell(q, m).latency);
        p = std::max(p, pr.cell(q, m).p);
      }
      suf_u_[q] = suf_u_[q + 1] + pr.u(q, ord.front());
      suf_c_[q] = suf_c_[q + 1] + c;
      suf_t_[q] = suf_t_[q + 1] + t;
      suf_p_[q] = suf_p_[q + 1] + p;
    }
    current_.assign(pr.nq, 0);
  }

  void seed(const std::vector<std::size_t>& pick, double objective) {
    best_ = pick;
    best_obj_ = objective;
    have_best_ = true;
  }

  // Returns false when the node budget ran out.
  bool solve() {
    descend(0, 0.0, 0.0, 0.0, 0.0);
    return !aborted_;
  }

  bool found() const { return have_best_; }
  const std::vector<std::size_t>& best() const { return best_; }
  std::size_t nodes() const { return nodes_; }

 private:
  bool within(double value, const std::optional<double>& bound) const { return !bound || value <= *bound + pr_.tol; }

  void descend(std::size_t q, double u, double c, double t, double p) {
    if (aborted_) return;
    if (++nodes_ > node_limit_) {
      aborted_ = true;
      return;
    }
    const auto& k = pr_.constraints;
    if (q == pr_.nq) {
      if (!have_best_ || u > best_obj_) {
        best_ = current_;
        best_obj_ = u;
        have_best_ = true;
      }
      return;
    }
    for (std::size_t m : order_[q]) {
      const auto& cell = pr_.cell(q, m);
      const double nu = u + pr_.u(q, m);
      if (have_best_ && nu + suf_u_[q + 1] <= best_obj_) break;  // candidates are sorted
      const double nc = c + cell.cost, nt = t + cell.latency, np = p + cell.p;
      if (!within(nc + suf_c_[q + 1], k.max_total_cost)) continue;
      if (!within(nt + suf_t_[q + 1], k.max_total_latency)) continue;
      if (k.min_mean_accuracy && np + suf_p_[q + 1] < pr_.need_p() - pr_.tol) continue;
      current_[q] = m;
      descend(q + 1, nu, nc, nt, np);
      if (aborted_) return;
    }
  }

  const Problem& pr_;
  std::size_t node_limit_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<double> suf_u_, suf_c_, suf_t_, suf_p_;
  std::vector<std::size_t> current_, best_;
  double best_obj_ = -std::numeric_limits<double>::infinity();
  bool have_best_ = false;
  bool aborted_ = false;
  std::size_t nodes_ = 0;
};

// Constraint rows in scaled "<=" form: sum_q row(q, m) <= rhs.
struct ScaledRows {
  std::vector<std::array<double, 3>> coef;  // per cell
  std::array<double, 3> rhs{0.0, 0.0, 0.0};
  std::array<bool, 3> active{false, false, false};
};

ScaledRows scaled_rows(const Problem& pr) {
  ScaledRows r;
  r.coef.assign(pr.nq * pr.nm, {0.0, 0.0, 0.0});
  const auto& k = pr.constraints;
  r.active = {k.max_total_cost.has_value(), k.max_total_latency.has_value(), k.min_mean_accuracy.has_value()};
  std::array<double, 3> scale{0.0, 0.0, 0.0};
  for (std::size_t q = 0; q < pr.nq; ++q) {
    double cmax = 0.0, tmax = 0.0;
    for (std::size_t m = 0; m < pr.nm; ++m) {
      cmax = std::max(cmax, pr.cell(q, m).cost);
      tmax = std::max(tmax, pr.cell(q, m).latency);
    }
    scale[0] += cmax;
    scale[1] += tmax;
  }
  scale[2] = static_cast<double>(pr.nq);
  for (auto& s : scale) s = s > 0.0 ? s : 1.0;
  for (std::size_t q = 0; q < pr.nq; ++q) {
    for (std::size_t m = 0; m < pr.nm; ++m) {
      const auto& cell = pr.cell(q, m);
      r.coef[q * pr.nm + m] = {cell.cost / scale[0], cell.latency / scale[1], -cell.p / scale[2]};
    }
  }
  if (k.max_total_cost) r.rhs[0] = *k.max_total_cost / scale[0];
  if (k.max_total_latency) r.rhs[1] = *k.max_total_latency / scale[1];
  if (k.min_mean_accuracy) r.rhs[2] = -pr.need_p() / scale[2];
  return r;
}

class Lagrangian {
 public:
  Lagrangian(const Problem& pr) : pr_(pr), rows_(scaled_rows(pr)) {}

  std::array<double, 3> load(const std::vector<std::size_t>& pick) const {
    std::array<double, 3> s{0.0, 0.0, 0.0};
    for (std::size_t q = 0; q < pr_.nq; ++q)
      for (int j = 0; j < 3; ++j) s[j] += rows_.coef[q * pr_.nm + pick[q]][j];
    return s;
  }

  double violation(const std::array<double, 3>& load) const {
    double v = 0.0;
    for (int j = 0; j < 3; ++j)
      if (rows_.active[j]) v += std::max(0.0, load[j] - rows_.rhs[j]);
    return v;
  }

  bool feasible(const std::vector<std::size_t>& pick) const { return finalize(pr_, pick, SolverKind::kHeuristic).feasible; }

  // Greedy switches that buy the most violation reduction per unit utility.
  bool repair(std::vector<std::size_t>& pick) const {
    auto ld = load(pick);
    const std::size_t max_steps = 4 * pr_.nq * pr_.nm + 16;
    for (std::size_t step = 0; step < max_steps; ++step) {
      if (feasible(pick)) return true;
      const double v0 = violation(ld);
      double best_score = -1.0, best_dv = 0.0;
      std::size_t bq = 0, bm = 0;
      for (std::size_t q = 0; q < pr_.nq; ++q) {
        const auto cur = pick[q];
        for (std::size_t m = 0; m < pr_.nm; ++m) {
          if (m == cur) continue;
          std::array<double, 3> next = ld;
          for (int j = 0; j < 3; ++j) next[j] += rows_.coef[q * pr_.nm + m][j] - rows_.coef[q * pr_.nm + cur][j];
          const double dv = v0 - violation(next);
          if (dv <= 1e-15) continue;
          const double du = pr_.u(q, cur) - pr_.u(q, m);
          const double score = du <= 0.0 ? std::numeric_limits<double>::infinity() : dv / du;
          if (score > best_score || (score == best_score && dv > best_dv)) {
            best_score = score;
            best_dv = dv;
            bq = q;
            bm = m;
          }
        }
      }
      if (best_score < 0.0) return false;
      for (int j = 0; j < 3; ++j) ld[j] += rows_.coef[bq * pr_.nm + bm][j] - rows_.coef[bq * pr_.nm + pick[bq]][j];
      pick[bq] = bm;
    }
    return feasible(pick);
  }

  // Best-improvement local search that keeps feasibility.
  void improve(std::vector<std::size_t>& pick) const {
    for (std::size_t step = 0; step < 4 * pr_.nq + 16; ++step) {
      const Assignment base = finalize(pr_, pick, SolverKind::kHeuristic);
      double best_gain = 1e-12;
      std::size_t bq = pr_.nq, bm = 0;
      for (std::size_t q = 0; q < pr_.nq; ++q) {
        const auto cur = pick[q];
        for (std::size_t m = 0; m < pr_.nm; ++m) {
          const double gain = pr_.u(q, m) - pr_.u(q, cur);
          if (m == cur || gain <= best_gain) continue;
          const auto& a = pr_.cell(q, m);
          const auto& b = pr_.cell(q, cur);
          const auto& k = pr_.constraints;
          if (k.max_total_cost && base.total_cost + a.cost - b.cost > *k.max_total_cost + pr_.tol) continue;
          if (k.max_total_latency && base.total_latency + a.latency - b.latency > *k.max_total_latency + pr_.tol)
            continue;
          if (k.min_mean_accuracy && base.total_p + a.p - b.p < pr_.need_p() - pr_.tol) continue;
          best_gain = gain;
          bq = q;
          bm = m;
        }
      }
      if (bq == pr_.nq) return;
      pick[bq] = bm;
    }
  }

  Assignment run(int iterations) {
    std::array<double, 3> lambda{0.0, 0.0, 0.0};
    double best_dual = std::numeric_limits<double>::infinity();
    std::optional<std::vector<std::size_t>> best;
    double best_obj = -std::numeric_limits<double>::infinity();

    auto consider = [&](std::vector<std::size_t> pick) {
      if (!feasible(pick) && !repair(pick)) return;
      improve(pick);
      const Assignment a = finalize(pr_, pick, SolverKind::kHeuristic);
      if (a.feasible && a.objective > best_obj) {
        best_obj = a.objective;
        best = std::move(pick);
      }
    };

    // Corner starts: the repair walks from each towards feasibility.
    for (int j = 0; j < 3; ++j) {
      if (!rows_.active[j]) continue;
      std::vector<std::size_t> pick(pr_.nq, 0);
      for (std::size_t q = 0; q < pr_.nq; ++q) {
        for (std::size_t m = 1; m < pr_.nm; ++m) {
          if (rows_.coef[q * pr_.nm + m][j] < rows_.coef[q * pr_.nm + pick[q]][j]) pick[q] = m;
        }
      }
      consider(std::move(pick));
    }

    const int repair_every = std::max(1, iterations / 16);
    double step_scale = 1.0;
    int since_improvement = 0;
    std::vector<std::size_t> pick(pr_.nq, 0);
    for (int it = 0; it < iterations; ++it) {
      double dual = 0.0;
      for (std::size_t q = 0; q < pr_.nq; ++q) {
        double bv = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < pr_.nm; ++m) {
          double v = pr_.u(q, m);
          for (int j = 0; j < 3; ++j)
            if (rows_.active[j]) v -= lambda[j] * rows_.coef[q * pr_.nm + m][j];
          if (v > bv || (v == bv && pr_.better_model(m, pick[q]))) {
            bv = v;
            pick[q] = m;
          }
        }
        dual += bv;
      }
      for (int j = 0; j < 3; ++j)
        if (rows_.active[j]) dual += lambda[j] * rows_.rhs[j];
      if (dual < best_dual - 1e-12) {
        best_dual = dual;
        since_improvement = 0;
      } else if (++since_improvement >= 20) {
        step_scale *= 0.5;
        since_improvement = 0;
      }

      if (feasible(pick) || it % repair_every == 0 || it + 1 == iterations) consider(pick);

      const auto ld = load(pick);
      std::array<double, 3> g{0.0, 0.0, 0.0};
      double norm2 = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (!rows_.active[j]) continue;
        g[j] = rows_.rhs[j] - ld[j];
        norm2 += g[j] * g[j];
      }
      if (norm2 <= 0.0) break;
      const double target = best ? best_obj : dual - 0.05 * (std::abs(dual) + 1.0);
      const double step = step_scale * std::max(dual - target, 1e-12) / norm2;
      for (int j = 0; j < 3; ++j)
        if (rows_.active[j]) lambda[j] = std::max(0.0, lambda[j] - step * g[j]);
    }

    if (!best) {
      Assignment a = finalize(pr_, argmax_choices(pr_), SolverKind::kHeuristic);
      a.feasible = false;
      return a;
    }
    Assignment a = finalize(pr_, *best, SolverKind::kHeuristic);
    a.gap_bound = std::max(0.0, best_dual - a.objective);
    return a;
  }

 private:
  const Problem& pr_;
  ScaledRows rows_;
};

}  // namespace

Assignment route_unconstrained(const EstimateMatrix& estimates, const PolicyWeights& weights,
                               const RouteOptions& options) {
  const Problem pr = make_problem(estimates, weights, {}, options);
  return finalize(pr, argmax_choices(pr), SolverKind::kExact);
}

Assignment route_lagrangian(const EstimateMatrix& estimates, const PolicyWeights& weights,
                            const GlobalConstraints& constraints, const RouteOptions& options) {
  const Problem pr = make_problem(estimates, weights, constraints, options);
  if (constraints.empty()) return finalize(pr, argmax_choices(pr), SolverKind::kHeuristic);
  if (corner_infeasible(pr)) {
    Assignment a = finalize(pr, argmax_choices(pr), SolverKind::kHeuristic);
    a.feasible = false;
    return a;
  }
  return Lagrangian(pr).run(options.lagrangian_iterations);
}

Assignment route_constrained(const EstimateMatrix& estimates, const PolicyWeights& weights,
                             const GlobalConstraints& constraints, const RouteOptions& options) {
  const Problem pr = make_problem(estimates, weights, constraints, options);
  const auto unconstrained = argmax_choices(pr);
  if (constraints.empty()) return finalize(pr, unconstrained, SolverKind::kExact);
  if (corner_infeasible(pr)) {
    Assignment a = finalize(pr, unconstrained, SolverKind::kExact);
    a.feasible = false;
    return a;
  }
  // The unconstrained optimum is optimal whenever it happens to be feasible.
  if (Assignment a = finalize(pr, unconstrained, SolverKind::kExact); a.feasible) return a;

  if (pr.nq * pr.nm <= options.exact_threshold) {
    BranchAndBound bnb(pr, options.node_limit);
    if (bnb.solve()) {
      if (!bnb.found()) {
        Assignment a = finalize(pr, unconstrained, SolverKind::kExact);
        a.feasible = false;
        return a;
      }
      return finalize(pr, bnb.best(), SolverKind::kExact);
    }
  }
  return Lagrangian(pr).run(options.lagrangian_iterations);
}

// ---------------------------------------------------------------------------
// reward / export

RewardReport total_reward(const Assignment& assignment, const ObservedTable& observed, const PolicyWeights& weights) {
  weights.validate();
  RewardReport report;
  report.weights = weights;
  for (const auto& c : assignment.choices) {
    auto it = observed.find({c.query_id, c.model_id});
    if (it == observed.end())
      throw Error(fmt::format("total_reward: no observation for query '{}' on model '{}'", c.query_id, c.model_id));
    const auto& o = it->second;
    const double r = weights.w_p * o.accuracy - weights.w_c * o.cost - weights.w_t * o.latency;
    report.per_query.push_back({c.query_id, c.model_id, r});
    report.total_reward += r;
  }
  return report;
}

void write_assignment_csv(const Assignment& assignment, const EstimateMatrix& estimates,
                          const PolicyWeights& weights, bool normalize, const std::string& path) {
  const auto u = utility_matrix(estimates, weights, normalize);
  csv::Table table;
  table.header = {"query_id", "model_id", "p", "cost", "latency", "utility"};
  for (std::size_t q = 0; q < assignment.choices.size(); ++q) {
    const auto& c = assignment.choices[q];
    const auto& cell = estimates.at(q, c.model_index);
    table.rows.push_back({c.query_id, c.model_id, fmt::format("{}", cell.p), fmt::format("{}", cell.cost),
                          fmt::format("{}", cell.latency), fmt::format("{}", u[q * estimates.num_models() + c.model_index])});
  }
  csv::write(path, table);
}

}  // namespace latroute
