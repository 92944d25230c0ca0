#include "latroute/serialize.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace latroute {

Json vec_to_json(const Vec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw Error("expected a JSON array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(fmt::format("{}: {}", what, e.what()));
  }
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return rows;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) throw Error("expected a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vec_from_json(j[static_cast<std::size_t>(r)]);
    if (row.size() != cols) throw Error("ragged matrix rows");
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// space

Json to_json(const CalibratedSpace& space) {
  Json j;
  j["D"] = space.dim;
  Json items = Json::object();
  for (const auto& [id, item] : space.items) items[id] = {{"alpha", vec_to_json(item.alpha)}, {"b", vec_to_json(item.b)}};
  j["items"] = std::move(items);
  Json abilities = Json::object();
  for (const auto& [id, a] : space.abilities) abilities[id] = vec_to_json(a.theta);
  j["abilities"] = std::move(abilities);
  j["fit_report"] = {{"final_loss", space.fit_report.final_loss},
                     {"epochs", space.fit_report.epochs},
                     {"seed", space.fit_report.seed},
                     {"checkpoints", space.fit_report.checkpoints},
                     {"rejected_checkpoints", space.fit_report.rejected_checkpoints}};
  return j;
}

CalibratedSpace space_from_json(const Json& j) {
  return guarded("calibrated space", [&] {
    CalibratedSpace s;
    s.dim = j.at("D").get<int>();
    for (const auto& [id, item] : j.at("items").items()) {
      ItemParams p{id, vec_from_json(item.at("alpha")), vec_from_json(item.at("b"))};
      require_same_dim(("item alpha of " + id).c_str(), static_cast<std::size_t>(s.dim), static_cast<std::size_t>(p.alpha.size()));
      require_same_dim(("item b of " + id).c_str(), static_cast<std::size_t>(s.dim), static_cast<std::size_t>(p.b.size()));
      s.items[id] = std::move(p);
    }
    for (const auto& [id, theta] : j.at("abilities").items()) {
      LatentAbility a{id, vec_from_json(theta)};
      require_same_dim(("ability of " + id).c_str(), static_cast<std::size_t>(s.dim), static_cast<std::size_t>(a.theta.size()));
      s.abilities[id] = std::move(a);
    }
    if (j.contains("fit_report")) {
      const auto& r = j.at("fit_report");
      s.fit_report.final_loss = r.value("final_loss", 0.0);
      s.fit_report.epochs = r.value("epochs", 0);
      s.fit_report.seed = r.value("seed", std::uint64_t{0});
      s.fit_report.checkpoints = r.value("checkpoints", std::vector<double>{});
      s.fit_report.rejected_checkpoints = r.value("rejected_checkpoints", 0);
    }
    return s;
  });
}

// ---------------------------------------------------------------------------
// anchors

Json to_json(const AnchorSet& anchors) {
  Json list = Json::array();
  for (std::size_t k = 0; k < anchors.item_ids.size(); ++k)
    list.push_back({{"item_id", anchors.item_ids[k]}, {"gain", anchors.gains[k]}});
  return {{"epsilon", anchors.epsilon}, {"D", anchors.dim}, {"anchors", std::move(list)}};
}

AnchorSet anchors_from_json(const Json& j) {
  return guarded("anchor set", [&] {
    AnchorSet a;
    a.epsilon = j.at("epsilon").get<double>();
    a.dim = j.at("D").get<int>();
    for (const auto& e : j.at("anchors")) {
      a.item_ids.push_back(e.at("item_id").get<std::string>());
      a.gains.push_back(e.at("gain").get<double>());
    }
    return a;
  });
}

// ---------------------------------------------------------------------------
// profiles

Json to_json(const ModelProfile& p) {
  return {{"model_id", p.model_id},
          {"ability", vec_to_json(p.ability.theta)},
          {"pricing", {{"price_in", p.pricing.price_in}, {"price_out", p.pricing.price_out}}},
          {"verbosity",
           {{"bin_edges", p.verbosity.bin_edges},
            {"mean_lengths", p.verbosity.mean_lengths},
            {"global_mean", p.verbosity.global_mean}}},
          {"latency", {{"ttft", p.latency.ttft}, {"tpot", p.latency.tpot}, {"residual_rms", p.latency.residual_rms}}},
          {"tokenizer_id", p.tokenizer_id},
          {"metadata",
           {{"display_name", p.metadata.display_name},
            {"onboarded_at", p.metadata.onboarded_at},
            {"anchor_set_id", p.metadata.anchor_set_id}}}};
}

ModelProfile profile_from_json(const Json& j) {
  return guarded("model profile", [&] {
    ModelProfile p;
    p.model_id = j.at("model_id").get<std::string>();
    p.ability = {p.model_id, vec_from_json(j.at("ability"))};
    p.pricing.price_in = j.at("pricing").at("price_in").get<double>();
    p.pricing.price_out = j.at("pricing").at("price_out").get<double>();
    const auto& v = j.at("verbosity");
    p.verbosity.bin_edges = v.at("bin_edges").get<std::vector<double>>();
    p.verbosity.mean_lengths = v.at("mean_lengths").get<std::vector<double>>();
    p.verbosity.global_mean = v.at("global_mean").get<double>();
    const auto& l = j.at("latency");
    p.latency = {l.at("ttft").get<double>(), l.at("tpot").get<double>(), l.value("residual_rms", 0.0)};
    p.tokenizer_id = j.value("tokenizer_id", std::string("whitespace"));
    if (j.contains("metadata")) {
      const auto& m = j.at("metadata");
      p.metadata.display_name = m.value("display_name", std::string());
      p.metadata.onboarded_at = m.value("onboarded_at", std::string());
      p.metadata.anchor_set_id = m.value("anchor_set_id", std::string());
    }
    p.validate();
    return p;
  });
}

// ---------------------------------------------------------------------------
// predictor

Json to_json(const PredictorModel& m) {
  Json blocks = Json::array();
  for (const auto& b : m.blocks)
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", b.offset}});
  return {{"format", "latroute-predictor"},
          {"version", 1},
          {"shape",
           {{"d_sem", m.shape.d_sem},
            {"D", m.shape.dim},
            {"trunk_width", m.shape.trunk_width},
            {"trunk_depth", m.shape.trunk_depth},
            {"head_width", m.shape.head_width}}},
          {"embedder", m.embedder == EmbedderKind::kHashing ? "hashing" : "file"},
          {"clusters", m.clusters.clusters},
          {"cluster_report",
           {{"method", "average-linkage on 1-|pearson|"},
            {"abs_correlation", mat_to_json(m.clusters.abs_correlation)},
            {"constant_dims", m.clusters.constant_dims}}},
          {"blocks", std::move(blocks)},
          {"params", m.params},
          {"mean_b", vec_to_json(m.mean_b)},
          {"scaler", {{"mean", vec_to_json(m.scaler.mean)}, {"std", vec_to_json(m.scaler.stddev)}}},
          {"loss_history", m.loss_history}};
}

PredictorModel predictor_from_json(const Json& j) {
  return guarded("predictor", [&] {
    if (j.value("format", std::string()) != "latroute-predictor") throw Error("predictor: unrecognised document format");
    PredictorModel m;
    const auto& s = j.at("shape");
    m.shape = {s.at("d_sem").get<int>(), s.at("D").get<int>(), s.at("trunk_width").get<int>(),
               s.at("trunk_depth").get<int>(), s.at("head_width").get<int>()};
    const auto kind = j.value("embedder", std::string("hashing"));
    if (kind != "hashing" && kind != "file") throw Error(fmt::format("predictor: unknown embedder '{}'", kind));
    m.embedder = kind == "hashing" ? EmbedderKind::kHashing : EmbedderKind::kFile;
    m.clusters.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
    m.clusters.abs_correlation = Mat::Identity(m.shape.dim, m.shape.dim);
    if (j.contains("cluster_report")) {
      const auto& rep = j.at("cluster_report");
      m.clusters.constant_dims = rep.value("constant_dims", std::vector<int>{});
      if (rep.contains("abs_correlation")) m.clusters.abs_correlation = mat_from_json(rep.at("abs_correlation"));
    }
    for (const auto& b : j.at("blocks"))
      m.blocks.push_back({b.at("name").get<std::string>(), b.at("rows").get<int>(), b.at("cols").get<int>(),
                          b.at("offset").get<std::size_t>()});
    m.params = j.at("params").get<std::vector<double>>();
    m.mean_b = vec_from_json(j.at("mean_b"));
    m.scaler.mean = vec_from_json(j.at("scaler").at("mean"));
    m.scaler.stddev = vec_from_json(j.at("scaler").at("std"));
    m.loss_history = j.value("loss_history", std::vector<double>{});
    m.validate();
    return m;
  });
}

// ---------------------------------------------------------------------------
// files

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(fmt::format("'{}': {}", path, e.what()));
  }
}

void write_json_file(const std::string& path, const Json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(fmt::format("cannot write '{}'", tmp));
    out << j.dump(2) << '\n';
    if (!out) throw Error(fmt::format("short write to '{}'", tmp));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace latroute
