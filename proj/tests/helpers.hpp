#pragma once

#include "latroute/irt.hpp"
#include "latroute/profile.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace latroute::testing {

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline ItemParams random_item(std::mt19937_64& rng, int dim, std::string id) {
  return {std::move(id), random_vec(rng, dim).cwiseAbs(), random_vec(rng, dim)};
}

inline ModelProfile simple_profile(std::string id, Vec theta, double price_in = 1e-3, double price_out = 2e-3) {
  ModelProfile p;
  p.model_id = id;
  p.ability = {id, std::move(theta)};
  p.pricing = {price_in, price_out};
  p.verbosity = {{-10.0, 0.0, 10.0}, {50.0, 150.0}, 100.0};
  p.latency = {0.2, 0.01, 0.0};
  return p;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("latroute-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace latroute::testing
