#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/error.hpp"
#include "btfsyn/feature_plane.hpp"

namespace btf {

void BtfDataset::validate() const {
  if (width == 0 || height == 0) throw Error(ErrorKind::Format, "BtfDataset: empty spatial extent");
  if (data.size() != pairs.size() * texels() * 3) {
    throw Error(ErrorKind::Format, "BtfDataset: data length != N * height * width * 3");
  }
  for (const auto& p : pairs) {
    if (std::abs(p.wi.norm() - 1.0f) > 1e-6f || std::abs(p.wo.norm() - 1.0f) > 1e-6f) {
      throw Error(ErrorKind::Format, "BtfDataset: direction is not unit length");
    }
    if (!(p.wi.z() > 0.0f) || !(p.wo.z() > 0.0f)) {
      throw Error(ErrorKind::Format, "BtfDataset: direction below the horizon");
    }
  }
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f) {
      throw Error(ErrorKind::Format, "BtfDataset: reflectance must be finite and non-negative");
    }
  }
}

std::vector<Eigen::Vector3f> direction_grid(int n_theta, int n_phi, double theta_max_deg) {
  if (n_theta < 1 || n_phi < 1) throw Error(ErrorKind::Argument, "direction_grid: counts must be >= 1");
  std::vector<Eigen::Vector3f> dirs;
  const double theta_max = theta_max_deg * std::numbers::pi / 180.0;
  for (int t = 0; t < n_theta; ++t) {
    const double theta = n_theta == 1 ? 0.0 : theta_max * t / (n_theta - 1);
    for (int p = 0; p < n_phi; ++p) {
      const double phi = 2.0 * std::numbers::pi * p / n_phi;
      Eigen::Vector3d d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      dirs.push_back(d.normalized().cast<float>());
    }
  }
  return dirs;
}

PairSampler::PairSampler(std::size_t pair_count, std::uint64_t seed, bool stratified)
    : count_(pair_count), stratified_(stratified), rng_(seed) {
  if (pair_count == 0) throw Error(ErrorKind::Argument, "PairSampler: dataset has no pairs");
}

std::vector<std::uint32_t> PairSampler::epoch_order() {
  std::vector<std::uint32_t> order(count_);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng_);
  return order;
}

std::vector<std::uint32_t> PairSampler::next(std::size_t images) {
  if (images > count_) throw Error(ErrorKind::Argument, "sample_batch: images exceeds pair count");
  if (!stratified_) {
    auto order = epoch_order();
    order.resize(images);
    return order;
  }
  std::vector<std::uint32_t> batch;
  batch.reserve(images);
  while (batch.size() < images) {
    if (cursor_ == order_.size()) {
      order_ = epoch_order();
      cursor_ = 0;
      // Keep the batch distinct across the epoch boundary: push pairs already
      // taken to the back of the fresh order.
      std::stable_partition(order_.begin(), order_.end(), [&](std::uint32_t p) {
        return std::find(batch.begin(), batch.end(), p) == batch.end();
      });
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

TrainingBatch sample_batch(const BtfDataset& dataset, std::uint64_t seed, std::size_t images,
                           bool stratified) {
  PairSampler sampler(dataset.pair_count(), seed, stratified);
  TrainingBatch b;
  b.pair_index = sampler.next(images);
  const Index texels = Index(dataset.texels());
  const Index n = Index(images) * texels;
  b.uv.resize(2, n);
  b.target.resize(3, n);
  b.hd.reserve(std::size_t(n));
  Index k = 0;
  for (const auto p : b.pair_index) {
    const auto hd = to_half_diff(dataset.pairs[p]);
    const auto img = dataset.slice(p);
    for (std::uint32_t row = 0; row < dataset.height; ++row) {
      for (std::uint32_t col = 0; col < dataset.width; ++col, ++k) {
        b.uv.col(k) << (col + 0.5f) / float(dataset.width), (row + 0.5f) / float(dataset.height);
        b.hd.push_back(hd);
        b.target.col(k) = img.col(Index(row) * dataset.width + col);
      }
    }
  }
  return b;
}

DatasetInterpolator::DatasetInterpolator(const BtfDataset& dataset, int k_nearest)
    : dataset_(dataset), k_(std::max(1, std::min<int>(k_nearest, int(dataset.pair_count())))) {
  if (dataset.pair_count() == 0) throw Error(ErrorKind::Argument, "DatasetInterpolator: empty dataset");
}

Eigen::Vector3f DatasetInterpolator::operator()(const Eigen::Vector2d& uv, const Eigen::Vector3f& wi,
                                                const Eigen::Vector3f& wo) const {
  // k nearest pairs in (wi, wo) space.
  std::vector<std::pair<float, std::size_t>> dist(dataset_.pair_count());
  for (std::size_t p = 0; p < dist.size(); ++p) {
    dist[p] = {(dataset_.pairs[p].wi - wi).squaredNorm() + (dataset_.pairs[p].wo - wo).squaredNorm(), p};
  }
  std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());

  std::vector<std::pair<double, std::size_t>> angular;
  if (dist.front().first < 1e-12f) {
    angular.push_back({1.0, dist.front().second});
  } else {
    double total = 0.0;
    for (int k = 0; k < k_; ++k) {
      const double w = 1.0 / std::sqrt(double(dist[k].first));
      angular.push_back({w, dist[k].second});
      total += w;
    }
    for (auto& a : angular) a.first /= total;
  }

  const double x = uv.x() * dataset_.width - 0.5;
  const double y = uv.y() * dataset_.height - 0.5;
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const Index w = dataset_.width;
  const Index h = dataset_.height;
  const Index c0 = FeaturePlane<float>::resolve(Index(fx), w, AddressMode::Wrap);
  const Index c1 = FeaturePlane<float>::resolve(Index(fx) + 1, w, AddressMode::Wrap);
  const Index r0 = FeaturePlane<float>::resolve(Index(fy), h, AddressMode::Wrap);
  const Index r1 = FeaturePlane<float>::resolve(Index(fy) + 1, h, AddressMode::Wrap);

  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (const auto& [weight, p] : angular) {
    const auto img = dataset_.slice(p);
    const Eigen::Vector3d v = (1 - tx) * (1 - ty) * img.col(r0 * w + c0).cast<double>() +
                              tx * (1 - ty) * img.col(r0 * w + c1).cast<double>() +
                              (1 - tx) * ty * img.col(r1 * w + c0).cast<double>() +
                              tx * ty * img.col(r1 * w + c1).cast<double>();
    out += weight * v;
  }
  return out.cast<float>();
}

}  // namespace btf
