#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "btfsyn/error.hpp"
#include "btfsyn/evaluator.hpp"
#include "btfsyn/hash.hpp"
#include "btfsyn/image.hpp"
#include "btfsyn/parallel.hpp"
#include "btfsyn/trainer.hpp"

namespace btf {

void TrainConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(lr_planes) || !positive(lr_mlp)) throw Error(ErrorKind::Argument, "TrainConfig: learning rates must be > 0");
  if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0)) {
    throw Error(ErrorKind::Argument, "TrainConfig: lr_decay_per_epoch must lie in (0, 1]");
  }
  if (epochs < 0 || images_per_batch < 1 || chunk < 1 || threads < 0 || checkpoint_every < 0) {
    throw Error(ErrorKind::Argument, "TrainConfig: counts out of range");
  }
  if (!(weight_decay >= 0.0) || !(leaky_slope >= 0.0)) {
    throw Error(ErrorKind::Argument, "TrainConfig: weight_decay and leaky_slope must be >= 0");
  }
  const bool bad_shape = shape.u_width < 1 || shape.u_height < 1 || shape.u_channels < 1 || shape.dir_width < 1 ||
                         shape.dir_height < 1 || shape.dir_channels < 1 ||
                         std::any_of(shape.hidden.begin(), shape.hidden.end(), [](Index h) { return h < 1; });
  if (bad_shape) throw Error(ErrorKind::Argument, "TrainConfig: model dimensions must be positive");
}

double scheduled_lr(double lr0, double decay, int epoch) { return lr0 * std::pow(decay, epoch); }

double ReconstructionMetrics::mean_dssim() const {
  if (dssim.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(dssim.begin(), dssim.end(), 0.0) / double(dssim.size());
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "epoch,mean_l1,seconds,lr_planes,lr_mlp\n";
  out.precision(9);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.mean_l1 << ',' << e.seconds << ',' << e.lr_planes << ',' << e.lr_mlp << '\n';
  }
  if (final_metrics) {
    out << "# final mean_l1=" << final_metrics->mean_l1 << " rmse=" << final_metrics->rmse
        << " mean_dssim=" << final_metrics->mean_dssim() << '\n';
  }
}

Trainer::Trainer(const BtfDataset& dataset, TrainConfig config) : dataset_(dataset), config_(std::move(config)) {
  config_.validate();
  model_ = TriplePlaneModel<float>::create(config_.shape, config_.seed, float(config_.leaky_slope));
  model_.mlp.output_activation = config_.output_activation;
  model_.output_space = config_.loss_space == LossSpace::Log1p ? OutputSpace::Log1p : OutputSpace::Linear;
  prepare();
}

Trainer::Trainer(const BtfDataset& dataset, TrainConfig config, const Checkpoint& resume)
    : dataset_(dataset), config_(std::move(config)), model_(resume.model) {
  config_.validate();
  model_.validate();
  const auto expected = config_.loss_space == LossSpace::Log1p ? OutputSpace::Log1p : OutputSpace::Linear;
  if (model_.output_space != expected) {
    throw Error(ErrorKind::Configuration, "Trainer: checkpoint loss space differs from the configuration");
  }
  config_.shape = model_.shape();
  if (resume.trainer) state_ = *resume.trainer;
  prepare();
}

void Trainer::prepare() {
  if (dataset_.pair_count() == 0 || dataset_.texels() == 0) throw Error(ErrorKind::Argument, "Trainer: empty dataset");
  if (dataset_.data.size() != dataset_.pair_count() * dataset_.texels() * 3) {
    throw Error(ErrorKind::Format, "Trainer: dataset length mismatch");
  }
  if (config_.loss_space == LossSpace::Log1p) {
    targets_.resize(dataset_.data.size());
    std::transform(dataset_.data.begin(), dataset_.data.end(), targets_.begin(),
                   [](float v) { return std::log1p(v); });
  }
  const Index n = Index(dataset_.pair_count());
  pair_uv_h_.resize(2, n);
  pair_uv_d_.resize(2, n);
  for (Index p = 0; p < n; ++p) {
    const auto dir = halfdiff_to_plane_uv(to_half_diff(dataset_.pairs[std::size_t(p)]));
    pair_uv_h_.col(p) = dir.uv_h;
    pair_uv_d_.col(p) = dir.uv_d;
  }
  worker_grads_.assign(std::size_t(resolve_threads(config_.threads)), ModelGradients<float>::zeros_like(model_));
}

std::vector<ParamSlot<float>> Trainer::slots(double lr_scale) {
  auto& g = worker_grads_.front();
  const float lr_p = float(config_.lr_planes * lr_scale);
  const float lr_m = float(config_.lr_mlp * lr_scale);
  const float wd = float(config_.weight_decay);
  const float wd_p = config_.decay_planes ? wd : 0.0f;
  std::vector<ParamSlot<float>> s;
  s.push_back({model_.plane_u.data().data(), g.plane_u.data(), g.plane_u.size(), lr_p, wd_p});
  s.push_back({model_.plane_h.data().data(), g.plane_h.data(), g.plane_h.size(), lr_p, wd_p});
  s.push_back({model_.plane_d.data().data(), g.plane_d.data(), g.plane_d.size(), lr_p, wd_p});
  for (std::size_t k = 0; k < model_.mlp.layer_count(); ++k) {
    s.push_back({model_.mlp.weights[k].data(), g.mlp.weights[k].data(), g.mlp.weights[k].size(), lr_m, wd});
    s.push_back({model_.mlp.biases[k].data(), g.mlp.biases[k].data(), g.mlp.biases[k].size(), lr_m, 0.0f});
  }
  return s;
}

double Trainer::step(std::span<const std::uint32_t> pairs, double lr_scale) {
  if (pairs.empty()) throw Error(ErrorKind::Argument, "Trainer::step: no pairs");
  for (auto p : pairs) {
    if (p >= dataset_.pair_count()) throw Error(ErrorKind::Argument, "Trainer::step: pair index out of range");
  }
  const Index texels = Index(dataset_.texels());
  const Index total = Index(pairs.size()) * texels;
  const Index chunk = config_.chunk;
  const Index chunks = (total + chunk - 1) / chunk;
  const int workers = int(worker_grads_.size());
  const float grad_scale = 1.0f / float(3 * total);
  const float* targets = targets_.empty() ? dataset_.data.data() : targets_.data();
  const float inv_w = 1.0f / float(dataset_.width);
  const float inv_h = 1.0f / float(dataset_.height);

  std::vector<double> worker_loss(std::size_t(workers), 0.0);
  run_workers(workers, [&](int w) {
    auto& grads = worker_grads_[std::size_t(w)];
    grads.set_zero();
    SampleBatch<float> batch;
    for (Index c = w; c < chunks; c += workers) {
      const Index begin = c * chunk;
      const Index n = std::min(chunk, total - begin);
      batch.resize(n);
      for (Index i = 0; i < n; ++i) {
        const Index s = begin + i;
        const std::uint32_t pair = pairs[std::size_t(s / texels)];
        const Index t = s % texels;
        batch.uv.col(i) << (float(t % dataset_.width) + 0.5f) * inv_w, (float(t / dataset_.width) + 0.5f) * inv_h;
        batch.uv_h.col(i) = pair_uv_h_.col(pair);
        batch.uv_d.col(i) = pair_uv_d_.col(pair);
        batch.target.col(i) = Eigen::Map<const Eigen::Vector3f>(targets + (std::size_t(pair) * std::size_t(texels) + std::size_t(t)) * 3);
      }
      worker_loss[std::size_t(w)] += double(l1_forward_backward(model_, batch, grad_scale, grads));
    }
  });
  for (int w = 1; w < workers; ++w) worker_grads_.front() += worker_grads_[std::size_t(w)];
  const double loss = std::accumulate(worker_loss.begin(), worker_loss.end(), 0.0) / double(3 * total);

  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "training diverged: non-finite loss at epoch " << state_.epochs_completed << ", optimizer step "
        << state_.adam.step + 1 << ", first pair " << pairs.front() << ", lr scale " << lr_scale
        << ", parameters finite: " << (model_.all_finite() ? "yes" : "no");
    throw Error(ErrorKind::Numeric, msg.str());
  }
  const auto s = slots(lr_scale);
  adamw_step<float>(s, state_.adam);
  return loss;
}

std::vector<std::uint32_t> Trainer::epoch_order(int epoch) const {
  std::vector<std::uint32_t> order(dataset_.pair_count());
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(mix64(config_.seed ^ mix64(std::uint64_t(epoch) + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

EpochLog Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  const int epoch = int(state_.epochs_completed);
  const double lr_scale = std::pow(config_.lr_decay_per_epoch, epoch);
  const auto order = epoch_order(epoch);
  const std::size_t group = std::min<std::size_t>(std::size_t(config_.images_per_batch), order.size());

  double weighted = 0.0;
  for (std::size_t b = 0; b < order.size(); b += group) {
    const auto pairs = std::span(order).subspan(b, std::min(group, order.size() - b));
    weighted += step(pairs, lr_scale) * double(pairs.size());
  }
  if (!model_.all_finite()) {
    throw Error(ErrorKind::Numeric, "training produced non-finite parameters in epoch " + std::to_string(epoch));
  }
  ++state_.epochs_completed;

  EpochLog log;
  log.epoch = epoch;
  log.mean_l1 = weighted / double(order.size());
  log.lr_planes = config_.lr_planes * lr_scale;
  log.lr_mlp = config_.lr_mlp * lr_scale;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

TrainReport Trainer::run(const EpochHook& on_epoch, const EpochHook& on_checkpoint) {
  TrainReport report;
  while (int(state_.epochs_completed) < config_.epochs) {
    const auto log = run_epoch();
    report.epochs.push_back(log);
    if (on_epoch) on_epoch(*this, log);
    const int done = int(state_.epochs_completed);
    const bool periodic = config_.checkpoint_every > 0 && done % config_.checkpoint_every == 0;
    if (on_checkpoint && (periodic || done == config_.epochs)) on_checkpoint(*this, log);
  }
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = model_;
  c.trainer = state_;
  return c;
}

TrainResult train(const BtfDataset& dataset, const TrainConfig& config) {
  Trainer trainer(dataset, config);
  TrainResult result;
  result.report = trainer.run();
  result.report.final_metrics = evaluate_reconstruction(trainer.model(), dataset, {}, config.threads);
  result.model = trainer.model();
  return result;
}

ReconstructionMetrics evaluate_reconstruction(const TriplePlaneModel<float>& model, const BtfDataset& dataset,
                                              std::span<const std::uint32_t> pairs, int threads) {
  std::vector<std::uint32_t> all;
  if (pairs.empty()) {
    all.resize(dataset.pair_count());
    std::iota(all.begin(), all.end(), 0u);
    pairs = all;
  }
  if (pairs.empty()) throw Error(ErrorKind::Argument, "evaluate_reconstruction: empty dataset");

  const int w = int(dataset.width);
  const int h = int(dataset.height);
  const SynthesisParams params;  // repeat tiling
  std::vector<BtfQuery> queries(dataset.texels());
  std::vector<Eigen::Vector3f> out(queries.size());
  std::vector<QueryStatus> status(queries.size());

  ReconstructionMetrics m;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const auto p : pairs) {
    if (p >= dataset.pair_count()) throw Error(ErrorKind::Argument, "evaluate_reconstruction: pair out of range");
    const auto& pair = dataset.pairs[p];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        queries[std::size_t(y) * std::size_t(w) + std::size_t(x)] = {{(x + 0.5) / w, (y + 0.5) / h}, pair.wi, pair.wo};
      }
    }
    query_batch(model, nullptr, params, queries, out, status, threads);
    ImageBuffer pred(w, h), ref(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t t = std::size_t(y) * std::size_t(w) + std::size_t(x);
        if (status[t] != QueryStatus::Ok) throw Error(ErrorKind::Internal, "evaluate_reconstruction: query failed");
        pred.at(x, y) = out[t];
        ref.at(x, y) = dataset.at(p, std::uint32_t(y), std::uint32_t(x));
        const Eigen::Vector3d d = (out[t] - ref.at(x, y)).cast<double>();
        abs_sum += d.cwiseAbs().sum();
        sq_sum += d.squaredNorm();
      }
    }
    if (w >= 11 && h >= 11) m.dssim.push_back(compute_dssim(pred, ref));
  }
  const double count = double(pairs.size()) * double(dataset.texels()) * 3.0;
  m.mean_l1 = abs_sum / count;
  m.rmse = std::sqrt(sq_sum / count);
  return m;
}

}  // namespace btf
