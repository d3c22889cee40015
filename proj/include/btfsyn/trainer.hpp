#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "btfsyn/adamw.hpp"
#include "btfsyn/btf_data.hpp"
#include "btfsyn/checkpoint.hpp"
#include "btfsyn/triple_plane.hpp"

namespace btf {

enum class LossSpace : std::uint8_t { Linear = 0, Log1p = 1 };

struct TrainConfig {
  double lr_planes = 1e-3;
  double lr_mlp = 3e-4;
  int epochs = 50;
  double lr_decay_per_epoch = 0.9;
  int images_per_batch = 16;
  std::uint64_t seed = 0;
  LossSpace loss_space = LossSpace::Linear;

  double weight_decay = 0.01;  // decoupled, MLP weights only unless decay_planes
  bool decay_planes = false;
  double leaky_slope = 0.01;
  bool output_activation = false;
  ModelShape shape;

  int threads = 1;
  Index chunk = 1024;         // samples per forward/backward pass
  int checkpoint_every = 10;  // epochs; 0 disables periodic checkpoints

  /// Throws Argument on non-positive rates, counts or decay outside (0, 1].
  void validate() const;
};

/// lr0 * decay^epoch.
double scheduled_lr(double lr0, double decay, int epoch);

struct EpochLog {
  int epoch = 0;
  double mean_l1 = 0.0;
  double seconds = 0.0;
  double lr_planes = 0.0;
  double lr_mlp = 0.0;
};

struct ReconstructionMetrics {
  double mean_l1 = 0.0;
  double rmse = 0.0;
  std::vector<double> dssim;  // per evaluated pair

  double mean_dssim() const;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::optional<ReconstructionMetrics> final_metrics;

  void write_csv(std::ostream& out) const;
};

/// Joint optimizer over the three planes and the decoder. Per-worker
/// gradient buffers are reduced in worker order, so a run is bitwise
/// reproducible for a fixed seed and thread count.
class Trainer {
 public:
  Trainer(const BtfDataset& dataset, TrainConfig config);
  /// Continues from a checkpoint carrying trainer state.
  Trainer(const BtfDataset& dataset, TrainConfig config, const Checkpoint& resume);

  /// One AdamW step on every texel of the given pairs; returns the mean L1
  /// of the batch before the update. Throws Numeric on a non-finite loss.
  double step(std::span<const std::uint32_t> pairs, double lr_scale);

  /// The next epoch over all pairs in seed-determined order.
  EpochLog run_epoch();

  using EpochHook = std::function<void(const Trainer&, const EpochLog&)>;
  /// Runs the remaining epochs. `on_checkpoint` fires every
  /// checkpoint_every epochs and after the last one.
  TrainReport run(const EpochHook& on_epoch = {}, const EpochHook& on_checkpoint = {});

  /// Pair order of an epoch; a pure function of (seed, epoch).
  std::vector<std::uint32_t> epoch_order(int epoch) const;

  const TriplePlaneModel<float>& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  int epochs_completed() const { return int(state_.epochs_completed); }
  Checkpoint checkpoint() const;

 private:
  void prepare();
  std::vector<ParamSlot<float>> slots(double lr_scale);

  const BtfDataset& dataset_;
  TrainConfig config_;
  TriplePlaneModel<float> model_;
  TrainerState state_;
  std::vector<float> targets_;           // dataset values in the loss space
  Eigen::Matrix2Xf pair_uv_h_, pair_uv_d_;
  std::vector<ModelGradients<float>> worker_grads_;
};

/// Convenience wrapper: fresh model, full schedule, final metrics over all pairs.
struct TrainResult {
  TriplePlaneModel<float> model;
  TrainReport report;
};
TrainResult train(const BtfDataset& dataset, const TrainConfig& config);

/// Renders each listed pair at exemplar scale in REPEAT mode and compares
/// with the dataset: L1 and RMSE over all values, DSSIM per pair. An empty
/// list means every pair.
ReconstructionMetrics evaluate_reconstruction(const TriplePlaneModel<float>& model, const BtfDataset& dataset,
                                              std::span<const std::uint32_t> pairs, int threads = 1);

}  // namespace btf
