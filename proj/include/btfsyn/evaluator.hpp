#pragma once

// Query engine: positional feature from the chosen synthesis mode,
// directional features from the H and D planes, decoded by the MLP.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>

#include "btfsyn/checkpoint.hpp"
#include "btfsyn/synthesis.hpp"
#include "btfsyn/triple_plane.hpp"

namespace btf {

struct BtfQuery {
  Eigen::Vector2d u_star;  // unbounded surface UV in exemplar periods
  Eigen::Vector3f wi;
  Eigen::Vector3f wo;
};

/// Reflectance (no cosine factor), negative decoder outputs clamped to 0.
/// Throws DegeneratePair, OutOfHemisphere, Argument for non-unit directions,
/// or Configuration when a mode lacks its data.
Eigen::Vector3f query(const TriplePlaneModel<float>& model, const GaussianizedExemplar* gex,
                      const SynthesisParams& params, const BtfQuery& q);

enum class QueryStatus : std::uint8_t { Ok = 0, DegeneratePair, OutOfHemisphere, InvalidDirection };

/// Elementwise query. Failed elements get RGB 0 and a non-Ok status.
/// Configuration errors are not per-element and throw before any work.
void query_batch(const TriplePlaneModel<float>& model, const GaussianizedExemplar* gex,
                 const SynthesisParams& params, std::span<const BtfQuery> queries,
                 std::span<Eigen::Vector3f> out, std::span<QueryStatus> status, int threads = 1);

/// Immutable query handle; builds the Gaussianized exemplar once.
class Evaluator {
 public:
  Evaluator(TriplePlaneModel<float> model, SynthesisParams params,
            std::optional<GaussianizedExemplar> gex = std::nullopt);

  /// Takes the GLUT and QPLN blocks from the checkpoint when present.
  static Evaluator from_checkpoint(Checkpoint ckpt, SynthesisParams params);

  Eigen::Vector3f query(const BtfQuery& q) const;
  void query_batch(std::span<const BtfQuery> queries, std::span<Eigen::Vector3f> out,
                   std::span<QueryStatus> status, int threads = 1) const;
  Eigen::VectorXf positional_feature(const Eigen::Vector2d& u_star) const;

  const TriplePlaneModel<float>& model() const { return model_; }
  const SynthesisParams& params() const { return params_; }
  const GaussianizedExemplar& gaussianization() const { return gex_; }

 private:
  TriplePlaneModel<float> model_;
  SynthesisParams params_;
  GaussianizedExemplar gex_;
};

}  // namespace btf
