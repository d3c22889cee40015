#include <cmath>

#include "btfsyn/error.hpp"
#include "btfsyn/evaluator.hpp"
#include "btfsyn/halfdiff.hpp"
#include "btfsyn/parallel.hpp"

namespace btf {

namespace {

void check_direction(const Eigen::Vector3f& w, const char* name) {
  if (!w.allFinite() || std::abs(w.norm() - 1.0f) > 1e-5f) {
    throw Error(ErrorKind::Argument, std::string("query: ") + name + " is not a unit vector");
  }
  if (!(w.z() > 0.0f)) {
    throw Error(ErrorKind::OutOfHemisphere, std::string("query: ") + name + " is below the horizon");
  }
}

void check_mode(const GaussianizedExemplar* gex, const SynthesisParams& params) {
  params.validate();
  const bool blended = params.mode == SynthesisMode::HistBlend || params.mode == SynthesisMode::HexTile;
  if (blended && !gex) throw Error(ErrorKind::Configuration, "query: blending mode needs a Gaussianized exemplar");
}

}  // namespace

Eigen::Vector3f query(const TriplePlaneModel<float>& model, const GaussianizedExemplar* gex,
                      const SynthesisParams& params, const BtfQuery& q) {
  check_direction(q.wi, "wi");
  check_direction(q.wo, "wo");
  const auto hd = to_half_diff(DirectionPair<float>{q.wi, q.wo});
  const auto dir = halfdiff_to_plane_uv(hd);
  const Eigen::VectorXf pos = synthesize_feature(model.plane_u, gex, params, q.u_star);
  return model.decode_feature(pos, dir).cwiseMax(0.0f);
}

void query_batch(const TriplePlaneModel<float>& model, const GaussianizedExemplar* gex,
                 const SynthesisParams& params, std::span<const BtfQuery> queries,
                 std::span<Eigen::Vector3f> out, std::span<QueryStatus> status, int threads) {
  if (out.size() != queries.size() || status.size() != queries.size()) {
    throw Error(ErrorKind::Argument, "query_batch: output spans must match the query count");
  }
  check_mode(gex, params);
  parallel_for(queries.size(), resolve_threads(threads), [&](std::size_t i) {
    try {
      out[i] = query(model, gex, params, queries[i]);
      status[i] = QueryStatus::Ok;
    } catch (const Error& e) {
      out[i].setZero();
      switch (e.kind()) {
        case ErrorKind::DegeneratePair: status[i] = QueryStatus::DegeneratePair; break;
        case ErrorKind::OutOfHemisphere: status[i] = QueryStatus::OutOfHemisphere; break;
        case ErrorKind::Argument: status[i] = QueryStatus::InvalidDirection; break;
        default: throw;
      }
    }
  });
}

Evaluator::Evaluator(TriplePlaneModel<float> model, SynthesisParams params, std::optional<GaussianizedExemplar> gex)
    : model_(std::move(model)), params_(std::move(params)) {
  model_.validate();
  params_.validate();
  if (gex) {
    if (gex->gauss_plane.width() != model_.plane_u.width() || gex->gauss_plane.height() != model_.plane_u.height() ||
        gex->gauss_plane.channels() != model_.plane_u.channels() ||
        Index(gex->luts.size()) != model_.plane_u.channels()) {
      throw Error(ErrorKind::Format, "Evaluator: Gaussianization does not match the positional plane");
    }
    gex_ = std::move(*gex);
  } else {
    gex_ = build_gaussianization(model_.plane_u);
  }
}

Evaluator Evaluator::from_checkpoint(Checkpoint ckpt, SynthesisParams params) {
  if (!params.quilted) params.quilted = ckpt.quilted;
  return Evaluator(std::move(ckpt.model), std::move(params), std::move(ckpt.gaussianization));
}

Eigen::Vector3f Evaluator::query(const BtfQuery& q) const { return btf::query(model_, &gex_, params_, q); }

void Evaluator::query_batch(std::span<const BtfQuery> queries, std::span<Eigen::Vector3f> out,
                            std::span<QueryStatus> status, int threads) const {
  btf::query_batch(model_, &gex_, params_, queries, out, status, threads);
}

Eigen::VectorXf Evaluator::positional_feature(const Eigen::Vector2d& u_star) const {
  return synthesize_feature(model_.plane_u, &gex_, params_, u_star);
}

}  // namespace btf
