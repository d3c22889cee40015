// btf: command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/checkpoint.hpp"
#include "btfsyn/config.hpp"
#include "btfsyn/error.hpp"
#include "btfsyn/evaluator.hpp"
#include "btfsyn/image.hpp"
#include "btfsyn/render.hpp"
#include "btfsyn/synthesis.hpp"
#include "btfsyn/trainer.hpp"

namespace {

using namespace btf;

const std::map<std::string, SynthesisMode> kModes{{"repeat", SynthesisMode::Repeat},
                                                   {"hist", SynthesisMode::HistBlend},
                                                   {"hex", SynthesisMode::HexTile},
                                                   {"quilt", SynthesisMode::Quilted}};

Eigen::Vector3d vec3(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

struct SynthesisFlags {
  SynthesisMode mode = SynthesisMode::Repeat;
  double grid_scale = 0.25;
  std::uint64_t seed = 0;
  Index tileable_border = -1;

  void add(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "repeat | hist | hex | quilt")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
    cmd->add_option("--grid-scale", grid_scale, "synthesis lattice edge in exemplar UV");
    cmd->add_option("--seed", seed, "synthesis seed");
    cmd->add_option("--tileable-border", tileable_border,
                    "cross-fade border applied to the U plane in hist/hex modes (-1 = min(w,h)/25, 0 = off)");
  }

  Evaluator evaluator(Checkpoint ckpt) const {
    if (tileable_border < -1) throw Error(ErrorKind::Argument, "--tileable-border must be >= -1");
    const bool dynamic = mode == SynthesisMode::HistBlend || mode == SynthesisMode::HexTile;
    const Index border = tileable_border < 0 ? default_tileable_border(ckpt.model.plane_u) : tileable_border;
    if (dynamic && border > 0) {
      ckpt.model.plane_u = make_tileable(ckpt.model.plane_u, border);
      ckpt.gaussianization.reset();
    }
    SynthesisParams params;
    params.mode = mode;
    params.grid_scale = grid_scale;
    params.seed = seed;
    return Evaluator::from_checkpoint(std::move(ckpt), params);
  }
};

bool has_extension(const std::string& path, const std::string& ext) {
  return path.size() >= ext.size() && std::equal(ext.rbegin(), ext.rend(), path.rbegin(), [](char a, char b) {
           return std::tolower(static_cast<unsigned char>(a)) == b;
         });
}

void write_image(const ImageBuffer& img, const std::string& path, double exposure, double gamma) {
  if (has_extension(path, ".pfm")) {
    write_pfm(img, path);
  } else if (has_extension(path, ".png")) {
    write_png(img, path, exposure, gamma);
  } else {
    throw Error(ErrorKind::Argument, "output image must end in .png or .pfm");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Triple-plane BTF decomposition and by-example synthesis"};
  app.require_subcommand(1);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "generate an analytic BTF exemplar");
  std::string gen_spec, gen_out;
  std::optional<std::uint64_t> gen_seed;
  bool gen_f16 = false;
  gen->add_option("--spec", gen_spec, "TOML file with a [synthetic] table");
  gen->add_option("--out", gen_out, "output .btf path")->required();
  gen->add_option("--seed", gen_seed, "overrides the albedo and roughness seeds");
  gen->add_flag("--f16", gen_f16, "store reflectance as 16-bit floats");

  // train
  auto* tr = app.add_subcommand("train", "fit planes and decoder to a BTF");
  std::string tr_data, tr_out, tr_config, tr_log, tr_resume;
  std::optional<int> tr_epochs, tr_threads;
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--data", tr_data, "input .btf")->required();
  tr->add_option("--out", tr_out, "output checkpoint")->required();
  tr->add_option("--config", tr_config, "TOML file with [train] and [model] tables");
  tr->add_option("--log", tr_log, "CSV training log (default <out>.csv)");
  tr->add_option("--resume", tr_resume, "continue from a checkpoint");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--threads", tr_threads);
  tr->add_option("--seed", tr_seed);

  // eval
  auto* ev = app.add_subcommand("eval", "reconstruction metrics against the training data");
  std::string ev_ckpt, ev_data;
  std::size_t ev_stride = 1;
  int ev_threads = 1;
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--pair-stride", ev_stride, "evaluate every k-th pair")->check(CLI::PositiveNumber);
  ev->add_option("--threads", ev_threads);

  // render
  auto* rd = app.add_subcommand("render", "render the synthesized surface under one light");
  std::string rd_ckpt, rd_reference, rd_out, rd_camera = "ortho";
  RenderSpec spec;
  SynthesisFlags rd_syn;
  std::vector<double> rd_light, rd_point, rd_radiance, rd_eye, rd_target;
  rd->add_option("--ckpt", rd_ckpt);
  rd->add_option("--reference", rd_reference, "render a .btf by interpolation instead of a checkpoint");
  rd->add_option("--out", rd_out, ".png or .pfm")->required();
  rd->add_option("--scale", spec.uv_scale, "exemplar periods across the image");
  rd->add_option("--width", spec.width);
  rd->add_option("--height", spec.height);
  rd->add_option("--light", rd_light, "directional light, towards the light")->delimiter(',')->expected(3);
  rd->add_option("--point-light", rd_point, "point light position")->delimiter(',')->expected(3);
  rd->add_option("--radiance", rd_radiance, "light radiance or intensity")->delimiter(',')->expected(3);
  rd->add_option("--camera", rd_camera)->check(CLI::IsMember({"ortho", "persp"}));
  rd->add_option("--eye", rd_eye)->delimiter(',')->expected(3);
  rd->add_option("--target", rd_target)->delimiter(',')->expected(3);
  rd->add_option("--fov", spec.camera.fov_deg);
  rd->add_option("--exposure", spec.exposure);
  rd->add_option("--gamma", spec.gamma);
  rd->add_option("--threads", spec.threads);
  rd_syn.add(rd);

  // synth-quilt
  auto* sq = app.add_subcommand("synth-quilt", "pre-generate a quilted positional plane");
  std::string sq_ckpt, sq_out;
  double sq_scale = 15.0;
  QuiltOptions quilt;
  quilt.block = 96;
  quilt.overlap = 24;
  sq->add_option("--ckpt", sq_ckpt)->required();
  sq->add_option("--out", sq_out, "checkpoint with the quilted plane block")->required();
  sq->add_option("--scale", sq_scale);
  sq->add_option("--block", quilt.block);
  sq->add_option("--overlap", quilt.overlap);
  sq->add_option("--tolerance", quilt.tolerance);
  sq->add_option("--stride", quilt.stride);
  sq->add_option("--seed", quilt.seed);

  // metrics
  auto* mt = app.add_subcommand("metrics", "RMSE and DSSIM between two PFM images");
  std::string mt_a, mt_b;
  bool mt_per_channel = false;
  mt->add_option("a", mt_a)->required();
  mt->add_option("b", mt_b)->required();
  mt->add_flag("--per-channel", mt_per_channel, "average DSSIM over RGB instead of luma");

  // bench
  auto* bn = app.add_subcommand("bench", "query throughput at n and 4n");
  std::string bn_ckpt;
  std::size_t bn_n = 518400;
  int bn_threads = 1, bn_reps = 3;
  SynthesisFlags bn_syn;
  bn->add_option("--ckpt", bn_ckpt)->required();
  bn->add_option("--n", bn_n)->check(CLI::PositiveNumber);
  bn->add_option("--threads", bn_threads);
  bn->add_option("--repetitions", bn_reps);
  bn_syn.add(bn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*gen) {
    SyntheticBtfSpec s;
    if (!gen_spec.empty()) {
      const auto cfg = Config::load(gen_spec);
      apply_config(cfg, s);
    }
    if (gen_seed) {
      s.albedo_seed = *gen_seed;
      s.roughness_seed = *gen_seed + 1;
    }
    const auto data = generate_synthetic_btf(s);
    save_btf(data, gen_out, gen_f16 ? DiskScalar::F16 : DiskScalar::F32);
    std::cout << "wrote " << gen_out << ": " << data.width << "x" << data.height << ", " << data.pair_count()
              << " pairs\n";
  } else if (*tr) {
    const auto data = load_btf(tr_data);
    TrainConfig cfg;
    if (!tr_config.empty()) apply_config(Config::load(tr_config), cfg);
    if (tr_epochs) cfg.epochs = *tr_epochs;
    if (tr_threads) cfg.threads = *tr_threads;
    if (tr_seed) cfg.seed = *tr_seed;
    auto trainer = tr_resume.empty() ? Trainer(data, cfg) : Trainer(data, cfg, load_checkpoint(tr_resume));
    auto report = trainer.run(
        [](const Trainer&, const EpochLog& e) {
          std::cout << "epoch " << e.epoch << "  l1 " << std::setprecision(6) << e.mean_l1 << "  " << e.seconds
                    << " s\n";
        },
        [&](const Trainer& t, const EpochLog&) { save_checkpoint(t.checkpoint(), tr_out); });
    report.final_metrics = evaluate_reconstruction(trainer.model(), data, {}, cfg.threads);
    auto ckpt = trainer.checkpoint();
    ckpt.gaussianization = build_gaussianization(ckpt.model.plane_u);
    save_checkpoint(ckpt, tr_out);
    std::ofstream log(tr_log.empty() ? tr_out + ".csv" : tr_log);
    report.write_csv(log);
    std::cout << "final l1 " << report.final_metrics->mean_l1 << "  rmse " << report.final_metrics->rmse
              << "  dssim " << report.final_metrics->mean_dssim() << '\n';
  } else if (*ev) {
    const auto data = load_btf(ev_data);
    const auto ckpt = load_checkpoint(ev_ckpt);
    std::vector<std::uint32_t> pairs;
    for (std::size_t p = 0; p < data.pair_count(); p += ev_stride) pairs.push_back(std::uint32_t(p));
    const auto m = evaluate_reconstruction(ckpt.model, data, pairs, ev_threads);
    std::cout << std::setprecision(8) << "mean_l1 " << m.mean_l1 << "\nrmse " << m.rmse << "\nmean_dssim "
              << m.mean_dssim() << '\n';
  } else if (*rd) {
    if (!rd_light.empty()) spec.light.direction = vec3(rd_light);
    if (!rd_point.empty()) {
      spec.light.kind = Light::Kind::Point;
      spec.light.position = vec3(rd_point);
    }
    if (!rd_radiance.empty()) spec.light.radiance = spec.light.intensity = vec3(rd_radiance);
    if (rd_camera == "persp") spec.camera.kind = Camera::Kind::Perspective;
    if (!rd_eye.empty()) spec.camera.eye = vec3(rd_eye);
    if (!rd_target.empty()) spec.camera.target = vec3(rd_target);
    ImageBuffer img;
    if (!rd_reference.empty()) {
      img = render_reference(load_btf(rd_reference), spec);
    } else if (!rd_ckpt.empty()) {
      img = render_plane(rd_syn.evaluator(load_checkpoint(rd_ckpt)), spec);
    } else {
      throw Error(ErrorKind::Argument, "render needs --ckpt or --reference");
    }
    write_image(img, rd_out, spec.exposure, spec.gamma);
    std::cout << "wrote " << rd_out << '\n';
  } else if (*sq) {
    if (!(sq_scale >= 1.0)) throw Error(ErrorKind::Argument, "--scale must be >= 1");
    auto ckpt = load_checkpoint(sq_ckpt);
    const auto& u = ckpt.model.plane_u;
    const Index w = Index(std::llround(sq_scale * double(u.width())));
    const Index h = Index(std::llround(sq_scale * double(u.height())));
    auto q = std::make_shared<QuiltedPlane>();
    q->plane = quilt_synthesize(u, w, h, quilt);
    q->uv_scale = sq_scale;
    ckpt.quilted = std::move(q);
    save_checkpoint(ckpt, sq_out);
    std::cout << "wrote " << sq_out << ": quilted plane " << w << "x" << h << ", "
              << quilted_plane_bytes(ckpt.model.shape(), sq_scale) << " bytes\n";
  } else if (*mt) {
    const auto a = read_pfm(mt_a);
    const auto b = read_pfm(mt_b);
    std::cout << std::setprecision(8) << "rmse " << compute_rmse(a, b) << "\ndssim "
              << compute_dssim(a, b, mt_per_channel ? DssimChannels::PerChannel : DssimChannels::Luma) << '\n';
  } else if (*bn) {
    const auto eval = bn_syn.evaluator(load_checkpoint(bn_ckpt));
    const auto r = bench(eval, bn_n, bn_threads, bn_syn.seed, bn_reps);
    std::cout << std::setprecision(6) << "n " << r.n << "  threads " << r.threads << "\n"
              << "time(n) " << r.seconds_n << " s  time(4n) " << r.seconds_4n << " s  ratio " << r.ratio() << "\n"
              << "throughput " << r.queries_per_second() << " queries/s  (" << r.ns_per_query() << " ns/query)\n"
              << "reference: 2.0 ms for 2,073,600 queries on an RTX 4090; this CPU would take "
              << r.ns_per_query() * 2073600.0 * 1e-6 << " ms\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const btf::Error& e) {
    std::cerr << "btf: " << btf::to_string(e.kind()) << ": " << e.what() << '\n';
    return btf::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "btf: internal error: " << e.what() << '\n';
    return 4;
  }
}
