#include <algorithm>
#include <limits>
#include <random>

#include "btfsyn/error.hpp"
#include "btfsyn/synthesis.hpp"

namespace btf {

SeamPath minimum_vertical_seam(const Eigen::MatrixXd& error) {
  const Index rows = error.rows();
  const Index cols = error.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorKind::Argument, "minimum_vertical_seam: empty surface");

  Eigen::MatrixXd cost(rows, cols);
  cost.row(0) = error.row(0);
  for (Index r = 1; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double best = cost(r - 1, c);
      if (c > 0) best = std::min(best, cost(r - 1, c - 1));
      if (c + 1 < cols) best = std::min(best, cost(r - 1, c + 1));
      cost(r, c) = error(r, c) + best;
    }
  }

  SeamPath path;
  path.column.resize(std::size_t(rows));
  Index c = 0;
  for (Index k = 1; k < cols; ++k) {
    if (cost(rows - 1, k) < cost(rows - 1, c)) c = k;
  }
  path.cost = cost(rows - 1, c);
  path.column.back() = c;
  for (Index r = rows - 2; r >= 0; --r) {
    Index best = std::max<Index>(c - 1, 0);
    for (Index k = best + 1; k <= std::min(c + 1, cols - 1); ++k) {
      if (cost(r, k) < cost(r, best)) best = k;
    }
    c = best;
    path.column[static_cast<std::size_t>(r)] = c;
  }
  return path;
}

FeaturePlane<float> quilt_synthesize(const FeaturePlane<float>& plane, Index out_w, Index out_h,
                                     const QuiltOptions& options) {
  const Index block = options.block;
  const Index overlap = options.overlap;
  if (overlap < 0 || overlap >= block || block > std::min(plane.width(), plane.height())) {
    throw Error(ErrorKind::Argument, "quilt_synthesize: need 0 <= overlap < block <= min(plane dims)");
  }
  if (out_w <= 0 || out_h <= 0 || options.stride < 1 || !(options.tolerance >= 0.0)) {
    throw Error(ErrorKind::Argument, "quilt_synthesize: invalid output size, stride or tolerance");
  }

  const Index channels = plane.channels();
  FeaturePlane<float> out(out_w, out_h, channels, AddressMode::Wrap, AddressMode::Wrap);
  const Index step = block - overlap;
  std::mt19937_64 rng(options.seed);

  std::vector<std::pair<Index, Index>> sources;
  for (Index sy = 0; sy + block <= plane.height(); sy += options.stride) {
    for (Index sx = 0; sx + block <= plane.width(); sx += options.stride) sources.push_back({sx, sy});
  }

  for (Index by = 0; by < out_h; by += step) {
    for (Index bx = 0; bx < out_w; bx += step) {
      const Index bw = std::min(block, out_w - bx);
      const Index bh = std::min(block, out_h - by);
      const bool left = bx > 0 && overlap > 0;
      const bool top = by > 0 && overlap > 0;
      auto in_overlap = [&](Index r, Index c) { return (left && c < overlap) || (top && r < overlap); };

      // Overlap error of every candidate source block.
      std::vector<double> err(sources.size(), 0.0);
      if (left || top) {
        for (std::size_t s = 0; s < sources.size(); ++s) {
          const auto [sx, sy] = sources[s];
          double e = 0.0;
          for (Index r = 0; r < bh; ++r) {
            for (Index c = 0; c < bw; ++c) {
              if (!in_overlap(r, c)) continue;
              e += (plane.texel(sy + r, sx + c) - out.texel(by + r, bx + c)).squaredNorm();
            }
          }
          err[s] = e;
        }
      }
      const double best = *std::min_element(err.begin(), err.end());
      std::vector<std::size_t> pool;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (err[s] <= best * (1.0 + options.tolerance)) pool.push_back(s);
      }
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const auto [sx, sy] = sources[pool[pick(rng)]];

      auto diff = [&](Index r, Index c) {
        return double((plane.texel(sy + r, sx + c) - out.texel(by + r, bx + c)).squaredNorm());
      };
      // Seam columns (left overlap) per row and seam rows (top overlap) per column.
      std::vector<Index> vseam(std::size_t(bh), 0);
      std::vector<Index> hseam(std::size_t(bw), 0);
      if (left) {
        const Index ow = std::min(overlap, bw);
        Eigen::MatrixXd surface(bh, ow);
        for (Index r = 0; r < bh; ++r)
          for (Index c = 0; c < ow; ++c) surface(r, c) = diff(r, c);
        vseam = minimum_vertical_seam(surface).column;
      }
      if (top) {
        const Index oh = std::min(overlap, bh);
        Eigen::MatrixXd surface(bw, oh);
        for (Index c = 0; c < bw; ++c)
          for (Index r = 0; r < oh; ++r) surface(c, r) = diff(r, c);
        hseam = minimum_vertical_seam(surface).column;
      }

      for (Index r = 0; r < bh; ++r) {
        for (Index c = 0; c < bw; ++c) {
          const bool take_new = (!left || c >= vseam[std::size_t(r)]) && (!top || r >= hseam[std::size_t(c)]);
          if (take_new) out.texel(by + r, bx + c) = plane.texel(sy + r, sx + c);
        }
      }
    }
  }
  return out;
}

}  // namespace btf
