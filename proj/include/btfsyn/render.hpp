#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/evaluator.hpp"
#include "btfsyn/image.hpp"

namespace btf {

struct Camera {
  enum class Kind { Orthographic, Perspective };
  Kind kind = Kind::Orthographic;
  // Perspective only. The surface is the z = 0 plane, unit quad at [0,1]^2.
  Eigen::Vector3d eye{0.5, -0.6, 1.2};
  Eigen::Vector3d target{0.5, 0.5, 0.0};
  double fov_deg = 60.0;
};

struct Light {
  enum class Kind { Directional, Point };
  Kind kind = Kind::Directional;
  Eigen::Vector3d direction{0.0, 0.0, 1.0};  // towards the light
  Eigen::Vector3d radiance{1.0, 1.0, 1.0};
  Eigen::Vector3d position{0.5, 0.5, 1.0};
  Eigen::Vector3d intensity{1.0, 1.0, 1.0};
};

struct RenderSpec {
  int width = 256;
  int height = 256;
  double uv_scale = 1.0;  // exemplar periods across the unit quad
  Camera camera;
  Light light;
  double exposure = 1.0;
  double gamma = 2.2;
  int threads = 1;

  /// Throws Argument on uv_scale < 1, negative radiance or empty images.
  void validate() const;
};

/// Reflectance source for a render: (u_star, wi, wo) -> RGB.
using ReflectanceFn = std::function<Eigen::Vector3f(const Eigen::Vector2d&, const Eigen::Vector3f&,
                                                    const Eigen::Vector3f&)>;

/// Direct lighting of the z = 0 plane: reflectance * cos(theta_i) * incident
/// radiance. Pixels whose light or view direction is below the horizon are
/// black. Pixel (x, y) of the orthographic camera sees the surface at
/// ((x + 0.5) / W, (y + 0.5) / H), looking straight down.
ImageBuffer render(const RenderSpec& spec, const ReflectanceFn& reflectance);

ImageBuffer render_plane(const Evaluator& evaluator, const RenderSpec& spec);

/// Same geometry with reflectance interpolated from the dataset.
ImageBuffer render_reference(const BtfDataset& dataset, const RenderSpec& spec);

struct BenchReport {
  std::size_t n = 0;
  int threads = 1;
  double seconds_n = 0.0;
  double seconds_4n = 0.0;
  double ratio() const { return seconds_4n / seconds_n; }
  double ns_per_query() const { return 1e9 * seconds_4n / double(4 * n); }
  double queries_per_second() const { return double(4 * n) / seconds_4n; }
};

/// Times query_batch over n and 4n random valid queries (best of
/// `repetitions` runs each).
BenchReport bench(const Evaluator& evaluator, std::size_t n, int threads, std::uint64_t seed,
                  int repetitions = 3);

/// Random valid queries: u_star uniform in [0, extent)^2, directions
/// cosine-distributed over the upper hemisphere.
std::vector<BtfQuery> random_queries(std::size_t n, std::uint64_t seed, double extent = 16.0);

}  // namespace btf
