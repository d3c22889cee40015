#pragma once

// TPLN checkpoint container, little-endian:
//   "TPLN" | u32 version=1
//   3 x plane header {u32 width, u32 height, u32 channels, u8 wrap_u, u8 wrap_v, u16 0}  (U, H, D)
//   u32 layer_count | u32 dims[layer_count + 1] | f32 leaky_slope
//   u8 output_activation | u8 output_space | u16 0
//   f32 tensors: U, H, D planes ([row][col][channel]), then per layer W (row-major out x in), b
//   u32 block_count | blocks {char tag[4], u64 length, payload}
// Blocks: "GLUT" Gaussianization tables and plane, "QPLN" quilted positional
// plane, "TRST" optimizer state for resuming. Unknown tags are skipped.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "btfsyn/adamw.hpp"
#include "btfsyn/synthesis.hpp"
#include "btfsyn/triple_plane.hpp"

namespace btf {

struct TrainerState {
  std::uint32_t epochs_completed = 0;
  AdamWState<float> adam;
};

struct Checkpoint {
  TriplePlaneModel<float> model;
  std::optional<GaussianizedExemplar> gaussianization;
  std::shared_ptr<const QuiltedPlane> quilted;
  std::optional<TrainerState> trainer;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Standalone feature-plane file ("FPLN" | u32 version | plane header | f32 data).
void save_plane(const FeaturePlane<float>& plane, const std::filesystem::path& path);
FeaturePlane<float> load_plane(const std::filesystem::path& path);

}  // namespace btf
