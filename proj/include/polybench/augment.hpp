#pragma once

#include <utility>
#include <vector>

#include "polybench/image.hpp"

namespace polybench {

// The 8 dihedral variants. "flip" is a vertical (up-down) flip; flip_rotX is
// the flip applied to the rotX image. Rotations are counterclockwise.
enum class AugmentationOp : int {
  id = 0,
  rot90,
  rot180,
  rot270,
  flip,
  flip_rot90,
  flip_rot180,
  flip_rot270,
};

inline constexpr int kNumAugOps = 8;

const char* aug_op_name(AugmentationOp op);
AugmentationOp aug_op_from_name(const std::string& name);

PixelPlane rot90_ccw(const PixelPlane& m);
PixelPlane flip_vertical(const PixelPlane& m);

TexturalImage apply_aug(const TexturalImage& img, AugmentationOp op);

// All 8 variants in canonical op order; throws on non-224x224 input.
std::vector<std::pair<AugmentationOp, TexturalImage>> augment_image(
    const TexturalImage& img);

}  // namespace polybench
