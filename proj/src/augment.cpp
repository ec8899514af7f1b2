#include "polybench/augment.hpp"

#include <string>

#include "polybench/common.hpp"

namespace polybench {

const char* aug_op_name(AugmentationOp op) {
  static const char* names[] = {"id",   "rot90",      "rot180",      "rot270",
                                "flip", "flip_rot90", "flip_rot180", "flip_rot270"};
  return names[static_cast<int>(op)];
}

AugmentationOp aug_op_from_name(const std::string& name) {
  for (int i = 0; i < kNumAugOps; ++i)
    if (name == aug_op_name(static_cast<AugmentationOp>(i)))
      return static_cast<AugmentationOp>(i);
  throw ConfigError("unknown augmentation op: " + name);
}

PixelPlane rot90_ccw(const PixelPlane& m) {
  // [[a,b],[c,d]] -> [[b,d],[a,c]]
  return m.transpose().colwise().reverse();
}

PixelPlane flip_vertical(const PixelPlane& m) { return m.colwise().reverse(); }

TexturalImage apply_aug(const TexturalImage& img, AugmentationOp op) {
  int rot = static_cast<int>(op) % 4;
  bool flip = static_cast<int>(op) >= 4;
  TexturalImage out = img;
  for (int c = 0; c < 3; ++c) {
    PixelPlane p = img.ch[c];
    for (int r = 0; r < rot; ++r) p = rot90_ccw(p);
    if (flip) p = flip_vertical(p);
    out.ch[c] = std::move(p);
  }
  return out;
}

std::vector<std::pair<AugmentationOp, TexturalImage>> augment_image(
    const TexturalImage& img) {
  if (!img.is_standard())
    throw ConfigError("augment_image: expected 224x224 image, got " +
                      std::to_string(img.rows()) + "x" +
                      std::to_string(img.cols()));
  std::vector<std::pair<AugmentationOp, TexturalImage>> out;
  out.reserve(kNumAugOps);
  for (int i = 0; i < kNumAugOps; ++i) {
    auto op = static_cast<AugmentationOp>(i);
    out.emplace_back(op, apply_aug(img, op));
  }
  return out;
}

}  // namespace polybench
