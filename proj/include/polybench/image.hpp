#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

namespace polybench {

inline constexpr int kImageSize = 224;

using PixelPlane =
    Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Provenance { synthetic, ingested };

// 8-bit RGB image stored as three planes, row 0 at the top.
struct TexturalImage {
  std::array<PixelPlane, 3> ch;
  Provenance provenance = Provenance::synthetic;

  static TexturalImage zero(int rows = kImageSize, int cols = kImageSize) {
    TexturalImage img;
    for (auto& p : img.ch) p = PixelPlane::Zero(rows, cols);
    return img;
  }

  int rows() const { return static_cast<int>(ch[0].rows()); }
  int cols() const { return static_cast<int>(ch[0].cols()); }

  bool is_standard() const { return rows() == kImageSize && cols() == kImageSize; }

  bool pixels_equal(const TexturalImage& o) const {
    for (int c = 0; c < 3; ++c)
      if (ch[c].rows() != o.ch[c].rows() || ch[c].cols() != o.ch[c].cols() ||
          ch[c] != o.ch[c])
        return false;
    return true;
  }

  // Interleaved RGB bytes, row-major.
  std::string to_bytes() const;
  static TexturalImage from_bytes(const std::string& bytes, int rows, int cols);
};

void write_png(const std::string& path, const TexturalImage& img);
TexturalImage read_png(const std::string& path);

// Crop then bilinear-resize to 224x224. Throws on zero-area or out-of-bounds box.
struct CropBox {
  int x0 = 0, y0 = 0, width = 0, height = 0;
};
TexturalImage ingest_external_image(const TexturalImage& raw, const CropBox& box);

}  // namespace polybench
