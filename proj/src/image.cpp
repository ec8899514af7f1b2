#include "polybench/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "polybench/common.hpp"

namespace polybench {

std::string TexturalImage::to_bytes() const {
  std::string out;
  out.resize(static_cast<size_t>(rows()) * cols() * 3);
  size_t k = 0;
  for (int y = 0; y < rows(); ++y)
    for (int x = 0; x < cols(); ++x)
      for (int c = 0; c < 3; ++c) out[k++] = static_cast<char>(ch[c](y, x));
  return out;
}

TexturalImage TexturalImage::from_bytes(const std::string& bytes, int rows,
                                        int cols) {
  if (bytes.size() != static_cast<size_t>(rows) * cols * 3)
    throw IoError("from_bytes: size mismatch");
  TexturalImage img = TexturalImage::zero(rows, cols);
  size_t k = 0;
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x)
      for (int c = 0; c < 3; ++c)
        img.ch[c](y, x) = static_cast<uint8_t>(bytes[k++]);
  return img;
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const TexturalImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for write: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.cols(), img.rows(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.cols()) * 3);
  for (int y = 0; y < img.rows(); ++y) {
    for (int x = 0; x < img.cols(); ++x)
      for (int c = 0; c < 3; ++c) row[x * 3 + c] = img.ch[c](y, x);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

TexturalImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  png_byte color = png_get_color_type(png, info);
  png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  TexturalImage img = TexturalImage::zero(static_cast<int>(h), static_cast<int>(w));
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.ch[c](static_cast<int>(y), static_cast<int>(x)) = row[x * 3 + c];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  img.provenance = Provenance::ingested;
  return img;
}

TexturalImage ingest_external_image(const TexturalImage& raw, const CropBox& box) {
  if (box.width <= 0 || box.height <= 0)
    throw ConfigError("degenerate crop box (zero area)");
  if (box.x0 < 0 || box.y0 < 0 || box.x0 + box.width > raw.cols() ||
      box.y0 + box.height > raw.rows())
    throw ConfigError("crop box outside raw bounds");

  TexturalImage out = TexturalImage::zero();
  out.provenance = Provenance::ingested;
  const double sx = static_cast<double>(box.width) / kImageSize;
  const double sy = static_cast<double>(box.height) / kImageSize;
  for (int y = 0; y < kImageSize; ++y) {
    // Pixel-center sampling in the cropped region.
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int ya = std::clamp(y0, 0, box.height - 1) + box.y0;
    int yb = std::clamp(y0 + 1, 0, box.height - 1) + box.y0;
    for (int x = 0; x < kImageSize; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int xa = std::clamp(x0, 0, box.width - 1) + box.x0;
      int xb = std::clamp(x0 + 1, 0, box.width - 1) + box.x0;
      for (int c = 0; c < 3; ++c) {
        double v = (1 - wy) * ((1 - wx) * raw.ch[c](ya, xa) + wx * raw.ch[c](ya, xb)) +
                   wy * ((1 - wx) * raw.ch[c](yb, xa) + wx * raw.ch[c](yb, xb));
        out.ch[c](y, x) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace polybench
