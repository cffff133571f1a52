#pragma once

#include <cstdint>
#include <vector>

namespace hearbc {

/// 8-bit RGB image, row-major [h][w][3].
struct Image {
  int h = 0, w = 0;
  std::vector<uint8_t> rgb;

  Image() = default;
  Image(int height, int width) : h(height), w(width), rgb(static_cast<size_t>(height) * width * 3, 0) {}

  uint8_t* px(int y, int x) { return rgb.data() + (static_cast<size_t>(y) * w + x) * 3; }
  const uint8_t* px(int y, int x) const {
    return rgb.data() + (static_cast<size_t>(y) * w + x) * 3;
  }

  bool operator==(const Image& o) const { return h == o.h && w == o.w && rgb == o.rgb; }
};

inline Image center_crop(const Image& img, int size) {
  const int y0 = (img.h - size) / 2;
  const int x0 = (img.w - size) / 2;
  Image out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const uint8_t* s = img.px(y0 + y, x0 + x);
      uint8_t* d = out.px(y, x);
      d[0] = s[0]; d[1] = s[1]; d[2] = s[2];
    }
  return out;
}

inline Image crop_at(const Image& img, int y0, int x0, int size) {
  Image out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const uint8_t* s = img.px(y0 + y, x0 + x);
      uint8_t* d = out.px(y, x);
      d[0] = s[0]; d[1] = s[1]; d[2] = s[2];
    }
  return out;
}

}  // namespace hearbc
