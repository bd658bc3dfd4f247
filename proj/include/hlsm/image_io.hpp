#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "hlsm/sim.hpp"

namespace hlsm {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline int pnm_int(std::istream& in) {
  // Skips whitespace and '#' comments between header fields.
  int c = in.get();
  while (c == '#' || std::isspace(c)) {
    if (c == '#')
      while (c != '\n' && c != EOF) c = in.get();
    c = in.get();
  }
  int v = 0;
  bool any = false;
  while (c >= '0' && c <= '9') {
    v = v * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ImageError("malformed PNM header");
  return v;
}

}  // namespace detail

inline void write_ppm(const RgbImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot write image: " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int ch = 0; ch < 3; ++ch) {
        const double x = std::clamp(img.at(ch, u, v), 0.0, 1.0);
        f.put(static_cast<char>(std::lround(x * 255.0)));
      }
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  f.get(m0), f.get(m1);
  if (m0 != 'P' || m1 != '6') throw ImageError("not a P6 PPM: " + path);
  const int w = detail::pnm_int(f);
  const int h = detail::pnm_int(f);
  const int maxval = detail::pnm_int(f);
  if (maxval != 255) throw ImageError("unsupported PPM maxval");
  RgbImage img(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      for (int ch = 0; ch < 3; ++ch) {
        const int b = f.get();
        if (b == EOF) throw ImageError("truncated PPM: " + path);
        img.at(ch, u, v) = b / 255.0;
      }
  return img;
}

// 8-bit class-index maps travel as P5 PGM.
inline void write_pgm(const Grid2<uint8_t>& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot write image: " + path);
  f << "P5\n" << img.nx() << " " << img.ny() << "\n255\n";
  for (int v = 0; v < img.ny(); ++v)
    for (int u = 0; u < img.nx(); ++u) f.put(static_cast<char>(img.at(u, v)));
}

inline Grid2<uint8_t> read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  f.get(m0), f.get(m1);
  if (m0 != 'P' || m1 != '5') throw ImageError("not a P5 PGM: " + path);
  const int w = detail::pnm_int(f);
  const int h = detail::pnm_int(f);
  const int maxval = detail::pnm_int(f);
  if (maxval > 255) throw ImageError("unsupported PGM maxval");
  Grid2<uint8_t> img(w, h, 0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const int b = f.get();
      if (b == EOF) throw ImageError("truncated PGM: " + path);
      img.at(u, v) = static_cast<uint8_t>(b);
    }
  return img;
}

}  // namespace hlsm
