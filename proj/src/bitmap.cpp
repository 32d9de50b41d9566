#include "tarpit/bitmap.hpp"

#include <fstream>
#include <stdexcept>

namespace tarpit {

Bitmap::Bitmap(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < kMinHashWidth || h < kMinHashHeight) {
    throw std::invalid_argument("Bitmap: minimum size is 9x8, got " + std::to_string(w) + "x" +
                                std::to_string(h));
  }
  pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // 0.299 R + 0.587 G + 0.114 B in fixed point, half-up rounding.
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

Bitmap load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_pgm: cannot open " + path);

  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("load_pgm: " + path + ": expected P5, got " + magic);

  // Header tokens may be separated by whitespace and '#' comment lines.
  auto next_int = [&](const char* what) {
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      if (std::isspace(c)) {
        in.get();
        continue;
      }
      break;
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw std::runtime_error(std::string("load_pgm: bad ") + what + " in " + path);
    return static_cast<int>(v);
  };

  int w = next_int("width");
  int h = next_int("height");
  int maxval = next_int("maxval");
  if (maxval != 255) throw std::runtime_error("load_pgm: only maxval 255 is supported");
  in.get();  // single whitespace byte before the raster

  Bitmap img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error("load_pgm: truncated raster in " + path);
  }
  return img;
}

void save_pgm(const Bitmap& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_pgm: cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("save_pgm: write failed for " + path);
}

}  // namespace tarpit
