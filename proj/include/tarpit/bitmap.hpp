#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tarpit {

// Grayscale image, row-major, one byte per pixel. The 9x8 gradient hash needs
// at least a 9x8 source, so smaller bitmaps are rejected at construction.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Bitmap() = default;
  Bitmap(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Bitmap& other) const = default;
};

inline constexpr int kMinHashWidth = 9;
inline constexpr int kMinHashHeight = 8;

// Integer BT.601 luma, rounded half up. Used when converting color inputs.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Binary PGM (P5, maxval 255) I/O for fixtures and debug dumps.
Bitmap load_pgm(const std::string& path);
void save_pgm(const Bitmap& img, const std::string& path);

}  // namespace tarpit
