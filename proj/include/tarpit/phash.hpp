#pragma once

#include <cstdint>
#include <string>

#include "tarpit/bitmap.hpp"

namespace tarpit {

inline constexpr int kHashBits = 64;

// 64-bit gradient (difference) hash over a 9x8 area-averaged downsample.
struct PHash {
  std::uint64_t bits = 0;

  bool operator==(const PHash&) const = default;

  std::string to_hex() const;  // 16 lowercase hex chars
  static PHash from_hex(const std::string& hex);
};

// Downsamples img to a 9-wide by 8-tall grid by exact area averaging (integer
// arithmetic, half-up rounding), then sets bit i*8+j iff grid[i][j] is strictly
// greater than grid[i][j+1]. Ties produce a 0 bit.
PHash dhash(const Bitmap& img);

int hamming(PHash a, PHash b);

// 1 - hamming/64, in [0, 1].
double similarity(PHash a, PHash b);
double similarity(const Bitmap& a, const Bitmap& b);

// True iff similarity(a, b) >= theta. theta must lie in (0, 1].
bool is_ui_similar(PHash a, PHash b, double theta);
bool is_ui_similar(const Bitmap& a, const Bitmap& b, double theta);

}  // namespace tarpit
