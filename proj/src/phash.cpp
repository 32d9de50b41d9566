#include "tarpit/phash.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace tarpit {

namespace {

constexpr int kGridCols = 9;
constexpr int kGridRows = 8;

void check_dims(const Bitmap& img) {
  if (img.width < kMinHashWidth || img.height < kMinHashHeight) {
    throw std::invalid_argument("dhash: image must be at least 9x8, got " +
                                std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw std::invalid_argument("dhash: pixel buffer does not match dimensions");
  }
}

}  // namespace

std::string PHash::to_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

PHash PHash::from_hex(const std::string& hex) {
  if (hex.size() != 16) throw std::invalid_argument("PHash::from_hex: expected 16 hex chars");
  std::uint64_t v = 0;
  for (char c : hex) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
    else throw std::invalid_argument("PHash::from_hex: bad hex digit");
  }
  return PHash{v};
}

PHash dhash(const Bitmap& img) {
  check_dims(img);
  const int w = img.width;
  const int h = img.height;

  // Exact area averaging. In x-coordinates scaled by 9, pixel column x covers
  // [9x, 9x+9) and grid cell j covers [j*w, (j+1)*w), so overlaps are integer
  // lengths and each pixel column touches at most two cells (w >= 9).
  // The same holds vertically with scale 8. All sums stay in int64.
  std::vector<std::array<std::int64_t, kGridCols>> row_cells(
      static_cast<std::size_t>(h), std::array<std::int64_t, kGridCols>{});
  for (int y = 0; y < h; ++y) {
    auto& cells = row_cells[static_cast<std::size_t>(y)];
    const std::uint8_t* row = &img.pixels[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      const std::int64_t v = row[x];
      const int lo = 9 * x;
      const int j0 = lo / w;
      const int j1 = (lo + 8) / w;
      if (j0 == j1) {
        cells[j0] += v * 9;
      } else {
        const int left = (j0 + 1) * w - lo;
        cells[j0] += v * left;
        cells[j1] += v * (9 - left);
      }
    }
  }

  std::int64_t grid_sum[kGridRows][kGridCols] = {};
  for (int y = 0; y < h; ++y) {
    const int lo = 8 * y;
    const int i0 = lo / h;
    const int i1 = (lo + 7) / h;
    const auto& cells = row_cells[static_cast<std::size_t>(y)];
    if (i0 == i1) {
      for (int j = 0; j < kGridCols; ++j) grid_sum[i0][j] += cells[j] * 8;
    } else {
      const int top = (i0 + 1) * h - lo;
      for (int j = 0; j < kGridCols; ++j) {
        grid_sum[i0][j] += cells[j] * top;
        grid_sum[i1][j] += cells[j] * (8 - top);
      }
    }
  }

  // Each cell accumulated total weight w*h; round the average half up.
  const std::int64_t denom = static_cast<std::int64_t>(w) * h;
  int grid[kGridRows][kGridCols];
  for (int i = 0; i < kGridRows; ++i) {
    for (int j = 0; j < kGridCols; ++j) {
      grid[i][j] = static_cast<int>((2 * grid_sum[i][j] + denom) / (2 * denom));
    }
  }

  PHash out;
  for (int i = 0; i < kGridRows; ++i) {
    for (int j = 0; j + 1 < kGridCols; ++j) {
      if (grid[i][j] > grid[i][j + 1]) out.bits |= 1ULL << (i * 8 + j);
    }
  }
  return out;
}

int hamming(PHash a, PHash b) { return std::popcount(a.bits ^ b.bits); }

double similarity(PHash a, PHash b) {
  return 1.0 - static_cast<double>(hamming(a, b)) / kHashBits;
}

double similarity(const Bitmap& a, const Bitmap& b) { return similarity(dhash(a), dhash(b)); }

bool is_ui_similar(PHash a, PHash b, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("is_ui_similar: theta must be in (0, 1], got " +
                                std::to_string(theta));
  }
  return similarity(a, b) >= theta;
}

bool is_ui_similar(const Bitmap& a, const Bitmap& b, double theta) {
  return is_ui_similar(dhash(a), dhash(b), theta);
}

}  // namespace tarpit
