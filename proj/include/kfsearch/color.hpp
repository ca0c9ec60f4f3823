// Copyright 2026 The kfsearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KFSEARCH_COLOR_HPP_
#define KFSEARCH_COLOR_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kfsearch/core.hpp"
#include "kfsearch/spatial.hpp"

namespace kfs {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Lab {
  double l = 0, a = 0, b = 0;
};

/// sRGB (D65) to CIELAB.
Lab srgb_to_lab(Rgb rgb);
/// CIE76 color difference.
double delta_e76(const Lab& x, const Lab& y);

inline constexpr std::size_t kPaletteSize = 32;
/// Similarity kernel width: score = exp(-distance / sigma).
inline constexpr double kScoreSigma = 25.0;
/// The second nearest color is also voted when score2 / score1 exceeds this.
inline constexpr double kSecondaryRatio = 0.5;
/// A cell keeps every color voted by more than this fraction of its pixels.
inline constexpr double kCellColorFraction = 0.07;

class Palette {
 public:
  struct Entry {
    ClassLabel name;
    Rgb rgb;
    Lab lab;
  };

  /// Requires exactly 32 distinct names.
  explicit Palette(std::vector<Entry> entries);

  /// Reads 32 lines of "name #RRGGBB"; blank lines and '#' comments are skipped.
  static Palette load(const std::string& path);
  static Palette parse(std::string_view text);
  static const Palette& default_palette();

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::string to_text() const;

 private:
  std::vector<Entry> entries_;
};

std::string rgb_hex(Rgb rgb);

/// Palette indices voted by one pixel.
struct PixelColorVote {
  std::size_t primary = 0;
  std::optional<std::size_t> secondary;
};

/// Nearest palette color by CIE76 distance (ties go to the earlier palette
/// entry); the runner-up is added when its score ratio exceeds kSecondaryRatio.
PixelColorVote classify_lab(const Lab& lab, const Palette& palette);
PixelColorVote classify_pixel(Rgb rgb, const Palette& palette);

/// Colors (in palette order) voted by more than 7% of the pixels. Falls back to
/// the plurality color when nothing clears the bar, so never empty.
std::vector<ClassLabel> assign_cell_colors(std::span<const Rgb> pixels, const Palette& palette);

/// Row-major 8-bit RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, Rgb fill = {});
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Mean HSV saturation below this marks a keyframe as black & white.
inline constexpr double kBwSaturation = 0.06;

struct ColorExtraction {
  std::vector<ColorCellAssignment> cells;  // 49 entries, row-major
  bool is_bw = false;
};

/// Runs the per-cell color assignment over the 7x7 grid. A pixel straddling a
/// cell boundary votes in each cell with the fraction of its area inside it,
/// which makes the result invariant under integer nearest-neighbor upscaling.
ColorExtraction extract_colors(const Image& image, const Palette& palette);

/// Decodes PNG/JPEG/BMP/... into RGB. Throws Error on failure.
Image decode_image(const std::string& path);

}  // namespace kfs

#endif  // KFSEARCH_COLOR_HPP_
