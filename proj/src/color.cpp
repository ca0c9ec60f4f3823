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

#include "kfsearch/color.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace kfs {

namespace {

double srgb_to_linear(std::uint8_t c) {
  const double v = c / 255.0;
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kEpsilon = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

constexpr const char* kDefaultPalette = R"(black #000000
white #ffffff
gray #808080
lightgray #c0c0c0
darkgray #404040
red #ff0000
darkred #8b0000
pink #ffc0cb
orange #ff8c00
brown #8b4513
tan #d2b48c
cream #fffdd0
yellow #ffff00
gold #d4a017
olive #808000
lime #00ff00
green #008000
darkgreen #004000
teal #008080
cyan #00ffff
skyblue #87ceeb
blue #0000ff
navy #000080
purple #800080
violet #ee82ee
magenta #ff00ff
plum #dda0dd
coral #ff7f50
salmon #fa8072
khaki #f0e68c
rose #ff007f
mint #98ff98
)";

Rgb parse_hex(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') throw InvalidArgument("bad color '" + std::string(hex) + "'");
  unsigned value = 0;
  for (char c : hex.substr(1)) {
    value <<= 4;
    if (c >= '0' && c <= '9') value |= c - '0';
    else if (c >= 'a' && c <= 'f') value |= c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') value |= c - 'A' + 10;
    else throw InvalidArgument("bad color '" + std::string(hex) + "'");
  }
  return Rgb{static_cast<std::uint8_t>(value >> 16), static_cast<std::uint8_t>(value >> 8),
             static_cast<std::uint8_t>(value)};
}

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

double saturation(Rgb c) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  return mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
}

}  // namespace

Lab srgb_to_lab(Rgb rgb) {
  const double r = srgb_to_linear(rgb.r), g = srgb_to_linear(rgb.g), b = srgb_to_linear(rgb.b);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  // D65 reference white.
  const double fx = lab_f(x / 0.95047), fy = lab_f(y / 1.0), fz = lab_f(z / 1.08883);
  return Lab{std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e76(const Lab& x, const Lab& y) {
  return std::sqrt((x.l - y.l) * (x.l - y.l) + (x.a - y.a) * (x.a - y.a) + (x.b - y.b) * (x.b - y.b));
}

Palette::Palette(std::vector<Entry> entries) : entries_(std::move(entries)) {
  if (entries_.size() != kPaletteSize) {
    throw InvalidArgument("palette must have exactly 32 colors, got " + std::to_string(entries_.size()));
  }
  std::set<std::string> names;
  for (const auto& e : entries_) {
    if (!names.insert(e.name.name()).second) {
      throw InvalidArgument("duplicate palette color '" + e.name.name() + "'");
    }
  }
}

Palette Palette::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens.size() != 2) throw InvalidArgument("palette line must be 'name #RRGGBB': " + line);
    ClassLabel name(tokens[0]);
    if (name.name() != tokens[0]) {
      throw InvalidArgument("palette name '" + std::string(tokens[0]) + "' is not a normalized label");
    }
    const Rgb rgb = parse_hex(tokens[1]);
    entries.push_back({std::move(name), rgb, srgb_to_lab(rgb)});
  }
  return Palette(std::move(entries));
}

Palette Palette::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open palette " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Palette& Palette::default_palette() {
  static const Palette palette = parse(kDefaultPalette);
  return palette;
}

std::optional<std::size_t> Palette::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name.name() == name) return i;
  }
  return std::nullopt;
}

std::string Palette::to_text() const {
  std::string out;
  for (const auto& e : entries_) out += e.name.name() + " " + rgb_hex(e.rgb) + "\n";
  return out;
}

std::string rgb_hex(Rgb rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb.r, rgb.g, rgb.b);
  return buf;
}

PixelColorVote classify_lab(const Lab& lab, const Palette& palette) {
  std::size_t best = 0, second = 1;
  double d_best = delta_e76(lab, palette[0].lab);
  double d_second = delta_e76(lab, palette[1].lab);
  if (d_second < d_best) {
    std::swap(best, second);
    std::swap(d_best, d_second);
  }
  for (std::size_t i = 2; i < palette.size(); ++i) {
    const double d = delta_e76(lab, palette[i].lab);
    if (d < d_best) {
      second = best;
      d_second = d_best;
      best = i;
      d_best = d;
    } else if (d < d_second) {
      second = i;
      d_second = d;
    }
  }
  PixelColorVote vote{best, std::nullopt};
  const double ratio = std::exp(-d_second / kScoreSigma) / std::exp(-d_best / kScoreSigma);
  if (ratio > kSecondaryRatio) vote.secondary = second;
  return vote;
}

PixelColorVote classify_pixel(Rgb rgb, const Palette& palette) {
  return classify_lab(srgb_to_lab(rgb), palette);
}

namespace {

// votes[i] * denominator is compared against total * numerator to avoid
// floating point at the 7% boundary.
std::vector<ClassLabel> select_colors(const std::vector<std::int64_t>& votes, std::int64_t total,
                                      const Palette& palette) {
  std::vector<ClassLabel> out;
  std::size_t plurality = 0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] * 100 > total * 7) out.push_back(palette[i].name);
    if (votes[i] > votes[plurality]) plurality = i;
  }
  if (out.empty()) out.push_back(palette[plurality].name);
  return out;
}

}  // namespace

std::vector<ClassLabel> assign_cell_colors(std::span<const Rgb> pixels, const Palette& palette) {
  if (pixels.empty()) throw InvalidArgument("empty pixel block");
  std::vector<std::int64_t> votes(palette.size(), 0);
  std::unordered_map<std::uint32_t, PixelColorVote> memo;
  for (const Rgb& px : pixels) {
    auto [it, fresh] = memo.try_emplace(pack(px));
    if (fresh) it->second = classify_pixel(px, palette);
    ++votes[it->second.primary];
    if (it->second.secondary) ++votes[*it->second.secondary];
  }
  return select_colors(votes, static_cast<std::int64_t>(pixels.size()), palette);
}

Image::Image(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

ColorExtraction extract_colors(const Image& image, const Palette& palette) {
  const std::int64_t w = image.width, h = image.height;
  if (w < kGridSize || h < kGridSize) throw InvalidArgument("image smaller than 7x7");
  if (image.pixels.size() != static_cast<std::size_t>(w * h)) {
    throw InvalidArgument("image pixel buffer does not match its dimensions");
  }

  std::unordered_map<std::uint32_t, PixelColorVote> memo;
  std::vector<PixelColorVote> votes_per_pixel(image.pixels.size());
  double saturation_sum = 0;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const Rgb px = image.pixels[i];
    auto [it, fresh] = memo.try_emplace(pack(px));
    if (fresh) it->second = classify_pixel(px, palette);
    votes_per_pixel[i] = it->second;
    saturation_sum += saturation(px);
  }

  // Coordinates are scaled by 7 so that cell edges (multiples of the image
  // size) and pixel edges (multiples of 7) are both integral.
  constexpr std::int64_t kG = kGridSize;
  ColorExtraction out;
  out.is_bw = saturation_sum / static_cast<double>(image.pixels.size()) < kBwSaturation;
  out.cells.reserve(kGridCells);
  std::vector<std::int64_t> votes(palette.size());
  for (int row = 0; row < kGridSize; ++row) {
    const std::int64_t cy0 = row * h, cy1 = (row + 1) * h;
    for (int col = 0; col < kGridSize; ++col) {
      const std::int64_t cx0 = col * w, cx1 = (col + 1) * w;
      std::fill(votes.begin(), votes.end(), 0);
      for (std::int64_t y = cy0 / kG; y * kG < cy1 && y < h; ++y) {
        const std::int64_t oy = std::min(y * kG + kG, cy1) - std::max(y * kG, cy0);
        if (oy <= 0) continue;
        for (std::int64_t x = cx0 / kG; x * kG < cx1 && x < w; ++x) {
          const std::int64_t ox = std::min(x * kG + kG, cx1) - std::max(x * kG, cx0);
          if (ox <= 0) continue;
          const auto& vote = votes_per_pixel[static_cast<std::size_t>(y * w + x)];
          votes[vote.primary] += ox * oy;
          if (vote.secondary) votes[*vote.secondary] += ox * oy;
        }
      }
      out.cells.push_back({GridCell(col, row), select_colors(votes, w * h, palette)});
    }
  }
  return out;
}

}  // namespace kfs
