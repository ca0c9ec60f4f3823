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

#ifndef KFSEARCH_FEATURE_HPP_
#define KFSEARCH_FEATURE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kfsearch/core.hpp"

namespace kfs {

using FeatureVector = std::vector<double>;

/// Default quantization parameters. On a standard-normal sample the threshold
/// keeps about 3.6% of the 2d CReLU components.
inline constexpr double kDefaultFeatureThreshold = 1.8;
inline constexpr double kDefaultFeatureScale = 10.0;

/// Codeword for component i (0-based) of the 2d quantized vector: "v1", "v2", ...
std::string codeword(std::size_t index);
/// Inverse of codeword(); nullopt for anything else.
std::optional<std::size_t> codeword_index(std::string_view term);

/// Sparse term-frequency vector over the synthetic codebook, ordered by
/// codeword index.
struct SurrogateDocument {
  std::vector<std::pair<std::string, std::uint32_t>> term_freqs;

  bool empty() const { return term_freqs.empty(); }
  /// Space-separated text with each codeword repeated by its frequency.
  std::string text() const;
};

/// Seeded random orthogonal matrix: a d x d standard Gaussian matrix
/// (mt19937_64 + Box-Muller) orthogonalized by Householder QR, with column
/// signs fixed by the diagonal of R.
Eigen::MatrixXd seeded_rotation(std::size_t dim, std::uint64_t seed);

/// Centering mean, rotation and quantization parameters. Immutable once built;
/// copies share the rotation matrix.
class EncoderState {
 public:
  EncoderState(std::vector<double> mean, std::optional<std::uint64_t> rotation_seed, double threshold,
               double scale);

  /// Identity rotation; mostly useful for tests and tiny dimensions.
  static EncoderState without_rotation(std::vector<double> mean, double threshold, double scale);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::optional<std::uint64_t>& rotation_seed() const { return seed_; }
  double threshold() const { return threshold_; }
  double scale() const { return scale_; }
  const Eigen::MatrixXd& rotation() const { return *rotation_; }

  /// rotation * (v - mean)
  Eigen::VectorXd center_and_rotate(std::span<const double> v) const;

  nlohmann::json to_json() const;
  static EncoderState from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static EncoderState load(const std::string& path);

  bool operator==(const EncoderState& other) const;

 private:
  std::vector<double> mean_;
  std::optional<std::uint64_t> seed_;
  double threshold_;
  double scale_;
  std::shared_ptr<const Eigen::MatrixXd> rotation_;
};

/// Mean of the sample plus a rotation derived from seed.
EncoderState fit(const std::vector<FeatureVector>& sample, std::uint64_t seed,
                 double threshold = kDefaultFeatureThreshold, double scale = kDefaultFeatureScale);

/// CReLU of the centered, rotated vector, thresholded and scaled:
/// out[i] = floor(scale * w[i]) when w[i] > threshold, else 0. Length 2d.
std::vector<std::uint32_t> quantize(std::span<const double> v, const EncoderState& state);

SurrogateDocument to_document(std::span<const std::uint32_t> q);

inline SurrogateDocument encode_features(std::span<const double> v, const EncoderState& state) {
  return to_document(quantize(v, state));
}

struct VectorLine {
  KeyframeId id;
  FeatureVector values;
};

/// "<video>:<segment>,f1,f2,...,fd"
VectorLine parse_vector_line(std::string_view line);

}  // namespace kfs

#endif  // KFSEARCH_FEATURE_HPP_
