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

#include "kfsearch/feature.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace kfs {

namespace {

constexpr int kEncoderFormatVersion = 1;

// Box-Muller over raw mt19937_64 output so that the stream is identical on
// every standard library (std::normal_distribution is not specified bit-exactly).
class PortableGaussian {
 public:
  explicit PortableGaussian(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0;
  bool cached_ = false;
};

}  // namespace

std::string codeword(std::size_t index) { return "v" + std::to_string(index + 1); }

std::optional<std::size_t> codeword_index(std::string_view term) {
  if (term.size() < 2 || term[0] != 'v' || term[1] == '0') return std::nullopt;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(term.data() + 1, term.data() + term.size(), value);
  if (ec != std::errc() || ptr != term.data() + term.size() || value == 0) return std::nullopt;
  return value - 1;
}

std::string SurrogateDocument::text() const {
  std::string out;
  for (const auto& [term, freq] : term_freqs) {
    for (std::uint32_t i = 0; i < freq; ++i) {
      if (!out.empty()) out.push_back(' ');
      out += term;
    }
  }
  return out;
}

Eigen::MatrixXd seeded_rotation(std::size_t dim, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd gaussian(n, n);
  PortableGaussian rng(seed);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) gaussian(r, c) = rng.next();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const auto& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (r(c, c) < 0) q.col(c) = -q.col(c);
  }
  return q;
}

EncoderState::EncoderState(std::vector<double> mean, std::optional<std::uint64_t> rotation_seed,
                           double threshold, double scale)
    : mean_(std::move(mean)), seed_(rotation_seed), threshold_(threshold), scale_(scale) {
  if (mean_.empty()) throw InvalidArgument("encoder dimensionality must be positive");
  if (!(threshold_ >= 0) || !std::isfinite(threshold_)) {
    throw InvalidArgument("encoder threshold must be a non-negative finite number");
  }
  if (!(scale_ > 0) || !std::isfinite(scale_)) throw InvalidArgument("encoder scale must be positive");
  for (double m : mean_) {
    if (!std::isfinite(m)) throw InvalidArgument("encoder mean has non-finite entries");
  }
  const auto n = static_cast<Eigen::Index>(mean_.size());
  rotation_ = std::make_shared<const Eigen::MatrixXd>(
      seed_ ? seeded_rotation(mean_.size(), *seed_) : Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
}

EncoderState EncoderState::without_rotation(std::vector<double> mean, double threshold, double scale) {
  return EncoderState(std::move(mean), std::nullopt, threshold, scale);
}

Eigen::VectorXd EncoderState::center_and_rotate(std::span<const double> v) const {
  if (v.size() != mean_.size()) {
    throw InvalidArgument("feature dimension " + std::to_string(v.size()) + " does not match encoder dimension " +
                          std::to_string(mean_.size()));
  }
  Eigen::VectorXd centered(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw InvalidArgument("feature vector has non-finite entries");
    centered[static_cast<Eigen::Index>(i)] = v[i] - mean_[i];
  }
  if (!seed_) return centered;
  return *rotation_ * centered;
}

nlohmann::json EncoderState::to_json() const {
  nlohmann::json rotation = seed_ ? nlohmann::json{{"kind", "gaussian-qr"}, {"seed", *seed_}}
                                  : nlohmann::json{{"kind", "identity"}};
  return {{"format", "kfsearch-encoder"},
          {"version", kEncoderFormatVersion},
          {"dim", mean_.size()},
          {"threshold", threshold_},
          {"scale", scale_},
          {"rotation", rotation},
          {"mean", mean_}};
}

EncoderState EncoderState::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "kfsearch-encoder") throw Error("not an encoder state document");
  if (j.value("version", 0) != kEncoderFormatVersion) {
    throw Error("unsupported encoder state version " + j.value("version", nlohmann::json()).dump());
  }
  auto mean = j.at("mean").get<std::vector<double>>();
  if (mean.size() != j.at("dim").get<std::size_t>()) throw Error("encoder state: mean/dim mismatch");
  const auto& rot = j.at("rotation");
  std::optional<std::uint64_t> seed;
  const auto kind = rot.at("kind").get<std::string>();
  if (kind == "gaussian-qr") {
    seed = rot.at("seed").get<std::uint64_t>();
  } else if (kind != "identity") {
    throw Error("unknown rotation kind '" + kind + "'");
  }
  return EncoderState(std::move(mean), seed, j.at("threshold").get<double>(), j.at("scale").get<double>());
}

void EncoderState::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write encoder state " + path);
  out << to_json().dump() << "\n";
}

EncoderState EncoderState::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read encoder state " + path);
  return from_json(nlohmann::json::parse(in));
}

bool EncoderState::operator==(const EncoderState& other) const {
  return mean_ == other.mean_ && seed_ == other.seed_ && threshold_ == other.threshold_ &&
         scale_ == other.scale_ && *rotation_ == *other.rotation_;
}

EncoderState fit(const std::vector<FeatureVector>& sample, std::uint64_t seed, double threshold, double scale) {
  if (sample.empty()) throw InvalidArgument("cannot fit encoder on an empty sample");
  const std::size_t dim = sample.front().size();
  if (dim == 0) throw InvalidArgument("feature vectors must be non-empty");
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : sample) {
    if (v.size() != dim) throw InvalidArgument("inconsistent feature dimensionality in sample");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  for (double& m : mean) m /= static_cast<double>(sample.size());
  return EncoderState(std::move(mean), seed, threshold, scale);
}

std::vector<std::uint32_t> quantize(std::span<const double> v, const EncoderState& state) {
  const Eigen::VectorXd u = state.center_and_rotate(v);
  const std::size_t d = state.dim();
  std::vector<std::uint32_t> out(2 * d, 0);
  auto level = [&](double w) -> std::uint32_t {
    if (!(w > state.threshold())) return 0;
    return static_cast<std::uint32_t>(std::floor(state.scale() * w));
  };
  for (std::size_t i = 0; i < d; ++i) {
    const double x = u[static_cast<Eigen::Index>(i)];
    if (x > 0) out[i] = level(x);
    else if (x < 0) out[i + d] = level(-x);
  }
  return out;
}

SurrogateDocument to_document(std::span<const std::uint32_t> q) {
  SurrogateDocument doc;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0) doc.term_freqs.emplace_back(codeword(i), q[i]);
  }
  return doc;
}

VectorLine parse_vector_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' ')) {
    line.remove_suffix(1);
  }
  auto comma = line.find(',');
  if (comma == std::string_view::npos) throw InvalidArgument("vector line needs '<id>,f1,...'");
  VectorLine out{KeyframeId::parse(line.substr(0, comma)), {}};
  std::size_t pos = comma + 1;
  while (pos <= line.size()) {
    auto next = line.find(',', pos);
    if (next == std::string_view::npos) next = line.size();
    std::string piece(line.substr(pos, next - pos));
    std::size_t used = 0;
    double value = 0;
    try {
      value = std::stod(piece, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("bad float '" + piece + "' in vector line");
    }
    if (used != piece.size() && piece.find_first_not_of(" \t", used) != std::string::npos) {
      throw InvalidArgument("bad float '" + piece + "' in vector line");
    }
    out.values.push_back(value);
    pos = next + 1;
  }
  return out;
}

}  // namespace kfs
