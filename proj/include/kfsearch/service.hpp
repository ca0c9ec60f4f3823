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

#ifndef KFSEARCH_SERVICE_HPP_
#define KFSEARCH_SERVICE_HPP_

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "kfsearch/color.hpp"
#include "kfsearch/feature.hpp"
#include "kfsearch/query.hpp"

namespace httplib {
class Server;
}

namespace kfs {

inline constexpr int kApiVersion = 1;
inline constexpr std::size_t kDefaultPageSize = 100;
inline constexpr std::size_t kMaxPageSize = 10000;
inline constexpr std::size_t kDefaultAutocompleteLimit = 20;

/// Everything the API reads: the snapshot plus the sidecar files of an index
/// directory.
struct LoadedIndex {
  SnapshotPtr snapshot;
  std::optional<EncoderState> encoder;
  Palette palette;
  std::vector<std::string> objects;
  /// Ordinals of each video's keyframes sorted by segment index.
  std::map<std::string, std::vector<std::uint32_t>> videos;

  static std::shared_ptr<const LoadedIndex> load(const std::filesystem::path& dir);
  static std::shared_ptr<const LoadedIndex> from_snapshot(SnapshotPtr snapshot, Palette palette = Palette::default_palette(),
                                                          std::vector<std::string> objects = {},
                                                          std::optional<EncoderState> encoder = std::nullopt);
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Transport-independent /v1 API. Every handler is a pure function of the
/// loaded index and the request.
class Api {
 public:
  Api() = default;
  explicit Api(std::shared_ptr<const LoadedIndex> index) { set_index(std::move(index)); }

  /// Loads the index directory on a background thread; requests get 503
  /// until it completes (or 500 with the error if it failed).
  void load_async(std::filesystem::path dir);
  void set_index(std::shared_ptr<const LoadedIndex> index);
  /// Blocks until a pending load_async finishes.
  void wait_loaded();
  bool ready() const;

  /// {"query": QuerySpec, "triple": "NormTF-BM25-TF", "page_size": 100, "group_by_video": false}
  ApiResponse search(const std::string& body) const;
  ApiResponse autocomplete(const std::string& prefix, std::size_t limit = kDefaultAutocompleteLimit) const;
  ApiResponse similar(const std::string& id, std::size_t k) const;
  ApiResponse thumbnail(const std::string& id) const;
  ApiResponse video_summary(const std::string& video_id) const;
  ApiResponse meta() const;

 private:
  std::shared_ptr<const LoadedIndex> current(ApiResponse& unavailable) const;

  mutable std::mutex mu_;
  std::shared_ptr<const LoadedIndex> index_;
  std::optional<std::string> load_error_;
  std::future<void> loading_;
};

/// Binds the API to cpp-httplib routes under /v1.
class HttpService {
 public:
  explicit HttpService(Api& api, unsigned threads = 0);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  Api& api_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace kfs

#endif  // KFSEARCH_SERVICE_HPP_
