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

#include "kfsearch/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace kfs {

namespace fs = std::filesystem;

namespace {

ApiResponse json_response(int status, const nlohmann::json& body) {
  return {status, body.dump(), "application/json"};
}

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"version", kApiVersion}, {"error", message}});
}

std::string content_type_for(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

std::map<std::string, std::vector<std::uint32_t>> group_videos(const Snapshot& s) {
  std::map<std::string, std::vector<std::uint32_t>> out;
  for (std::uint32_t d = 0; d < s.doc_count(); ++d) out[s.id(d).video_id].push_back(d);
  for (auto& [video, docs] : out) {
    std::sort(docs.begin(), docs.end(), [&](std::uint32_t a, std::uint32_t b) {
      return s.id(a).segment_index < s.id(b).segment_index;
    });
  }
  return out;
}

std::size_t parse_count(const std::string& text, std::size_t fallback, std::size_t max) {
  if (text.empty()) return fallback;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("not a count: " + text);
  }
  if (pos != text.size() || v == 0 || v > max) throw InvalidArgument("count out of range: " + text);
  return static_cast<std::size_t>(v);
}

}  // namespace

std::shared_ptr<const LoadedIndex> LoadedIndex::from_snapshot(SnapshotPtr snapshot, Palette palette,
                                                              std::vector<std::string> objects,
                                                              std::optional<EncoderState> encoder) {
  auto out = std::make_shared<LoadedIndex>(LoadedIndex{std::move(snapshot), std::move(encoder), std::move(palette),
                                                       std::move(objects), {}});
  out->videos = group_videos(*out->snapshot);
  return out;
}

std::shared_ptr<const LoadedIndex> LoadedIndex::load(const fs::path& dir) {
  SnapshotPtr snapshot = load_snapshot(dir);
  std::optional<EncoderState> encoder;
  if (fs::exists(dir / "encoder.json")) encoder = EncoderState::load((dir / "encoder.json").string());
  Palette palette = fs::exists(dir / "palette.txt") ? Palette::load((dir / "palette.txt").string())
                                                    : Palette::default_palette();
  std::vector<std::string> objects;
  if (fs::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    const auto meta = nlohmann::json::parse(in);
    objects = meta.value("objects", std::vector<std::string>{});
  }
  return from_snapshot(std::move(snapshot), std::move(palette), std::move(objects), std::move(encoder));
}

void Api::load_async(fs::path dir) {
  std::lock_guard lock(mu_);
  index_.reset();
  load_error_.reset();
  loading_ = std::async(std::launch::async, [this, dir = std::move(dir)] {
    try {
      auto loaded = LoadedIndex::load(dir);
      std::lock_guard inner(mu_);
      index_ = std::move(loaded);
    } catch (const std::exception& e) {
      std::lock_guard inner(mu_);
      load_error_ = e.what();
    }
  });
}

void Api::set_index(std::shared_ptr<const LoadedIndex> index) {
  std::lock_guard lock(mu_);
  index_ = std::move(index);
  load_error_.reset();
}

void Api::wait_loaded() {
  std::future<void> f;
  {
    std::lock_guard lock(mu_);
    f = std::move(loading_);
  }
  if (f.valid()) f.wait();
}

bool Api::ready() const {
  std::lock_guard lock(mu_);
  return index_ != nullptr;
}

std::shared_ptr<const LoadedIndex> Api::current(ApiResponse& unavailable) const {
  std::lock_guard lock(mu_);
  if (!index_) {
    unavailable = load_error_ ? error_response(500, "index failed to load: " + *load_error_)
                              : error_response(503, "index is loading");
  }
  return index_;
}

ApiResponse Api::search(const std::string& body) const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  const Snapshot& snapshot = *idx->snapshot;
  try {
    const auto req = nlohmann::json::parse(body);
    if (!req.is_object() || !req.contains("query")) throw InvalidArgument("request needs a 'query' object");
    const QuerySpec spec = QuerySpec::from_json(req["query"]);
    const RankerTriple triple =
        req.contains("triple") ? RankerTriple::parse(req["triple"].get<std::string>()) : RankerTriple::default_triple();
    std::size_t page_size = kDefaultPageSize;
    if (req.contains("page_size")) {
      const auto n = req["page_size"].get<long long>();
      if (n <= 0 || static_cast<std::size_t>(n) > kMaxPageSize) throw InvalidArgument("page_size out of range");
      page_size = static_cast<std::size_t>(n);
    }
    const bool group = req.value("group_by_video", false);
    const ResultPage page = execute(snapshot, spec, triple, page_size);
    nlohmann::json out = to_json(page, snapshot, group);
    out["version"] = kApiVersion;
    out["triple"] = triple.name();
    return json_response(200, out);
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("malformed request: ") + e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  }
}

ApiResponse Api::autocomplete(const std::string& raw_prefix, std::size_t limit) const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  std::string prefix;
  for (unsigned char c : raw_prefix) {
    if (std::isalnum(c)) prefix.push_back(static_cast<char>(std::tolower(c)));
  }
  try {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [term, df] : idx->snapshot->expand_wildcard(Field::kSceneTags, prefix, limit)) {
      entries.push_back({{"term", term}, {"df", df}, {"label", term + " (" + std::to_string(df) + ")"}});
    }
    return json_response(200, {{"version", kApiVersion}, {"prefix", prefix}, {"entries", entries}});
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  }
}

ApiResponse Api::similar(const std::string& id_text, std::size_t k) const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  try {
    const KeyframeId id = KeyframeId::parse(id_text);
    const auto results = kfs::similar(*idx->snapshot, id, k);
    ResultPage page{results};
    nlohmann::json out = to_json(page, *idx->snapshot, false);
    out["version"] = kApiVersion;
    out["query"] = id.str();
    return json_response(200, out);
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  }
}

ApiResponse Api::thumbnail(const std::string& id_text) const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  KeyframeId id;
  try {
    id = KeyframeId::parse(id_text);
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  }
  const auto doc = idx->snapshot->ordinal(id);
  if (!doc) return error_response(404, "unknown keyframe " + id.str());
  const fs::path path = idx->snapshot->image_path(*doc);
  if (path.empty()) return error_response(404, "keyframe " + id.str() + " has no thumbnail");
  std::ifstream in(path, std::ios::binary);
  if (!in) return error_response(404, "thumbnail file missing for " + id.str());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return {200, bytes.str(), content_type_for(path)};
}

ApiResponse Api::video_summary(const std::string& video_id) const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  const auto it = idx->videos.find(video_id);
  if (it == idx->videos.end()) return error_response(404, "unknown video " + video_id);
  nlohmann::json keyframes = nlohmann::json::array();
  for (std::uint32_t d : it->second) {
    const auto& id = idx->snapshot->id(d);
    keyframes.push_back(
        {{"id", id.str()}, {"segment", id.segment_index}, {"has_thumbnail", !idx->snapshot->image_path(d).empty()}});
  }
  return json_response(200, {{"version", kApiVersion}, {"video", video_id}, {"keyframes", keyframes}});
}

ApiResponse Api::meta() const {
  ApiResponse err;
  auto idx = current(err);
  if (!idx) return err;
  nlohmann::json palette = nlohmann::json::array();
  for (const auto& e : idx->palette.entries()) palette.push_back({{"name", e.name.name()}, {"rgb", rgb_hex(e.rgb)}});
  return json_response(200, {{"version", kApiVersion},
                             {"grid_size", kGridSize},
                             {"palette", palette},
                             {"objects", idx->objects},
                             {"documents", idx->snapshot->doc_count()},
                             {"default_triple", RankerTriple::default_triple().name()},
                             {"has_encoder", idx->encoder.has_value()}});
}

HttpService::HttpService(Api& api, unsigned threads) : api_(api), server_(std::make_unique<httplib::Server>()) {
  if (threads > 0) {
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  }
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto count_param = [](const httplib::Request& req, const char* name, std::size_t fallback) {
    return parse_count(req.has_param(name) ? req.get_param_value(name) : "", fallback, kMaxPageSize);
  };

  server_->Post("/v1/search", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api_.search(req.body));
  });
  server_->Get("/v1/autocomplete", [this, reply, count_param](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, api_.autocomplete(req.get_param_value("prefix"),
                                   count_param(req, "limit", kDefaultAutocompleteLimit)));
    } catch (const InvalidArgument& e) {
      reply(res, error_response(400, e.what()));
    }
  });
  server_->Get("/v1/similar", [this, reply, count_param](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!req.has_param("id")) throw InvalidArgument("missing id");
      reply(res, api_.similar(req.get_param_value("id"), count_param(req, "k", kDefaultPageSize)));
    } catch (const InvalidArgument& e) {
      reply(res, error_response(400, e.what()));
    }
  });
  server_->Get(R"(/v1/keyframes/([^/]+)/thumbnail)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api_.thumbnail(req.matches[1].str()));
  });
  server_->Get(R"(/v1/videos/([^/]+)/summary)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api_.video_summary(req.matches[1].str()));
  });
  server_->Get("/v1/meta", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, api_.meta()); });
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"version", kApiVersion}, {"error", what}}.dump(), "application/json");
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpService::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpService::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace kfs
