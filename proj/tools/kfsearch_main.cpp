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

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kfsearch/eval.hpp"
#include "kfsearch/ingest.hpp"
#include "kfsearch/service.hpp"

namespace {

kfs::HttpService* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

std::vector<std::size_t> parse_cutoffs(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const long long v = std::stoll(item);
    if (v <= 0) throw kfs::InvalidArgument("cutoffs must be positive: " + item);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw kfs::InvalidArgument("no cutoffs given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kfsearch: keyframe search over surrogate text indexes"};
  app.require_subcommand(1);

  std::string manifest_path, out_dir;
  auto* ingest = app.add_subcommand("ingest", "build an index directory from an ingest manifest");
  ingest->add_option("--manifest", manifest_path, "ingest manifest JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out_dir, "output index directory")->required();

  std::string index_dir, host = "127.0.0.1";
  int port = 8080;
  unsigned threads = 0;
  auto* serve = app.add_subcommand("serve", "serve the /v1 HTTP API over an index");
  serve->add_option("--index", index_dir, "index directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port")->check(CLI::Range(0, 65535));
  serve->add_option("--threads", threads, "worker threads (0 = default)");

  auto* eval = app.add_subcommand("eval", "evaluate ranker configurations against a query log");
  eval->require_subcommand(1);
  std::string log_path, cutoffs = "1,5,10,25,50,100,1000", report_path;
  std::size_t page_size = kfs::kEvalPageSize;
  auto* sweep = eval->add_subcommand("sweep", "replay a query log under all 64 ranker triples");
  sweep->add_option("--index", index_dir, "index directory")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--log", log_path, "query log (JSON lines)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--k", cutoffs, "comma-separated MRR cutoffs");
  sweep->add_option("--page-size", page_size, "results retrieved per query");
  sweep->add_option("--out", report_path, "write the JSON report here");
  sweep->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto report = kfs::build_index(kfs::IngestManifest::load(manifest_path), out_dir);
      std::cout << "indexed " << report.records << " keyframes into " << out_dir << " (" << report.skipped.size()
                << " skipped, " << report.warnings.size() << " warnings)\n";
      for (const auto& [where, why] : report.skipped) std::cerr << "skipped " << where << ": " << why << "\n";
      for (const auto& [id, why] : report.warnings) std::cerr << "warning " << id << ": " << why << "\n";
    } else if (*serve) {
      kfs::Api api;
      api.load_async(index_dir);
      kfs::HttpService service(api, threads);
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "serving " << index_dir << " on http://" << host << ":" << port << "/v1\n";
      service.run(host, port);
      g_service = nullptr;
    } else if (*sweep) {
      const auto snapshot = kfs::load_snapshot(index_dir);
      kfs::SweepOptions options;
      options.cutoffs = parse_cutoffs(cutoffs);
      options.page_size = page_size;
      options.threads = threads;
      const auto report = kfs::sweep(*snapshot, kfs::load_query_log(log_path), options);
      std::cout << report.to_table();
      if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        out << report.to_json().dump(2) << "\n";
        if (!out) throw kfs::Error("cannot write " + report_path);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
