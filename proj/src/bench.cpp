#include "aidwallet/bench.hpp"

#include <chrono>
#include <cstdio>
#include <future>

namespace aidwallet {

BenchResult bench_cell(OramVariant variant, std::uint32_t n, std::uint32_t accesses, std::uint64_t seed) {
  auto rng = std::make_shared<SeededRandom>("bench/" + std::string(variant_name(variant)) + "/" +
                                            std::to_string(n) + "/" + std::to_string(seed));
  OramConfig config{variant, n};
  auto [key, db] = oram_init(config, *rng);
  OramServer server(std::move(db));
  DirectChannel channel(server);
  OramClient client(key, rng);

  server.reset_stats();
  const auto start = std::chrono::steady_clock::now();
  for (std::uint32_t i = 0; i < accesses; ++i) {
    const auto block = static_cast<std::uint32_t>(rng->uniform(n));
    auto rec = client.read(channel, block);
    if (!rec) throw std::runtime_error("bench: read failed");
    ++rec->ctr;
    if (!client.write(channel, block, *rec)) throw std::runtime_error("bench: write failed");
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;

  const TransferStats stats = server.transfer_report();
  const double ops = 2.0 * accesses;
  BenchResult r;
  r.variant = variant;
  r.n = n;
  r.accesses = accesses;
  if (accesses > 0) {
    r.bytes_to_client = static_cast<double>(stats.bytes_to_client) / ops;
    r.bytes_to_server = static_cast<double>(stats.bytes_to_server) / ops;
    r.server_ops = static_cast<double>(stats.server_ops) / ops;
    r.wall_time_us = std::chrono::duration<double, std::micro>(elapsed).count() / ops;
  }
  return r;
}

std::vector<BenchResult> bench_grid(const std::vector<OramVariant>& variants, const std::vector<std::uint32_t>& sizes,
                                    std::uint32_t accesses, std::uint64_t seed) {
  std::vector<std::future<BenchResult>> cells;
  for (OramVariant v : variants) {
    for (std::uint32_t n : sizes) cells.push_back(std::async(std::launch::async, bench_cell, v, n, accesses, seed));
  }
  std::vector<BenchResult> out;
  for (auto& c : cells) out.push_back(c.get());
  return out;
}

std::string bench_header() {
  return "variant,n,accesses,bytes_to_client,bytes_to_server,total_bytes,server_ops,wall_time_us";
}

std::string bench_row(const BenchResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%u,%u,%.1f,%.1f,%.1f,%.2f,%.1f", variant_name(r.variant), r.n, r.accesses,
                r.bytes_to_client, r.bytes_to_server, r.total_bytes(), r.server_ops, r.wall_time_us);
  return buf;
}

}  // namespace aidwallet
