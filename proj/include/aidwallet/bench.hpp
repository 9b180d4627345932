#pragma once

#include <string>
#include <vector>

#include "aidwallet/oram.hpp"

namespace aidwallet {

/// Mean cost of one ORAM access (a read or a write) for one (variant, N) cell.
struct BenchResult {
  OramVariant variant{};
  std::uint32_t n = 0;
  std::uint32_t accesses = 0;  // read+write pairs performed
  double bytes_to_client = 0;
  double bytes_to_server = 0;
  double server_ops = 0;
  double wall_time_us = 0;

  double total_bytes() const { return bytes_to_client + bytes_to_server; }
};

/// Initialises a database of capacity n and performs `accesses` read+write
/// pairs on uniformly random blocks. Deterministic apart from wall time.
BenchResult bench_cell(OramVariant variant, std::uint32_t n, std::uint32_t accesses, std::uint64_t seed = 1);

/// Every (variant, N) cell, cells run in parallel. Rows come back in input order.
std::vector<BenchResult> bench_grid(const std::vector<OramVariant>& variants, const std::vector<std::uint32_t>& sizes,
                                    std::uint32_t accesses, std::uint64_t seed = 1);

std::string bench_header();
std::string bench_row(const BenchResult& r);

}  // namespace aidwallet
