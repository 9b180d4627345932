#pragma once

#include <cstdint>
#include <span>

#include "aidwallet/group.hpp"

namespace aidwallet {

/// Pedersen parameters (G, q, g, h). h comes from hash_to_group over a fixed
/// domain string, so log_g(h) is unknown to every party.
struct CommitmentParams {
  GroupElement g;
  GroupElement h;
  std::array<std::uint8_t, kScalarSize> q{};

  bool operator==(const CommitmentParams&) const = default;
};

struct Commitment {
  GroupElement element;
  auto operator<=>(const Commitment&) const = default;
};

struct Opening {
  Scalar r;
  auto operator<=>(const Opening&) const = default;
};

namespace pedersen {

inline constexpr std::string_view kGeneratorDomain = "aidwallet-pedersen-h";

/// The deployment's parameters. Deterministic; computed once.
const CommitmentParams& setup();

Opening random_opening(RandomSource& rng);
/// g^m h^r. Throws std::out_of_range when m or r is not below q.
Commitment commit(const CommitmentParams& params, const Scalar& m, const Opening& r);
Commitment commit(const CommitmentParams& params, std::uint64_t m, const Opening& r);
/// Group product. Throws std::invalid_argument on an empty list.
Commitment combine(std::span<const Commitment> commitments);
/// Sum of openings mod q.
Opening sum_openings(std::span<const Opening> openings);

}  // namespace pedersen
}  // namespace aidwallet
