#pragma once

#include <cstdint>

#include "aidwallet/bytes.hpp"

namespace aidwallet {

using Amount = std::uint16_t;
using Counter = std::uint16_t;
using Epoch = std::uint32_t;
using HouseholdId = std::uint32_t;

/// Per-household ORAM payload: balance || ctr, each u16 BE (4 bytes). In
/// periodicity mode a u16 last_period follows (6 bytes).
struct HouseholdRecord {
  Amount balance = 0;
  Counter ctr = 0;
  std::uint16_t last_period = 0;

  bool operator==(const HouseholdRecord&) const = default;
};

constexpr std::size_t record_size(bool periodic) { return periodic ? 6 : 4; }

Bytes encode_record(const HouseholdRecord& rec, bool periodic);
/// Throws DecodeError if the size does not match the layout.
HouseholdRecord decode_record(ByteView bytes, bool periodic);

}  // namespace aidwallet
