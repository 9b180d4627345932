#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aidwallet/bytes.hpp"

namespace aidwallet {

/// Every message between a card, a terminal and the database host is a frame:
///   length (u32 BE, payload bytes only) || type (u8) || payload.
enum class FrameType : std::uint8_t {
  // ORAM client -> server
  kFetchDatabase = 0x01,
  kStoreDatabase = 0x02,
  kFetchRoot = 0x03,
  kStoreRoot = 0x04,
  kFetchPath = 0x05,
  kStorePath = 0x06,
  // ORAM server -> client
  kDatabase = 0x11,
  kRoot = 0x12,
  kPath = 0x13,
  kAck = 0x14,
  kError = 0x1f,
  // registration station <-> card
  kRegisterId = 0x20,
  kRegisterSecret = 0x21,
  kRegisterBudget = 0x22,
  kRegisterDone = 0x23,
  kRegisterAbort = 0x24,
  // vendor <-> card
  kPriceAnnounce = 0x30,
  kProof = 0x31,
  kSpendAbort = 0x32,
  kVendorBalance = 0x33,
  kSignedBalance = 0x34,
};

inline constexpr std::size_t kFrameHeaderSize = 5;

struct Frame {
  FrameType type{};
  Bytes payload;

  std::size_t wire_size() const { return kFrameHeaderSize + payload.size(); }
  bool operator==(const Frame&) const = default;
};

Bytes encode_frame(const Frame& frame);
/// Decodes exactly one frame occupying the whole input.
Frame decode_frame(ByteView bytes);
/// Decodes one frame from the front of a buffer; nullopt if more bytes are
/// needed. On success `consumed` is set to the frame's wire size.
std::optional<Frame> try_decode_frame(ByteView buffer, std::size_t& consumed);

/// Blocking frame I/O over a file descriptor (pipe or socket).
void write_frame(int fd, const Frame& frame);
/// nullopt on clean EOF before any header byte.
std::optional<Frame> read_frame(int fd);

enum class Direction : std::uint8_t { kToClient, kToServer };

struct TranscriptEntry {
  Direction direction{};
  Frame frame;
  bool operator==(const TranscriptEntry&) const = default;
};

using Transcript = std::vector<TranscriptEntry>;

/// What an observer learns from a transcript without reading payloads.
struct FrameShape {
  Direction direction{};
  FrameType type{};
  std::size_t size = 0;
  bool operator==(const FrameShape&) const = default;
};

std::vector<FrameShape> shape_of(const Transcript& transcript);

}  // namespace aidwallet
