#include "aidwallet/frame.hpp"

#include <unistd.h>

#include <cerrno>
#include <stdexcept>
#include <system_error>

namespace aidwallet {

namespace {

bool known_type(std::uint8_t t) {
  switch (static_cast<FrameType>(t)) {
    case FrameType::kFetchDatabase:
    case FrameType::kStoreDatabase:
    case FrameType::kFetchRoot:
    case FrameType::kStoreRoot:
    case FrameType::kFetchPath:
    case FrameType::kStorePath:
    case FrameType::kDatabase:
    case FrameType::kRoot:
    case FrameType::kPath:
    case FrameType::kAck:
    case FrameType::kError:
    case FrameType::kRegisterId:
    case FrameType::kRegisterSecret:
    case FrameType::kRegisterBudget:
    case FrameType::kRegisterDone:
    case FrameType::kRegisterAbort:
    case FrameType::kPriceAnnounce:
    case FrameType::kProof:
    case FrameType::kSpendAbort:
    case FrameType::kVendorBalance:
    case FrameType::kSignedBalance:
      return true;
  }
  return false;
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "write_frame");
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns bytes read; short only on EOF.
std::size_t read_all(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::read(fd, data + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "read_frame");
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

Bytes encode_frame(const Frame& frame) {
  Bytes out;
  out.reserve(frame.wire_size());
  put_u32(out, static_cast<std::uint32_t>(frame.payload.size()));
  put_u8(out, static_cast<std::uint8_t>(frame.type));
  put_bytes(out, frame.payload);
  return out;
}

std::optional<Frame> try_decode_frame(ByteView buffer, std::size_t& consumed) {
  if (buffer.size() < kFrameHeaderSize) return std::nullopt;
  ByteReader header(buffer.first(kFrameHeaderSize));
  std::uint32_t length = header.u32();
  std::uint8_t type = header.u8();
  if (!known_type(type)) throw DecodeError("unknown frame type");
  if (buffer.size() - kFrameHeaderSize < length) return std::nullopt;
  Frame frame{static_cast<FrameType>(type), Bytes(buffer.begin() + kFrameHeaderSize,
                                                  buffer.begin() + kFrameHeaderSize + length)};
  consumed = kFrameHeaderSize + length;
  return frame;
}

Frame decode_frame(ByteView bytes) {
  std::size_t consumed = 0;
  auto frame = try_decode_frame(bytes, consumed);
  if (!frame) throw DecodeError("truncated frame");
  if (consumed != bytes.size()) throw DecodeError("trailing bytes after frame");
  return *frame;
}

void write_frame(int fd, const Frame& frame) {
  Bytes wire = encode_frame(frame);
  write_all(fd, wire.data(), wire.size());
}

std::optional<Frame> read_frame(int fd) {
  std::uint8_t header[kFrameHeaderSize];
  std::size_t got = read_all(fd, header, sizeof header);
  if (got == 0) return std::nullopt;
  if (got < sizeof header) throw DecodeError("truncated frame header");
  ByteReader r(ByteView(header, sizeof header));
  std::uint32_t length = r.u32();
  std::uint8_t type = r.u8();
  if (!known_type(type)) throw DecodeError("unknown frame type");
  Frame frame{static_cast<FrameType>(type), Bytes(length)};
  if (read_all(fd, frame.payload.data(), length) != length) throw DecodeError("truncated frame payload");
  return frame;
}

std::vector<FrameShape> shape_of(const Transcript& transcript) {
  std::vector<FrameShape> out;
  out.reserve(transcript.size());
  for (const auto& e : transcript) out.push_back({e.direction, e.frame.type, e.frame.wire_size()});
  return out;
}

}  // namespace aidwallet
