#include "aidwallet/oram.hpp"

namespace aidwallet {

std::optional<Bytes> OramClient::access_naive(OramChannel& channel, std::uint32_t block, const Bytes* replacement) {
  const std::size_t rs = key_.config.payload_size();
  Frame response = channel.exchange(Frame{FrameType::kFetchDatabase, {}});
  if (response.type != FrameType::kDatabase) return std::nullopt;
  auto plain = ae::open(key_.ae, response.payload, oram_detail::naive_aad());
  if (!plain || plain->size() != static_cast<std::size_t>(key_.config.capacity) * rs) return std::nullopt;

  const auto offset = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(block) * rs);
  Bytes old(plain->begin() + offset, plain->begin() + offset + static_cast<std::ptrdiff_t>(rs));
  if (replacement != nullptr) std::copy(replacement->begin(), replacement->end(), plain->begin() + offset);

  // Always written back so reads and writes look alike to the server.
  Bytes sealed = ae::seal(key_.ae, *plain, *rng_, oram_detail::naive_aad());
  Frame ack = channel.exchange(Frame{FrameType::kStoreDatabase, std::move(sealed)});
  if (ack.type != FrameType::kAck) return std::nullopt;
  return old;
}

}  // namespace aidwallet
