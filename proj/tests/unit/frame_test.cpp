#include <gtest/gtest.h>
#include <unistd.h>

#include <thread>

#include "aidwallet/frame.hpp"
#include "aidwallet/protocol.hpp"
#include "aidwallet/record.hpp"
#include "test_support.hpp"

namespace aidwallet {
namespace {

TEST(Frame, EncodeLayout) {
  const Bytes wire = encode_frame({FrameType::kProof, Bytes{1, 2, 3}});
  EXPECT_EQ(wire, (Bytes{0, 0, 0, 3, 0x31, 1, 2, 3}));
  EXPECT_EQ(decode_frame(wire), (Frame{FrameType::kProof, Bytes{1, 2, 3}}));
  EXPECT_EQ((Frame{FrameType::kAck, {}}).wire_size(), kFrameHeaderSize);
}

TEST(Frame, DecodeErrors) {
  EXPECT_THROW(decode_frame(Bytes{0, 0, 0}), DecodeError);
  EXPECT_THROW(decode_frame(Bytes{0, 0, 0, 0, 0x77}), DecodeError);     // unknown type
  EXPECT_THROW(decode_frame(Bytes{0, 0, 0, 2, 0x14, 1}), DecodeError);  // truncated
  EXPECT_THROW(decode_frame(Bytes{0, 0, 0, 0, 0x14, 9}), DecodeError);  // trailing
  EXPECT_EQ(decode_frame(Bytes{0, 0, 0, 0, 0x14}).type, FrameType::kAck);
}

TEST(Frame, StreamingDecode) {
  Bytes buffer = encode_frame({FrameType::kRoot, Bytes(10, 7)});
  const Bytes second = encode_frame({FrameType::kAck, {}});
  buffer.insert(buffer.end(), second.begin(), second.end());
  std::size_t consumed = 0;
  EXPECT_FALSE(try_decode_frame(ByteView(buffer).first(8), consumed).has_value());
  auto f = try_decode_frame(buffer, consumed);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(consumed, 15U);
  EXPECT_EQ(f->payload, Bytes(10, 7));
  auto g = try_decode_frame(ByteView(buffer).subspan(consumed), consumed);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->type, FrameType::kAck);
}

TEST(Frame, FdRoundTripAndEof) {
  int fds[2];
  ASSERT_EQ(pipe(fds), 0);
  // Larger than a pipe buffer, so the writer needs its own thread.
  std::thread writer([&] {
    write_frame(fds[1], {FrameType::kPath, Bytes(70000, 3)});
    write_frame(fds[1], {FrameType::kAck, {}});
    close(fds[1]);
  });
  auto a = read_frame(fds[0]);
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->payload.size(), 70000U);
  EXPECT_EQ(read_frame(fds[0])->type, FrameType::kAck);
  writer.join();
  EXPECT_FALSE(read_frame(fds[0]).has_value());
  close(fds[0]);
}

TEST(Frame, ShapeIgnoresContent) {
  Transcript a{{Direction::kToServer, {FrameType::kFetchDatabase, {}}}, {Direction::kToClient, {FrameType::kDatabase, Bytes(5, 1)}}};
  Transcript b{{Direction::kToServer, {FrameType::kFetchDatabase, {}}}, {Direction::kToClient, {FrameType::kDatabase, Bytes(5, 2)}}};
  EXPECT_EQ(shape_of(a), shape_of(b));
  b[1].frame.payload.push_back(0);
  EXPECT_NE(shape_of(a), shape_of(b));
}

TEST(Record, Layout) {
  EXPECT_EQ(encode_record({500, 3}, false), (Bytes{0x01, 0xf4, 0x00, 0x03}));
  EXPECT_EQ(encode_record({500, 3, 9}, true), (Bytes{0x01, 0xf4, 0x00, 0x03, 0x00, 0x09}));
  EXPECT_EQ(decode_record(Bytes{0xff, 0xff, 0x00, 0x01}, false), (HouseholdRecord{65535, 1}));
  EXPECT_THROW(decode_record(Bytes{1, 2, 3}, false), DecodeError);
  EXPECT_THROW(decode_record(Bytes{1, 2, 3, 4}, true), DecodeError);
  EXPECT_EQ(record_size(false), 4U);
  EXPECT_EQ(record_size(true), 6U);
}

TEST(Protocol, SignedMessageEncodings) {
  Tag tau{};
  tau.fill(0xab);
  Commitment com;
  com.element.bytes.fill(0x02);
  const Bytes m = spend_message(tau, 0x01020304, com);
  ASSERT_EQ(m.size(), 16U + 4U + 33U);
  EXPECT_EQ(m[16], 1);
  EXPECT_EQ(m[19], 4);
  EXPECT_EQ(tag_input(0x0a0b0c0d, 0x0102), (Bytes{0x0a, 0x0b, 0x0c, 0x0d, 0x01, 0x02}));
  std::array<std::uint8_t, 16> nonce{};
  const Bytes rb = running_balance_message(40, nonce, 7);
  EXPECT_EQ(rb.size(), 2U + 4U + 16U + 4U);
  EXPECT_EQ(rb[0], 'R');
  EXPECT_EQ(rb[1], 'B');
}

TEST(Protocol, FrameCodecsRoundTrip) {
  SeededRandom rng(1);
  TransactionProof p;
  p.sigma = rng.bytes<64>();
  p.tau = rng.bytes<16>();
  p.r = pedersen::random_opening(rng);
  p.com = pedersen::commit(pedersen::setup(), 30, p.r);
  const Frame pf = encode_proof(p);
  EXPECT_EQ(pf.payload.size(), TransactionProof::kWireSize);
  EXPECT_EQ(decode_proof(pf), p);
  EXPECT_FALSE(decode_proof({FrameType::kProof, Bytes(144, 0)}).has_value());
  EXPECT_FALSE(decode_proof({FrameType::kSpendAbort, pf.payload}).has_value());

  EXPECT_EQ(decode_announcement(encode_announcement({30, 9})), (PriceAnnouncement{30, 9}));
  EXPECT_EQ(encode_announcement({30, 9}).payload.size(), 6U);
  EXPECT_EQ(decode_register_id(encode_register_id(77)), 77U);
  const RegisterBudget rb{500, 0, 3};
  EXPECT_EQ(decode_register_budget(encode_register_budget(rb)), rb);

  SignedBalance sb{40, rng.bytes<16>(), rng.bytes<64>()};
  EXPECT_EQ(decode_signed_balance(encode_signed_balance(sb)), sb);
  EXPECT_EQ(decode_signed_balance_bytes(signed_balance_bytes(sb)), sb);
  auto zero = decode_vendor_balance(encode_vendor_balance(std::nullopt));
  ASSERT_TRUE(zero.has_value());
  EXPECT_FALSE(zero->has_value());
  EXPECT_EQ(**decode_vendor_balance(encode_vendor_balance(sb)), sb);
  EXPECT_EQ(decode_proof_bytes(proof_bytes(p)), p);
}

}  // namespace
}  // namespace aidwallet
