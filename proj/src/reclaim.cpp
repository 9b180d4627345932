#include "aidwallet/reclaim.hpp"

#include <fstream>
#include <sstream>

#include "aidwallet/db_file.hpp"

namespace aidwallet {

namespace {

constexpr std::array<std::uint8_t, 4> kProofMagic{'A', 'W', 'R', 'P'};
constexpr std::string_view kTextHeader = "aidwallet-reclaim-proof v1";

}  // namespace

ReclaimProof create_reclaim_proof(Epoch epoch, std::span<const LedgerEntry> entries) {
  if (entries.empty()) throw std::invalid_argument("reclaim needs at least one transaction");
  ReclaimProof proof;
  proof.period = epoch;
  std::vector<Opening> openings;
  openings.reserve(entries.size());
  for (const auto& e : entries) {
    proof.claimed_total += e.spent;
    openings.push_back(e.proof.r);
    proof.items.push_back(ReclaimItem{e.proof.sigma, e.proof.tau, e.proof.com});
  }
  proof.r_sum = pedersen::sum_openings(openings);
  return proof;
}

const char* verdict_name(ReclaimVerdict v) {
  switch (v) {
    case ReclaimVerdict::kAccepted:
      return "accepted";
    case ReclaimVerdict::kEmpty:
      return "empty";
    case ReclaimVerdict::kPeriodMismatch:
      return "period-mismatch";
    case ReclaimVerdict::kTotalMismatch:
      return "total-mismatch";
    case ReclaimVerdict::kBadSignature:
      return "bad-signature";
    case ReclaimVerdict::kCommitmentMismatch:
      return "commitment-mismatch";
    case ReclaimVerdict::kDuplicateTag:
      return "duplicate-tag";
    case ReclaimVerdict::kTagAlreadyClaimed:
      return "tag-already-claimed";
  }
  return "unknown";
}

TagLedger::TagLedger(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  Bytes raw = read_file(*file_);
  if (raw.size() % 16 != 0) throw DecodeError("tag ledger length is not a multiple of 16");
  for (std::size_t off = 0; off < raw.size(); off += 16) {
    Tag t{};
    std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(off), 16, t.begin());
    tags_.insert(t);
  }
}

void TagLedger::append(std::span<const Tag> tags) {
  if (file_) {
    Bytes chunk;
    chunk.reserve(tags.size() * 16);
    for (const auto& t : tags) put_bytes(chunk, t);
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot append to tag ledger " + file_->string());
  }
  tags_.insert(tags.begin(), tags.end());
}

ReclaimVerdict check_reclaim_proof(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                                   const ReclaimProof& proof, const TagLedger& ledger) {
  if (proof.items.empty()) return ReclaimVerdict::kEmpty;
  if (proof.period != epoch) return ReclaimVerdict::kPeriodMismatch;
  if (proof.claimed_total != spent_sum) return ReclaimVerdict::kTotalMismatch;

  for (const auto& item : proof.items) {
    if (!ds::verify(rs_public, spend_message(item.tau, epoch, item.com), item.sigma)) {
      return ReclaimVerdict::kBadSignature;
    }
  }

  std::vector<Commitment> coms;
  coms.reserve(proof.items.size());
  for (const auto& item : proof.items) {
    if (!group::is_member(item.com.element)) return ReclaimVerdict::kCommitmentMismatch;
    coms.push_back(item.com);
  }
  if (!group::in_range(proof.r_sum.r)) return ReclaimVerdict::kCommitmentMismatch;
  const auto& params = pedersen::setup();
  // spent_sum is at most 2^64 - 1, far below q.
  if (pedersen::combine(coms) != pedersen::commit(params, spent_sum, proof.r_sum)) {
    return ReclaimVerdict::kCommitmentMismatch;
  }

  std::set<Tag> within;
  for (const auto& item : proof.items) {
    if (!within.insert(item.tau).second) return ReclaimVerdict::kDuplicateTag;
  }
  for (const auto& item : proof.items) {
    if (ledger.contains(item.tau)) return ReclaimVerdict::kTagAlreadyClaimed;
  }
  return ReclaimVerdict::kAccepted;
}

ReclaimVerdict verify_reclaim_proof(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                                    const ReclaimProof& proof, TagLedger& ledger) {
  ReclaimVerdict v = check_reclaim_proof(rs_public, epoch, spent_sum, proof, ledger);
  if (v != ReclaimVerdict::kAccepted) return v;
  std::vector<Tag> tags;
  tags.reserve(proof.items.size());
  for (const auto& item : proof.items) tags.push_back(item.tau);
  ledger.append(tags);
  return v;
}

ReclaimVerdict audit_verify(const VerificationKey& rs_public, Epoch epoch, std::uint64_t spent_sum,
                            const ReclaimProof& proof, TagLedger& auditor_ledger) {
  return verify_reclaim_proof(rs_public, epoch, spent_sum, proof, auditor_ledger);
}

std::optional<std::uint32_t> reclaim_running_balance_verify(const VerificationKey& rs_public, Epoch epoch,
                                                            const SignedBalance& record, NonceLedger& nonces) {
  if (!ds::verify(rs_public, running_balance_message(record.balance, record.nonce, epoch), record.sigma)) {
    return std::nullopt;
  }
  if (nonces.seen(record.nonce)) return std::nullopt;
  nonces.record(record.nonce);
  return record.balance;
}

ReclaimStation::ReclaimStation(VerificationKey rs_public, std::optional<std::filesystem::path> ledger_file)
    : rs_public_(rs_public), tags_(ledger_file ? TagLedger(*ledger_file) : TagLedger()) {}

ReclaimVerdict ReclaimStation::verify(Epoch epoch, std::uint64_t spent_sum, const ReclaimProof& proof) {
  return verify_reclaim_proof(rs_public_, epoch, spent_sum, proof, tags_);
}

std::optional<std::uint32_t> ReclaimStation::verify_running_balance(Epoch epoch, const SignedBalance& record) {
  return reclaim_running_balance_verify(rs_public_, epoch, record, nonces_);
}

Auditor::Auditor(VerificationKey rs_public, std::optional<std::filesystem::path> ledger_file)
    : rs_public_(rs_public), tags_(ledger_file ? TagLedger(*ledger_file) : TagLedger()) {}

ReclaimVerdict Auditor::audit(Epoch epoch, std::uint64_t spent_sum, const ReclaimProof& proof) {
  return audit_verify(rs_public_, epoch, spent_sum, proof, tags_);
}

// ---------------------------------------------------------------------------

Bytes encode_reclaim_proof(const ReclaimProof& proof) {
  Bytes out(kProofMagic.begin(), kProofMagic.end());
  put_u8(out, ReclaimProof::kVersion);
  put_u32(out, proof.period);
  put_u64(out, proof.claimed_total);
  put_bytes(out, proof.r_sum.r.bytes);
  put_u32(out, static_cast<std::uint32_t>(proof.items.size()));
  for (const auto& item : proof.items) {
    put_bytes(out, item.sigma);
    put_bytes(out, item.tau);
    put_bytes(out, item.com.element.bytes);
  }
  return out;
}

std::string reclaim_proof_text(const ReclaimProof& proof) {
  std::ostringstream out;
  out << kTextHeader << '\n';
  out << "period " << proof.period << '\n';
  out << "claimed_total " << proof.claimed_total << '\n';
  out << "r_sum " << to_hex(proof.r_sum.r.bytes) << '\n';
  for (const auto& item : proof.items) {
    out << "item " << to_hex(item.sigma) << ' ' << to_hex(item.tau) << ' ' << to_hex(item.com.element.bytes) << '\n';
  }
  return out.str();
}

namespace {

ReclaimProof parse_binary(ByteView bytes) {
  ByteReader r(bytes);
  if (r.array<4>() != kProofMagic) throw DecodeError("not a reclaim proof");
  if (r.u8() != ReclaimProof::kVersion) throw DecodeError("unsupported reclaim proof version");
  ReclaimProof p;
  p.period = r.u32();
  p.claimed_total = r.u64();
  p.r_sum.r.bytes = r.array<kScalarSize>();
  const std::uint32_t count = r.u32();
  if (static_cast<std::uint64_t>(count) * ReclaimItem::kWireSize != r.remaining()) {
    throw DecodeError("reclaim proof item count does not match length");
  }
  p.items.resize(count);
  for (auto& item : p.items) {
    item.sigma = r.array<kSignatureSize>();
    item.tau = r.array<16>();
    item.com.element.bytes = r.array<kElementSize>();
  }
  return p;
}

std::uint64_t parse_uint(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw DecodeError("bad integer: " + s);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw DecodeError("integer out of range: " + s);
  }
}

ReclaimProof parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTextHeader) throw DecodeError("not a reclaim proof");
  ReclaimProof p;
  bool have_period = false, have_total = false, have_rsum = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    std::vector<std::string> values;
    for (std::string v; fields >> v;) values.push_back(v);
    if (key == "period" && values.size() == 1) {
      std::uint64_t v = parse_uint(values[0]);
      if (v > 0xffffffffULL) throw DecodeError("period out of range");
      p.period = static_cast<Epoch>(v);
      have_period = true;
    } else if (key == "claimed_total" && values.size() == 1) {
      p.claimed_total = parse_uint(values[0]);
      have_total = true;
    } else if (key == "r_sum" && values.size() == 1) {
      p.r_sum.r.bytes = array_from_hex<kScalarSize>(values[0]);
      have_rsum = true;
    } else if (key == "item" && values.size() == 3) {
      ReclaimItem item;
      item.sigma = array_from_hex<kSignatureSize>(values[0]);
      item.tau = array_from_hex<16>(values[1]);
      item.com.element.bytes = array_from_hex<kElementSize>(values[2]);
      p.items.push_back(item);
    } else {
      throw DecodeError("unexpected reclaim proof line: " + line);
    }
  }
  if (!have_period || !have_total || !have_rsum) throw DecodeError("reclaim proof is missing a field");
  return p;
}

}  // namespace

ReclaimProof parse_reclaim_proof(ByteView bytes) {
  if (bytes.size() >= 4 && std::equal(kProofMagic.begin(), kProofMagic.end(), bytes.begin())) {
    return parse_binary(bytes);
  }
  return parse_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace aidwallet
