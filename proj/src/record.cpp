#include "aidwallet/record.hpp"

namespace aidwallet {

Bytes encode_record(const HouseholdRecord& rec, bool periodic) {
  Bytes out;
  out.reserve(record_size(periodic));
  put_u16(out, rec.balance);
  put_u16(out, rec.ctr);
  if (periodic) put_u16(out, rec.last_period);
  return out;
}

HouseholdRecord decode_record(ByteView bytes, bool periodic) {
  if (bytes.size() != record_size(periodic)) throw DecodeError("household record has wrong size");
  ByteReader r(bytes);
  HouseholdRecord rec;
  rec.balance = r.u16();
  rec.ctr = r.u16();
  if (periodic) rec.last_period = r.u16();
  return rec;
}

}  // namespace aidwallet
