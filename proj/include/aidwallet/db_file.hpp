#pragma once

#include <filesystem>

#include "aidwallet/oram.hpp"

namespace aidwallet {

/// Database file:
///   "AWDB" || version u8 || variant u8 || capacity u32 || bucket_size u16 ||
///   recursion_factor u16 || periodic u8 || variant payload
/// naive payload:  blob(ciphertext)
/// tree payload:   tree_count u8, per tree { block_count u32, leaf_count u32,
///                 payload_size u16, blob(stash), bucket_count u32,
///                 bucket_count x blob(bucket) }, root_entries u32, blob(root)
/// blob = u32 BE length || bytes. All integers big-endian.
Bytes serialize_database(const EncryptedDatabase& db);
/// Throws DecodeError on bad magic, unknown version, or inconsistent shape.
EncryptedDatabase parse_database(ByteView bytes);

void db_store(const std::filesystem::path& path, const EncryptedDatabase& db);
EncryptedDatabase db_load(const std::filesystem::path& path);

/// Whole-file helpers shared by the other persisted formats.
Bytes read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, ByteView data);

}  // namespace aidwallet
