#pragma once

#include <cstdint>
#include <string>

#include "pdgm/mlp.hpp"

namespace pdgm {

class CheckpointError : public Error {
 public:
  enum class Kind { Io, VersionMismatch, ChecksumMismatch, ArchMismatch };

  CheckpointError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr int kCheckpointVersion = 1;

// Network parameters plus free-form metadata, stored as a JSON object string
// so this header stays independent of the JSON library.
struct Checkpoint {
  Mlp params;
  std::string metadata_json = "{}";
};

// Single JSON document:
//   {"version": 1, "arch": {...}, "metadata": {...}, "crc32": <uint>,
//    "theta": [...]}
// crc32 covers the theta array text (values joined by ',' with 17
// significant digits), which is also exactly how theta is written.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t theta_checksum(const Vector& theta);
std::string arch_to_json(const MlpArch& arch);
MlpArch arch_from_json(const std::string& json);

}  // namespace pdgm
