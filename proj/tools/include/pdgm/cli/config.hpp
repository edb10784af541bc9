#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdgm::cli {

// Bad flags, bad config values, or a missing required key; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key = value settings checked against a fixed schema. Unknown keys and
// malformed values are rejected when they are set, not when they are read.
class RunConfig {
 public:
  RunConfig();

  // Lines of `key = value`; '#' starts a comment. `source` names the input in
  // error messages.
  void parse(std::istream& in, const std::string& source);
  void parse_file(const std::string& path);
  // "key=value" override, as given on the command line.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;  // explicitly set
  void require(const std::string& key) const;

  // Value or schema default.
  std::string str(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;

  // Every schema key with its effective value, sorted, one `key = value`
  // per line.
  std::string canonical() const;
  // Hex CRC32 of canonical().
  std::string hash() const;

  static std::vector<std::string> keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pdgm::cli
