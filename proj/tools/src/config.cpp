#include "pdgm/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

#include "pdgm/types.hpp"

namespace pdgm::cli {

namespace {

enum class Kind { Text, Real, PositiveReal, Count, NonNegative, Choice };

struct Field {
  Kind kind;
  std::string fallback;  // empty: no default
  std::set<std::string> choices = {};
};

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> s = {
      {"process", {Kind::Choice, "", {"zzp", "bps", "rhmc"}}},
      {"potential", {Kind::Choice, "gaussian", {"gaussian", "zero"}}},
      {"dataset", {Kind::Choice, "", {"checkerboard", "gaussian_grid", "olympic_rings", "rose",
                                      "fractal_tree"}}},
      {"data", {Kind::Text, ""}},
      {"data_n", {Kind::Count, "100000"}},
      {"data_seed", {Kind::NonNegative, "0"}},
      {"d", {Kind::Count, ""}},
      {"T_f", {Kind::PositiveReal, "5"}},
      {"lambda_r", {Kind::Real, "1"}},
      {"beta_schedule", {Kind::Text, "0:1"}},
      {"omega", {Kind::Choice, "uniform", {"uniform", "quadratic"}}},
      {"hidden_width", {Kind::Count, "128"}},
      {"n_blocks", {Kind::NonNegative, "4"}},
      {"time_embed_dim", {Kind::Count, "32"}},
      {"components", {Kind::Count, "8"}},
      {"steps", {Kind::NonNegative, "5000"}},
      {"batch", {Kind::Count, "512"}},
      {"lr", {Kind::PositiveReal, "0.0005"}},
      {"subsample", {Kind::NonNegative, "0"}},
      {"trajectory_cache", {Kind::NonNegative, "0"}},
      {"N", {Kind::NonNegative, "100"}},
      {"init_mode", {Kind::Choice, "base", {"base", "learned"}}},
      {"n_samples", {Kind::Count, "10000"}},
      {"metrics", {Kind::Text, "mmd"}},
      {"seed", {Kind::NonNegative, "0"}},
      {"output_dir", {Kind::Text, "."}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& text, long long& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void check_value(const std::string& key, const Field& f, const std::string& value) {
  auto bad = [&](const std::string& why) {
    return UsageError("config key '" + key + "': " + why + " (got '" + value + "')");
  };
  double r = 0.0;
  long long i = 0;
  switch (f.kind) {
    case Kind::Text:
      if (value.empty()) throw bad("value must not be empty");
      break;
    case Kind::Real:
      if (!parse_real(value, r)) throw bad("expected a number");
      break;
    case Kind::PositiveReal:
      if (!parse_real(value, r) || !(r > 0.0)) throw bad("expected a positive number");
      break;
    case Kind::Count:
      if (!parse_int(value, i) || i < 1) throw bad("expected a positive integer");
      break;
    case Kind::NonNegative:
      if (!parse_int(value, i) || i < 0) throw bad("expected a non-negative integer");
      break;
    case Kind::Choice:
      if (!f.choices.count(value)) {
        std::string list;
        for (const auto& c : f.choices) list += (list.empty() ? "" : ", ") + c;
        throw bad("expected one of " + list);
      }
      break;
  }
}

}  // namespace

RunConfig::RunConfig() = default;

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : schema()) out.push_back(k);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) throw UsageError("unknown config key '" + key + "'");
  check_value(key, it->second, value);
  values_[key] = value;
}

void RunConfig::parse(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw UsageError(where + "duplicate key '" + key + "'");
    try {
      set(key, value);
    } catch (const UsageError& e) {
      throw UsageError(where + e.what());
    }
  }
}

void RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  parse(in, path);
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw UsageError("override '" + assignment + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

void RunConfig::require(const std::string& key) const {
  if (!has(key)) throw UsageError("missing required config key '" + key + "'");
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const auto f = schema().find(key);
  if (f == schema().end()) throw UsageError("unknown config key '" + key + "'");
  if (f->second.fallback.empty()) throw UsageError("missing required config key '" + key + "'");
  return f->second.fallback;
}

double RunConfig::real(const std::string& key) const {
  double r = 0.0;
  parse_real(str(key), r);
  return r;
}

long long RunConfig::integer(const std::string& key) const {
  long long i = 0;
  parse_int(str(key), i);
  return i;
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  return static_cast<std::uint64_t>(integer(key));
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, f] : schema()) {
    if (k == "output_dir") continue;  // where results go is not part of the run
    const auto it = values_.find(k);
    const std::string v = it != values_.end() ? it->second : f.fallback;
    if (v.empty()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

std::string RunConfig::hash() const {
  const std::string c = canonical();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(c.data()),
                         static_cast<uInt>(c.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace pdgm::cli
