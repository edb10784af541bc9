#include "pdgm/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <zlib.h>

#include "json.hpp"
#include "pdgm/forward.hpp"

namespace pdgm {

using nlohmann::json;

namespace {

std::string theta_text(const Vector& theta) {
  std::string out;
  out.reserve(static_cast<std::size_t>(theta.size()) * 24);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (i) out += ',';
    out += format_double(theta[i]);
  }
  return out;
}

json arch_json(const MlpArch& a) {
  return json{{"in_dim", a.in_dim},
              {"out_dim", a.out_dim},
              {"hidden_width", a.hidden_width},
              {"n_blocks", a.n_blocks},
              {"time_embed_dim", a.time_embed_dim},
              {"head", a.head == HeadKind::Softplus ? "softplus" : "linear"},
              {"softplus_beta", a.softplus_beta},
              {"time_horizon", a.time_horizon}};
}

MlpArch arch_from(const json& j) {
  MlpArch a;
  a.in_dim = j.at("in_dim").get<int>();
  a.out_dim = j.at("out_dim").get<int>();
  a.hidden_width = j.at("hidden_width").get<int>();
  a.n_blocks = j.at("n_blocks").get<int>();
  a.time_embed_dim = j.at("time_embed_dim").get<int>();
  const auto head = j.at("head").get<std::string>();
  if (head == "softplus") {
    a.head = HeadKind::Softplus;
  } else if (head == "linear") {
    a.head = HeadKind::Linear;
  } else {
    throw CheckpointError(CheckpointError::Kind::ArchMismatch,
                          "unknown head '" + head + "'");
  }
  a.softplus_beta = j.at("softplus_beta").get<double>();
  a.time_horizon = j.at("time_horizon").get<double>();
  return a;
}

}  // namespace

std::uint32_t theta_checksum(const Vector& theta) {
  const std::string text = theta_text(theta);
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()),
            static_cast<uInt>(text.size())));
}

std::string arch_to_json(const MlpArch& arch) { return arch_json(arch).dump(); }

MlpArch arch_from_json(const std::string& text) {
  return arch_from(json::parse(text));
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const Vector& theta = checkpoint.params.theta();
  const std::string text = theta_text(theta);
  json meta;
  try {
    meta = json::parse(checkpoint.metadata_json);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("checkpoint metadata is not JSON: ") + e.what());
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::Io,
                          "cannot open '" + path + "' for writing");
  }
  out << "{\"version\":" << kCheckpointVersion
      << ",\"arch\":" << arch_json(checkpoint.params.arch()).dump()
      << ",\"metadata\":" << meta.dump()
      << ",\"crc32\":" << theta_checksum(theta)
      << ",\"theta\":[" << text << "]}\n";
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::Io, "write failed for '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::Io,
                          "cannot open '" + path + "' for reading");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw CheckpointError(CheckpointError::Kind::ChecksumMismatch,
                          "'" + path + "' is truncated or corrupt: " + e.what());
  }

  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                            "'" + path + "' has checkpoint version " +
                                std::to_string(version) + ", expected " +
                                std::to_string(kCheckpointVersion));
    }
    const MlpArch arch = arch_from(doc.at("arch"));
    const auto& values = doc.at("theta");
    Vector theta(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      theta[static_cast<Eigen::Index>(i)] = values[i].get<double>();
    }
    if (theta_checksum(theta) != doc.at("crc32").get<std::uint32_t>()) {
      throw CheckpointError(CheckpointError::Kind::ChecksumMismatch,
                            "'" + path + "' fails its CRC-32 check");
    }
    const std::size_t expected = parameter_count(arch);
    if (static_cast<std::size_t>(theta.size()) != expected) {
      throw CheckpointError(CheckpointError::Kind::ArchMismatch,
                            "'" + path + "' stores " +
                                std::to_string(theta.size()) +
                                " parameters but its architecture needs " +
                                std::to_string(expected));
    }
    Checkpoint ck{Mlp(arch, std::move(theta)), doc.value("metadata", json::object()).dump()};
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "'" + path + "' has an unexpected layout: " + e.what());
  }
}

}  // namespace pdgm
