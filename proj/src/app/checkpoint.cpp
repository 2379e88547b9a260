#include "cd2cdr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void Checkpoint::add(const std::string& name, const Mat& value) {
  if (has(name)) throw std::invalid_argument("checkpoint: duplicate block '" + name + "'");
  blocks.push_back({name, value});
}

void Checkpoint::add_params(const ParamList& params) {
  for (const auto& p : params) add(p.name, *p.value);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

const Mat& Checkpoint::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.value;
  }
  throw IntegrityError(fmt::format("checkpoint ({}): missing block '{}'", phase, name));
}

void Checkpoint::restore_params(const ParamList& params) const {
  for (const auto& p : params) {
    const Mat& src = block(p.name);
    if (src.rows() != p.value->rows() || src.cols() != p.value->cols()) {
      throw IntegrityError(fmt::format("checkpoint ({}): block '{}' is {}x{}, model expects {}x{}", phase, p.name,
                                       src.rows(), src.cols(), p.value->rows(), p.value->cols()));
    }
    *p.value = src;
  }
}

double Checkpoint::scalar(const std::string& name) const {
  auto it = scalars.find(name);
  if (it == scalars.end()) throw IntegrityError(fmt::format("checkpoint ({}): missing scalar '{}'", phase, name));
  return it->second;
}

const std::string& Checkpoint::attribute(const std::string& name) const {
  auto it = attributes.find(name);
  if (it == attributes.end()) {
    throw IntegrityError(fmt::format("checkpoint ({}): missing attribute '{}'", phase, name));
  }
  return it->second;
}

std::string blob_file_name(const std::string& block_name) {
  std::string out;
  for (char c : block_name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  return out + ".f32";
}

namespace {

void put_le32(std::string& buf, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<char>((u >> s) & 0xffu));
}

float get_le32(const unsigned char* p) {
  const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir);
  Json manifest;
  manifest["version"] = ckpt.version;
  manifest["config_hash"] = ckpt.config_hash;
  manifest["phase"] = ckpt.phase;
  manifest["attributes"] = Json::object();
  for (const auto& [k, v] : ckpt.attributes) manifest["attributes"][k] = v;
  manifest["scalars"] = Json::object();
  for (const auto& [k, v] : ckpt.scalars) manifest["scalars"][k] = v;
  manifest["blocks"] = Json::array();
  for (const auto& b : ckpt.blocks) {
    const std::string file = blob_file_name(b.name);
    std::string bytes;
    bytes.reserve(b.value.size() * 4);
    for (double v : b.value.values()) put_le32(bytes, static_cast<float>(v));
    write_file(dir / file, bytes);
    manifest["blocks"].push_back({{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}, {"file", file}});
  }
  // Manifest last: a directory with a manifest is complete.
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw IntegrityError("checkpoint: no manifest at " + mpath.string());
  Json m;
  try {
    m = Json::parse(read_file(mpath));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: unreadable manifest: ") + e.what());
  }
  Checkpoint c;
  try {
    c.version = m.at("version").get<int>();
    if (c.version != kCheckpointVersion) {
      throw IntegrityError(fmt::format("checkpoint: version {} is not supported (expected {})", c.version,
                                       kCheckpointVersion));
    }
    c.config_hash = m.at("config_hash").get<std::string>();
    c.phase = m.at("phase").get<std::string>();
    if (m.contains("attributes")) {
      for (const auto& [k, v] : m["attributes"].items()) c.attributes[k] = v.get<std::string>();
    }
    if (m.contains("scalars")) {
      for (const auto& [k, v] : m["scalars"].items()) c.scalars[k] = v.get<double>();
    }
    for (const auto& jb : m.at("blocks")) {
      const auto name = jb.at("name").get<std::string>();
      const auto rows = jb.at("rows").get<std::int64_t>();
      const auto cols = jb.at("cols").get<std::int64_t>();
      const auto file = jb.at("file").get<std::string>();
      if (rows < 0 || cols < 0) throw IntegrityError(fmt::format("checkpoint: block '{}' has a negative shape", name));
      const fs::path bpath = dir / file;
      if (!fs::exists(bpath)) throw IntegrityError(fmt::format("checkpoint: blob for block '{}' is missing", name));
      const std::string bytes = read_file(bpath);
      const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 4;
      if (bytes.size() != expected) {
        throw IntegrityError(fmt::format("checkpoint: block '{}' blob has {} bytes, manifest shape {}x{} needs {}",
                                         name, bytes.size(), rows, cols, expected));
      }
      Mat v(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
      for (std::size_t i = 0; i < v.size(); ++i) v.values()[i] = static_cast<double>(get_le32(p + 4 * i));
      c.add(name, v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  return c;
}

}  // namespace cd2cdr
