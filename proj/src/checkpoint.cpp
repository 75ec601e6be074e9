#include "ktgnn/checkpoint.hpp"

#include "ktgnn/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace ktgnn {

using nlohmann::json;
using ad::Index;
using ad::Mat;

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  v = to_little(v);
  char buf[8];
  std::memcpy(buf, &v, 8);
  os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  std::memcpy(&v, buf, 8);
  return to_little(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const json& config) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params.items()) {
    tensors.push_back({{"name", p.name}, {"rows", p.tensor.rows()}, {"cols", p.tensor.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.tensor.value().size());
  }
  const std::string header = json{{"format_version", 1}, {"config", config}, {"tensors", tensors}}.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kCheckpointMagic, 8);
  write_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& p : params.items()) {
    const Mat& m = p.tensor.value();
    for (Index k = 0; k < m.size(); ++k) write_u64(out, std::bit_cast<std::uint64_t>(m.data()[k]));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError(path.string() + ": not a checkpoint");
  const std::uint64_t len = read_u64(in);
  std::string header(len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint header truncated");

  Checkpoint ck;
  json h;
  try {
    h = json::parse(header);
    if (h.at("format_version").get<int>() != 1) throw DataError("unsupported checkpoint version");
    ck.config = h.at("config");
    std::uint64_t expected = 0;
    for (const auto& t : h.at("tensors")) {
      const auto rows = t.at("rows").get<Index>();
      const auto cols = t.at("cols").get<Index>();
      if (t.at("offset").get<std::uint64_t>() != expected) throw DataError("checkpoint offsets are not contiguous");
      Mat m(rows, cols);
      for (Index k = 0; k < m.size(); ++k) m.data()[k] = std::bit_cast<double>(read_u64(in));
      expected += static_cast<std::uint64_t>(m.size());
      ck.tensors.push_back({t.at("name").get<std::string>(), ad::constant(std::move(m))});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  return ck;
}

void load_into(const Checkpoint& ck, const ParamSet& params) {
  std::map<std::string, const Mat*> stored;
  for (const auto& t : ck.tensors) stored[t.name] = &t.tensor.value();
  if (stored.size() != params.size())
    throw DataError("checkpoint holds " + std::to_string(stored.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  for (const auto& p : params.items()) {
    auto it = stored.find(p.name);
    if (it == stored.end()) throw DataError("checkpoint is missing parameter " + p.name);
    if (it->second->rows() != p.tensor.rows() || it->second->cols() != p.tensor.cols())
      throw DataError("shape mismatch for parameter " + p.name);
    Tensor t = p.tensor;
    t.mutable_value() = *it->second;
  }
}

}  // namespace ktgnn
