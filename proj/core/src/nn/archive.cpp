#include "mosanet/nn/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"

namespace mosanet::nn {

static_assert(std::endian::native == std::endian::little, "archive format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'O', 'S', 'A', 'P', 'A', 'R', '1'};

void put_u32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(const std::string& s, std::size_t& pos) {
  if (pos + 4 > s.size()) throw Error("parameter archive truncated");
  std::uint32_t v;
  std::memcpy(&v, s.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const NamedMatrices& entries) {
  std::string out(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, m] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  write_file_atomic(path, out);
}

NamedMatrices read_archive(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  if (data.size() < 12 || std::memcmp(data.data(), kMagic, 8) != 0) {
    throw UsageError(path.string() + ": not a parameter archive");
  }
  std::size_t pos = 8;
  const std::uint32_t count = get_u32(data, pos);
  NamedMatrices out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(data, pos);
    if (pos + len > data.size()) throw Error("parameter archive truncated");
    std::string name = data.substr(pos, len);
    pos += len;
    const std::uint32_t rows = get_u32(data, pos);
    const std::uint32_t cols = get_u32(data, pos);
    const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
    if (pos + bytes > data.size()) throw Error("parameter archive truncated");
    Matrix m(rows, cols);
    std::memcpy(m.data(), data.data() + pos, bytes);
    pos += bytes;
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

std::uint64_t hash_matrices(const NamedMatrices& entries) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, m] : entries) {
    h = fnv1a(name, h);
    const std::int64_t shape[2] = {m.rows(), m.cols()};
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(shape), sizeof(shape)), h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double)), h);
  }
  return h;
}

}  // namespace mosanet::nn
