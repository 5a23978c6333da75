#include "mosanet/corpus/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mosanet/common/error.hpp"

namespace mosanet::corpus {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Waveform load_waveform(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open audio file " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw UsageError(where + "not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  while (pos + 8 <= data.size()) {
    const unsigned char* chunk = data.data() + pos;
    std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, data.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw UsageError(where + "truncated fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = le16(chunk + 32);  // extensible subformat
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = chunk + 8;
      pcm_bytes = avail;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || pcm == nullptr) throw UsageError(where + "missing fmt or data chunk");
  if (format != 1 || bits != 16) {
    throw UsageError(where + "unsupported sample format (need 16-bit linear PCM)");
  }
  if (channels != 1) {
    throw UsageError(where + "channel count " + std::to_string(channels) + ", expected mono");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw UsageError(where + "sample rate " + std::to_string(rate) + " Hz, expected 16000 Hz");
  }
  Waveform w;
  const std::size_t n = pcm_bytes / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::int16_t>(le16(pcm + 2 * i));
    w.samples[i] = static_cast<double>(v) / 32768.0;
  }
  if (w.samples.empty()) throw UsageError(where + "no samples");
  return w;
}

void save_pcm16(const std::filesystem::path& path, std::span<const double> interleaved,
                int sample_rate, int channels) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * channels * 2));
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double s : interleaved) {
    const double scaled = std::round(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed: " + path.string());
}

void save_waveform(const std::filesystem::path& path, const Waveform& w) {
  save_pcm16(path, w.samples, w.sample_rate, 1);
}

}  // namespace mosanet::corpus
