#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "afro/audio.hpp"
#include "afro/error.hpp"
#include "afro/util.hpp"

namespace afro {
namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

struct Located {
  WavInfo info;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;
};

Located locate(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error("not a RIFF/WAVE file");
  Located loc;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) throw Error("truncated fmt chunk");
      const std::uint16_t format = le16(bytes.data() + body);
      loc.info.channels = le16(bytes.data() + body + 2);
      loc.info.sample_rate_hz = static_cast<int>(le32(bytes.data() + body + 4));
      loc.info.bits_per_sample = le16(bytes.data() + body + 14);
      std::uint16_t effective = format;
      if (format == 0xFFFE && size >= 40 && body + 26 <= bytes.size())
        effective = le16(bytes.data() + body + 24);  // WAVE_FORMAT_EXTENSIBLE
      if (effective == 1 && loc.info.bits_per_sample == 16) {
        loc.info.is_float = false;
      } else if (effective == 3 && loc.info.bits_per_sample == 32) {
        loc.info.is_float = true;
      } else {
        throw Error("unsupported WAV encoding (format " + std::to_string(effective) +
                    ", " + std::to_string(loc.info.bits_per_sample) + " bits)");
      }
      if (loc.info.channels <= 0 || loc.info.sample_rate_hz <= 0)
        throw Error("invalid WAV fmt chunk");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error("data chunk before fmt chunk");
      loc.data_offset = body;
      loc.data_size = std::min(size, bytes.size() - body);
      const std::size_t frame_bytes =
          static_cast<std::size_t>(loc.info.channels) * (loc.info.bits_per_sample / 8);
      loc.info.frames = loc.data_size / frame_bytes;
      return loc;
    }
    pos = body + size + (size & 1);
  }
  throw Error(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

}  // namespace

WavInfo parse_wav_header(std::span<const std::uint8_t> bytes) {
  return locate(bytes).info;
}

WavInfo read_wav_info(const std::filesystem::path& path) {
  return parse_wav_header(read_file_bytes(path));
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  const Located loc = locate(bytes);
  if (loc.info.channels != 1)
    throw Error("expected mono WAV, got " + std::to_string(loc.info.channels) + " channels");
  AudioBuffer out;
  out.sample_rate_hz = loc.info.sample_rate_hz;
  out.samples.resize(loc.info.frames);
  const std::uint8_t* p = bytes.data() + loc.data_offset;
  if (loc.info.is_float) {
    for (std::size_t i = 0; i < loc.info.frames; ++i) {
      const std::uint32_t bits = le32(p + 4 * i);
      float v;
      std::memcpy(&v, &bits, sizeof v);
      out.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < loc.info.frames; ++i) {
      const auto v = static_cast<std::int16_t>(le16(p + 2 * i));
      out.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  }
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (float s : audio.samples) {
    const float c = std::isfinite(s) ? std::clamp(s, -1.0f, 1.0f) : 0.0f;
    const long q = std::clamp(std::lround(static_cast<double>(c) * 32768.0), -32768L, 32767L);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  const auto bytes = encode_wav(audio);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                           bytes.size()));
}

}  // namespace afro
