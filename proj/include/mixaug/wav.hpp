#pragma once

// RIFF/WAVE reader and writer: PCM16 and IEEE float32, mono or stereo.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "mixaug/audio.hpp"
#include "mixaug/error.hpp"

namespace mixaug {

enum class WavEncoding { pcm16, float32 };

inline WavEncoding parse_encoding(std::string_view name) {
  if (name == "pcm16") return WavEncoding::pcm16;
  if (name == "float32") return WavEncoding::float32;
  throw Error(ErrorCode::wav_unsupported_encoding, std::string(name));
}

namespace detail {

inline std::uint32_t read_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

/// Decodes an in-memory WAV image. `name` only decorates error messages.
inline AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
  using detail::read_le16;
  using detail::read_le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::wav_malformed_header, name);

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = read_le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw Error(ErrorCode::wav_malformed_header, name + ": fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = read_le16(f);
      channels = read_le16(f + 2);
      rate = read_le32(f + 4);
      block_align = read_le16(f + 12);
      bits = read_le16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (size < 40) throw Error(ErrorCode::wav_malformed_header, name + ": short extensible fmt");
        format = read_le16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::wav_malformed_header, name + ": data before fmt");
      if (body + size > bytes.size()) throw Error(ErrorCode::wav_truncated_data, name);
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw Error(ErrorCode::wav_malformed_header, name + ": no fmt chunk");
  if (data == nullptr) throw Error(ErrorCode::wav_truncated_data, name + ": no data chunk");

  const bool pcm16 = format == detail::kFormatPcm && bits == 16;
  const bool f32 = format == detail::kFormatFloat && bits == 32;
  if (!(pcm16 || f32) || channels < 1 || channels > 2)
    throw Error(ErrorCode::wav_unsupported_encoding,
                name + ": format " + std::to_string(format) + ", " + std::to_string(bits) + " bits, " +
                    std::to_string(channels) + " channels");
  if (rate == 0) throw Error(ErrorCode::wav_malformed_header, name + ": zero sample rate");
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  if (block_align != frame_bytes) throw Error(ErrorCode::wav_malformed_header, name + ": bad block align");
  if (data_size % frame_bytes != 0) throw Error(ErrorCode::wav_truncated_data, name + ": partial frame");

  const std::size_t frames = data_size / frame_bytes;
  AudioClip clip(static_cast<int>(rate), frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + i * frame_bytes + c * (bits / 8);
      float v;
      if (pcm16) {
        v = static_cast<float>(static_cast<std::int16_t>(read_le16(p))) / 32768.0f;
      } else {
        v = std::bit_cast<float>(read_le32(p));
      }
      clip[c][i] = v;
    }
    if (channels == 1) clip[1][i] = clip[0][i];
  }
  return clip;
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  clip.validate();
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::pcm16 ? detail::kFormatPcm : detail::kFormatFloat;
  const std::uint32_t frame_bytes = kChannels * (bits / 8);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.size() * frame_bytes);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  detail::put_tag(out, "RIFF");
  detail::put_le32(out, 36 + data_bytes);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_le32(out, 16);
  detail::put_le16(out, format);
  detail::put_le16(out, kChannels);
  detail::put_le32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_le32(out, static_cast<std::uint32_t>(clip.sample_rate) * frame_bytes);
  detail::put_le16(out, static_cast<std::uint16_t>(frame_bytes));
  detail::put_le16(out, bits);
  detail::put_tag(out, "data");
  detail::put_le32(out, data_bytes);
  for (std::size_t i = 0; i < clip.size(); ++i) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (encoding == WavEncoding::pcm16) {
        const double q = std::clamp(std::nearbyint(static_cast<double>(clip[c][i]) * 32768.0), -32768.0, 32767.0);
        detail::put_le16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        detail::put_le32(out, std::bit_cast<std::uint32_t>(clip[c][i]));
      }
    }
  }
  return out;
}

inline void save_wav(const AudioClip& clip, const std::filesystem::path& path, WavEncoding encoding = WavEncoding::float32) {
  const auto bytes = encode_wav(clip, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "short write to " + path.string());
}

inline void save_wav(const AudioClip& clip, const std::filesystem::path& path, std::string_view encoding) {
  save_wav(clip, path, parse_encoding(encoding));
}

}  // namespace mixaug
