#include <gtest/gtest.h>

#include <cstring>

#include "mixaug/audio.hpp"
#include "mixaug/csv.hpp"
#include "mixaug/wav.hpp"
#include "oracles.hpp"

using namespace mixaug;

namespace {

std::vector<std::uint8_t> pcm16_file(std::int16_t value, std::size_t frames, std::uint16_t channels) {
  std::vector<std::uint8_t> out;
  const auto put32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i))); };
  const auto put16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i))); };
  const std::uint32_t data = static_cast<std::uint32_t>(frames * channels * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(36 + data);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(16);
  put16(1);
  put16(channels);
  put32(44100);
  put32(44100u * channels * 2);
  put16(static_cast<std::uint16_t>(channels * 2));
  put16(16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(data);
  for (std::size_t i = 0; i < frames * channels; ++i) put16(static_cast<std::uint16_t>(value));
  return out;
}

}  // namespace

TEST(Wav, Float32StereoDecodesLengthAndRate) {
  const auto clip = oracle::noise(44100, 1);
  const auto back = decode_wav(encode_wav(clip, WavEncoding::float32));
  EXPECT_EQ(back.size(), 44100u);
  EXPECT_EQ(back.sample_rate, 44100);
}

TEST(Wav, Pcm16ConstantScalesToHalf) {
  const auto clip = decode_wav(pcm16_file(16384, 100, 2));
  for (std::size_t c = 0; c < 2; ++c)
    for (float v : clip[c]) ASSERT_NEAR(v, 0.5, 1e-4);
}

TEST(Wav, MonoIsDuplicated) {
  const auto clip = decode_wav(pcm16_file(-8192, 10, 1));
  EXPECT_EQ(clip[0], clip[1]);
  EXPECT_NEAR(clip[0][3], -0.25, 1e-6);
}

TEST(Wav, RifxIsMalformedHeader) {
  auto bytes = pcm16_file(0, 10, 2);
  std::memcpy(bytes.data(), "RIFX", 4);
  try {
    decode_wav(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::wav_malformed_header);
  }
}

TEST(Wav, DataChunkPastEndIsTruncated) {
  auto bytes = pcm16_file(0, 10, 2);
  bytes.resize(bytes.size() - 6);
  try {
    decode_wav(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::wav_truncated_data);
  }
}

TEST(Wav, Float32RoundTripIsExact) {
  const auto dir = oracle::temp_dir("wav_rt");
  auto clip = oracle::noise(5000, 2, 3.0);  // values beyond [-1, 1] survive too
  clip[1][7] = -0.0f;
  save_wav(clip, dir / "a.wav", "float32");
  const auto back = load_wav(dir / "a.wav");
  ASSERT_EQ(back.size(), clip.size());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < clip.size(); ++i) ASSERT_EQ(std::bit_cast<std::uint32_t>(back[c][i]), std::bit_cast<std::uint32_t>(clip[c][i]));
}

TEST(Wav, Pcm16QuantizationBound) {
  const auto dir = oracle::temp_dir("wav_pcm");
  AudioClip clip(44100, 100);
  for (auto& ch : clip.channels) std::fill(ch.begin(), ch.end(), 0.25f);
  save_wav(clip, dir / "q.wav", "pcm16");
  const auto back = load_wav(dir / "q.wav");
  for (float v : back[0]) ASSERT_NEAR(v, 0.25, 1.0 / 32768);
}

TEST(Wav, Mp3IsUnsupported) {
  const auto dir = oracle::temp_dir("wav_mp3");
  try {
    save_wav(AudioClip(44100, 10), dir / "x.mp3", "mp3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::wav_unsupported_encoding);
    EXPECT_EQ(e.category(), ErrorCategory::data);
  }
}

TEST(Wav, MissingFileIsIoError) {
  try {
    load_wav("/nonexistent/file.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
}

TEST(Audio, MixtureIsAdditive) {
  std::array<AudioClip, 4> stems;
  for (auto& s : stems) s = AudioClip(44100, 64);
  stems[2] = oracle::noise(64, 3);
  EXPECT_EQ(mixture_of(stems), stems[2]);

  stems[0] = stems[2];
  stems[2] = scaled(stems[2], -1.0);
  const auto zero = mixture_of(stems);
  for (float v : zero[0]) ASSERT_EQ(v, 0.0f);
}

TEST(Audio, MixtureMatchesDirectSum) {
  std::array<AudioClip, 4> stems;
  for (std::uint32_t n = 0; n < 4; ++n) stems[n] = oracle::noise(10000, 10 + n, 0.5);
  const auto mix = mixture_of(stems);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < mix.size(); ++i) {
      double s = 0;
      for (const auto& st : stems) s += st[c][i];
      ASSERT_NEAR(mix[c][i], s, 1e-7);
    }
}

TEST(Audio, MixtureRejectsLengthMismatch) {
  std::array<AudioClip, 4> stems;
  for (auto& s : stems) s = AudioClip(44100, 64);
  stems[1] = AudioClip(44100, 63);
  EXPECT_THROW(mixture_of(stems), Error);
}

TEST(Audio, SourceNames) {
  EXPECT_EQ(source_name(SourceType::bass), "bass");
  EXPECT_EQ(parse_source("other"), SourceType::other);
  EXPECT_FALSE(parse_source("guitar").has_value());
}

TEST(Csv, FormatExactRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.125}) EXPECT_EQ(csv::parse_number<double>(csv::format_exact(v), "v"), v);
}

TEST(Csv, FormatDb) {
  EXPECT_EQ(csv::format_db(1.5), "1.500000");
  EXPECT_EQ(csv::format_db(std::nan("")), "nan");
  EXPECT_EQ(csv::format_db(-INFINITY), "-inf");
}

TEST(Csv, RejectsUnrepresentableFields) {
  EXPECT_THROW(csv::checked_field("a,b"), Error);
  EXPECT_NO_THROW(csv::checked_field("song_01"));
}

TEST(Csv, ReadRowsChecksHeader) {
  const auto dir = oracle::temp_dir("csv");
  csv::write_text(dir / "a.csv", "x,y\n1,2\n\n3,4\n");
  EXPECT_EQ(csv::read_rows(dir / "a.csv", "x,y").size(), 2u);
  EXPECT_THROW(csv::read_rows(dir / "a.csv", "x,z"), Error);
  csv::write_text(dir / "b.csv", "x,y\n1\n");
  EXPECT_THROW(csv::read_rows(dir / "b.csv", "x,y"), Error);
}

TEST(Csv, ParseNumberIsStrict) {
  EXPECT_EQ(csv::parse_number<int>(" 12 ", "n"), 12);
  EXPECT_THROW(csv::parse_number<int>("12x", "n"), Error);
  EXPECT_THROW(csv::parse_number<unsigned>("-1", "n"), Error);
}
