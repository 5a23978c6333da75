#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mosanet/common/error.hpp"
#include "mosanet/corpus/manifest.hpp"
#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/corpus/wav.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using namespace mosanet::corpus;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mosanet_corpus_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Wav, SavesAndLoadsPcm16) {
  Waveform w;
  for (int i = 0; i < 1600; ++i) w.samples.push_back(0.4 * std::sin(0.05 * i));
  w.samples[10] = 1.7;  // clipped on write
  const auto path = scratch("sine.wav");
  save_waveform(path, w);
  const auto back = load_waveform(path);
  ASSERT_EQ(back.size(), w.size());
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_NEAR(back.samples[100], w.samples[100], 1.0 / 32768);
  EXPECT_NEAR(back.samples[10], 32767.0 / 32768, 1e-12);
}

TEST(Wav, RejectsOtherRatesAndStereo) {
  std::vector<double> x(800, 0.1);
  save_pcm16(scratch("8k.wav"), x, 8000, 1);
  save_pcm16(scratch("stereo.wav"), x, 16000, 2);
  EXPECT_THROW(load_waveform(scratch("8k.wav")), UsageError);
  EXPECT_THROW(load_waveform(scratch("stereo.wav")), UsageError);
  EXPECT_THROW(load_waveform(scratch("missing.wav")), Error);
}

TEST(Mixing, GainFollowsPowerRatio) {
  const auto clean = synth_speech(1, 1.0);
  const auto noise = synth_noise("white", 2, 2.0);
  const auto mix = mix_at_snr(clean, noise, 5.0, 1234);
  const std::span<const double> crop(noise.samples.data() + 1234, clean.size());
  const double g = std::sqrt(power(clean.view()) / (power(crop) * std::pow(10.0, 0.5)));
  EXPECT_NEAR(mix.gain, g, 1e-12);
  EXPECT_EQ(mix.noise_offset, 1234u);
  EXPECT_NEAR(mix.mixture.samples[7], clean.samples[7] + g * noise.samples[1241], 1e-12);
  EXPECT_NEAR(measured_snr_db(clean, mix.mixture), 5.0, 1e-9);
}

TEST(Mixing, ShortNoiseOrSilenceIsAnError) {
  const auto clean = synth_speech(1, 1.0);
  EXPECT_THROW(mix_at_snr(clean, synth_noise("pink", 1, 0.5), 0.0, 0), UsageError);
  Waveform silent;
  silent.samples.assign(32000, 0.0);
  EXPECT_THROW(mix_at_snr(clean, silent, 0.0, 0), UsageError);
}

TEST(Mixing, SnrGrid) {
  const auto grid = paper_snr_grid_db();
  ASSERT_EQ(grid.size(), 31u);
  EXPECT_EQ(grid[0], -10.0);
  EXPECT_EQ(grid[15], 5.0);
  EXPECT_EQ(grid[30], 20.0);
}

TEST(Synth, DeterministicPerSeed) {
  EXPECT_EQ(synth_speech(3, 0.5).samples, synth_speech(3, 0.5).samples);
  EXPECT_NE(synth_speech(3, 0.5).samples, synth_speech(4, 0.5).samples);
  for (const auto& kind : synth_noise_kinds()) EXPECT_EQ(synth_noise(kind, 1, 0.25).size(), 4000u) << kind;
  EXPECT_THROW(synth_noise("traffic", 1, 1.0), UsageError);
}

TEST(Manifest, JsonLineKeepsEveryField) {
  ManifestEntry e;
  e.utt_id = "spk1_white_m5dB_0";
  e.clean_path = "clean/spk1.wav";
  e.degraded_path = "noisy/spk1_white_m5dB_0.wav";
  e.kind = Kind::Noisy;
  e.noise_type = "white";
  e.snr_db = -5.0;
  e.split = Split::TestSeen;
  e.scores.stoi = 0.61;
  e.scores.sdi = 2.5;
  EXPECT_EQ(parse_json_line(to_json_line(e)), e);
}

TEST(Manifest, ValidationNamesTheUtterance) {
  ManifestEntry e;
  e.utt_id = "u7";
  e.clean_path = "c.wav";
  e.degraded_path = "d.wav";
  e.kind = Kind::Noisy;  // noisy without noise type and SNR
  try {
    validate(e);
    FAIL() << "expected UsageError";
  } catch (const UsageError& err) {
    EXPECT_NE(std::string(err.what()).find("u7"), std::string::npos);
  }
  e.noise_type = "white";
  e.snr_db = 0.0;
  e.scores.stoi = 1.5;
  EXPECT_THROW(validate(e), UsageError);
  EXPECT_THROW(parse_json_line("{\"utt_id\": 3}"), UsageError);
}

TEST(Manifest, BuildIsSeededAndSplits) {
  const auto dir = scratch("build");
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_waveform(dir / "a.wav", synth_speech(1, 0.5));
  save_waveform(dir / "b.wav", synth_speech(2, 0.5));
  save_waveform(dir / "white.wav", synth_noise("white", 1, 2.0));
  save_waveform(dir / "pink.wav", synth_noise("pink", 1, 2.0));

  std::vector<CleanUtterance> clean{{"a", dir / "a.wav", Split::Train}, {"b", dir / "b.wav", Split::TestSeen}};
  MixSpec spec;
  spec.noise_types = {"white", "pink"};
  spec.snr_grid_db = {-5, 0, 5};
  spec.seed = 11;
  spec.degraded_per_clean = 3;
  BuildOptions opt;
  opt.output_dir = dir / "out";
  opt.noise_files = {{"white", dir / "white.wav"}, {"pink", dir / "pink.wav"}};
  const auto m = build_manifest(clean, spec, opt);
  ASSERT_EQ(m.size(), 8u);
  EXPECT_EQ(build_manifest(clean, spec, opt), m);
  for (const auto& e : m) {
    EXPECT_NO_THROW(validate(e));
    if (e.kind == Kind::Noisy) EXPECT_TRUE(fs::exists(e.degraded_path)) << e.utt_id;
  }

}

TEST(Manifest, SplitSeenUnseen) {
  auto entry = [](const std::string& id, const std::string& noise, Split split) {
    ManifestEntry e;
    e.utt_id = id;
    e.clean_path = "c.wav";
    e.degraded_path = id + ".wav";
    e.kind = Kind::Noisy;
    e.noise_type = noise;
    e.snr_db = 0.0;
    e.split = split;
    return e;
  };
  const Manifest m{entry("t1", "white", Split::Train), entry("s1", "white", Split::TestSeen),
                   entry("s2", "pink", Split::TestSeen)};
  const auto r = split_seen_unseen(m, {"pink"});
  ASSERT_EQ(r.train.size(), 1u);
  ASSERT_EQ(r.test_seen.size(), 1u);
  ASSERT_EQ(r.test_unseen.size(), 1u);
  EXPECT_EQ(r.test_unseen[0].utt_id, "s2");
  EXPECT_EQ(r.test_unseen[0].split, Split::TestUnseen);
  EXPECT_THROW(split_seen_unseen(m, {"white"}), UsageError);
}
