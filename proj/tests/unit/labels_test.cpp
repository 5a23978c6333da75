#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <string>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/labels/envelope.hpp"
#include "mosanet/labels/gen_labels.hpp"
#include "mosanet/labels/metrics.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using namespace mosanet::labels;

TEST(Stoi, DecreasesWithNoise) {
  const auto clean = corpus::synth_speech(21, 2.0);
  const auto noise = corpus::synth_noise("white", 21, 2.0);
  double previous = 1.0;
  for (double snr : {20.0, 5.0, -5.0}) {
    const double s = stoi(clean, corpus::mix_at_snr(clean, noise, snr, 0).mixture);
    EXPECT_LT(s, previous) << snr;
    previous = s;
  }
}

TEST(Stoi, TooShortInputThrows) {
  const auto x = corpus::synth_speech(2, 0.2);
  try {
    stoi(x, x);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("minimum duration"), std::string::npos);
  }
}

TEST(Sdi, Errors) {
  Waveform zero;
  zero.samples.assign(100, 0.0);
  Waveform one;
  one.samples.assign(100, 1.0);
  EXPECT_THROW(sdi(zero, one), UsageError);
  Waveform shorter;
  shorter.samples.assign(50, 1.0);
  EXPECT_THROW(sdi(one, shorter), UsageError);
  EXPECT_DOUBLE_EQ(sdi(one, zero), 1.0);
}

TEST(Ssnr, ClampsAndImproves) {
  const auto clean = corpus::synth_speech(3, 1.0);
  const auto noise = corpus::synth_noise("white", 3, 1.0);
  const auto noisy = corpus::mix_at_snr(clean, noise, 0.0, 0).mixture;
  const auto less_noisy = corpus::mix_at_snr(clean, noise, 10.0, 0).mixture;
  const double s = ssnr(clean, noisy);
  EXPECT_GE(s, -10.0);
  EXPECT_LE(s, 35.0);
  EXPECT_GT(ssnri(clean, noisy, less_noisy), 0.0);
  EXPECT_DOUBLE_EQ(ssnri(clean, noisy, noisy), 0.0);
}

TEST(Composite, CsigIsClamped) {
  EXPECT_EQ(csig(0.0, 4.5, 0.0), 5.0);
  EXPECT_EQ(csig(5.0, 1.0, 200.0), 1.0);
  const double raw = csig_raw(0.8, 2.5, 40.0);
  EXPECT_NEAR(raw, 3.093 - 1.029 * 0.8 + 0.603 * 2.5 - 0.009 * 40.0, 1e-12);
}

TEST(Llr, NoisyIsPositive) {
  const auto clean = corpus::synth_speech(4, 1.0);
  const auto noisy = corpus::mix_at_snr(clean, corpus::synth_noise("pink", 4, 1.0), 5.0, 0).mixture;
  const auto r = llr(clean, noisy);
  EXPECT_GT(r.value, 0.0);
  EXPECT_GT(r.frames, 0u);
  EXPECT_GT(wss(clean, noisy).value, 0.0);
}

TEST(Butterworth, HalfPowerAtCutoff) {
  const auto lp = butter_lowpass(4, 50.0, 16000.0);
  EXPECT_NEAR(std::abs(frequency_response(lp, 0.0, 16000.0)), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(frequency_response(lp, 50.0, 16000.0)), std::sqrt(0.5), 1e-9);
  const auto bp = butter_bandpass(4, 457.0, 1202.0, 16000.0);
  EXPECT_EQ(bp.size(), 4u);
  EXPECT_NEAR(std::abs(frequency_response(bp, 457.0, 16000.0)), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(std::abs(frequency_response(bp, 1202.0, 16000.0)), std::sqrt(0.5), 1e-9);
  EXPECT_LT(std::abs(frequency_response(bp, 4000.0, 16000.0)), 1e-3);
}

// Frozen from scipy (tests/oracles/make_oracles.py).
TEST(Envelope, MatchesScipyReference) {
  const fs::path dir = MOSANET_TEST_DATA;
  const auto env = envelope_band2(corpus::load_waveform(dir / "clean_0.wav"));
  EXPECT_EQ(env.frame_rate, 100.0);
  const auto rows = read_csv(dir / "envelope_reference.csv");
  ASSERT_GT(rows.size(), 10u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto i = std::stoul(rows[r][0]);
    ASSERT_LT(i, env.values.size());
    EXPECT_NEAR(env.values[i], std::stod(rows[r][1]), 1e-9) << "index " << i;
  }
}

TEST(GenLabels, CleanNoisyAndMissingPesq) {
  const auto dir = fs::temp_directory_path() / "mosanet_labels_test";
  fs::create_directories(dir);
  const auto clean = corpus::synth_speech(5, 1.0);
  const auto noisy = corpus::mix_at_snr(clean, corpus::synth_noise("white", 5, 1.0), 0.0, 0).mixture;
  corpus::save_waveform(dir / "c.wav", clean);
  corpus::save_waveform(dir / "n.wav", noisy);

  corpus::ManifestEntry c;
  c.utt_id = "c";
  c.clean_path = c.degraded_path = dir / "c.wav";
  corpus::ManifestEntry n = c;
  n.utt_id = "n";
  n.degraded_path = dir / "n.wav";
  n.kind = corpus::Kind::Noisy;
  n.noise_type = "white";
  n.snr_db = 0.0;

  LabelOptions opt;
  opt.jobs = 1;
  const auto report = gen_labels({c, n}, opt);
  ASSERT_EQ(report.manifest.size(), 2u);
  EXPECT_EQ(report.manifest[0].scores.stoi, 1.0);
  EXPECT_EQ(report.manifest[0].scores.sdi, 0.0);
  EXPECT_LT(*report.manifest[1].scores.stoi, 1.0);
  EXPECT_GT(*report.manifest[1].scores.sdi, 0.0);
  EXPECT_FALSE(report.manifest[1].scores.pesq.has_value());
  ASSERT_EQ(report.failures.size(), 2u);
  EXPECT_EQ(report.failures[0].metric, "pesq");

  // Running again keeps what is there.
  auto again = gen_labels(report.manifest, opt).manifest;
  EXPECT_EQ(again, report.manifest);
}
