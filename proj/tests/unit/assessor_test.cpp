#include <gtest/gtest.h>

#include <filesystem>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/assessor/model.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/corpus/synth.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using namespace mosanet::assessor;

namespace {

AssessorConfig small(Arch arch) {
  AssessorConfig c;
  c.arch = arch;
  c.conv_channels = {4, 8};
  c.conv_layers = 6;
  c.blstm_units = 8;
  c.fc_units = 8;
  c.common_dim = 16;
  return c;
}

}  // namespace

TEST(AssessorConfig, ParsesNames) {
  EXPECT_EQ(parse_tasks("Q,I,D"), (std::vector<Task>{Task::Q, Task::I, Task::D}));
  EXPECT_EQ(parse_tasks("DQ"), (std::vector<Task>{Task::Q, Task::D}));
  EXPECT_EQ(parse_arch("crnn_at"), Arch::CRNN_AT);
  EXPECT_THROW(parse_tasks("X"), UsageError);
  EXPECT_THROW(parse_arch("transformer"), UsageError);
}

TEST(AssessorConfig, JsonAndHash) {
  auto c = small(Arch::CRNN_AT);
  c.streams = {features::Stream::PS, features::Stream::SSL};
  const auto back = assessor_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  c.fc_units = 9;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(AssessorConfig, Validation) {
  auto c = small(Arch::CRNN);
  c.conv_layers = 5;
  EXPECT_THROW(validate(c), UsageError);
  c = small(Arch::CRNN);
  c.tasks.clear();
  EXPECT_THROW(validate(c), UsageError);
  c = small(Arch::CRNN);
  c.streams.clear();
  EXPECT_THROW(validate(c), UsageError);
}

TEST(Assessor, OutputsForEveryArchitecture) {
  const auto x = corpus::synth_speech(1, 0.5);
  for (Arch arch : {Arch::BLSTM, Arch::CNN, Arch::CRNN, Arch::CRNN_AT}) {
    Assessor m(small(arch), 3);
    const auto in = m.make_extractor().extract(x, "u");
    const auto r = m.assess(in);
    ASSERT_EQ(r.tasks.size(), 3u) << to_string(arch);
    for (Task t : {Task::Q, Task::I, Task::D}) {
      const auto& tr = r.at(t);
      EXPECT_EQ(static_cast<int>(tr.frame_scores.size()), r.total_frames);
      double mean = 0;
      for (double v : tr.frame_scores) mean += v / tr.frame_scores.size();
      EXPECT_NEAR(tr.utterance_score, mean, 1e-12);
      EXPECT_EQ(tr.attention.size() != 0, arch == Arch::CRNN_AT);
    }
  }
}

TEST(Assessor, MultiStreamSegments) {
  auto c = small(Arch::CRNN_AT);
  c.streams = {features::Stream::PS, features::Stream::LFB, features::Stream::SSL};
  Assessor m(c, 4);
  const auto in = m.make_extractor().extract(corpus::synth_speech(2, 0.5), "u");
  const auto r = m.assess(in);
  ASSERT_EQ(r.segments.size(), 3u);
  EXPECT_EQ(r.segments[0].frames, in.stft_frames);
  EXPECT_EQ(r.segments[2].frames, in.ssl->rows());
  EXPECT_EQ(r.total_frames, 2 * in.stft_frames + in.ssl->rows());
  const Matrix lat = m.extract_latent(in, {Task::Q, Task::I});
  EXPECT_EQ(lat.rows(), r.total_frames);
  EXPECT_EQ(lat.cols(), 2 * m.latent_dim());
}

TEST(Assessor, SeedDeterminesParameters) {
  Assessor a(small(Arch::CRNN_AT), 5), b(small(Arch::CRNN_AT), 5), c(small(Arch::CRNN_AT), 6);
  EXPECT_EQ(a.state_hash(), b.state_hash());
  EXPECT_NE(a.state_hash(), c.state_hash());
}

TEST(Assessor, CheckpointRestoresPredictions) {
  const auto dir = fs::temp_directory_path() / "mosanet_assessor_test";
  fs::create_directories(dir);
  Assessor m(small(Arch::CRNN_AT), 7);
  const auto in = m.make_extractor().extract(corpus::synth_speech(3, 0.5), "u");
  m.fit_normalization({&in});
  CheckpointMeta meta;
  meta.epoch = 4;
  save_checkpoint(dir / "m.bin", m, meta);
  EXPECT_TRUE(fs::exists(sidecar_path(dir / "m.bin")));
  const auto loaded = load_checkpoint(dir / "m.bin");
  EXPECT_EQ(loaded.meta.epoch, 4);
  EXPECT_EQ(loaded.model->state_hash(), m.state_hash());
  EXPECT_EQ(loaded.model->assess(in).at(Task::D).utterance_score, m.assess(in).at(Task::D).utterance_score);
}

TEST(Assessor, StrictLoadNeedsEveryEntry) {
  Assessor m(small(Arch::CRNN), 8);
  auto state = m.state();
  state.pop_back();
  EXPECT_THROW(m.load_state(state, true), UsageError);
  EXPECT_NO_THROW(m.load_state(state, false));
}
