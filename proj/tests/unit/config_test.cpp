#include <gtest/gtest.h>

#include "mosanet/common/error.hpp"
#include "mosanet/config/config.hpp"

using mosanet::UsageError;
using mosanet::config::Config;

TEST(Config, ParsesSectionsAndArrays) {
  const auto c = Config::parse(R"(
# run settings
[train]
epochs = 20
optimizer = "adam"   # trailing comment
[corpus]
snrs_db = [-5, 0, 5.5]
noise_types = ["white", "pink",]
)");
  EXPECT_EQ(c.get_int("train.epochs", 0), 20);
  EXPECT_EQ(c.get_string("train.optimizer", ""), "adam");
  EXPECT_EQ(c.get_double_list("corpus.snrs_db", {}), (std::vector<double>{-5, 0, 5.5}));
  EXPECT_EQ(c.get_string_list("corpus.noise_types", {}), (std::vector<std::string>{"white", "pink"}));
  EXPECT_EQ(c.get_int("train.batch_size", 7), 7);
}

TEST(Config, OverridesAcceptBareWords) {
  Config c;
  c.apply_override("model.tasks=I,D");
  c.apply_override("model.arch=CRNN_AT");
  c.apply_override("train.learning_rate=1e-3");
  c.apply_override("labels.metrics=[\"stoi\", \"sdi\"]");
  EXPECT_EQ(c.get_string("model.tasks", ""), "I,D");
  EXPECT_EQ(c.get_string("model.arch", ""), "CRNN_AT");
  EXPECT_DOUBLE_EQ(c.get_double("train.learning_rate", 0), 1e-3);
  EXPECT_EQ(c.get_string_list("labels.metrics", {}).size(), 2u);
  EXPECT_THROW(c.apply_override("epochs=3"), UsageError);
  EXPECT_THROW(c.apply_override("train.epochs"), UsageError);
}

TEST(Config, TypeMismatchAndUnknownKeys) {
  auto c = Config::parse("[train]\nepochs = \"many\"\n");
  EXPECT_THROW(c.get_int("train.epochs", 1), UsageError);
  EXPECT_THROW(c.check_known({"train.batch_size"}), UsageError);
  EXPECT_NO_THROW(c.check_known({"train.epochs"}));
  EXPECT_THROW(Config::parse("[train\nepochs = 1\n"), UsageError);
}

TEST(Config, DumpParsesBack) {
  auto c = Config::parse("[b]\ny = true\n[a]\nx = [1, 2]\nname = \"q\\\"t\"\n");
  const auto again = Config::parse(c.to_toml());
  EXPECT_EQ(again.to_toml(), c.to_toml());
  EXPECT_EQ(again.get_string("a.name", ""), "q\"t");
}
