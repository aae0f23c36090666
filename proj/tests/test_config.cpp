#include <gtest/gtest.h>

#include <fstream>

#include "rankmini/config.hpp"
#include "rankmini/errors.hpp"
#include "temp_dir.hpp"

using namespace rankmini;
using rankmini::testing::TempDir;

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate(PipelineConfig{})); }

TEST(Config, TextRoundTrip) {
  PipelineConfig c;
  c.seed = 99;
  c.widths = {8, 16};
  c.lambda = 0.025;
  c.cross_content = true;
  c.sparsify_from = "scratch";
  PipelineConfig back;
  apply_config_text(back, config_text(c));
  EXPECT_EQ(config_text(back), config_text(c));
  EXPECT_EQ(back.widths, c.widths);
  EXPECT_DOUBLE_EQ(back.lambda, 0.025);
}

TEST(Config, EveryKeyReadableAndWritable) {
  PipelineConfig c;
  for (const auto& k : config_keys()) {
    const auto v = get_config_value(c, k.name);
    EXPECT_NO_THROW(set_config_value(c, k.name, v)) << k.name;
    EXPECT_EQ(get_config_value(c, k.name), v);
    EXPECT_FALSE(k.doc.empty()) << k.name;
  }
}

TEST(Config, CommentsAndBlankLines) {
  PipelineConfig c;
  apply_config_text(c, "# header\n\nseed = 5   # trailing\n  epochs=3\n");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.epochs, 3);
}

TEST(Config, UnknownKeyAndBadValues) {
  PipelineConfig c;
  EXPECT_THROW(set_config_value(c, "learning_rate", "1"), ConfigError);
  EXPECT_THROW(get_config_value(c, "nope"), ConfigError);
  EXPECT_THROW(set_config_value(c, "lr", "fast"), ConfigError);
  EXPECT_THROW(set_config_value(c, "epochs", "3.5"), ConfigError);
  EXPECT_THROW(set_config_value(c, "cross_content", "maybe"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "seed\n"), ConfigError);
}

TEST(Config, RangeChecks) {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.lr = 0.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.beta1 = 1.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.lambda = -1.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.batch = 0; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.levels = 1; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.widths.clear(); })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.eval_sources = 2; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.patch = {1, 12, 12}; })), ConfigError);
  EXPECT_THROW(validate(bad([](PipelineConfig& c) { c.alpha = -0.5; })), ConfigError);
}

TEST(Config, LoadFile) {
  TempDir dir("config");
  {
    std::ofstream f(dir.file("a.cfg"));
    f << "seed=3\nwidths=4,8\n";
  }
  const auto c = load_config(dir.file("a.cfg"));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.widths, (std::vector<std::size_t>{4, 8}));
  EXPECT_THROW(load_config(dir.file("missing.cfg")), ConfigError);
}

TEST(Config, StageConfigsDeriveFromKeys) {
  PipelineConfig c;
  c.seed = 4;
  c.lambda = 0.3;
  c.alpha = 0.2;
  c.distill_epochs = 7;
  EXPECT_DOUBLE_EQ(c.sparse_optimizer().lambda, 0.3);
  EXPECT_DOUBLE_EQ(c.teacher_optimizer().lambda, 0.0);
  EXPECT_DOUBLE_EQ(c.distill_config().alpha, 0.2);
  EXPECT_EQ(c.distill_config().optimizer.epochs, 7);
  EXPECT_EQ(c.teacher_config().geometry, c.patch);
}
