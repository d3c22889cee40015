#include <gtest/gtest.h>

#include <fstream>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/config.hpp"
#include "btfsyn/trainer.hpp"
#include "test_util.hpp"

using namespace btf;
using btf::testing::error_kind;
using btf::testing::TempFile;

TEST(Config, ParsesTablesAndTypes) {
  const auto c = Config::parse(R"(
# leading comment
top = 3
[train]
lr_planes = 1e-3   # trailing comment
epochs = 50
loss_space = "log1p"
decay_planes = false
[model.extra]
hidden = [32, 32,
          32]
name = "a # not a comment \"quoted\""
)");
  EXPECT_EQ(c.integer("top"), 3);
  EXPECT_DOUBLE_EQ(*c.number("train.lr_planes"), 1e-3);
  EXPECT_EQ(c.integer("train.epochs"), 50);
  EXPECT_DOUBLE_EQ(*c.number("train.epochs"), 50.0);
  EXPECT_EQ(c.string("train.loss_space"), "log1p");
  EXPECT_EQ(c.boolean("train.decay_planes"), false);
  EXPECT_EQ(c.numbers("model.extra.hidden"), (std::vector<double>{32, 32, 32}));
  EXPECT_EQ(c.string("model.extra.name"), "a # not a comment \"quoted\"");
  EXPECT_FALSE(c.contains("train.missing"));
  EXPECT_FALSE(c.number("train.missing"));
}

TEST(Config, WrongTypeIsConfigurationError) {
  const auto c = Config::parse("[train]\nepochs = 1.5\nname = \"x\"\n");
  EXPECT_EQ(error_kind([&] { c.integer("train.epochs"); }), ErrorKind::Configuration);
  EXPECT_EQ(error_kind([&] { c.number("train.name"); }), ErrorKind::Configuration);
}

TEST(Config, SyntaxErrorsNameTheLine) {
  for (const char* text : {"a = 1\nb = \n", "a = 1\n[bad\n", "a = 1\na = 2\n", "a 1\n", "a = [1, \"x\"]\n",
                           "a = \"open\n", "a = [1,\n2\n", "a = 1 2\n"}) {
    try {
      Config::parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Configuration) << text;
      EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, RejectUnknownKeys) {
  const auto c = Config::parse("[train]\nepochs = 2\nepocs = 3\n");
  EXPECT_EQ(error_kind([&] { c.reject_unknown({"train.epochs"}); }), ErrorKind::Configuration);
  EXPECT_NO_THROW(c.reject_unknown({"train.epochs", "train.epocs"}));
}

TEST(Config, LoadFromFile) {
  const TempFile file("cfg.toml");
  std::ofstream(file.path()) << "[synthetic]\nwidth = 12\nalbedo = [0.1, 0.2, 0.3]\n";
  const auto c = Config::load(file.path());
  SyntheticBtfSpec spec;
  apply_config(c, spec);
  EXPECT_EQ(spec.width, 12u);
  ASSERT_TRUE(spec.albedo_constant);
  EXPECT_FLOAT_EQ((*spec.albedo_constant)(2), 0.3f);
  EXPECT_EQ(error_kind([] { Config::load("/nonexistent/cfg.toml"); }), ErrorKind::Io);
}

TEST(Config, AppliesTrainAndModelTables) {
  const auto c = Config::parse(R"(
[train]
lr_mlp = 1e-4
epochs = 3
images_per_batch = 4
loss_space = "log1p"
threads = 2
[model]
u_width = 64
u_height = 32
hidden = [16, 8]
)");
  TrainConfig t;
  apply_config(c, t);
  EXPECT_DOUBLE_EQ(t.lr_mlp, 1e-4);
  EXPECT_DOUBLE_EQ(t.lr_planes, 1e-3);
  EXPECT_EQ(t.epochs, 3);
  EXPECT_EQ(t.images_per_batch, 4);
  EXPECT_EQ(t.loss_space, LossSpace::Log1p);
  EXPECT_EQ(t.threads, 2);
  EXPECT_EQ(t.shape.u_width, 64);
  EXPECT_EQ(t.shape.u_height, 32);
  EXPECT_EQ(t.shape.hidden, (std::vector<Index>{16, 8}));
  EXPECT_EQ(t.shape.dir_width, 20);
}

TEST(Config, BadEnumAndRgbArity) {
  TrainConfig t;
  EXPECT_EQ(error_kind([&] { apply_config(Config::parse("[train]\nloss_space = \"l2\"\n"), t); }),
            ErrorKind::Configuration);
  SyntheticBtfSpec s;
  EXPECT_EQ(error_kind([&] { apply_config(Config::parse("[synthetic]\nalbedo = [0.1, 0.2]\n"), s); }),
            ErrorKind::Configuration);
}

TEST(Config, TypoInOwnedTableIsRejected) {
  TrainConfig t;
  EXPECT_EQ(error_kind([&] { apply_config(Config::parse("[train]\nepocs = 3\n"), t); }), ErrorKind::Configuration);
  // Tables owned by another consumer are ignored.
  EXPECT_NO_THROW(apply_config(Config::parse("[synthetic]\nwidth = 3\n[train]\nepochs = 3\n"), t));
  SyntheticBtfSpec s;
  EXPECT_EQ(error_kind([&] { apply_config(Config::parse("[synthetic]\nwidht = 3\n"), s); }),
            ErrorKind::Configuration);
}
