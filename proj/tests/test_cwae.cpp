#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "fixtures.hpp"
#include "latentpass/cwae.hpp"

using namespace latentpass;

namespace {

std::vector<LatentPoint> gaussian_points(std::size_t n, std::size_t k, double shift, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<LatentPoint> out(n, LatentPoint(k));
  for (auto& p : out) {
    for (auto& v : p) v = shift + g(rng);
  }
  return out;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST(Mmd, IdenticalSamplesGiveZero) {
  Rng rng(1);
  const auto a = gaussian_points(64, 8, 0.0, rng);
  EXPECT_EQ(mmd(a, a), 0.0);
}

TEST(Mmd, DetectsShift) {
  Rng rng(2);
  const auto a = gaussian_points(128, 8, 0.0, rng);
  const auto b = gaussian_points(128, 8, 0.0, rng);
  const auto c = gaussian_points(128, 8, 3.0, rng);
  EXPECT_LT(std::abs(mmd(a, b)), 0.05);
  EXPECT_GT(mmd(a, c), 0.5);
  EXPECT_DOUBLE_EQ(imq_scale(8), 16.0);
}

TEST(Mmd, UnequalSizesUseFullCrossTerm) {
  // Hand-computed: C = 2, a = {0,1}, b = {0,0,2} on the line.
  const std::vector<LatentPoint> a = {{0.0}, {1.0}};
  const std::vector<LatentPoint> b = {{0.0}, {0.0}, {2.0}};
  const double k01 = 2.0 / 3.0, k02 = 2.0 / 6.0, k12 = 2.0 / 3.0;
  const double aa = k01;
  const double bb = (1.0 + k02 + k02) / 3.0;
  const double ab = (1.0 + 1.0 + k02 + k01 + k01 + k12) / 6.0;
  EXPECT_NEAR(mmd(a, b), aa + bb - 2.0 * ab, 1e-12);
}

TEST(Mmd, GraphMatchesScalarEstimator) {
  Rng rng(3);
  const auto a = gaussian_points(16, 4, 0.0, rng);
  const auto b = gaussian_points(16, 4, 0.5, rng);
  ad::Tensor<float> ta({16, 4}), tb({16, 4});
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      ta.at(i, j) = static_cast<float>(a[i][j]);
      tb.at(i, j) = static_cast<float>(b[i][j]);
    }
  }
  ad::Tape<float> tape;
  const double g = tape.value(mmd_graph(tape, tape.constant(ta), tape.constant(tb)))[0];
  EXPECT_NEAR(g, mmd(a, b), 1e-5);
}

TEST(Mmd, RejectsTinyOrRaggedSamples) {
  const std::vector<LatentPoint> one = {{0.0, 0.0}};
  const std::vector<LatentPoint> two = {{0.0, 0.0}, {1.0}};
  EXPECT_THROW(mmd(one, one), Error);
  EXPECT_THROW(mmd(two, two), Error);
}

TEST(Config, Validation) {
  auto cfg = fixture::tiny_config();
  cfg.latent_dim = 1;
  EXPECT_THROW(init_model(cfg), Error);
  auto h = fixture::tiny_hyper();
  h.lr_decay = 0.0;
  EXPECT_THROW(h.validate(), Error);
  h = fixture::tiny_hyper();
  h.batch = 1;
  EXPECT_THROW(h.validate(), Error);
}

TEST(Presets, ReferenceValues) {
  const auto h = reference_train_hyper();
  EXPECT_EQ(h.lambda, 8.0);
  EXPECT_EQ(h.batch, 256u);
  EXPECT_EQ(h.lr, 1e-4);
  EXPECT_EQ(h.epochs, 25u);
  EXPECT_EQ(h.epsilon, 5.0);
  EXPECT_EQ(h.smoothing, 0.01);
  const auto c = reference_model_config(Alphabet(U"ab"));
  EXPECT_EQ(c.latent_dim, 128u);
  EXPECT_EQ(c.max_len, 16u);
  EXPECT_EQ(c.blocks, 7u);
}

TEST(Model, InitIsSeeded) {
  const auto a = init_model(fixture::tiny_config());
  const auto b = init_model(fixture::tiny_config());
  EXPECT_TRUE(a.encoder == b.encoder);
  EXPECT_TRUE(a.decoder == b.decoder);
}

TEST(Model, GenerateIsTotalAndNonEmpty) {
  const auto& m = fixture::tiny_model();
  Rng rng(4);
  std::vector<double> rows;
  sample_into(PriorDist{m.config.latent_dim}, 3000, rng, rows);
  for (auto& v : rows) v *= 10.0;
  const auto out = generate_batch(m, rows, 3);
  const auto single = generate_batch(m, rows, 1);
  EXPECT_EQ(out, single);
  for (const auto& x : out) {
    ASSERT_FALSE(x.empty());
    ASSERT_TRUE(m.config.alphabet.valid_password(x, m.config.max_len));
  }
  EXPECT_THROW(generate(m, std::vector<double>(3)), Error);
}

TEST(Model, EncodeBatchMatchesSingle) {
  const auto& m = fixture::tiny_model();
  const std::vector<Template> ts = {Template::parse("pass*"), Template::parse("123456")};
  const auto batch = encode_latent_batch(m, ts);
  // Batched and single-row products round differently in float.
  const auto single = encode_latent(m, Password(U"123456"));
  for (std::size_t j = 0; j < single.size(); ++j) EXPECT_NEAR(batch[1][j], single[j], 1e-4);
  EXPECT_EQ(batch[0].size(), m.config.latent_dim);
  EXPECT_THROW(encode_latent(m, Template::parse("12345678901")), Error);
}

TEST(Training, LossDropsAndTotalIsConsistent) {
  const auto& m = fixture::tiny_model();
  ASSERT_EQ(m.history.size(), 2u);
  EXPECT_LT(m.history[1].mean.reconstruction, m.history[0].mean.reconstruction);
  auto copy = m;
  Rng rng(5);
  const auto data = fixture::small_leak().unique_passwords();
  const std::vector<Password> batch(data.begin(), data.begin() + 32);
  const auto rec = train_step(copy, batch, fixture::tiny_hyper(), rng);
  EXPECT_DOUBLE_EQ(rec.total, rec.reconstruction + fixture::tiny_hyper().lambda * rec.mmd);
}

TEST(Training, SmoothingMustMatchModel) {
  auto m = init_model(fixture::tiny_config());
  auto h = fixture::tiny_hyper();
  h.smoothing = 0.05;
  Rng rng(1);
  const std::vector<Password> batch = {U"abc", U"123"};
  EXPECT_THROW(train_step(m, batch, h, rng), Error);
}

TEST(Training, ResumeReplaysTheSameRun) {
  const auto data = fixture::small_leak().unique_passwords();
  auto h = fixture::tiny_hyper();
  auto full = init_model(fixture::tiny_config());
  train(full, data, h);

  fixture::TempDir dir("resume");
  auto part = init_model(fixture::tiny_config());
  h.epochs = 1;
  TrainOptions opt;
  opt.checkpoint = dir / "m.ckpt";
  train(part, data, h, opt);
  auto resumed = load_checkpoint(dir / "m.ckpt");
  train(resumed, data, h);
  EXPECT_TRUE(resumed.encoder == full.encoder);
  EXPECT_TRUE(resumed.decoder == full.decoder);
  ASSERT_EQ(resumed.history.size(), 2u);
  EXPECT_EQ(resumed.history[1].epoch, 2u);
}

TEST(Checkpoint, RoundTripIsExact) {
  fixture::TempDir dir("ckpt");
  const auto& m = fixture::tiny_model();
  save_checkpoint(m, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt");
  EXPECT_TRUE(back.encoder == m.encoder);
  EXPECT_TRUE(back.decoder == m.decoder);
  EXPECT_EQ(back.config.alphabet, m.config.alphabet);
  EXPECT_EQ(back.config.input_smoothing, m.config.input_smoothing);
  EXPECT_EQ(back.history.size(), m.history.size());
  save_checkpoint(back, dir / "b.ckpt");
  EXPECT_EQ(file_hash(dir / "a.ckpt"), file_hash(dir / "b.ckpt"));
  EXPECT_EQ(file_hash(dir / "a.ckpt").size(), 16u);
}

TEST(Checkpoint, ErrorsAreClassified) {
  fixture::TempDir dir("ckpterr");
  const auto& m = fixture::tiny_model();
  save_checkpoint(m, dir / "good.ckpt");
  const std::string bytes = read_bytes(dir / "good.ckpt");

  auto kind_of = [&](const std::filesystem::path& p, const CheckpointExpectations& e = {}) {
    try {
      load_checkpoint(p, e);
    } catch (const CheckpointError& err) {
      return err.kind();
    }
    ADD_FAILURE() << "no error for " << p;
    return CheckpointError::Kind::kFormat;
  };
  using K = CheckpointError::Kind;
  EXPECT_EQ(kind_of(dir / "missing.ckpt"), K::kIo);

  write_bytes(dir / "magic.ckpt", "NOTACKPT" + bytes.substr(8));
  EXPECT_EQ(kind_of(dir / "magic.ckpt"), K::kBadMagic);

  std::string v = bytes;
  v[8] = 9;
  write_bytes(dir / "version.ckpt", v);
  EXPECT_EQ(kind_of(dir / "version.ckpt"), K::kVersion);

  write_bytes(dir / "short.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(kind_of(dir / "short.ckpt"), K::kTruncated);

  write_bytes(dir / "long.ckpt", bytes + "x");
  EXPECT_EQ(kind_of(dir / "long.ckpt"), K::kFormat);

  CheckpointExpectations dim;
  dim.latent_dim = m.config.latent_dim + 1;
  EXPECT_EQ(kind_of(dir / "good.ckpt", dim), K::kConfigMismatch);
  CheckpointExpectations alpha;
  alpha.alphabet = Alphabet(U"xyz");
  EXPECT_EQ(kind_of(dir / "good.ckpt", alpha), K::kAlphabetMismatch);
}

TEST(Roundtrip, AccuracyIsAFraction) {
  const auto& m = fixture::tiny_model();
  const auto data = fixture::small_leak().unique_passwords();
  const double acc = roundtrip_accuracy(m, data);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(roundtrip_accuracy(m, {}), 0.0);
}
