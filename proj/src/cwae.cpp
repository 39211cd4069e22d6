#include "latentpass/cwae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace latentpass {

namespace {

constexpr float kLeakySlope = 0.1f;
constexpr float kResidualScale = 0.3f;
constexpr std::size_t kInferenceChunk = 512;

void add_linear(ad::ParamStore<float>& store, const std::string& prefix, std::size_t fan_in,
                std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Tensor<float> w({fan_in, fan_out});
  for (auto& v : w.storage()) v = static_cast<float>(u(rng));
  store.add(prefix + ".w", std::move(w));
  store.add(prefix + ".b", ad::Tensor<float>({1, fan_out}));
}

void add_tower(ad::ParamStore<float>& store, const std::string& prefix, std::size_t in,
               std::size_t hidden, std::size_t out, std::size_t blocks, Rng& rng) {
  add_linear(store, prefix + ".in", in, hidden, rng);
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::string b = prefix + ".block" + std::to_string(i);
    add_linear(store, b + ".a", hidden, hidden, rng);
    add_linear(store, b + ".b", hidden, hidden, rng);
  }
  add_linear(store, prefix + ".out", hidden, out, rng);
}

ad::Var linear(ad::Tape<float>& tape, const ad::ParamStore<float>& store,
               const std::string& prefix, ad::Var x) {
  return tape.add(tape.matmul(x, tape.param(store, prefix + ".w")),
                  tape.param(store, prefix + ".b"));
}

// in -> residual blocks -> out, all affine maps linear at the ends.
ad::Var tower(ad::Tape<float>& tape, const ad::ParamStore<float>& store,
              const std::string& prefix, std::size_t blocks, ad::Var x) {
  ad::Var h = linear(tape, store, prefix + ".in", x);
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::string b = prefix + ".block" + std::to_string(i);
    ad::Var r = tape.leaky_relu(h, kLeakySlope);
    r = linear(tape, store, b + ".a", r);
    r = tape.leaky_relu(r, kLeakySlope);
    r = linear(tape, store, b + ".b", r);
    h = tape.add(h, tape.scale(r, kResidualScale));
  }
  return linear(tape, store, prefix + ".out", h);
}

void check_model(const ModelParams& m) {
  if (m.encoder.entries().empty() || m.decoder.entries().empty()) {
    throw Error("model has no parameters");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (latent_dim < 2) throw Error("model config: latent_dim must be >= 2");
  if (max_len < 1) throw Error("model config: max_len must be >= 1");
  if (blocks < 1) throw Error("model config: blocks must be >= 1");
  if (hidden < 1) throw Error("model config: hidden must be >= 1");
  if (alphabet.size() == 0) throw Error("model config: empty alphabet");
  if (input_smoothing < 0.0 || input_smoothing >= 1.0) {
    throw Error("model config: input_smoothing must lie in [0, 1)");
  }
}

void TrainHyper::validate() const {
  if (lambda < 0.0) throw Error("train hyper: lambda must be >= 0");
  if (epsilon < 0.0) throw Error("train hyper: epsilon must be >= 0");
  if (smoothing < 0.0 || smoothing >= 1.0) throw Error("train hyper: smoothing must lie in [0, 1)");
  if (batch < 2) throw Error("train hyper: batch must be >= 2");
  if (!(lr > 0.0)) throw Error("train hyper: lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("train hyper: lr_decay must lie in (0, 1]");
  if (noise == NoiseMode::kMaskedSpan && span_k < 1) throw Error("train hyper: span_k must be >= 1");
}

TrainHyper reference_train_hyper() {
  TrainHyper h;
  h.lambda = 8.0;
  h.batch = 256;
  h.lr = 1e-4;
  h.epochs = 25;
  h.epsilon = 5.0;
  h.smoothing = 0.01;
  return h;
}

ModelConfig reference_model_config(Alphabet alphabet) {
  ModelConfig c;
  c.latent_dim = 128;
  c.max_len = 16;
  // 128 channels per position in the reference convolutional stack.
  c.hidden = 128 * c.max_len;
  c.blocks = 7;
  c.alphabet = std::move(alphabet);
  return c;
}

TrainHyper desk_train_hyper() {
  TrainHyper h;
  h.lambda = 8.0;
  h.batch = 128;
  h.lr = 1e-3;
  h.epochs = 12;
  h.epsilon = 1.0;
  h.lr_decay = 0.8;
  h.smoothing = 0.01;
  return h;
}

ModelConfig desk_model_config(Alphabet alphabet) {
  ModelConfig c;
  c.latent_dim = 32;
  c.max_len = 10;
  c.hidden = 256;
  c.blocks = 4;
  c.alphabet = std::move(alphabet);
  return c;
}

ModelParams init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams m;
  m.config = cfg;
  add_tower(m.encoder, "enc", cfg.input_dim(), cfg.hidden, cfg.latent_dim, cfg.blocks, rng);
  add_tower(m.decoder, "dec", cfg.latent_dim, cfg.hidden, cfg.input_dim(), cfg.blocks, rng);
  return m;
}

ModelParams init_model(const ModelConfig& cfg) {
  Rng rng(cfg.seed);
  return init_model(cfg, rng);
}

ad::Var encoder_forward(ad::Tape<float>& tape, const ModelParams& m, ad::Var input) {
  return tower(tape, m.encoder, "enc", m.config.blocks, input);
}

ad::Var decoder_forward(ad::Tape<float>& tape, const ModelParams& m, ad::Var z) {
  return tower(tape, m.decoder, "dec", m.config.blocks, z);
}

// ---------------------------------------------------------------------------
// Inference

std::vector<LatentPoint> encode_latent_batch(const ModelParams& m, std::span<const Template> ts) {
  check_model(m);
  const auto& cfg = m.config;
  std::vector<LatentPoint> out;
  out.reserve(ts.size());
  for (std::size_t start = 0; start < ts.size(); start += kInferenceChunk) {
    const std::size_t n = std::min(kInferenceChunk, ts.size() - start);
    ad::Tensor<float> input({n, cfg.input_dim()});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = ts[start + i];
      if (t.size() > cfg.max_len) throw Error("over-length");
      encode_into(input.data().subspan(i * cfg.input_dim(), cfg.input_dim()), t, cfg.alphabet,
                  cfg.max_len, cfg.input_smoothing, nullptr);
    }
    ad::Tape<float> tape;
    const auto& z = tape.value(encoder_forward(tape, m, tape.constant(std::move(input))));
    for (std::size_t i = 0; i < n; ++i) {
      LatentPoint p(cfg.latent_dim);
      for (std::size_t j = 0; j < cfg.latent_dim; ++j) p[j] = z.at(i, j);
      out.push_back(std::move(p));
    }
  }
  return out;
}

LatentPoint encode_latent(const ModelParams& m, const Template& t) {
  return encode_latent_batch(m, std::span<const Template>(&t, 1)).front();
}

LatentPoint encode_latent(const ModelParams& m, const Password& x) {
  return encode_latent(m, Template::of(x));
}

namespace {

void generate_range(const ModelParams& m, std::span<const double> z_rows, std::size_t first,
                    std::size_t count, std::vector<Password>& out) {
  const auto& cfg = m.config;
  const std::size_t k = cfg.latent_dim;
  const std::size_t channels = cfg.channels();
  const std::size_t pad = cfg.alphabet.pad_index();
  std::vector<std::uint32_t> argmax(cfg.max_len);
  for (std::size_t start = first; start < first + count; start += kInferenceChunk) {
    const std::size_t n = std::min(kInferenceChunk, first + count - start);
    ad::Tensor<float> input({n, k});
    for (std::size_t i = 0; i < n * k; ++i) {
      input[i] = static_cast<float>(z_rows[start * k + i]);
    }
    ad::Tape<float> tape;
    const auto& logits = tape.value(decoder_forward(tape, m, tape.constant(std::move(input))));
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = logits.data().data() + i * cfg.input_dim();
      for (std::size_t p = 0; p < cfg.max_len; ++p) {
        const float* col = row + p * channels;
        argmax[p] = static_cast<std::uint32_t>(std::max_element(col, col + channels) - col);
      }
      if (argmax[0] == pad) {
        argmax[0] = static_cast<std::uint32_t>(std::max_element(row, row + pad) - row);
      }
      out[start + i] = decode_indices(argmax, cfg.alphabet);
    }
  }
}

}  // namespace

std::vector<Password> generate_batch(const ModelParams& m, std::span<const double> z_rows,
                                     std::size_t threads) {
  check_model(m);
  const std::size_t k = m.config.latent_dim;
  if (z_rows.size() % k != 0) throw Error("generate: latent dimension mismatch");
  const std::size_t n = z_rows.size() / k;
  std::vector<Password> out(n);
  threads = std::max<std::size_t>(1, std::min(threads, n / kInferenceChunk));
  if (threads == 1) {
    generate_range(m, z_rows, 0, n, out);
    return out;
  }
  std::vector<std::thread> workers;
  const std::size_t per = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t first = w * per;
    if (first >= n) break;
    const std::size_t count = std::min(per, n - first);
    workers.emplace_back([&, first, count] { generate_range(m, z_rows, first, count, out); });
  }
  for (auto& t : workers) t.join();
  return out;
}

Password generate(const ModelParams& m, std::span<const double> z) {
  if (z.size() != m.config.latent_dim) throw Error("generate: latent dimension mismatch");
  return generate_batch(m, z).front();
}

// ---------------------------------------------------------------------------
// MMD

double imq_scale(std::size_t latent_dim) { return 2.0 * static_cast<double>(latent_dim); }

double mmd(std::span<const LatentPoint> a, std::span<const LatentPoint> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("mmd: sample too small");
  const std::size_t k = a.front().size();
  for (const auto* set : {&a, &b}) {
    for (const auto& p : *set) {
      if (p.size() != k) throw Error("mmd: dimension mismatch");
    }
  }
  const double c = imq_scale(k);
  auto kernel = [&](const LatentPoint& u, const LatentPoint& v) {
    double sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) sq += (u[i] - v[i]) * (u[i] - v[i]);
    return c / (c + sq);
  };
  auto offdiag_mean = [&](std::span<const LatentPoint> x, std::span<const LatentPoint> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (i != j) s += kernel(x[i], y[j]);
      }
    }
    return s / static_cast<double>(x.size() * (x.size() - 1));
  };
  const double aa = offdiag_mean(a, a);
  const double bb = offdiag_mean(b, b);
  if (a.size() == b.size()) {
    // Paired form: h(i,j) = k(a_i,a_j) + k(b_i,b_j) - k(a_i,b_j) - k(a_j,b_i).
    return aa + bb - 2.0 * offdiag_mean(a, b);
  }
  double ab = 0.0;
  for (const auto& u : a) {
    for (const auto& v : b) ab += kernel(u, v);
  }
  ab /= static_cast<double>(a.size() * b.size());
  return aa + bb - 2.0 * ab;
}

ad::Var mmd_graph(ad::Tape<float>& tape, ad::Var a, ad::Var b) {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  if (A.shape() != B.shape()) throw ad::ShapeError("mmd_graph: samples must have equal shape");
  const std::size_t n = A.rows();
  if (n < 2) throw Error("mmd: sample too small");
  const float c = static_cast<float>(imq_scale(A.cols()));
  ad::Tensor<float> mask({n, n}, 1.0f);
  for (std::size_t i = 0; i < n; ++i) mask.at(i, i) = 0.0f;
  const ad::Var off = tape.constant(std::move(mask));
  const float norm = 1.0f / static_cast<float>(n * (n - 1));
  auto mean_kernel = [&](ad::Var x, ad::Var y) {
    ad::Var k = tape.scale(tape.reciprocal(tape.add_scalar(tape.pairwise_sq_dist(x, y), c)), c);
    return tape.scale(tape.sum(tape.mul(k, off)), norm);
  };
  ad::Var aa = mean_kernel(a, a);
  ad::Var bb = mean_kernel(b, b);
  ad::Var ab = mean_kernel(a, b);
  return tape.sub(tape.add(aa, bb), tape.scale(ab, 2.0f));
}

// ---------------------------------------------------------------------------
// Training

LossRecord train_step(ModelParams& m, std::span<const Password> batch, const TrainHyper& h,
                      Rng& rng) {
  h.validate();
  check_model(m);
  if (batch.size() < 2) throw Error("train_step: batch must hold >= 2 passwords");
  if (h.smoothing != m.config.input_smoothing) {
    throw Error("train_step: smoothing differs from the model's input_smoothing");
  }
  const auto& cfg = m.config;
  const std::size_t n = batch.size();
  const std::size_t width = cfg.input_dim();

  ad::Tensor<float> input({n, width});
  std::vector<std::uint32_t> targets(n * cfg.max_len, static_cast<std::uint32_t>(cfg.alphabet.pad_index()));
  for (std::size_t i = 0; i < n; ++i) {
    const Password& x = batch[i];
    if (x.size() > cfg.max_len) throw Error("over-length");
    const Template noisy = h.noise == NoiseMode::kPerCharacter ? context_noise(x, h.epsilon, rng)
                                                               : span_mask_noise(x, h.span_k, rng);
    encode_into(input.data().subspan(i * width, width), noisy, cfg.alphabet, cfg.max_len,
                h.smoothing, &rng);
    for (std::size_t p = 0; p < x.size(); ++p) {
      targets[i * cfg.max_len + p] = static_cast<std::uint32_t>(*cfg.alphabet.index_of(x[p]));
    }
  }
  std::vector<double> prior_rows;
  sample_into(PriorDist{cfg.latent_dim}, n, rng, prior_rows);
  ad::Tensor<float> prior({n, cfg.latent_dim});
  for (std::size_t i = 0; i < prior.size(); ++i) prior[i] = static_cast<float>(prior_rows[i]);

  ad::Tape<float> tape;
  tape.bind_all(m.encoder);
  tape.bind_all(m.decoder);
  const ad::Var z = encoder_forward(tape, m, tape.constant(std::move(input)));
  const ad::Var logits = decoder_forward(tape, m, z);
  const ad::Var flat = tape.reshape(logits, {n * cfg.max_len, cfg.channels()});
  const ad::Var recon = tape.softmax_cross_entropy(flat, targets);
  const ad::Var reg = mmd_graph(tape, z, tape.constant(std::move(prior)));
  const ad::Var total = tape.add(recon, tape.scale(reg, static_cast<float>(h.lambda)));

  const auto grads = tape.gradients(total);
  const ad::AdamConfig adam{h.lr, 0.9, 0.999, 1e-8};
  ad::adam_step(m.encoder, grads, adam);
  ad::adam_step(m.decoder, grads, adam);

  LossRecord rec;
  rec.reconstruction = tape.value(recon)[0];
  rec.mmd = tape.value(reg)[0];
  rec.total = rec.reconstruction + h.lambda * rec.mmd;
  return rec;
}

std::vector<EpochLoss> train(ModelParams& m, std::span<const Password> data, const TrainHyper& h,
                             const TrainOptions& options) {
  h.validate();
  if (data.empty()) throw Error("train: empty dataset");
  std::vector<EpochLoss> produced;
  std::vector<std::size_t> order(data.size());
  std::size_t global_step = 0;
  for (std::size_t e = 0; e < h.epochs; ++e) {
    const std::size_t epoch = m.history.size() + 1;
    Rng rng(stream_seed(h.seed, epoch));
    TrainHyper he = h;
    he.lr = h.lr * std::pow(h.lr_decay, static_cast<double>(epoch - 1));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    LossRecord sum;
    std::size_t steps = 0;
    std::vector<Password> batch;
    for (std::size_t start = 0; start < order.size(); start += h.batch) {
      const std::size_t end = std::min(order.size(), start + h.batch);
      if (end - start < 2) break;
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      const LossRecord rec = train_step(m, batch, he, rng);
      if (!std::isfinite(rec.total)) throw Error("train: non-finite loss");
      sum.reconstruction += rec.reconstruction;
      sum.mmd += rec.mmd;
      sum.total += rec.total;
      ++steps;
      if (options.on_step) options.on_step(global_step, rec);
      ++global_step;
    }
    if (steps == 0) throw Error("train: dataset smaller than two passwords");
    EpochLoss el;
    el.epoch = epoch;
    el.mean.reconstruction = sum.reconstruction / static_cast<double>(steps);
    el.mean.mmd = sum.mmd / static_cast<double>(steps);
    el.mean.total = sum.total / static_cast<double>(steps);
    m.history.push_back(el);
    produced.push_back(el);
    if (options.checkpoint) save_checkpoint(m, *options.checkpoint);
    if (options.on_epoch) options.on_epoch(el);
  }
  return produced;
}

double roundtrip_accuracy(const ModelParams& m, std::span<const Password> data) {
  if (data.empty()) return 0.0;
  std::vector<Template> ts;
  ts.reserve(data.size());
  for (const auto& x : data) ts.push_back(Template::of(x));
  const auto zs = encode_latent_batch(m, ts);
  std::vector<double> rows;
  rows.reserve(zs.size() * m.config.latent_dim);
  for (const auto& z : zs) rows.insert(rows.end(), z.begin(), z.end());
  const auto out = generate_batch(m, rows);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += out[i] == data[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace latentpass
