#pragma once

// Context Wasserstein autoencoder: an encoder from (possibly wildcarded)
// password encodings to R^k, a decoder back to per-position logits, an MMD
// latent regularizer and the training loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentpass/autodiff.hpp"
#include "latentpass/charspace.hpp"
#include "latentpass/latent.hpp"

namespace latentpass {

struct ModelConfig {
  std::size_t latent_dim = 32;
  std::size_t max_len = 10;
  std::size_t hidden = 256;
  std::size_t blocks = 4;
  std::uint64_t seed = 0;
  double input_smoothing = 0.01;  // training smoothing; inference uses its mean
  Alphabet alphabet;

  void validate() const;
  std::size_t channels() const { return alphabet.channels(); }
  std::size_t input_dim() const { return max_len * alphabet.channels(); }
};

enum class NoiseMode { kPerCharacter, kMaskedSpan };

struct TrainHyper {
  double lambda = 8.0;
  double epsilon = 5.0;
  double smoothing = 0.01;
  std::size_t batch = 128;
  double lr = 1e-4;
  double lr_decay = 1.0;  // per-epoch factor, applied by absolute epoch number
  std::size_t epochs = 25;
  NoiseMode noise = NoiseMode::kPerCharacter;
  std::size_t span_k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Full-scale training settings.
TrainHyper reference_train_hyper();
ModelConfig reference_model_config(Alphabet alphabet);
/// CPU-sized defaults.
TrainHyper desk_train_hyper();
ModelConfig desk_model_config(Alphabet alphabet);

struct LossRecord {
  double reconstruction = 0.0;  // nats per position
  double mmd = 0.0;
  double total = 0.0;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based, counted across resumes
  LossRecord mean;
};

struct ModelParams {
  ModelConfig config;
  ad::ParamStore<float> encoder;
  ad::ParamStore<float> decoder;
  std::vector<EpochLoss> history;

  std::size_t epochs_seen() const { return history.size(); }
};

/// Fan-in scaled uniform weights in +-sqrt(6 / fan_in), zero biases.
ModelParams init_model(const ModelConfig& cfg, Rng& rng);
ModelParams init_model(const ModelConfig& cfg);

LatentPoint encode_latent(const ModelParams& m, const Template& t);
LatentPoint encode_latent(const ModelParams& m, const Password& x);
std::vector<LatentPoint> encode_latent_batch(const ModelParams& m, std::span<const Template> ts);

/// Decoder forward plus argmax readout. Total on R^k: when the first
/// position reads as pad the best non-pad symbol is emitted instead.
Password generate(const ModelParams& m, std::span<const double> z);
/// Rows of a row-major [n, k] buffer; work is split over `threads`.
std::vector<Password> generate_batch(const ModelParams& m, std::span<const double> z_rows,
                                     std::size_t threads = 1);

/// Unbiased squared-MMD estimate with the inverse multiquadratic kernel
/// C / (C + |u - v|^2), C = 2k. Equal-size samples use the paired
/// U-statistic, which is exactly zero for identical samples.
double mmd(std::span<const LatentPoint> a, std::span<const LatentPoint> b);
double imq_scale(std::size_t latent_dim);

/// Same estimator on the tape (equal-size samples), for training.
ad::Var mmd_graph(ad::Tape<float>& tape, ad::Var a, ad::Var b);

/// Encoder/decoder graphs on an existing tape.
ad::Var encoder_forward(ad::Tape<float>& tape, const ModelParams& m, ad::Var input);
ad::Var decoder_forward(ad::Tape<float>& tape, const ModelParams& m, ad::Var z);

/// One Adam step on a noisy batch. The returned total is exactly
/// reconstruction + lambda * mmd.
LossRecord train_step(ModelParams& m, std::span<const Password> batch, const TrainHyper& h,
                      Rng& rng);

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint;  // rewritten after each epoch
  std::function<void(const EpochLoss&)> on_epoch;
  std::function<void(std::size_t step, const LossRecord&)> on_step;
};

/// Runs h.epochs further epochs over data (seeded shuffles). Epoch numbers
/// continue from m.history, so a resumed run replays the same shuffles.
std::vector<EpochLoss> train(ModelParams& m, std::span<const Password> data, const TrainHyper& h,
                             const TrainOptions& options = {});

/// Fraction of passwords with generate(E(x)) == x.
double roundtrip_accuracy(const ModelParams& m, std::span<const Password> data);

// ---------------------------------------------------------------------------
// Checkpoints

class CheckpointError : public Error {
 public:
  enum class Kind { kIo, kBadMagic, kVersion, kTruncated, kConfigMismatch, kAlphabetMismatch, kFormat };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointExpectations {
  std::optional<std::size_t> latent_dim;
  std::optional<std::size_t> max_len;
  std::optional<Alphabet> alphabet;
};

void save_checkpoint(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path,
                            const CheckpointExpectations& expect = {});

/// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace latentpass
