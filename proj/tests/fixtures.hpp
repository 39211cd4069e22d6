#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "latentpass/cwae.hpp"
#include "latentpass/synthetic.hpp"

namespace fixture {

/// Small synthetic leak shared by the model-level unit tests.
inline const latentpass::LeakDataset& small_leak() {
  static const latentpass::LeakDataset d = [] {
    latentpass::SyntheticLeakOptions o;
    o.draws = 4000;
    o.seed = 5;
    return latentpass::synthetic_leak(o);
  }();
  return d;
}

inline latentpass::ModelConfig tiny_config() {
  latentpass::ModelConfig cfg = latentpass::desk_model_config(small_leak().alphabet);
  cfg.latent_dim = 8;
  cfg.hidden = 48;
  cfg.blocks = 1;
  cfg.seed = 3;
  return cfg;
}

inline latentpass::TrainHyper tiny_hyper() {
  latentpass::TrainHyper h = latentpass::desk_train_hyper();
  h.epochs = 2;
  h.batch = 64;
  h.seed = 9;
  return h;
}

/// A briefly trained model; good enough for shape and invariant checks.
inline const latentpass::ModelParams& tiny_model() {
  static const latentpass::ModelParams m = [] {
    auto model = latentpass::init_model(tiny_config());
    const auto data = small_leak().expanded();
    latentpass::train(model, data, tiny_hyper());
    return model;
  }();
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("latentpass_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
