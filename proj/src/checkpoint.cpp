#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "latentpass/cwae.hpp"

// Layout (little-endian):
//   magic "LPCWAE\r\n" | u32 version | u32 len + config text (key=value lines)
//   | u32 len + alphabet (UTF-8) | u32 tensor count
//   | per tensor: u32 name len + name, u32 rank, u32 extents..., f32 data

namespace latentpass {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'P', 'C', 'W', 'A', 'E', '\r', '\n'};

using Kind = CheckpointError::Kind;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_bytes(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw CheckpointError(Kind::kTruncated, "checkpoint: truncated file");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    read(&v, sizeof v);
    return v;
  }
  std::string bytes() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string config_text(const ModelParams& m) {
  std::ostringstream os;
  const auto& c = m.config;
  os << "latent_dim=" << c.latent_dim << '\n'
     << "max_len=" << c.max_len << '\n'
     << "hidden=" << c.hidden << '\n'
     << "blocks=" << c.blocks << '\n'
     << "seed=" << c.seed << '\n'
     << "input_smoothing=" << format_double(c.input_smoothing) << '\n'
     << "encoder_step=" << m.encoder.step() << '\n'
     << "decoder_step=" << m.decoder.step() << '\n'
     << "epochs_seen=" << m.history.size() << '\n';
  for (const auto& e : m.history) {
    os << "epoch=" << e.epoch << ',' << format_double(e.mean.reconstruction) << ','
       << format_double(e.mean.mmd) << ',' << format_double(e.mean.total) << '\n';
  }
  return os.str();
}

void put_tensor(std::ostream& out, const std::string& name, const ad::Tensor<float>& t) {
  put_bytes(out, name);
  put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
  for (auto e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
}

void put_store(std::ostream& out, const std::string& prefix, const ad::ParamStore<float>& s) {
  for (const auto& [name, e] : s.entries()) {
    put_tensor(out, prefix + "/" + name, e.value);
    put_tensor(out, prefix + ".m/" + name, e.m);
    put_tensor(out, prefix + ".v/" + name, e.v);
  }
}

std::size_t parse_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CheckpointError(Kind::kFormat, "checkpoint: missing config key " + key);
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw CheckpointError(Kind::kFormat, "checkpoint: bad value for " + key);
  }
}

double parse_real(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CheckpointError(Kind::kFormat, "checkpoint: missing config key " + key);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw CheckpointError(Kind::kFormat, "checkpoint: bad value for " + key);
  }
}

}  // namespace

void save_checkpoint(const ModelParams& m, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::kIo, "checkpoint: cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_bytes(out, config_text(m));
    put_bytes(out, m.config.alphabet.to_utf8());
    put_u32(out, static_cast<std::uint32_t>(3 * (m.encoder.entries().size() + m.decoder.entries().size())));
    put_store(out, "encoder", m.encoder);
    put_store(out, "decoder", m.decoder);
    if (!out) throw CheckpointError(Kind::kIo, "checkpoint: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(Kind::kIo, "checkpoint: cannot move into " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path, const CheckpointExpectations& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "checkpoint: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));

  char magic[sizeof kMagic];
  try {
    r.read(magic, sizeof magic);
  } catch (const CheckpointError&) {
    throw CheckpointError(Kind::kBadMagic, "checkpoint: bad magic");
  }
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(Kind::kBadMagic, "checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersion, "checkpoint: unsupported version " + std::to_string(version));
  }

  std::map<std::string, std::string> kv;
  std::vector<std::string> epochs;
  {
    std::istringstream cfg(r.bytes());
    std::string line;
    while (std::getline(cfg, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      if (key == "epoch") {
        epochs.push_back(line.substr(eq + 1));
      } else {
        kv[key] = line.substr(eq + 1);
      }
    }
  }

  ModelParams m;
  auto& c = m.config;
  c.latent_dim = parse_size(kv, "latent_dim");
  c.max_len = parse_size(kv, "max_len");
  c.hidden = parse_size(kv, "hidden");
  c.blocks = parse_size(kv, "blocks");
  c.seed = parse_size(kv, "seed");
  c.input_smoothing = parse_real(kv, "input_smoothing");
  const auto alphabet_text = r.bytes();
  auto symbols = try_utf8_to_u32(alphabet_text);
  if (!symbols) throw CheckpointError(Kind::kFormat, "checkpoint: malformed alphabet");
  try {
    c.alphabet = Alphabet(*symbols);
  } catch (const Error& e) {
    throw CheckpointError(Kind::kFormat, std::string("checkpoint: ") + e.what());
  }

  if (expect.latent_dim && *expect.latent_dim != c.latent_dim) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "checkpoint: config mismatch (latent_dim " + std::to_string(c.latent_dim) +
                              ", requested " + std::to_string(*expect.latent_dim) + ")");
  }
  if (expect.max_len && *expect.max_len != c.max_len) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "checkpoint: config mismatch (max_len " + std::to_string(c.max_len) +
                              ", requested " + std::to_string(*expect.max_len) + ")");
  }
  if (expect.alphabet && !(*expect.alphabet == c.alphabet)) {
    throw CheckpointError(Kind::kAlphabetMismatch, "checkpoint: alphabet mismatch");
  }

  for (const auto& line : epochs) {
    EpochLoss e;
    std::istringstream is(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(is, field, ',')) f.push_back(field);
    if (f.size() != 4) throw CheckpointError(Kind::kFormat, "checkpoint: bad epoch record");
    e.epoch = std::stoull(f[0]);
    e.mean.reconstruction = std::stod(f[1]);
    e.mean.mmd = std::stod(f[2]);
    e.mean.total = std::stod(f[3]);
    m.history.push_back(e);
  }

  const std::uint32_t count = r.u32();
  std::map<std::string, ad::Tensor<float>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw CheckpointError(Kind::kFormat, "checkpoint: bad tensor rank");
    ad::Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    std::vector<float> data;
    try {
      data.resize(ad::shape_size(shape));
    } catch (const std::exception&) {
      throw CheckpointError(Kind::kFormat, "checkpoint: bad tensor shape");
    }
    r.read(data.data(), data.size() * sizeof(float));
    tensors.emplace(name, ad::Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw CheckpointError(Kind::kFormat, "checkpoint: trailing bytes");

  // Rebuild the expected layout and fill it, so missing or misshapen
  // tensors are reported instead of silently accepted.
  Rng unused(0);
  ModelParams layout = init_model(c, unused);
  auto fill = [&](const std::string& prefix, ad::ParamStore<float>& src, ad::ParamStore<float>& dst) {
    for (auto& [name, e] : src.entries()) {
      auto take = [&](const std::string& key) {
        auto it = tensors.find(key);
        if (it == tensors.end()) throw CheckpointError(Kind::kFormat, "checkpoint: missing tensor " + key);
        if (it->second.shape() != e.value.shape()) {
          throw CheckpointError(Kind::kFormat, "checkpoint: shape mismatch for " + key);
        }
        return it->second;
      };
      dst.add(name, take(prefix + "/" + name));
      auto& entry = dst.entry(name);
      entry.m = take(prefix + ".m/" + name);
      entry.v = take(prefix + ".v/" + name);
    }
  };
  fill("encoder", layout.encoder, m.encoder);
  fill("decoder", layout.decoder, m.decoder);
  m.encoder.set_step(parse_size(kv, "encoder_step"));
  m.decoder.set_step(parse_size(kv, "decoder_step"));
  return m;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace latentpass
