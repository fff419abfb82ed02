#include "ads/data.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

#include "ads/rng.hpp"

namespace ads {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'S', 'D'};
constexpr uint16_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw InputError("cannot open '" + path + "' for writing");
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u16(uint16_t v) {
    const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    bytes(b, 2);
  }
  void u64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(bits >> (8 * i));
    bytes(b, 4);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void token_list(const std::vector<uint16_t>& v) {
    u16(static_cast<uint16_t>(v.size()));
    for (const uint16_t t : v) u16(t);
  }
  void close(const std::string& path) {
    out_.flush();
    if (!out_) throw InputError("write to '" + path + "' failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw InputError("cannot open '" + path + "' for reading");
  }
  uint64_t offset() const { return offset_; }
  void bytes(void* p, size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw FormatError("truncated file '" + path_ + "' while reading " + what,
                        offset_);
    }
    offset_ += n;
  }
  uint8_t u8(const char* what) {
    uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  uint16_t u16(const char* what) {
    uint8_t b[2];
    bytes(b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint64_t u64(const char* what) {
    uint8_t b[8];
    bytes(b, 8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  int64_t i64(const char* what) { return static_cast<int64_t>(u64(what)); }
  float f32(const char* what) {
    uint8_t b[4];
    bytes(b, 4, what);
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(b[i]) << (8 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64(const char* what) {
    const uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<uint16_t> token_list(const char* what) {
    const uint16_t n = u16(what);
    std::vector<uint16_t> v(n);
    for (uint16_t i = 0; i < n; ++i) v[i] = u16(what);
    return v;
  }

 private:
  std::ifstream in_;
  std::string path_;
  uint64_t offset_ = 0;
};

std::vector<uint16_t> filler_tokens(const GenSpec& spec) {
  std::set<uint16_t> special;
  special.insert(spec.positive_tokens.begin(), spec.positive_tokens.end());
  special.insert(spec.negative_tokens.begin(), spec.negative_tokens.end());
  special.insert(spec.key_tokens.begin(), spec.key_tokens.end());
  std::vector<uint16_t> fill;
  for (int64_t t = 0; t < spec.vocab; ++t) {
    if (!special.count(static_cast<uint16_t>(t))) {
      fill.push_back(static_cast<uint16_t>(t));
    }
  }
  return fill;
}

Sample make_sample(const GenSpec& spec, const std::vector<uint16_t>& fillers,
                   Rng rng, bool congruent) {
  Sample s;
  const int64_t r_count = spec.regions;
  s.latents.region_polarity.resize(static_cast<size_t>(r_count));
  for (int64_t r = 0; r < r_count; ++r) {
    s.latents.region_polarity[static_cast<size_t>(r)] = rng.coin() ? 1 : 0;
  }
  s.latents.key_region = static_cast<uint16_t>(rng.below(spec.regions));
  s.latents.text_polarity =
      congruent ? s.latents.region_polarity[s.latents.key_region]
                : (rng.coin() ? 1 : 0);

  // Text: fillers everywhere, one polarity token, one key token.
  s.tokens.resize(static_cast<size_t>(spec.tokens));
  for (int64_t i = 0; i < spec.tokens; ++i) {
    s.tokens[static_cast<size_t>(i)] =
        fillers[rng.below(fillers.size())];
  }
  const int64_t polarity_pos = static_cast<int64_t>(rng.below(spec.tokens));
  int64_t key_pos = static_cast<int64_t>(rng.below(spec.tokens - 1));
  if (key_pos >= polarity_pos) ++key_pos;
  const auto& polarity_set =
      s.latents.text_polarity ? spec.positive_tokens : spec.negative_tokens;
  s.tokens[static_cast<size_t>(polarity_pos)] =
      polarity_set[rng.below(polarity_set.size())];
  s.tokens[static_cast<size_t>(key_pos)] =
      spec.key_tokens[s.latents.key_region];

  // Patches: every region gets an independent polarity bump along its own
  // basis direction, plus isotropic noise.
  const int64_t per_region = spec.patches / r_count;
  s.patches.assign(static_cast<size_t>(spec.patches * spec.patch_dim), 0.0f);
  for (int64_t p = 0; p < spec.patches; ++p) {
    const int64_t region = p / per_region;
    const double bump = s.latents.region_polarity[static_cast<size_t>(region)]
                            ? spec.signal
                            : -spec.signal;
    for (int64_t d = 0; d < spec.patch_dim; ++d) {
      double v = spec.noise * rng.normal();
      if (d == region) v += bump;
      s.patches[static_cast<size_t>(p * spec.patch_dim + d)] =
          static_cast<float>(v);
    }
  }

  s.label = derive_label(s.latents);
  return s;
}

}  // namespace

void GenSpec::validate() const {
  if (regions < 1) throw ConfigError("gen.regions must be >= 1");
  if (patches < 1 || patch_dim < 1 || tokens < 2 || vocab < 1) {
    throw ConfigError("gen input geometry must be positive (tokens >= 2)");
  }
  if (patches % regions != 0) {
    throw ConfigError("gen.regions (" + std::to_string(regions) +
                      ") must divide gen.patches (" + std::to_string(patches) +
                      ")");
  }
  if (patch_dim < regions) {
    throw ConfigError("gen.patch_dim must be >= gen.regions");
  }
  if (positive_tokens.empty() || negative_tokens.empty()) {
    throw ConfigError("gen polarity token sets must be non-empty");
  }
  for (const uint16_t t : positive_tokens) {
    if (std::find(negative_tokens.begin(), negative_tokens.end(), t) !=
        negative_tokens.end()) {
      throw ConfigError("gen polarity token sets must be disjoint");
    }
  }
  if (static_cast<int64_t>(key_tokens.size()) != regions) {
    throw ConfigError("gen.key_tokens must list exactly one token per region");
  }
  auto in_vocab = [this](const std::vector<uint16_t>& v) {
    for (const uint16_t t : v) {
      if (t >= vocab) {
        throw ConfigError("gen token id " + std::to_string(t) +
                          " is outside vocab " + std::to_string(vocab));
      }
    }
  };
  in_vocab(positive_tokens);
  in_vocab(negative_tokens);
  in_vocab(key_tokens);
  if (train_count < 1 || val_count < 1 || test_count < 1) {
    throw ConfigError("gen split sizes must be positive");
  }
  if (noise < 0.0) throw ConfigError("gen.noise must be >= 0");
  if (filler_tokens(*this).empty()) {
    throw ConfigError("gen vocab leaves no filler tokens");
  }
}

GenSpec GenSpec::toy() { return GenSpec{}; }

GenSpec GenSpec::for_model(const ModelConfig& cfg) {
  GenSpec s;
  s.patches = cfg.patches;
  s.patch_dim = cfg.patch_dim;
  s.tokens = cfg.tokens;
  s.vocab = cfg.vocab;
  return s;
}

uint8_t derive_label(const SampleLatents& latents) {
  return latents.text_polarity !=
                 latents.region_polarity[latents.key_region]
             ? 1
             : 0;
}

DatasetSplits generate(const GenSpec& spec) {
  spec.validate();
  const std::vector<uint16_t> fillers = filler_tokens(spec);
  const Rng root(spec.seed);
  DatasetSplits out;
  out.train.spec = out.val.spec = out.test.spec = spec;
  int64_t index = 0;
  auto fill = [&](Dataset& ds, int64_t count) {
    ds.samples.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i, ++index) {
      ds.samples.push_back(make_sample(
          spec, fillers, root.split(static_cast<uint64_t>(index)), false));
    }
  };
  fill(out.train, spec.train_count);
  fill(out.val, spec.val_count);
  fill(out.test, spec.test_count);
  return out;
}

Dataset generate_congruent_pairs(const GenSpec& spec, int64_t count,
                                 uint64_t seed) {
  spec.validate();
  if (count < 2) throw InputError("need at least 2 pretraining pairs");
  const std::vector<uint16_t> fillers = filler_tokens(spec);
  const Rng root = Rng(seed).split("congruent-pairs");
  Dataset ds;
  ds.spec = spec;
  ds.samples.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    ds.samples.push_back(make_sample(
        spec, fillers, root.split(static_cast<uint64_t>(i)), true));
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  const GenSpec& s = dataset.spec;
  w.i64(s.regions);
  w.token_list(s.positive_tokens);
  w.token_list(s.negative_tokens);
  w.token_list(s.key_tokens);
  w.f64(s.noise);
  w.f64(s.signal);
  w.i64(s.train_count);
  w.i64(s.val_count);
  w.i64(s.test_count);
  w.u64(s.seed);
  w.i64(s.patches);
  w.i64(s.patch_dim);
  w.i64(s.tokens);
  w.i64(s.vocab);
  w.u64(static_cast<uint64_t>(dataset.samples.size()));
  for (const Sample& smp : dataset.samples) {
    for (const uint16_t t : smp.tokens) w.u16(t);
    for (const float v : smp.patches) w.f32(v);
    w.u8(smp.label);
    w.u8(smp.latents.text_polarity);
    w.u16(smp.latents.key_region);
    for (const uint8_t p : smp.latents.region_polarity) w.u8(p);
  }
  w.close(path);
}

Dataset load_dataset(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw VersionError("'" + path + "' is not a dataset file: expected magic "
                       "\"ADSD\"");
  }
  const uint16_t version = r.u16("version");
  if (version != kVersion) {
    throw VersionError("unsupported dataset version " +
                       std::to_string(version) + " (expected " +
                       std::to_string(kVersion) + ")");
  }
  Dataset ds;
  GenSpec& s = ds.spec;
  s.regions = r.i64("regions");
  s.positive_tokens = r.token_list("positive tokens");
  s.negative_tokens = r.token_list("negative tokens");
  s.key_tokens = r.token_list("key tokens");
  s.noise = r.f64("noise");
  s.signal = r.f64("signal");
  s.train_count = r.i64("train count");
  s.val_count = r.i64("val count");
  s.test_count = r.i64("test count");
  s.seed = r.u64("seed");
  s.patches = r.i64("patches");
  s.patch_dim = r.i64("patch dim");
  s.tokens = r.i64("tokens");
  s.vocab = r.i64("vocab");
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid spec block: ") + e.what(),
                      r.offset());
  }
  const uint64_t count = r.u64("sample count");
  if (count > (uint64_t{1} << 32)) {
    throw FormatError("implausible sample count " + std::to_string(count),
                      r.offset());
  }
  ds.samples.resize(static_cast<size_t>(count));
  for (Sample& smp : ds.samples) {
    smp.tokens.resize(static_cast<size_t>(s.tokens));
    for (auto& t : smp.tokens) {
      t = r.u16("token id");
      if (t >= s.vocab) {
        throw FormatError("token id " + std::to_string(t) + " outside vocab",
                          r.offset());
      }
    }
    smp.patches.resize(static_cast<size_t>(s.patches * s.patch_dim));
    for (auto& v : smp.patches) v = r.f32("patch value");
    smp.label = r.u8("label");
    if (smp.label > 1) {
      throw FormatError("label must be 0 or 1", r.offset());
    }
    smp.latents.text_polarity = r.u8("text polarity");
    smp.latents.key_region = r.u16("key region");
    if (smp.latents.key_region >= s.regions) {
      throw FormatError("key region outside region count", r.offset());
    }
    smp.latents.region_polarity.resize(static_cast<size_t>(s.regions));
    for (auto& p : smp.latents.region_polarity) p = r.u8("region polarity");
  }
  return ds;
}

}  // namespace ads
