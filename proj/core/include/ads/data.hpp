#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ads/config.hpp"
#include "ads/error.hpp"

namespace ads {

// Generator latents stored next to each sample so labels can be re-derived
// and diagnosed; they are never fed to a model.
struct SampleLatents {
  uint8_t text_polarity = 0;              // 1 = positive wording
  uint16_t key_region = 0;                // region named by the key token
  std::vector<uint8_t> region_polarity;   // 1 = positive bump, per region
};

struct Sample {
  std::vector<uint16_t> tokens;  // n ids, < vocab
  std::vector<float> patches;    // m * patch_dim, row-major
  uint8_t label = 0;             // 1 = incongruent (sarcastic stand-in)
  SampleLatents latents;
};

// Synthetic incongruity task. The text carries a polarity token and a key
// token naming one patch region; every region gets an independent polarity
// bump. The label fires iff the text polarity disagrees with the polarity
// of the text-selected region, so neither modality alone decides it, and
// distractor regions keep the image ambiguous without the key.
struct GenSpec {
  int64_t regions = 4;  // R, must divide patches
  std::vector<uint16_t> positive_tokens{1, 2};
  std::vector<uint16_t> negative_tokens{3, 4};
  std::vector<uint16_t> key_tokens{5, 6, 7, 8};  // one per region
  double noise = 0.5;   // sigma of the per-feature Gaussian noise
  double signal = 1.0;  // mu, magnitude of the region polarity bump
  int64_t train_count = 1000;
  int64_t val_count = 250;
  int64_t test_count = 500;
  uint64_t seed = 0;
  // Input geometry; must match the model the data is used with.
  int64_t patches = 16;
  int64_t patch_dim = 32;
  int64_t tokens = 16;
  int64_t vocab = 64;

  void validate() const;  // throws ConfigError

  static GenSpec toy();
  static GenSpec for_model(const ModelConfig& cfg);
};

struct Dataset {
  GenSpec spec;
  std::vector<Sample> samples;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Deterministic generation; sample i is produced from an independent PRNG
// stream keyed by its global index, so splits never overlap streams.
DatasetSplits generate(const GenSpec& spec);

// The label recomputed from latents: text polarity != key region polarity.
uint8_t derive_label(const SampleLatents& latents);

// Aligned pairs for contrastive pretraining: the text polarity token is
// forced to match the key region's polarity, so matching text to image is
// learnable while labels (all congruent) are never exposed to training.
Dataset generate_congruent_pairs(const GenSpec& spec, int64_t count,
                                 uint64_t seed);

// "ADSD" binary format, version 1: magic, version, spec block, samples.
// Round-trips are byte-exact.
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace ads
