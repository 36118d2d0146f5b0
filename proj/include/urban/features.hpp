// Copyright 2026 The Urban Acoustics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef URBAN_FEATURES_HPP_
#define URBAN_FEATURES_HPP_

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "urban/dsp.hpp"
#include "urban/fft.hpp"
#include "urban/rng.hpp"

namespace urban::features {

// Defaults produce 64 x 344 per channel from a 4 s, 44.1 kHz clip.
struct StftConfig {
  int n_fft = 1024;
  int hop = 512;
  int n_mels = 64;
  double f_min_hz = 0.0;
  double f_max_hz = 22050.0;
  double top_db = 80.0;
  bool drop_last_frame = true;

  int n_bins() const { return n_fft / 2 + 1; }
  // 1 + floor(n / hop) centered frames, minus the dropped one.
  int FrameCount(size_t n_samples) const;
  void Validate() const;
  // Stable fingerprint used to key the feature cache.
  std::string Fingerprint() const;
};

enum class Stage { kRawDb, kMasked, kNormalized };

// [channel][mel][frame], row-major.
struct SpectrogramTensor {
  int channels = 0;
  int mel_bins = 0;
  int frames = 0;
  std::vector<float> data;
  Stage stage = Stage::kRawDb;

  SpectrogramTensor() = default;
  SpectrogramTensor(int c, int m, int t, Stage s = Stage::kRawDb)
      : channels(c), mel_bins(m), frames(t), data(static_cast<size_t>(c) * m * t), stage(s) {}

  float& at(int c, int m, int t) { return data[(static_cast<size_t>(c) * mel_bins + m) * frames + t]; }
  float at(int c, int m, int t) const { return data[(static_cast<size_t>(c) * mel_bins + m) * frames + t]; }
  bool operator==(const SpectrogramTensor&) const = default;
};

struct NormalizationStats {
  double mu = 0.0;
  double sigma = 0.0;
};

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters on n_mels + 2 mel-equispaced edges, evaluated at bin
// centre frequencies k * sr / n_fft. Peak height 1, no area normalization.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int n_fft, int sample_rate_hz, double f_min_hz, double f_max_hz);

  int n_mels() const { return n_mels_; }
  int n_bins() const { return n_bins_; }
  double weight(int mel, int bin) const { return weights_[static_cast<size_t>(mel) * n_bins_ + bin]; }
  const std::vector<double>& edges_hz() const { return edges_hz_; }
  // First and one-past-last bin with a nonzero weight.
  int support_begin(int mel) const { return support_[static_cast<size_t>(mel)].first; }
  int support_end(int mel) const { return support_[static_cast<size_t>(mel)].second; }

 private:
  int n_mels_;
  int n_bins_;
  std::vector<double> weights_;
  std::vector<double> edges_hz_;
  std::vector<std::pair<int, int>> support_;
};

MelFilterbank BuildMelFilterbank(const StftConfig& cfg = {}, int sample_rate_hz = dsp::kStandardRateHz);

// Periodic Hann window.
std::vector<double> HannWindow(int n);

// Centered STFT with reflect padding. Result is [n_bins][frames].
std::vector<std::vector<std::complex<double>>> Stft(std::span<const float> samples,
                                                    const StftConfig& cfg = {});

// |STFT|^2 as a flat [n_bins][frames] array.
std::vector<double> PowerSpectrogram(std::span<const float> samples, const StftConfig& cfg,
                                     const FftPlan& plan, std::span<const double> window);

// Computes the raw-dB mel spectrogram tensor. Holds the FFT plan, window and
// filterbank so repeated calls do not rebuild them.
class MelSpectrogram {
 public:
  explicit MelSpectrogram(const StftConfig& cfg = {});

  const StftConfig& config() const { return cfg_; }
  const MelFilterbank& filterbank() const { return filterbank_; }

  // 10 log10(max(p, 1e-10)) clamped to [max - top_db, max] over the tensor.
  SpectrogramTensor operator()(const dsp::StandardClip& clip) const;

 private:
  StftConfig cfg_;
  FftPlan plan_;
  std::vector<double> window_;
  MelFilterbank filterbank_;
};

double TensorMean(const SpectrogramTensor& spec);

// One mask: width uniform in [0, max_width], start uniform over the valid
// range; the band is set to `fill` across all channels.
void FreqMask(SpectrogramTensor& spec, int max_width, Rng& rng, float fill);
void TimeMask(SpectrogramTensor& spec, int max_width, Rng& rng, float fill);
void FreqMask(SpectrogramTensor& spec, int max_width, Rng& rng);
void TimeMask(SpectrogramTensor& spec, int max_width, Rng& rng);

// n_freq_masks frequency masks then n_time_masks time masks, all filled with
// the tensor mean taken before the first mask.
void ApplyMasks(SpectrogramTensor& spec, const dsp::AugmentConfig& cfg, Rng& rng);

// X <- (X - mu) / sigma over the whole tensor with the population standard
// deviation. sigma < 1e-8 yields all zeros.
NormalizationStats Normalize(SpectrogramTensor& spec);

// Optional on-disk store of un-augmented raw-dB tensors. File layout: "USFC",
// u16 version, u32 channels, u32 mel bins, u32 frames, then little-endian f32
// values in [channel][mel][frame] order. Writes go to a temporary file that is
// renamed into place.
class FeatureCache {
 public:
  static constexpr uint16_t kVersion = 1;

  FeatureCache(std::filesystem::path dir, const StftConfig& cfg);

  std::filesystem::path PathFor(const std::filesystem::path& wav_path) const;
  std::optional<SpectrogramTensor> Load(const std::filesystem::path& wav_path) const;
  void Store(const std::filesystem::path& wav_path, const SpectrogramTensor& spec) const;

 private:
  std::filesystem::path dir_;
};

void WriteTensorFile(const std::filesystem::path& path, const SpectrogramTensor& spec);
SpectrogramTensor ReadTensorFile(const std::filesystem::path& path);

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full pipeline for one file: decode, standardize, optional time shift,
// mel spectrogram, optional masks, normalize. With augmentation off the
// cache (when given) supplies or receives the raw-dB tensor. Errors are
// rethrown as FeatureError carrying the file path.
SpectrogramTensor ExtractFeatures(const std::filesystem::path& wav_path,
                                  const dsp::AugmentConfig& augment, Rng& rng,
                                  const MelSpectrogram& mel,
                                  const FeatureCache* cache = nullptr);

SpectrogramTensor ExtractFeatures(const std::filesystem::path& wav_path,
                                  const dsp::AugmentConfig& augment, Rng& rng);

}  // namespace urban::features

#endif  // URBAN_FEATURES_HPP_
