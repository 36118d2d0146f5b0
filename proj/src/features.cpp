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

#include "urban/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "urban/audio_io.hpp"

namespace urban::features {
namespace {

constexpr double kPowerFloor = 1e-10;
constexpr double kSigmaFloor = 1e-8;
constexpr char kTensorMagic[4] = {'U', 'S', 'F', 'C'};

template <typename T>
void PutLe(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, uint16_t, uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T GetLe(const uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 2, uint16_t, uint32_t>;
  U bits = 0;
  for (size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

}  // namespace

int StftConfig::FrameCount(size_t n_samples) const {
  const int raw = 1 + static_cast<int>(n_samples / static_cast<size_t>(hop));
  return drop_last_frame ? raw - 1 : raw;
}

void StftConfig::Validate() const {
  if (!IsPowerOfTwo(static_cast<size_t>(std::max(n_fft, 0))))
    throw std::invalid_argument("n_fft must be a power of two");
  if (hop < 1 || hop > n_fft) throw std::invalid_argument("hop must lie in [1, n_fft]");
  if (n_mels < 1) throw std::invalid_argument("n_mels must be >= 1");
  if (!(f_min_hz >= 0.0 && f_min_hz < f_max_hz)) throw std::invalid_argument("need 0 <= f_min < f_max");
  if (!(top_db > 0.0)) throw std::invalid_argument("top_db must be positive");
}

std::string StftConfig::Fingerprint() const {
  std::ostringstream s;
  s << "nfft" << n_fft << "-hop" << hop << "-mels" << n_mels << "-fmin" << f_min_hz << "-fmax"
    << f_max_hz << "-top" << top_db << "-drop" << (drop_last_frame ? 1 : 0);
  return s.str();
}

double HzToMel(double hz) {
  if (hz < 0.0) throw std::invalid_argument("negative frequency");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int n_fft, int sample_rate_hz, double f_min_hz,
                             double f_max_hz)
    : n_mels_(n_mels), n_bins_(n_fft / 2 + 1) {
  if (n_mels < 1) throw std::invalid_argument("n_mels must be >= 1");
  if (f_max_hz > sample_rate_hz / 2.0) throw std::invalid_argument("f_max exceeds the Nyquist frequency");
  if (!(f_min_hz >= 0.0 && f_min_hz < f_max_hz)) throw std::invalid_argument("need 0 <= f_min < f_max");

  const double mel_lo = HzToMel(f_min_hz);
  const double mel_hi = HzToMel(f_max_hz);
  edges_hz_.resize(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges_hz_.size(); ++i)
    edges_hz_[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_mels + 1));

  weights_.assign(static_cast<size_t>(n_mels) * n_bins_, 0.0);
  support_.assign(static_cast<size_t>(n_mels), {n_bins_, 0});
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz_[m], mid = edges_hz_[m + 1], hi = edges_hz_[m + 2];
    auto& [begin, end] = support_[static_cast<size_t>(m)];
    for (int k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      if (w > 0.0) {
        weights_[static_cast<size_t>(m) * n_bins_ + k] = w;
        begin = std::min(begin, k);
        end = std::max(end, k + 1);
      }
    }
    if (begin > end) begin = end = 0;
  }
}

MelFilterbank BuildMelFilterbank(const StftConfig& cfg, int sample_rate_hz) {
  return MelFilterbank(cfg.n_mels, cfg.n_fft, sample_rate_hz, cfg.f_min_hz, cfg.f_max_hz);
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

namespace {

// Frame `t` of the reflect-padded signal, windowed, into `buf`.
void LoadFrame(std::span<const float> x, int n_fft, int hop, int t, std::span<const double> window,
               std::span<std::complex<double>> buf) {
  const auto n = static_cast<int64_t>(x.size());
  const int64_t pad = n_fft / 2;
  for (int j = 0; j < n_fft; ++j) {
    int64_t idx = static_cast<int64_t>(t) * hop + j - pad;
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * (n - 1) - idx;
    buf[static_cast<size_t>(j)] = {static_cast<double>(x[static_cast<size_t>(idx)]) * window[static_cast<size_t>(j)], 0.0};
  }
}

void RequireLongEnough(std::span<const float> x, const StftConfig& cfg) {
  if (x.size() <= static_cast<size_t>(cfg.n_fft / 2))
    throw std::invalid_argument("signal shorter than half an FFT frame");
}

}  // namespace

std::vector<std::vector<std::complex<double>>> Stft(std::span<const float> samples,
                                                    const StftConfig& cfg) {
  if (samples.size() != dsp::kStandardLength)
    throw std::invalid_argument("STFT input must hold " + std::to_string(dsp::kStandardLength) + " samples");
  cfg.Validate();
  RequireLongEnough(samples, cfg);
  const FftPlan plan(static_cast<size_t>(cfg.n_fft));
  const std::vector<double> window = HannWindow(cfg.n_fft);
  const int frames = cfg.FrameCount(samples.size());
  const int bins = cfg.n_bins();
  std::vector<std::vector<std::complex<double>>> out(static_cast<size_t>(bins),
                                                     std::vector<std::complex<double>>(static_cast<size_t>(frames)));
#pragma omp parallel
  {
    std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      LoadFrame(samples, cfg.n_fft, cfg.hop, t, window, buf);
      plan.Forward(buf);
      for (int k = 0; k < bins; ++k) out[static_cast<size_t>(k)][static_cast<size_t>(t)] = buf[static_cast<size_t>(k)];
    }
  }
  return out;
}

std::vector<double> PowerSpectrogram(std::span<const float> samples, const StftConfig& cfg,
                                     const FftPlan& plan, std::span<const double> window) {
  RequireLongEnough(samples, cfg);
  const int frames = cfg.FrameCount(samples.size());
  const int bins = cfg.n_bins();
  std::vector<double> power(static_cast<size_t>(bins) * frames);
#pragma omp parallel
  {
    std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      LoadFrame(samples, cfg.n_fft, cfg.hop, t, window, buf);
      plan.Forward(buf);
      for (int k = 0; k < bins; ++k) power[static_cast<size_t>(k) * frames + t] = std::norm(buf[static_cast<size_t>(k)]);
    }
  }
  return power;
}

MelSpectrogram::MelSpectrogram(const StftConfig& cfg)
    : cfg_((cfg.Validate(), cfg)),
      plan_(static_cast<size_t>(cfg.n_fft)),
      window_(HannWindow(cfg.n_fft)),
      filterbank_(BuildMelFilterbank(cfg)) {}

SpectrogramTensor MelSpectrogram::operator()(const dsp::StandardClip& clip) const {
  const int frames = cfg_.FrameCount(dsp::kStandardLength);
  const int n_mels = cfg_.n_mels;
  std::vector<double> db(static_cast<size_t>(dsp::kStandardChannels) * n_mels * frames);
  for (int c = 0; c < dsp::kStandardChannels; ++c) {
    const std::vector<double> power =
        PowerSpectrogram(clip.channel(static_cast<size_t>(c)), cfg_, plan_, window_);
#pragma omp parallel for schedule(static)
    for (int m = 0; m < n_mels; ++m) {
      double* row = db.data() + (static_cast<size_t>(c) * n_mels + m) * frames;
      std::fill(row, row + frames, 0.0);
      for (int k = filterbank_.support_begin(m); k < filterbank_.support_end(m); ++k) {
        const double w = filterbank_.weight(m, k);
        const double* p = power.data() + static_cast<size_t>(k) * frames;
        for (int t = 0; t < frames; ++t) row[t] += w * p[t];
      }
      for (int t = 0; t < frames; ++t) row[t] = 10.0 * std::log10(std::max(row[t], kPowerFloor));
    }
  }
  const double peak = *std::max_element(db.begin(), db.end());
  const double floor = peak - cfg_.top_db;
  SpectrogramTensor out(dsp::kStandardChannels, n_mels, frames, Stage::kRawDb);
  for (size_t i = 0; i < db.size(); ++i) out.data[i] = static_cast<float>(std::max(db[i], floor));
  return out;
}

double TensorMean(const SpectrogramTensor& spec) {
  if (spec.data.empty()) return 0.0;
  double sum = 0.0;
  for (float v : spec.data) sum += v;
  return sum / static_cast<double>(spec.data.size());
}

void FreqMask(SpectrogramTensor& spec, int max_width, Rng& rng, float fill) {
  const int width = static_cast<int>(rng.UniformInt(0, std::min(max_width, spec.mel_bins)));
  const int start = static_cast<int>(rng.UniformInt(0, spec.mel_bins - width));
  for (int c = 0; c < spec.channels; ++c)
    for (int m = start; m < start + width; ++m)
      for (int t = 0; t < spec.frames; ++t) spec.at(c, m, t) = fill;
  if (spec.stage == Stage::kRawDb) spec.stage = Stage::kMasked;
}

void TimeMask(SpectrogramTensor& spec, int max_width, Rng& rng, float fill) {
  const int width = static_cast<int>(rng.UniformInt(0, std::min(max_width, spec.frames)));
  const int start = static_cast<int>(rng.UniformInt(0, spec.frames - width));
  for (int c = 0; c < spec.channels; ++c)
    for (int m = 0; m < spec.mel_bins; ++m)
      for (int t = start; t < start + width; ++t) spec.at(c, m, t) = fill;
  if (spec.stage == Stage::kRawDb) spec.stage = Stage::kMasked;
}

void FreqMask(SpectrogramTensor& spec, int max_width, Rng& rng) {
  FreqMask(spec, max_width, rng, static_cast<float>(TensorMean(spec)));
}

void TimeMask(SpectrogramTensor& spec, int max_width, Rng& rng) {
  TimeMask(spec, max_width, rng, static_cast<float>(TensorMean(spec)));
}

void ApplyMasks(SpectrogramTensor& spec, const dsp::AugmentConfig& cfg, Rng& rng) {
  const auto fill = static_cast<float>(TensorMean(spec));
  for (int i = 0; i < cfg.n_freq_masks; ++i) FreqMask(spec, cfg.freq_mask_max, rng, fill);
  for (int i = 0; i < cfg.n_time_masks; ++i) TimeMask(spec, cfg.time_mask_max, rng, fill);
}

NormalizationStats Normalize(SpectrogramTensor& spec) {
  NormalizationStats stats;
  stats.mu = TensorMean(spec);
  double ss = 0.0;
  for (float v : spec.data) {
    const double d = v - stats.mu;
    ss += d * d;
  }
  stats.sigma = spec.data.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(spec.data.size()));
  if (stats.sigma < kSigmaFloor) {
    std::fill(spec.data.begin(), spec.data.end(), 0.0f);
  } else {
    for (float& v : spec.data) v = static_cast<float>((v - stats.mu) / stats.sigma);
  }
  spec.stage = Stage::kNormalized;
  return stats;
}

void WriteTensorFile(const std::filesystem::path& path, const SpectrogramTensor& spec) {
  std::string bytes(kTensorMagic, 4);
  PutLe<uint16_t>(bytes, FeatureCache::kVersion);
  PutLe<uint32_t>(bytes, static_cast<uint32_t>(spec.channels));
  PutLe<uint32_t>(bytes, static_cast<uint32_t>(spec.mel_bins));
  PutLe<uint32_t>(bytes, static_cast<uint32_t>(spec.frames));
  bytes.reserve(bytes.size() + 4 * spec.data.size());
  for (float v : spec.data) PutLe<float>(bytes, v);

  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SpectrogramTensor ReadTensorFile(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = audio::ReadFileBytes(path);
  constexpr size_t kHeader = 4 + 2 + 3 * 4;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kTensorMagic, 4) != 0)
    throw std::runtime_error(path.string() + ": bad feature cache magic");
  if (GetLe<uint16_t>(bytes.data() + 4) != FeatureCache::kVersion)
    throw std::runtime_error(path.string() + ": unsupported feature cache version");
  const auto c = GetLe<uint32_t>(bytes.data() + 6);
  const auto m = GetLe<uint32_t>(bytes.data() + 10);
  const auto t = GetLe<uint32_t>(bytes.data() + 14);
  const size_t count = static_cast<size_t>(c) * m * t;
  if (bytes.size() != kHeader + 4 * count) throw std::runtime_error(path.string() + ": truncated feature cache file");
  SpectrogramTensor spec(static_cast<int>(c), static_cast<int>(m), static_cast<int>(t), Stage::kRawDb);
  for (size_t i = 0; i < count; ++i) spec.data[i] = GetLe<float>(bytes.data() + kHeader + 4 * i);
  return spec;
}

FeatureCache::FeatureCache(std::filesystem::path dir, const StftConfig& cfg)
    : dir_(std::move(dir) / cfg.Fingerprint()) {}

std::filesystem::path FeatureCache::PathFor(const std::filesystem::path& wav_path) const {
  std::filesystem::path name = wav_path.filename();
  name += ".usfc";
  return dir_ / wav_path.parent_path().filename() / name;
}

std::optional<SpectrogramTensor> FeatureCache::Load(const std::filesystem::path& wav_path) const {
  const std::filesystem::path p = PathFor(wav_path);
  if (!std::filesystem::is_regular_file(p)) return std::nullopt;
  try {
    return ReadTensorFile(p);
  } catch (const std::exception&) {
    return std::nullopt;  // stale or damaged entries are recomputed
  }
}

void FeatureCache::Store(const std::filesystem::path& wav_path, const SpectrogramTensor& spec) const {
  WriteTensorFile(PathFor(wav_path), spec);
}

SpectrogramTensor ExtractFeatures(const std::filesystem::path& wav_path,
                                  const dsp::AugmentConfig& augment, Rng& rng,
                                  const MelSpectrogram& mel, const FeatureCache* cache) {
  try {
    SpectrogramTensor spec;
    if (!augment.enabled) {
      std::optional<SpectrogramTensor> cached = cache ? cache->Load(wav_path) : std::nullopt;
      if (cached) {
        spec = std::move(*cached);
      } else {
        spec = mel(dsp::Standardize(audio::ReadWav(wav_path)));
        if (cache) cache->Store(wav_path, spec);
      }
    } else {
      dsp::StandardClip clip = dsp::Standardize(audio::ReadWav(wav_path));
      clip = dsp::TimeShift(clip, augment.shift_limit, rng);
      spec = mel(clip);
      ApplyMasks(spec, augment, rng);
    }
    Normalize(spec);
    return spec;
  } catch (const FeatureError&) {
    throw;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    const std::string p = wav_path.string();
    throw FeatureError(what.starts_with(p) ? what : p + ": " + what);
  }
}

SpectrogramTensor ExtractFeatures(const std::filesystem::path& wav_path,
                                  const dsp::AugmentConfig& augment, Rng& rng) {
  static const MelSpectrogram kDefault;
  return ExtractFeatures(wav_path, augment, rng, kDefault, nullptr);
}

}  // namespace urban::features
