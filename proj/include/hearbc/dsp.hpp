#pragma once

#include <cstdint>
#include <vector>

#include "hearbc/util.hpp"

namespace hearbc::dsp {

/// Multi-channel time-domain audio, channel-major storage.
struct MultiChannelWaveform {
  int channels = 0;
  int sample_rate = 0;
  std::vector<float> samples;  // [channels][n], row-major

  int64_t samples_per_channel() const {
    return channels > 0 ? static_cast<int64_t>(samples.size()) / channels : 0;
  }
  float* channel(int c) { return samples.data() + static_cast<int64_t>(c) * samples_per_channel(); }
  const float* channel(int c) const {
    return samples.data() + static_cast<int64_t>(c) * samples_per_channel();
  }
};

struct Waveform {
  int sample_rate = 0;
  std::vector<float> samples;
};

/// Log-power mel spectrogram, z-scored per clip. Values are [n_mels][frames].
struct MelSpectrogram {
  int n_mels = 0;
  int frames = 0;
  int hop = 0;
  int window = 0;
  int source_rate = 0;
  std::vector<float> values;

  float& at(int m, int t) { return values[static_cast<size_t>(m) * frames + t]; }
  float at(int m, int t) const { return values[static_cast<size_t>(m) * frames + t]; }
};

/// Spectrogram constants. The paper defers these to its reference
/// preprocessing; they are pinned here so every experiment agrees.
struct MelConfig {
  int sample_rate = 16000;
  int n_fft = 512;
  int win = 400;   // 25 ms
  int hop = 160;   // 10 ms
  int n_mels = 80;
  double fmin = 50.0;
  double fmax = 8000.0;
  double log_offset = 1e-6;
  int clip_samples = 32000;  // 2 s at 16 kHz
};

// mel(f) = 2595 * log10(1 + f/700)
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Arithmetic mean across channels, sample rate preserved.
Waveform average_channels(const MultiChannelWaveform& m);

/// 63-tap Hamming windowed-sinc lowpass, normalized to unit DC gain.
std::vector<double> design_lowpass_taps(int n_taps, double cutoff_hz, double sample_rate);

/// 2:1 decimation from 32 kHz to 16 kHz (lowpass at 7.2 kHz, then every
/// other sample; zero-phase via symmetric taps and group-delay compensation).
Waveform decimate_to_16k(const Waveform& w);

/// Peak normalization to max|x| = 1; inputs quieter than 1e-8 pass unchanged.
Waveform normalize_peak(const Waveform& w);

/// Triangular mel filterbank, rows [n_mels][n_fft/2 + 1].
std::vector<double> mel_filterbank(int n_fft, int n_mels, int sample_rate, double fmin,
                                   double fmax);

/// Center frequencies (Hz) of the mel filters for a given config.
std::vector<double> mel_filter_centers(int n_mels, double fmin, double fmax);

/// STFT power spectrum, [frames][n_fft/2+1]. Hann window, no center padding.
std::vector<double> stft_power(const Waveform& w, const MelConfig& cfg);

/// Pre-log mel energies, [frames][n_mels].
std::vector<double> mel_energies(const Waveform& w, const MelConfig& cfg);

/// Full pipeline stage: STFT -> power -> mel -> log(x + offset) -> per-clip
/// z-score. Clips shorter than cfg.clip_samples are left-zero-padded first.
MelSpectrogram log_mel_spectrogram(const Waveform& w, const MelConfig& cfg = {});

/// average -> decimate -> normalize -> log-mel, expects 4 x 64000 @ 32 kHz.
MelSpectrogram process_clip(const MultiChannelWaveform& m, const MelConfig& cfg = {});

}  // namespace hearbc::dsp
