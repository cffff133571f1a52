#include "hearbc/dsp.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace hearbc::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Iterative radix-2 complex FFT, in place. n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}
}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Waveform average_channels(const MultiChannelWaveform& m) {
  if (m.channels < 1) throw util::InvalidInput("average_channels: need at least one channel");
  const int64_t n = m.samples_per_channel();
  Waveform out;
  out.sample_rate = m.sample_rate;
  out.samples.resize(static_cast<size_t>(n));
  const double inv = 1.0 / m.channels;
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < m.channels; ++c) acc += m.channel(c)[i];
    out.samples[static_cast<size_t>(i)] = static_cast<float>(acc * inv);
  }
  return out;
}

std::vector<double> design_lowpass_taps(int n_taps, double cutoff_hz, double sample_rate) {
  std::vector<double> h(static_cast<size_t>(n_taps));
  const double fc = cutoff_hz / sample_rate;  // cycles per sample
  const int mid = (n_taps - 1) / 2;
  for (int i = 0; i < n_taps; ++i) {
    const int k = i - mid;
    const double sinc = (k == 0) ? 2.0 * fc : std::sin(2.0 * kPi * fc * k) / (kPi * k);
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n_taps - 1));
    h[static_cast<size_t>(i)] = sinc * hamming;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (auto& v : h) v /= sum;
  return h;
}

Waveform decimate_to_16k(const Waveform& w) {
  if (w.sample_rate != 32000)
    throw util::InvalidInput("decimate_to_16k: only the 32 kHz -> 16 kHz path is supported, got " +
                             std::to_string(w.sample_rate) + " Hz");
  static const std::vector<double> taps = design_lowpass_taps(63, 7200.0, 32000.0);
  const int mid = 31;
  const int64_t n = static_cast<int64_t>(w.samples.size());
  const int64_t out_n = n / 2;
  Waveform out;
  out.sample_rate = 16000;
  out.samples.resize(static_cast<size_t>(out_n));
  for (int64_t i = 0; i < out_n; ++i) {
    const int64_t center = 2 * i;
    double acc = 0.0;
    for (int k = 0; k < 63; ++k) {
      const int64_t idx = center - (k - mid);
      if (idx >= 0 && idx < n) acc += taps[static_cast<size_t>(k)] * w.samples[static_cast<size_t>(idx)];
    }
    out.samples[static_cast<size_t>(i)] = static_cast<float>(acc);
  }
  return out;
}

Waveform normalize_peak(const Waveform& w) {
  float peak = 0.0f;
  for (float v : w.samples) peak = std::max(peak, std::abs(v));
  Waveform out = w;
  if (peak < 1e-8f) return out;  // silence guard
  const float inv = 1.0f / peak;
  for (auto& v : out.samples) v *= inv;
  return out;
}

std::vector<double> mel_filter_centers(int n_mels, double fmin, double fmax) {
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers(static_cast<size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    const double mel = mel_lo + (mel_hi - mel_lo) * (m + 1) / (n_mels + 1);
    centers[static_cast<size_t>(m)] = mel_to_hz(mel);
  }
  return centers;
}

std::vector<double> mel_filterbank(int n_fft, int n_mels, int sample_rate, double fmin,
                                   double fmax) {
  if (n_mels < 2) throw util::InvalidInput("mel_filterbank: n_mels must be >= 2");
  if (!(0.0 <= fmin && fmin < fmax && fmax <= sample_rate / 2.0))
    throw util::InvalidInput("mel_filterbank: need 0 <= fmin < fmax <= sample_rate/2");
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  // n_mels + 2 boundary points, triangles between consecutive triples
  std::vector<double> hz(static_cast<size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m)
    hz[static_cast<size_t>(m)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));

  std::vector<double> fb(static_cast<size_t>(n_mels) * n_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    const double f_lo = hz[static_cast<size_t>(m)];
    const double f_c = hz[static_cast<size_t>(m) + 1];
    const double f_hi = hz[static_cast<size_t>(m) + 2];
    double row_sum = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double wgt = 0.0;
      if (f > f_lo && f < f_hi)
        wgt = (f <= f_c) ? (f - f_lo) / (f_c - f_lo) : (f_hi - f) / (f_hi - f_c);
      fb[static_cast<size_t>(m) * n_bins + k] = wgt;
      row_sum += wgt;
    }
    if (row_sum == 0.0) {
      // narrow filter fell between FFT bins; give the nearest bin full weight
      const int k = static_cast<int>(std::lround(f_c * n_fft / sample_rate));
      fb[static_cast<size_t>(m) * n_bins + std::clamp(k, 0, n_bins - 1)] = 1.0;
    }
  }
  return fb;
}

std::vector<double> stft_power(const Waveform& w, const MelConfig& cfg) {
  const int64_t n = static_cast<int64_t>(w.samples.size());
  if (n < cfg.win) throw util::InvalidInput("stft_power: clip shorter than one window");
  const int n_bins = cfg.n_fft / 2 + 1;
  const int64_t frames = 1 + (n - cfg.win) / cfg.hop;
  std::vector<double> hann(static_cast<size_t>(cfg.win));
  for (int i = 0; i < cfg.win; ++i)
    hann[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / cfg.win));

  std::vector<double> power(static_cast<size_t>(frames) * n_bins);
#pragma omp parallel for schedule(static) if (frames > 16 && !omp_in_parallel())
  for (int64_t t = 0; t < frames; ++t) {
    std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft), {0.0, 0.0});
    const float* src = w.samples.data() + t * cfg.hop;
    for (int i = 0; i < cfg.win; ++i)
      buf[static_cast<size_t>(i)] = {src[i] * hann[static_cast<size_t>(i)], 0.0};
    fft_radix2(buf);
    double* out = power.data() + t * n_bins;
    for (int k = 0; k < n_bins; ++k) out[k] = std::norm(buf[static_cast<size_t>(k)]);
  }
  return power;
}

std::vector<double> mel_energies(const Waveform& w, const MelConfig& cfg) {
  const std::vector<double> power = stft_power(w, cfg);
  const std::vector<double> fb =
      mel_filterbank(cfg.n_fft, cfg.n_mels, cfg.sample_rate, cfg.fmin, cfg.fmax);
  const int n_bins = cfg.n_fft / 2 + 1;
  const int64_t frames = static_cast<int64_t>(power.size()) / n_bins;
  std::vector<double> mel(static_cast<size_t>(frames) * cfg.n_mels);
  for (int64_t t = 0; t < frames; ++t) {
    const double* p = power.data() + t * n_bins;
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* f = fb.data() + static_cast<size_t>(m) * n_bins;
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) acc += f[k] * p[k];
      mel[static_cast<size_t>(t) * cfg.n_mels + m] = acc;
    }
  }
  return mel;
}

MelSpectrogram log_mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  if (w.samples.empty()) throw util::InvalidInput("log_mel_spectrogram: empty input");
  Waveform padded;
  const Waveform* src = &w;
  if (static_cast<int64_t>(w.samples.size()) < cfg.clip_samples) {
    padded.sample_rate = w.sample_rate;
    padded.samples.assign(static_cast<size_t>(cfg.clip_samples), 0.0f);
    std::copy(w.samples.begin(), w.samples.end(),
              padded.samples.end() - static_cast<int64_t>(w.samples.size()));
    src = &padded;
  }

  const std::vector<double> mel = mel_energies(*src, cfg);
  const int64_t frames = static_cast<int64_t>(mel.size()) / cfg.n_mels;

  MelSpectrogram out;
  out.n_mels = cfg.n_mels;
  out.frames = static_cast<int>(frames);
  out.hop = cfg.hop;
  out.window = cfg.win;
  out.source_rate = cfg.sample_rate;
  out.values.resize(mel.size());

  // log, then per-clip z-score; values stored [n_mels][frames]
  std::vector<double> logged(mel.size());
  double mean = 0.0;
  for (size_t i = 0; i < mel.size(); ++i) {
    logged[i] = std::log(mel[i] + cfg.log_offset);
    mean += logged[i];
  }
  mean /= static_cast<double>(logged.size());
  double var = 0.0;
  for (double v : logged) var += (v - mean) * (v - mean);
  var /= static_cast<double>(logged.size());
  const double stdev = std::sqrt(var);

  for (int64_t t = 0; t < frames; ++t) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double v = logged[static_cast<size_t>(t) * cfg.n_mels + m];
      const double z = (stdev < 1e-8) ? 0.0 : (v - mean) / stdev;
      out.values[static_cast<size_t>(m) * frames + t] = static_cast<float>(z);
    }
  }
  return out;
}

MelSpectrogram process_clip(const MultiChannelWaveform& m, const MelConfig& cfg) {
  if (m.channels != 4 || m.sample_rate != 32000 || m.samples_per_channel() != 64000)
    throw util::InvalidInput("process_clip: expected 4 channels x 64000 samples @ 32 kHz");
  return log_mel_spectrogram(normalize_peak(decimate_to_16k(average_channels(m))), cfg);
}

}  // namespace hearbc::dsp
