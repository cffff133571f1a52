#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "hearbc/dsp.hpp"
#include "hearbc/util.hpp"

using namespace hearbc;

namespace {
constexpr double kPi = 3.14159265358979323846;

dsp::MultiChannelWaveform make_multi(int channels, int64_t n, int rate) {
  dsp::MultiChannelWaveform m;
  m.channels = channels;
  m.sample_rate = rate;
  m.samples.assign(static_cast<size_t>(channels) * n, 0.0f);
  return m;
}

dsp::Waveform tone(double freq, double amp, int rate, int64_t n) {
  dsp::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] = static_cast<float>(amp * std::sin(2.0 * kPi * freq * i / rate));
  return w;
}

double rms(const std::vector<float>& v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Single-bin amplitude estimate via correlation over an integer number of periods.
double tone_amplitude(const std::vector<float>& x, double freq, int rate, int64_t lo, int64_t hi) {
  double re = 0.0, im = 0.0;
  const int64_t n = hi - lo;
  for (int64_t i = lo; i < hi; ++i) {
    const double ph = 2.0 * kPi * freq * i / rate;
    re += x[static_cast<size_t>(i)] * std::cos(ph);
    im += x[static_cast<size_t>(i)] * std::sin(ph);
  }
  return 2.0 * std::sqrt(re * re + im * im) / static_cast<double>(n);
}

// Fully independent log-mel oracle: own Hann, direct O(N^2) DFT, own mel
// triangles, same log/z-score convention.
std::vector<double> oracle_logmel(const std::vector<float>& clip, const dsp::MelConfig& c,
                                  bool zscore) {
  const int n_bins = c.n_fft / 2 + 1;
  const int64_t frames = 1 + (static_cast<int64_t>(clip.size()) - c.win) / c.hop;
  auto mel_of = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz_of = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double m_lo = mel_of(c.fmin), m_hi = mel_of(c.fmax);
  std::vector<double> edges(static_cast<size_t>(c.n_mels) + 2);
  for (int m = 0; m < c.n_mels + 2; ++m)
    edges[static_cast<size_t>(m)] = hz_of(m_lo + (m_hi - m_lo) * m / (c.n_mels + 1));

  std::vector<double> out(static_cast<size_t>(frames) * c.n_mels, 0.0);
  for (int64_t t = 0; t < frames; ++t) {
    std::vector<double> power(static_cast<size_t>(n_bins));
    for (int k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < c.win; ++i) {
        const double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * i / c.win));
        const double v = clip[static_cast<size_t>(t * c.hop + i)] * hann;
        const double ang = -2.0 * kPi * k * i / c.n_fft;
        re += v * std::cos(ang);
        im += v * std::sin(ang);
      }
      power[static_cast<size_t>(k)] = re * re + im * im;
    }
    for (int m = 0; m < c.n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * c.sample_rate / c.n_fft;
        const double lo = edges[static_cast<size_t>(m)], mid = edges[static_cast<size_t>(m) + 1],
                     hi = edges[static_cast<size_t>(m) + 2];
        double w = 0.0;
        if (f > lo && f < hi) w = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        acc += w * power[static_cast<size_t>(k)];
      }
      out[static_cast<size_t>(t) * c.n_mels + m] = acc;
    }
  }
  if (!zscore) return out;
  for (auto& v : out) v = std::log(v + c.log_offset);
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  var /= static_cast<double>(out.size());
  const double stdev = std::sqrt(var);
  for (auto& v : out) v = (stdev < 1e-8) ? 0.0 : (v - mean) / stdev;
  return out;
}

}  // namespace

TEST_CASE("average_channels basics") {
  util::Rng rng(1);
  auto m = make_multi(4, 1000, 32000);
  // identical channels
  for (int c = 0; c < 4; ++c)
    for (int64_t i = 0; i < 1000; ++i)
      m.channel(c)[i] = static_cast<float>(std::sin(0.01 * static_cast<double>(i)));
  auto w = dsp::average_channels(m);
  for (int64_t i = 0; i < 1000; ++i) CHECK(w.samples[static_cast<size_t>(i)] ==
                                           doctest::Approx(m.channel(0)[i]).epsilon(1e-7));
  CHECK(w.sample_rate == 32000);

  // constant channels at 0.2/0.4/0.6/0.8
  for (int c = 0; c < 4; ++c)
    for (int64_t i = 0; i < 1000; ++i) m.channel(c)[i] = 0.2f * static_cast<float>(c + 1);
  w = dsp::average_channels(m);
  for (float v : w.samples) CHECK(v == doctest::Approx(0.5).epsilon(1e-7));

  // random channels vs an independently coded elementwise mean
  for (auto& v : m.samples) v = rng.uniformf(-1.f, 1.f);
  w = dsp::average_channels(m);
  for (int64_t i = 0; i < 1000; ++i) {
    double acc = 0.0;
    for (int c = 3; c >= 0; --c) acc += m.channel(c)[i];
    const float expect = static_cast<float>(acc / 4.0);
    CHECK(std::abs(w.samples[static_cast<size_t>(i)] - expect) <= 1e-12);
  }

  dsp::MultiChannelWaveform empty;
  CHECK_THROWS_AS(dsp::average_channels(empty), util::InvalidInput);
}

TEST_CASE("average_channels is linear") {
  util::Rng rng(2);
  auto A = make_multi(3, 500, 32000), B = make_multi(3, 500, 32000);
  for (auto& v : A.samples) v = rng.uniformf(-1.f, 1.f);
  for (auto& v : B.samples) v = rng.uniformf(-1.f, 1.f);
  const float alpha = rng.uniformf(-2.f, 2.f), beta = rng.uniformf(-2.f, 2.f);
  auto mix = make_multi(3, 500, 32000);
  for (size_t i = 0; i < mix.samples.size(); ++i)
    mix.samples[i] = alpha * A.samples[i] + beta * B.samples[i];
  auto wa = dsp::average_channels(A), wb = dsp::average_channels(B),
       wm = dsp::average_channels(mix);
  for (size_t i = 0; i < wm.samples.size(); ++i)
    CHECK(wm.samples[i] ==
          doctest::Approx(alpha * wa.samples[i] + beta * wb.samples[i]).epsilon(1e-5));
}

TEST_CASE("decimate_to_16k passes DC and halves length") {
  dsp::Waveform w;
  w.sample_rate = 32000;
  w.samples.assign(64000, 0.3f);
  auto out = dsp::decimate_to_16k(w);
  CHECK(out.sample_rate == 16000);
  CHECK(out.samples.size() == 32000);
  for (size_t i = 64; i < out.samples.size() - 64; ++i)
    CHECK(std::abs(out.samples[i] - 0.3f) < 1e-3f);

  w.sample_rate = 44100;
  CHECK_THROWS_AS(dsp::decimate_to_16k(w), util::InvalidInput);
}

TEST_CASE("decimate_to_16k passes 1 kHz and rejects 15 kHz") {
  auto w = tone(1000.0, 1.0, 32000, 64000);
  auto out = dsp::decimate_to_16k(w);
  const double amp = tone_amplitude(out.samples, 1000.0, 16000, 8000, 24000);
  CHECK(amp == doctest::Approx(1.0).epsilon(0.01));

  auto hi = tone(15000.0, 1.0, 32000, 64000);
  auto out_hi = dsp::decimate_to_16k(hi);
  std::vector<float> mid(out_hi.samples.begin() + 64, out_hi.samples.end() - 64);
  CHECK(rms(mid) < 0.05 * rms(hi.samples));
}

TEST_CASE("decimate_to_16k shift consistency") {
  util::Rng rng(5);
  dsp::Waveform w;
  w.sample_rate = 32000;
  w.samples.resize(4000);
  for (auto& v : w.samples) v = rng.uniformf(-1.f, 1.f);
  dsp::Waveform shifted;
  shifted.sample_rate = 32000;
  shifted.samples.assign(4000, 0.f);
  for (size_t i = 2; i < 4000; ++i) shifted.samples[i] = w.samples[i - 2];
  auto a = dsp::decimate_to_16k(w);
  auto b = dsp::decimate_to_16k(shifted);
  for (size_t i = 40; i + 40 < a.samples.size(); ++i)
    CHECK(std::abs(b.samples[i + 1] - a.samples[i]) < 1e-6f);
}

TEST_CASE("normalize_peak") {
  dsp::Waveform w;
  w.sample_rate = 16000;
  w.samples = {0.5f, -0.25f};
  auto out = dsp::normalize_peak(w);
  CHECK(out.samples[0] == 1.0f);
  CHECK(out.samples[1] == -0.5f);

  w.samples.assign(100, 0.0f);
  out = dsp::normalize_peak(w);
  for (float v : out.samples) CHECK(v == 0.0f);

  util::Rng rng(6);
  w.samples.resize(777);
  for (auto& v : w.samples) v = rng.uniformf(-0.3f, 0.3f);
  out = dsp::normalize_peak(w);
  float peak = 0.f;
  for (float v : out.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == 1.0f);
}

TEST_CASE("mel scale and filterbank") {
  CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-9));
  CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
  CHECK(dsp::hz_to_mel(0.0) == 0.0);

  auto fb = dsp::mel_filterbank(512, 80, 16000, 50.0, 8000.0);
  REQUIRE(fb.size() == 80u * 257u);
  for (int m = 0; m < 80; ++m) {
    double row = 0.0;
    for (int k = 0; k < 257; ++k) row += fb[static_cast<size_t>(m) * 257 + k];
    CHECK(row > 0.0);
  }
  // coverage: every FFT bin in [fmin, fmax] touched by some filter
  for (int k = 0; k < 257; ++k) {
    const double f = k * 16000.0 / 512.0;
    if (f < 50.0 || f > 8000.0) continue;
    double col = 0.0;
    for (int m = 0; m < 80; ++m) col += fb[static_cast<size_t>(m) * 257 + k];
    CHECK(col > 0.0);
  }

  CHECK_THROWS_AS(dsp::mel_filterbank(512, 1, 16000, 50, 8000), util::InvalidInput);
  CHECK_THROWS_AS(dsp::mel_filterbank(512, 80, 16000, 9000, 8000), util::InvalidInput);
}

TEST_CASE("log_mel_spectrogram shape, z-score and tone localization") {
  auto w = tone(440.0, 0.8, 16000, 32000);
  auto spec = dsp::log_mel_spectrogram(w);
  CHECK(spec.n_mels == 80);
  CHECK(spec.frames == 198);

  double mean = 0.0;
  for (float v : spec.values) mean += v;
  mean /= static_cast<double>(spec.values.size());
  double var = 0.0;
  for (float v : spec.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(spec.values.size());
  CHECK(std::abs(mean) < 1e-5);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-5);

  // pre-z-score argmax bin vs nearest filter center
  auto energies = dsp::mel_energies(w, dsp::MelConfig{});
  std::vector<double> per_mel(80, 0.0);
  const int64_t frames = static_cast<int64_t>(energies.size()) / 80;
  for (int64_t t = 0; t < frames; ++t)
    for (int m = 0; m < 80; ++m) per_mel[static_cast<size_t>(m)] += energies[static_cast<size_t>(t) * 80 + m];
  const int argmax = static_cast<int>(std::max_element(per_mel.begin(), per_mel.end()) -
                                      per_mel.begin());
  auto centers = dsp::mel_filter_centers(80, 50.0, 8000.0);
  int nearest = 0;
  for (int m = 1; m < 80; ++m)
    if (std::abs(centers[static_cast<size_t>(m)] - 440.0) <
        std::abs(centers[static_cast<size_t>(nearest)] - 440.0))
      nearest = m;
  CHECK(argmax == nearest);

  dsp::Waveform empty;
  CHECK_THROWS_AS(dsp::log_mel_spectrogram(empty), util::InvalidInput);
}

TEST_CASE("mel energies match a direct DFT oracle on one frame") {
  util::Rng rng(9);
  dsp::Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(400);
  for (auto& v : w.samples) v = rng.uniformf(-1.f, 1.f);
  dsp::MelConfig cfg;
  cfg.clip_samples = 400;
  auto impl = dsp::mel_energies(w, cfg);
  auto oracle = oracle_logmel(w.samples, cfg, false);
  REQUIRE(impl.size() == oracle.size());
  for (size_t i = 0; i < impl.size(); ++i)
    CHECK(std::abs(impl[i] - oracle[i]) <= 1e-6 * std::max(1e-12, std::abs(oracle[i])));
}

TEST_CASE("log_mel_spectrogram matches the DFT oracle on short clips") {
  util::Rng rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    const int64_t n = rng.uniform_int(500, 4000);
    dsp::Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(static_cast<size_t>(n));
    for (auto& v : w.samples) v = rng.uniformf(-1.f, 1.f);
    dsp::MelConfig cfg;
    cfg.clip_samples = static_cast<int>(n);  // no padding: oracle the raw clip
    auto impl = dsp::log_mel_spectrogram(w, cfg);
    auto oracle = oracle_logmel(w.samples, cfg, true);
    const int64_t frames = impl.frames;
    for (int64_t t = 0; t < frames; ++t)
      for (int m = 0; m < 80; ++m) {
        const double o = oracle[static_cast<size_t>(t) * 80 + m];
        CHECK(std::abs(impl.at(m, static_cast<int>(t)) - o) <=
              1e-6 * std::max(1.0, std::abs(o)));
      }
  }
}

TEST_CASE("process_clip composition, silence and determinism") {
  util::Rng rng(12);
  auto m = make_multi(4, 64000, 32000);
  for (auto& v : m.samples) v = rng.uniformf(-0.5f, 0.5f);

  auto direct = dsp::process_clip(m);
  auto staged = dsp::log_mel_spectrogram(
      dsp::normalize_peak(dsp::decimate_to_16k(dsp::average_channels(m))));
  REQUIRE(direct.values.size() == staged.values.size());
  CHECK(std::memcmp(direct.values.data(), staged.values.data(),
                    direct.values.size() * sizeof(float)) == 0);

  auto again = dsp::process_clip(m);
  CHECK(std::memcmp(direct.values.data(), again.values.data(),
                    direct.values.size() * sizeof(float)) == 0);

  // silence hits the degenerate z-score guard
  auto silent = make_multi(4, 64000, 32000);
  auto spec = dsp::process_clip(silent);
  for (float v : spec.values) CHECK(v == 0.0f);

  // identical channels reduce to the single-channel pipeline
  auto t = tone(440.0, 0.5, 32000, 64000);
  auto m4 = make_multi(4, 64000, 32000);
  for (int c = 0; c < 4; ++c)
    std::copy(t.samples.begin(), t.samples.end(), m4.samples.begin() + c * 64000);
  auto from4 = dsp::process_clip(m4);
  auto from1 = dsp::log_mel_spectrogram(dsp::normalize_peak(dsp::decimate_to_16k(t)));
  for (size_t i = 0; i < from4.values.size(); ++i)
    CHECK(from4.values[i] == doctest::Approx(from1.values[i]).epsilon(1e-5));

  auto bad = make_multi(2, 64000, 32000);
  CHECK_THROWS_AS(dsp::process_clip(bad), util::InvalidInput);
}
