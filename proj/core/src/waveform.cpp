#include "uwbdet/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace uwbdet::waveform {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sum_sq(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

void normalize_energy(std::vector<double>& v, double dt) {
  const double e = sum_sq(v) * dt;
  if (e <= 0.0) throw std::invalid_argument("cannot normalize zero-energy pulse");
  const double s = 1.0 / std::sqrt(e);
  for (double& x : v) x *= s;
}

}  // namespace

bool is_pm1(const SymbolSeq& s) {
  return std::all_of(s.begin(), s.end(), [](Symbol x) { return x == 1 || x == -1; });
}

double PulseTemplate::energy() const { return sum_sq(samples) * dt(); }

double ChannelRealization::energy() const {
  double e = 0.0;
  for (double g : tap_gains) e += g * g;
  return e;
}

void ChannelRealization::validate(double max_excess_delay_s) const {
  if (tap_delays.size() != tap_gains.size() || tap_delays.empty())
    throw std::invalid_argument("channel: delay/gain size mismatch or empty");
  for (std::size_t k = 0; k < tap_delays.size(); ++k) {
    if (!(tap_delays[k] >= 0.0) || tap_delays[k] > max_excess_delay_s)
      throw std::invalid_argument("channel: tap delay out of range");
    if (k > 0 && tap_delays[k] < tap_delays[k - 1])
      throw std::invalid_argument("channel: tap delays not nondecreasing");
  }
  const double e = energy();
  if (std::abs(e - 1.0) > 1e-9)
    throw std::invalid_argument("channel: energy not normalized");
}

void BurstConfig::validate() const {
  if (n_symbols < 1) throw std::invalid_argument("burst: n_symbols must be >= 1");
  if (!(symbol_period > 0.0)) throw std::invalid_argument("burst: symbol_period must be > 0");
  if (!(integration_time > 0.0) || integration_time > symbol_period)
    throw std::invalid_argument("burst: need 0 < integration_time <= symbol_period");
  if (l_branches < 1 || l_branches > n_symbols)
    throw std::invalid_argument("burst: need 1 <= l_branches <= n_symbols");
  if (noise_psd < 0.0) throw std::invalid_argument("burst: noise_psd must be >= 0");
  if (samples_per_symbol < 2) throw std::invalid_argument("burst: samples_per_symbol too small");
}

PulseTemplate gaussian_monocycle(double center_freq_hz, double bandwidth_10db_hz,
                                 double sample_rate_hz) {
  if (!(center_freq_hz > 0.0) || !(bandwidth_10db_hz > 0.0))
    throw std::invalid_argument("monocycle: frequencies must be positive");
  if (sample_rate_hz < 4.0 * (center_freq_hz + bandwidth_10db_hz / 2.0))
    throw std::invalid_argument("monocycle: sample_rate below 4x occupied band");

  // |S(f)|^2 ~ exp(-4 pi^2 sigma^2 (f - fc)^2) drops 10 dB at |f - fc| = B/2.
  const double sigma = std::sqrt(std::log(10.0)) / (kPi * bandwidth_10db_hz);
  const double dt = 1.0 / sample_rate_hz;
  const int half = static_cast<int>(std::ceil(5.0 * sigma / dt));

  PulseTemplate p;
  p.sample_rate = sample_rate_hz;
  p.center_freq = center_freq_hz;
  p.bandwidth_10db = bandwidth_10db_hz;
  p.samples.resize(2 * half + 1);
  for (int k = 0; k <= 2 * half; ++k) {
    const double t = (k - half) * dt;
    p.samples[k] = std::sin(2.0 * kPi * center_freq_hz * t) *
                   std::exp(-t * t / (2.0 * sigma * sigma));
  }
  normalize_energy(p.samples, dt);
  return p;
}

PulseTemplate matched_filter(const PulseTemplate& tx) {
  PulseTemplate h = tx;
  std::reverse(h.samples.begin(), h.samples.end());
  // Gain convention: unity peak frequency-domain gain, so band-limited
  // noise keeps its in-band PSD of N0/2 and Eb/N0 is well defined.
  // Receive-pulse synthesis renormalizes, so only the noise path depends
  // on this scale. The spectral peak sits at the pulse center frequency.
  const double dt = h.dt();
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < h.samples.size(); ++k) {
    const double ph = 2.0 * kPi * h.center_freq * static_cast<double>(k) * dt;
    re += h.samples[k] * std::cos(ph);
    im -= h.samples[k] * std::sin(ph);
  }
  const double peak_gain = std::hypot(re, im) * dt;
  if (peak_gain <= 0.0) throw std::invalid_argument("matched filter: zero peak gain");
  for (double& x : h.samples) x /= peak_gain;
  return h;
}

ChannelRealization single_tap_channel() {
  ChannelRealization ch;
  ch.tap_delays = {0.0};
  ch.tap_gains = {1.0};
  ch.rng_seed = 0;
  return ch;
}

ChannelRealization generate_channel(const SvParams& params, std::uint64_t seed) {
  if (!(params.cluster_rate_hz > 0.0) || !(params.ray_rate_hz > 0.0) ||
      !(params.cluster_decay_s > 0.0) || !(params.ray_decay_s > 0.0) ||
      !(params.max_excess_delay_s > 0.0))
    throw std::invalid_argument("sv: rates, decay constants and delay cap must be positive");

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> cluster_gap(params.cluster_rate_hz);
  std::exponential_distribution<double> ray_gap(params.ray_rate_hz);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  std::vector<std::pair<double, double>> taps;
  double t_cluster = 0.0;  // first cluster arrives at zero excess delay
  while (t_cluster <= params.max_excess_delay_s) {
    double tau = 0.0;  // first ray at the cluster arrival
    while (t_cluster + tau <= params.max_excess_delay_s) {
      const double mean_power = std::exp(-t_cluster / params.cluster_decay_s) *
                                std::exp(-tau / params.ray_decay_s);
      taps.emplace_back(t_cluster + tau, std::sqrt(mean_power) * unit_normal(rng));
      tau += ray_gap(rng);
    }
    t_cluster += cluster_gap(rng);
  }

  std::sort(taps.begin(), taps.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  ChannelRealization ch;
  ch.rng_seed = seed;
  ch.tap_delays.reserve(taps.size());
  ch.tap_gains.reserve(taps.size());
  for (const auto& [d, g] : taps) {
    ch.tap_delays.push_back(d);
    ch.tap_gains.push_back(g);
  }
  const double e = ch.energy();
  if (e <= 0.0) return single_tap_channel();  // vanishing-probability fallback
  const double s = 1.0 / std::sqrt(e);
  for (double& g : ch.tap_gains) g *= s;
  return ch;
}

ChannelRealization load_channel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("channel file: cannot open " + path);
  std::vector<std::pair<double, double>> taps;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double d = 0.0, g = 0.0;
    if (!(ls >> d)) continue;  // blank or comment-only line
    if (!(ls >> g)) throw std::runtime_error("channel file: malformed line: " + line);
    if (d < 0.0) throw std::runtime_error("channel file: negative delay");
    taps.emplace_back(d, g);
  }
  if (taps.empty()) throw std::runtime_error("channel file: no taps in " + path);
  std::stable_sort(taps.begin(), taps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  ChannelRealization ch;
  for (const auto& [d, g] : taps) {
    ch.tap_delays.push_back(d);
    ch.tap_gains.push_back(g);
  }
  const double e = ch.energy();
  if (e <= 0.0) throw std::runtime_error("channel file: zero energy");
  const double s = 1.0 / std::sqrt(e);
  for (double& g : ch.tap_gains) g *= s;
  return ch;
}

PulseTemplate synthesize_receive_pulse(const PulseTemplate& tx,
                                       const ChannelRealization& ch,
                                       double symbol_period_s) {
  if (tx.samples.empty()) throw std::invalid_argument("receive pulse: empty transmit pulse");
  if (!(symbol_period_s > 0.0)) throw std::invalid_argument("receive pulse: bad symbol period");

  const double dt = tx.dt();
  const PulseTemplate h = matched_filter(tx);

  // Channel taps snapped to the sample grid.
  int max_idx = 0;
  for (double d : ch.tap_delays) max_idx = std::max(max_idx, static_cast<int>(std::lround(d / dt)));
  std::vector<double> after_channel(tx.samples.size() + max_idx, 0.0);
  for (std::size_t k = 0; k < ch.tap_delays.size(); ++k) {
    const int off = static_cast<int>(std::lround(ch.tap_delays[k] / dt));
    const double g = ch.tap_gains[k];
    for (std::size_t j = 0; j < tx.samples.size(); ++j)
      after_channel[off + j] += g * tx.samples[j];
  }

  std::vector<double> p(after_channel.size() + h.samples.size() - 1, 0.0);
  for (std::size_t j = 0; j < after_channel.size(); ++j) {
    const double a = after_channel[j];
    if (a == 0.0) continue;
    for (std::size_t k = 0; k < h.samples.size(); ++k) p[j + k] += a * h.samples[k];
  }
  normalize_energy(p, dt);

  const auto sps = static_cast<std::size_t>(std::lround(symbol_period_s / dt));
  double tail = 0.0;
  for (std::size_t k = sps; k < p.size(); ++k) tail += p[k] * p[k];
  tail *= dt;
  if (tail > 1e-6)
    throw IsiViolation("receive pulse support exceeds the symbol period (tail energy " +
                       std::to_string(tail) + ")");
  if (p.size() > sps) p.resize(sps);
  normalize_energy(p, dt);

  PulseTemplate out;
  out.samples = std::move(p);
  out.sample_rate = tx.sample_rate;
  out.center_freq = tx.center_freq;
  out.bandwidth_10db = tx.bandwidth_10db;
  return out;
}

SymbolSeq differential_encode(const SymbolSeq& a, Symbol b0) {
  if (!is_pm1(a)) throw std::invalid_argument("encode: symbols must be +/-1");
  if (b0 != 1 && b0 != -1) throw std::invalid_argument("encode: reference must be +/-1");
  SymbolSeq b(a.size() + 1);
  b[0] = b0;
  for (std::size_t i = 0; i < a.size(); ++i) b[i + 1] = static_cast<Symbol>(b[i] * a[i]);
  return b;
}

SymbolSeq differential_decode(const SymbolSeq& b) {
  if (b.size() < 2) throw std::invalid_argument("decode: need at least two transmit symbols");
  if (!is_pm1(b)) throw std::invalid_argument("decode: symbols must be +/-1");
  SymbolSeq a(b.size() - 1);
  for (std::size_t i = 1; i < b.size(); ++i) a[i - 1] = static_cast<Symbol>(b[i] * b[i - 1]);
  return a;
}

std::vector<double> synthesize_burst(const SymbolSeq& b, const PulseTemplate& p,
                                     const PulseTemplate* rx_filter,
                                     const BurstConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (static_cast<int>(b.size()) != cfg.n_symbols + 1)
    throw std::invalid_argument("burst: sequence length must be N+1");
  if (!is_pm1(b)) throw std::invalid_argument("burst: symbols must be +/-1");
  if (std::abs(p.energy() - 1.0) > 1e-6)
    throw std::invalid_argument("burst: receive pulse must have unit energy");
  const int sps = cfg.samples_per_symbol;
  if (static_cast<int>(p.samples.size()) > sps)
    throw std::invalid_argument("burst: pulse support exceeds the symbol period");

  const std::size_t len = static_cast<std::size_t>(b.size()) * sps;
  std::vector<double> r(len, 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double bi = b[i];
    double* dst = r.data() + i * sps;
    for (std::size_t k = 0; k < p.samples.size(); ++k) dst[k] += bi * p.samples[k];
  }

  if (cfg.noise_psd > 0.0) {
    if (rx_filter == nullptr || rx_filter->samples.empty())
      throw std::invalid_argument("burst: receive filter required for noisy synthesis");
    const auto& h = rx_filter->samples;
    const double dt = cfg.dt();
    const double sigma_w = std::sqrt(cfg.noise_psd / 2.0 / dt);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma_w);
    // Lead-in so every output sample sees a fully warmed-up filter.
    std::vector<double> w(len + h.size());
    for (double& x : w) x = normal(rng);
    for (std::size_t k = 0; k < len; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * w[k + h.size() - 1 - j];
      r[k] += acc * dt;
    }
  }
  return r;
}

double captured_energy(const PulseTemplate& p, double ti_s) {
  const double dt = p.dt();
  const auto n = std::min<std::size_t>(p.samples.size(),
                                       static_cast<std::size_t>(ti_s / dt + 1e-9));
  double e = 0.0;
  for (std::size_t k = 0; k < n; ++k) e += p.samples[k] * p.samples[k];
  return e * dt;
}

}  // namespace uwbdet::waveform
