#pragma once

// Burst-level signal synthesis for binary PAM impulse-radio UWB:
// pulse shaping, multipath channel, matched receive filtering,
// differential encoding and noisy burst generation.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwbdet::waveform {

using Symbol = std::int8_t;           // strictly +1 / -1
using SymbolSeq = std::vector<Symbol>;

bool is_pm1(const SymbolSeq& s);

// Thrown when a synthesized receive pulse does not decay within one
// symbol period (relative tail energy above 1e-6).
struct IsiViolation : std::runtime_error {
  explicit IsiViolation(const std::string& what) : std::runtime_error(what) {}
};

// Sampled pulse, support starting at t = 0.
struct PulseTemplate {
  std::vector<double> samples;
  double sample_rate = 0.0;     // Hz
  double center_freq = 0.0;     // Hz
  double bandwidth_10db = 0.0;  // Hz

  double dt() const { return 1.0 / sample_rate; }
  double energy() const;  // sum(s^2) * dt
};

struct ChannelRealization {
  std::vector<double> tap_delays;  // seconds, nondecreasing, >= 0
  std::vector<double> tap_gains;
  std::uint64_t rng_seed = 0;

  double energy() const;  // sum of squared gains
  void validate(double max_excess_delay_s) const;
};

// Saleh-Valenzuela style cluster/ray channel generator. The cm2()
// defaults approximate a residential NLOS profile (rms delay spread
// around 14 ns); they are documented defaults, not a certified model.
struct SvParams {
  double cluster_rate_hz = 0.1e9;     // cluster arrival rate (1/s)
  double ray_rate_hz = 0.4e9;         // ray arrival rate within a cluster
  double cluster_decay_s = 18e-9;     // cluster power decay constant
  double ray_decay_s = 8e-9;          // ray power decay constant
  double max_excess_delay_s = 60e-9;  // taps beyond this are dropped
  double target_rms_delay_s = 14e-9;  // documentation target used by tests

  static SvParams cm2() { return SvParams{}; }
};

struct BurstConfig {
  int n_symbols = 0;              // N information symbols per burst
  double symbol_period = 0.0;     // T, seconds
  double integration_time = 0.0;  // Ti <= T, seconds
  int l_branches = 1;             // L, 1 <= L <= N
  double noise_psd = 0.0;         // N0; two-sided density is N0/2 (W/Hz)
  int samples_per_symbol = 0;

  double dt() const { return symbol_period / samples_per_symbol; }
  void validate() const;
};

// sin(2*pi*fc*t) * Gaussian envelope, odd-symmetric and DC-free; sigma is
// chosen so the -10 dB power bandwidth equals bandwidth_10db_hz.
PulseTemplate gaussian_monocycle(double center_freq_hz, double bandwidth_10db_hz,
                                 double sample_rate_hz);

// Time-reversed transmit pulse, normalized to unit energy.
PulseTemplate matched_filter(const PulseTemplate& tx);

ChannelRealization single_tap_channel();
ChannelRealization generate_channel(const SvParams& params, std::uint64_t seed);

// One tap per line, "delay_seconds<TAB>gain", '#' starts a comment.
// Taps are sorted by delay and normalized to unit energy.
ChannelRealization load_channel_file(const std::string& path);

// p = tx (*) channel (*) matched filter, renormalized to unit energy and
// truncated to one symbol period. Throws IsiViolation if more than 1e-6
// of the pulse energy falls outside [0, T).
PulseTemplate synthesize_receive_pulse(const PulseTemplate& tx,
                                       const ChannelRealization& ch,
                                       double symbol_period_s);

// b_0 = b0, b_i = b_{i-1} * a_i.
SymbolSeq differential_encode(const SymbolSeq& a, Symbol b0);
// a_i = b_i * b_{i-1}; invariant under a global sign flip of b.
SymbolSeq differential_decode(const SymbolSeq& b);

// r[k] = sum_i b_i p(k dt - i T) + n, with n white Gaussian noise of
// two-sided PSD N0/2 passed through rx_filter. rx_filter may be null
// only when cfg.noise_psd == 0. Length is (N+1) * samples_per_symbol.
std::vector<double> synthesize_burst(const SymbolSeq& b, const PulseTemplate& p,
                                     const PulseTemplate* rx_filter,
                                     const BurstConfig& cfg, std::uint64_t seed);

// Energy of p captured by an integration window [0, ti).
double captured_energy(const PulseTemplate& p, double ti_s);

}  // namespace uwbdet::waveform
