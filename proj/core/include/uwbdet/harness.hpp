#pragma once

// Monte Carlo experiment driver: sweeps SNR / N / L / detector with
// paired bursts per operating point, estimates BER with an error-count
// stopping rule, collects complexity reports and emits CSV artifacts.

#include <cstdint>
#include <string>
#include <vector>

#include "uwbdet/complexity.hpp"
#include "uwbdet/detectors.hpp"
#include "uwbdet/waveform.hpp"

namespace uwbdet::harness {

enum class ChannelModelKind { kSvCm2, kSingleTap, kFile };

struct ChannelSpec {
  ChannelModelKind kind = ChannelModelKind::kSvCm2;
  std::string file_path;  // for kFile
  waveform::SvParams sv = waveform::SvParams::cm2();

  // "sv_cm2", "single_tap", anything else is a channel-trace file path.
  static ChannelSpec parse(const std::string& text);
  std::string to_string() const;
};

struct ExperimentConfig {
  std::vector<double> snr_db_list;            // Eb/N0 in dB; "inf" gives N0 = 0
  int n_symbols = 100;                        // N
  std::vector<int> l_branches;                // L values to sweep
  std::vector<detectors::DetectorKind> detectors;
  ChannelSpec channel;
  double ti_seconds = 30e-9;
  double t_seconds = 80e-9;
  double pulse_center_freq_hz = 2.25e9;
  double pulse_bandwidth_10db_hz = 3.3e9;
  double sample_rate_hz = 2.0e10;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int min_errors = 200;      // points should use >= 100 for ~10% relative accuracy
  std::uint64_t max_bursts = 1000000;

  void validate() const;

  // Flat "key = value" text, lists comma-separated, '#' comments.
  // Keys are exactly the field names above.
  static ExperimentConfig from_file(const std::string& path);
  void apply_key_value(const std::string& key, const std::string& value);
};

struct BerRecord {
  std::string detector;
  int l = 0;
  int n = 0;
  double snr_db = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  double ber = 0.0;
  double adds_per_symbol_mean = 0.0;
  double adds_per_symbol_max = 0.0;
};

struct SweepResult {
  std::vector<BerRecord> records;  // sorted by (detector, L, snr)
  std::vector<complexity::ComplexityReport> histograms;  // parallel to records
};

// Deterministic function of (config, seed): per-burst RNG streams are
// derived from the master seed via split_seed, bursts are processed in
// fixed batches (stopping decisions at batch boundaries only), and the
// merge is a burst-ordered sum, so the result is independent of the
// worker count. All detectors at one operating point consume identical
// bursts; each point stops a detector at min_errors or max_bursts.
SweepResult run_sweep(const ExperimentConfig& cfg);

// Number of bursts processed between stopping checks.
inline constexpr std::uint64_t kBurstBatch = 64;

// SplitMix64-based stream derivation: the master seed is advanced through
// the mix function once per key. Documented so externally generated
// reference runs can reproduce individual bursts.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t k1, std::uint64_t k2,
                         std::uint64_t k3);

// Worker cap from UWB_DETECT_THREADS (invalid or unset: hardware default).
int worker_count();

// Schema: detector,L,N,snr_db,bits,errors,ber,adds_per_symbol_mean,adds_per_symbol_max
// Rows ordered by (detector, L, snr) ascending.
void emit_csv(const std::vector<BerRecord>& records, const std::string& path);
void emit_csv(const std::vector<BerRecord>& records, std::ostream& os);
std::vector<BerRecord> parse_csv(const std::string& path);

// Log-linear interpolation of the SNR at which a detector's BER curve
// crosses `ber`; requires a bracketing pair of grid points.
double snr_at_ber(const std::vector<BerRecord>& records, const std::string& detector,
                  int l, double ber);

// Built-in verification suites (oracle equivalence, detector identities,
// closed-form add counts). Prints one line per suite; returns true when
// everything passes.
bool run_selftest(std::ostream& os);

// CLI entry point: subcommands sweep / trace / selftest.
int cli(int argc, char** argv);

}  // namespace uwbdet::harness
