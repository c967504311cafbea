#pragma once

// L-branch autocorrelation receiver front-end: correlation statistics
// Z_{l,i} as symmetric block matrices or a banded stream, plus an opt-in
// statistic-level Gaussian surrogate that bypasses waveform synthesis.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uwbdet/waveform.hpp"

namespace uwbdet::acr {

using waveform::BurstConfig;
using waveform::PulseTemplate;
using waveform::SymbolSeq;

// Symmetric matrix of correlation statistics with forced zero diagonal.
class ZMatrix {
 public:
  explicit ZMatrix(int order);

  // Validates symmetry (1e-9 relative) and forces the diagonal to zero.
  static ZMatrix from_full(const std::vector<std::vector<double>>& rows);

  int order() const { return order_; }         // M + 1
  int block_len() const { return order_ - 1; } // M

  double at(int l, int i) const { return e_[static_cast<std::size_t>(l) * order_ + i]; }
  // Sets (l, i) and (i, l); rejects nonzero diagonal writes.
  void set(int l, int i, double v);

  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static ZMatrix load(std::istream& is);
  static ZMatrix load(const std::string& path);

 private:
  int order_;
  std::vector<double> e_;
};

// Banded statistics Z_{l,i} for i = 1..N, max(0, i-L) <= l < i.
class ZBand {
 public:
  ZBand(int n_symbols, int bandwidth);

  int n_symbols() const { return n_; }
  int bandwidth() const { return bw_; }
  std::size_t count() const { return entries_.size(); }

  int lo(int i) const { return i > bw_ ? i - bw_ : 0; }
  double at(int l, int i) const { return entries_[index(l, i)]; }
  void set(int l, int i, double v) { entries_[index(l, i)] = v; }

 private:
  std::size_t index(int l, int i) const;
  int n_, bw_;
  std::vector<std::size_t> offset_;  // offset_[i] = first entry of symbol i
  std::vector<double> entries_;
};

// Z_{i-lag,i} = integral over [0, Ti) of r(t+(i-lag)T) r(t+iT) dt,
// rectangle rule at the simulation rate (Ti truncated to whole samples).
double acr_correlate(std::span<const double> r, int i, int lag, const BurstConfig& cfg);

// All pairwise statistics of the block [block_start, block_start+block_len].
ZMatrix build_block_z(std::span<const double> r, int block_start, int block_len,
                      const BurstConfig& cfg);

// Banded statistics for the whole burst. bandwidth <= 0 means cfg.l_branches.
ZBand build_z_band(std::span<const double> r, const BurstConfig& cfg, int bandwidth = 0);

// Views of existing statistics.
ZMatrix extract_block(const ZBand& band, int start, int len);
ZBand band_from_matrix(const ZMatrix& z, int bandwidth);

// Block starts/lengths covering N symbols with blocks of L information
// symbols overlapping by one transmit symbol; the final block may be short.
std::vector<std::pair<int, int>> block_layout(int n_symbols, int l);

// Gaussian surrogate of the ACR output: Z = b_l b_i E_cap + eta with
// eta ~ N(0, var_sn + var_nn), entries drawn independently. Approximate
// (real entries sharing a symbol window are correlated); moments are
// validated against waveform-level statistics in the tests.
struct DirectZParams {
  double e_cap = 1.0;
  double var_sn = 0.0;
  double var_nn = 0.0;

  // Textbook decomposition: var_sn = N0 * E_cap,
  // var_nn = (N0/2)^2 * 2 * B * Ti for an effective noise bandwidth B.
  static DirectZParams from_bandwidth(double e_cap, double n0, double rx_bandwidth_hz,
                                      double ti_s);
  // Same decomposition with both terms evaluated numerically from the
  // receive pulse and the receive filter autocorrelation.
  static DirectZParams from_templates(const PulseTemplate& rx_pulse,
                                      const PulseTemplate& rx_filter, double n0,
                                      double ti_s);
};

// Effective noise bandwidth in the 2*B*Ti convention: using it in
// var_nn = (N0/2)^2 * 2 * B_eff * Ti reproduces the exact filtered-noise
// product variance for this filter.
double effective_noise_bandwidth(const PulseTemplate& rx_filter);

ZMatrix model_z_matrix(const SymbolSeq& b_block, const DirectZParams& params,
                       std::uint64_t seed);
ZBand model_z_band(const SymbolSeq& b_burst, int bandwidth, const DirectZParams& params,
                   std::uint64_t seed);

}  // namespace uwbdet::acr
