#include "uwbdet/acr.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace uwbdet::acr {

ZMatrix::ZMatrix(int order) : order_(order) {
  if (order < 2) throw std::invalid_argument("ZMatrix: order must be >= 2");
  e_.assign(static_cast<std::size_t>(order) * order, 0.0);
}

ZMatrix ZMatrix::from_full(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  ZMatrix z(n);
  double scale = 0.0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("ZMatrix: not square");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("ZMatrix: non-finite entry");
      scale = std::max(scale, std::abs(v));
    }
  }
  const double tol = 1e-9 * std::max(scale, 1.0);
  for (int l = 0; l < n; ++l)
    for (int i = l + 1; i < n; ++i) {
      if (std::abs(rows[l][i] - rows[i][l]) > tol)
        throw std::invalid_argument("ZMatrix: not symmetric");
      z.set(l, i, rows[l][i]);
    }
  return z;  // diagonal forced to zero; it does not influence any decision
}

void ZMatrix::set(int l, int i, double v) {
  if (l < 0 || i < 0 || l >= order_ || i >= order_)
    throw std::out_of_range("ZMatrix: index out of range");
  if (l == i) {
    if (v != 0.0) throw std::invalid_argument("ZMatrix: diagonal is fixed at zero");
    return;
  }
  if (!std::isfinite(v)) throw std::invalid_argument("ZMatrix: non-finite entry");
  e_[static_cast<std::size_t>(l) * order_ + i] = v;
  e_[static_cast<std::size_t>(i) * order_ + l] = v;
}

void ZMatrix::save(std::ostream& os) const {
  os << std::setprecision(17);
  for (int l = 0; l < order_; ++l) {
    for (int i = 0; i < order_; ++i) {
      if (i) os << ' ';
      os << at(l, i);
    }
    os << '\n';
  }
}

void ZMatrix::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ZMatrix: cannot open " + path);
  save(out);
}

ZMatrix ZMatrix::load(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("ZMatrix: empty input");
  return from_full(rows);
}

ZMatrix ZMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ZMatrix: cannot open " + path);
  return load(in);
}

ZBand::ZBand(int n_symbols, int bandwidth) : n_(n_symbols), bw_(bandwidth) {
  if (n_symbols < 1) throw std::invalid_argument("ZBand: n_symbols must be >= 1");
  if (bandwidth < 1 || bandwidth > n_symbols)
    throw std::invalid_argument("ZBand: need 1 <= bandwidth <= n_symbols");
  offset_.assign(static_cast<std::size_t>(n_) + 1, 0);
  std::size_t total = 0;
  for (int i = 1; i <= n_; ++i) {
    offset_[i] = total;
    total += static_cast<std::size_t>(std::min(i, bw_));
  }
  entries_.assign(total, 0.0);
}

std::size_t ZBand::index(int l, int i) const {
  if (i < 1 || i > n_ || l < lo(i) || l >= i)
    throw std::out_of_range("ZBand: index out of range");
  return offset_[i] + static_cast<std::size_t>(l - lo(i));
}

double acr_correlate(std::span<const double> r, int i, int lag, const BurstConfig& cfg) {
  if (lag < 1 || i - lag < 0 || i > cfg.n_symbols)
    throw std::out_of_range("acr_correlate: symbol/lag out of range");
  const int sps = cfg.samples_per_symbol;
  const double dt = cfg.dt();
  // Ti truncated to whole samples of the simulation grid.
  const auto k_int = static_cast<std::size_t>(cfg.integration_time / dt + 1e-9);
  const std::size_t a = static_cast<std::size_t>(i - lag) * sps;
  const std::size_t b = static_cast<std::size_t>(i) * sps;
  if (b + k_int > r.size()) throw std::out_of_range("acr_correlate: burst too short");
  double acc = 0.0;
  for (std::size_t k = 0; k < k_int; ++k) acc += r[a + k] * r[b + k];
  return acc * dt;
}

ZMatrix build_block_z(std::span<const double> r, int block_start, int block_len,
                      const BurstConfig& cfg) {
  if (block_len < 1) throw std::invalid_argument("build_block_z: empty block");
  ZMatrix z(block_len + 1);
  for (int a = 0; a < block_len; ++a)
    for (int b = a + 1; b <= block_len; ++b)
      z.set(a, b, acr_correlate(r, block_start + b, b - a, cfg));
  return z;
}

ZBand build_z_band(std::span<const double> r, const BurstConfig& cfg, int bandwidth) {
  const int bw = bandwidth > 0 ? bandwidth : cfg.l_branches;
  ZBand band(cfg.n_symbols, bw);
  for (int i = 1; i <= cfg.n_symbols; ++i)
    for (int l = band.lo(i); l < i; ++l)
      band.set(l, i, acr_correlate(r, i, i - l, cfg));
  return band;
}

ZMatrix extract_block(const ZBand& band, int start, int len) {
  if (start < 0 || len < 1 || start + len > band.n_symbols())
    throw std::out_of_range("extract_block: block outside burst");
  if (len > band.bandwidth())
    throw std::invalid_argument("extract_block: block wider than the band");
  ZMatrix z(len + 1);
  for (int a = 0; a < len; ++a)
    for (int b = a + 1; b <= len; ++b) z.set(a, b, band.at(start + a, start + b));
  return z;
}

ZBand band_from_matrix(const ZMatrix& z, int bandwidth) {
  const int n = z.block_len();
  ZBand band(n, bandwidth);
  for (int i = 1; i <= n; ++i)
    for (int l = band.lo(i); l < i; ++l) band.set(l, i, z.at(l, i));
  return band;
}

std::vector<std::pair<int, int>> block_layout(int n_symbols, int l) {
  if (n_symbols < 1 || l < 1 || l > n_symbols)
    throw std::invalid_argument("block_layout: need 1 <= l <= n_symbols");
  std::vector<std::pair<int, int>> blocks;
  for (int start = 0; start < n_symbols; start += l)
    blocks.emplace_back(start, std::min(l, n_symbols - start));
  return blocks;
}

DirectZParams DirectZParams::from_bandwidth(double e_cap, double n0,
                                            double rx_bandwidth_hz, double ti_s) {
  if (e_cap <= 0.0 || n0 < 0.0 || rx_bandwidth_hz <= 0.0 || ti_s <= 0.0)
    throw std::invalid_argument("DirectZParams: non-positive parameter");
  DirectZParams p;
  p.e_cap = e_cap;
  p.var_sn = n0 * e_cap;
  p.var_nn = (n0 / 2.0) * (n0 / 2.0) * 2.0 * rx_bandwidth_hz * ti_s;
  return p;
}

namespace {

// Raw sample autocorrelation S_m = sum_j h_j h_{j+m}.
std::vector<double> sample_autocorr(const std::vector<double>& h) {
  std::vector<double> s(h.size(), 0.0);
  for (std::size_t m = 0; m < h.size(); ++m)
    for (std::size_t j = 0; j + m < h.size(); ++j) s[m] += h[j] * h[j + m];
  return s;
}

}  // namespace

// Assumes the unity-peak-gain receive filter produced by matched_filter;
// the value then has the usual meaning of a noise bandwidth in Hz.
double effective_noise_bandwidth(const PulseTemplate& rx_filter) {
  const double dt = rx_filter.dt();
  const auto s = sample_autocorr(rx_filter.samples);
  double sum_sq = s[0] * s[0];
  for (std::size_t m = 1; m < s.size(); ++m) sum_sq += 2.0 * s[m] * s[m];
  // var_nn = (N0/2)^2 dt^4 K sum_m S_m^2 == (N0/2)^2 * 2 * B_eff * Ti
  return dt * dt * dt * sum_sq / 2.0;
}

DirectZParams DirectZParams::from_templates(const PulseTemplate& rx_pulse,
                                            const PulseTemplate& rx_filter, double n0,
                                            double ti_s) {
  if (n0 < 0.0 || ti_s <= 0.0)
    throw std::invalid_argument("DirectZParams: non-positive parameter");
  const double dt = rx_pulse.dt();
  const auto k_int = static_cast<std::size_t>(ti_s / dt + 1e-9);
  const auto& p = rx_pulse.samples;
  const auto& h = rx_filter.samples;
  const std::size_t kp = std::min(k_int, p.size());

  DirectZParams out;
  out.e_cap = waveform::captured_energy(rx_pulse, ti_s);

  // E[n_k n_{k+m}] = (N0/2) dt S_m with S the raw filter autocorrelation.
  const auto s = sample_autocorr(h);
  double sum_s_sq = s[0] * s[0];
  for (std::size_t m = 1; m < s.size(); ++m) sum_s_sq += 2.0 * s[m] * s[m];
  out.var_nn = (n0 / 2.0) * (n0 / 2.0) * dt * dt * dt * dt *
               static_cast<double>(k_int) * sum_s_sq;

  // Two independent signal x noise cross terms inside the window.
  double quad = 0.0;
  for (std::size_t k = 0; k < kp; ++k) {
    double inner = p[k] * s[0];
    for (std::size_t m = 1; m < s.size(); ++m) {
      if (k >= m) inner += p[k - m] * s[m];
      if (k + m < kp) inner += p[k + m] * s[m];
    }
    quad += p[k] * inner;
  }
  out.var_sn = n0 * dt * dt * dt * quad;
  return out;
}

namespace {

double draw_entry(double e_cap, int bl, int bi, double sigma,
                  std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  double v = static_cast<double>(bl) * bi * e_cap;
  if (sigma > 0.0) v += sigma * normal(rng);
  return v;
}

}  // namespace

ZMatrix model_z_matrix(const SymbolSeq& b_block, const DirectZParams& params,
                       std::uint64_t seed) {
  if (!waveform::is_pm1(b_block) || b_block.size() < 2)
    throw std::invalid_argument("model_z_matrix: need a +/-1 block of length >= 2");
  if (params.var_sn < 0.0 || params.var_nn < 0.0)
    throw std::invalid_argument("model_z_matrix: negative variance");
  const int m = static_cast<int>(b_block.size()) - 1;
  const double sigma = std::sqrt(params.var_sn + params.var_nn);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ZMatrix z(m + 1);
  for (int l = 0; l < m; ++l)
    for (int i = l + 1; i <= m; ++i)
      z.set(l, i, draw_entry(params.e_cap, b_block[l], b_block[i], sigma, rng, normal));
  return z;
}

ZBand model_z_band(const SymbolSeq& b_burst, int bandwidth, const DirectZParams& params,
                   std::uint64_t seed) {
  if (!waveform::is_pm1(b_burst) || b_burst.size() < 2)
    throw std::invalid_argument("model_z_band: need a +/-1 burst of length >= 2");
  if (params.var_sn < 0.0 || params.var_nn < 0.0)
    throw std::invalid_argument("model_z_band: negative variance");
  const int n = static_cast<int>(b_burst.size()) - 1;
  const double sigma = std::sqrt(params.var_sn + params.var_nn);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ZBand band(n, bandwidth);
  for (int i = 1; i <= n; ++i)
    for (int l = band.lo(i); l < i; ++l)
      band.set(l, i, draw_entry(params.e_cap, b_burst[l], b_burst[i], sigma, rng, normal));
  return band;
}

}  // namespace uwbdet::acr
