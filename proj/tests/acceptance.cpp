// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier Monte Carlo settings than the unit tests; the
// full run targets a desktop-class machine in well under half an hour.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "uwbdet/acr.hpp"
#include "uwbdet/complexity.hpp"
#include "uwbdet/detectors.hpp"
#include "uwbdet/harness.hpp"
#include "uwbdet/waveform.hpp"

using namespace uwbdet;
using namespace uwbdet::detectors;
namespace hn = uwbdet::harness;
namespace wf = uwbdet::waveform;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const DetectorOptions kAllCombos[] = {
    {true, InitialRadius::kInfinite, true},   {true, InitialRadius::kInfinite, false},
    {true, InitialRadius::kDdMetric, true},   {true, InitialRadius::kDdMetric, false},
    {false, InitialRadius::kInfinite, true},  {false, InitialRadius::kInfinite, false},
    {false, InitialRadius::kDdMetric, true},  {false, InitialRadius::kDdMetric, false},
};

bool sd_matches_oracle(const acr::ZMatrix& z, Outcome& out, const char* what) {
  const auto bf = msdd_bruteforce(z);
  for (const auto& opts : kAllCombos) {
    const auto tr = msdd_sd(z, opts);
    if (tr.best_metric != bf.metric || block_metric(z, tr.best_sequence) != bf.metric) {
      out.fail(std::string(what) + ": SD metric " + fmt(tr.best_metric) +
               " != oracle " + fmt(bf.metric));
      return false;
    }
  }
  return true;
}

// 1. Oracle optimality of the SD under all option combinations.
Outcome criterion1() {
  Outcome out;
  std::mt19937_64 rng(101);
  for (int m = 2; m <= 8 && out.pass; ++m)
    for (int t = 0; t < 10000; ++t)
      if (!sd_matches_oracle(testutil::random_z(m + 1, rng), out, "random")) break;

  std::uniform_real_distribution<double> mag(0.05, 2.0);
  for (int m = 2; m <= 4 && out.pass; ++m) {
    const int pairs = m * (m + 1) / 2;
    for (std::uint32_t pattern = 0; pattern < (1u << pairs) && out.pass; ++pattern)
      for (int rep = 0; rep < 3; ++rep) {
        acr::ZMatrix z(m + 1);
        int bit = 0;
        for (int l = 0; l < m; ++l)
          for (int i = l + 1; i <= m; ++i, ++bit)
            z.set(l, i, ((pattern >> bit) & 1u) ? -mag(rng) : mag(rng));
        if (!sd_matches_oracle(z, out, "sign-pattern")) break;
      }
  }
  if (out.pass)
    out.note("7e4 random + exhaustive sign patterns (M<=4), 8 option combos each");
  return out;
}

// 2. Bit-exact detector identities.
Outcome criterion2() {
  Outcome out;
  std::mt19937_64 rng(202);
  const int trials = 10000;

  for (int t = 0; t < trials && out.pass; ++t) {
    const auto z = testutil::random_z(3, rng);
    if (sbdfdd(z) != msdd_bruteforce(z).seq) out.fail("sbdfdd != brute force at M=2");
  }
  for (int t = 0; t < trials && out.pass; ++t) {
    const int m = 2 + static_cast<int>(rng() % 7);
    const auto z = testutil::random_z(m + 1, rng);
    const auto leaf = sd_search(z, std::numeric_limits<double>::infinity());
    if (leaf.best_sequence != bdfdd(z)) out.fail("first SD leaf != bdfdd");
  }
  for (int t = 0; t < trials && out.pass; ++t) {
    const int n = 2 + static_cast<int>(rng() % 11);
    const auto z = testutil::random_z(n + 1, rng);
    if (cdfdd(acr::band_from_matrix(z, n), n) != bdfdd(z))
      out.fail("cdfdd(L=N) != bdfdd");
  }
  for (int t = 0; t < trials && out.pass; ++t) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const auto z = testutil::random_z(n + 1, rng);
    if (viterbi(acr::band_from_matrix(z, n), n) != inse_bruteforce(z))
      out.fail("viterbi(L=N) != inse_bruteforce");
  }
  for (int t = 0; t < trials && out.pass; ++t) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const auto band = testutil::random_band(n, 1, rng);
    const auto ref = dd(band);
    for (const auto& name : all_kind_names()) {
      const auto kind = *kind_from_name(name);
      if (kind == DetectorKind::kInse && n != 1) continue;
      if (detect_burst(band, kind, 1) != ref) {
        out.fail(name + std::string(" != dd at L=1"));
        break;
      }
    }
  }
  if (out.pass) out.note("1e4 instances per identity, bit-exact");
  return out;
}

// 3. Closed-form add counts, exact for L in 2..16.
Outcome criterion3() {
  Outcome out;
  std::mt19937_64 rng(303);
  for (int l = 2; l <= 16 && out.pass; ++l) {
    const auto lu = static_cast<std::uint64_t>(l);
    const auto z = testutil::random_z(l + 1, rng);
    complexity::AddCounter cb, cs, ci;
    bdfdd(z, &cb);
    sbdfdd(z, &cs);
    dd_initial_radius(z, &ci);
    if (cb.adds != lu * (l - 1) / 2) out.fail("bdfdd adds off at L=" + std::to_string(l));
    if (cs.adds != cb.adds) out.fail("sbdfdd adds differ from bdfdd at L=" + std::to_string(l));
    if (ci.adds != lu * (l + 1) - 1)
      out.fail("initial-radius adds off at L=" + std::to_string(l));

    std::vector<std::uint32_t> per_symbol;
    cdfdd(testutil::random_band(3 * l, l, rng), l, nullptr, &per_symbol);
    for (int i = l; i < 3 * l; ++i)
      if (per_symbol[i] != static_cast<std::uint32_t>(l - 1)) {
        out.fail("cdfdd steady-state adds off at L=" + std::to_string(l));
        break;
      }

    auto b = testutil::random_pm1(l + 1, rng);
    b[0] = 1;
    const auto first_leaf_stop =
        msdd_sd(testutil::noiseless_z(b, 1.0), {true, InitialRadius::kInfinite, false});
    if (first_leaf_stop.adds != lu * (l + 1) - 1 ||
        first_leaf_stop.terminated_by != SdTermination::kStoppingRadius)
      out.fail("SD best case not L(L+1)-1 at L=" + std::to_string(l));

    const std::uint64_t bound = lu << (l + 1);
    for (int t = 0; t < 200; ++t) {
      const auto tr = msdd_sd(testutil::random_z(l + 1, rng),
                              {false, InitialRadius::kInfinite, false});
      if (tr.adds > bound) {
        out.fail("SD worst case above L*2^(L+1) at L=" + std::to_string(l));
        break;
      }
    }
  }
  if (out.pass) out.note("bdfdd/sbdfdd, cdfdd, SD best case, SD bound, initial radius");
  return out;
}

// Waveform-level block statistics at 10 dB, L = 10 (shared by criteria 4/5).
std::vector<acr::ZMatrix> waveform_blocks_10db(int bursts) {
  const auto tx = wf::gaussian_monocycle(2.25e9, 3.3e9, 2.0e10);
  const auto h = wf::matched_filter(tx);
  const auto sv = wf::SvParams::cm2();

  wf::BurstConfig bc;
  bc.n_symbols = 100;
  bc.symbol_period = 80e-9;
  bc.integration_time = 30e-9;
  bc.l_branches = 10;
  bc.noise_psd = std::pow(10.0, -1.0);  // 10 dB, Eb = 1
  bc.samples_per_symbol = 1600;

  std::vector<acr::ZMatrix> blocks;
  blocks.reserve(static_cast<std::size_t>(bursts) * 10);
  std::mt19937_64 rng(404);
  for (int t = 0; t < bursts; ++t) {
    const auto ch = wf::generate_channel(sv, hn::split_seed(404, 1, 0, t));
    const auto p = wf::synthesize_receive_pulse(tx, ch, bc.symbol_period);
    const auto a = testutil::random_pm1(bc.n_symbols, rng);
    const auto b = wf::differential_encode(a, 1);
    const auto r = wf::synthesize_burst(b, p, &h, bc, hn::split_seed(404, 3, 0, t));
    const auto band = acr::build_z_band(r, bc);
    for (const auto& [start, len] : acr::block_layout(bc.n_symbols, bc.l_branches))
      blocks.push_back(acr::extract_block(band, start, len));
  }
  return blocks;
}

// 4. The stopping radius preserves the result and saves work.
Outcome criterion4(const std::vector<acr::ZMatrix>& blocks) {
  Outcome out;
  std::mt19937_64 rng(505);
  for (int t = 0; t < 100000 && out.pass; ++t) {
    const int m = 2 + static_cast<int>(rng() % 7);
    const auto z = testutil::random_z(m + 1, rng);
    const auto with = msdd_sd(z, {true, InitialRadius::kInfinite, true});
    const auto without = msdd_sd(z, {false, InitialRadius::kInfinite, true});
    if (with.best_sequence != without.best_sequence || with.best_metric != without.best_metric)
      out.fail("stopping radius changed the decision");
  }

  double adds_with = 0.0, adds_without = 0.0;
  for (const auto& z : blocks) {
    adds_with += static_cast<double>(msdd_sd(z, {true, InitialRadius::kInfinite, true}).adds);
    adds_without +=
        static_cast<double>(msdd_sd(z, {false, InitialRadius::kInfinite, true}).adds);
  }
  adds_with /= static_cast<double>(blocks.size());
  adds_without /= static_cast<double>(blocks.size());
  if (!(adds_with < adds_without))
    out.fail("stopping radius did not reduce mean adds (" + fmt(adds_with) + " vs " +
             fmt(adds_without) + ")");
  if (out.pass)
    out.note("1e5 random blocks unchanged; mean adds/block " + fmt(adds_with) + " < " +
             fmt(adds_without) + " on " + std::to_string(blocks.size()) +
             " waveform blocks");
  return out;
}

// 5. Complexity ordering of the SD acceleration techniques at 10 dB, L = 10.
Outcome criterion5(const std::vector<acr::ZMatrix>& blocks) {
  Outcome out;
  const DetectorOptions sorted{true, InitialRadius::kInfinite, true};
  const DetectorOptions unsorted{true, InitialRadius::kInfinite, false};
  const DetectorOptions sorted_init{true, InitialRadius::kDdMetric, true};
  const DetectorOptions unsorted_init{true, InitialRadius::kDdMetric, false};

  double n = static_cast<double>(blocks.size());
  double m_s = 0, m_u = 0, m_si = 0, m_ui = 0, v_s = 0, v_u = 0;
  for (const auto& z : blocks) {
    const auto a_s = static_cast<double>(msdd_sd(z, sorted).adds);
    const auto a_u = static_cast<double>(msdd_sd(z, unsorted).adds);
    m_s += a_s;
    m_u += a_u;
    v_s += a_s * a_s;
    v_u += a_u * a_u;
    m_si += static_cast<double>(msdd_sd(z, sorted_init).adds);
    m_ui += static_cast<double>(msdd_sd(z, unsorted_init).adds);
  }
  m_s /= n, m_u /= n, m_si /= n, m_ui /= n;
  v_s = v_s / n - m_s * m_s;
  v_u = v_u / n - m_u * m_u;

  if (!(m_s < m_u))
    out.fail("sorted SD mean adds " + fmt(m_s) + " !< unsorted " + fmt(m_u));
  if (!(m_si > m_s))
    out.fail("DD initial radius did not increase sorted SD adds");
  if (!(m_ui > m_u))
    out.fail("DD initial radius did not increase unsorted SD adds");
  if (!(v_s < v_u))
    out.fail("sorted SD add variance " + fmt(v_s) + " !< unsorted " + fmt(v_u));
  if (out.pass)
    out.note("mean adds/block: sorted " + fmt(m_s) + " < unsorted " + fmt(m_u) +
             "; +dd-init " + fmt(m_si) + " / " + fmt(m_ui) + "; variance " + fmt(v_s) +
             " < " + fmt(v_u));
  return out;
}

// 6. BER behavior at desk scale (waveform level, documented channel model).
Outcome criterion6() {
  Outcome out;

  hn::ExperimentConfig cfg;
  cfg.channel = hn::ChannelSpec::parse("sv_cm2");
  cfg.ti_seconds = 30e-9;
  cfg.t_seconds = 80e-9;
  cfg.seed = 606;
  cfg.seed_set = true;
  cfg.min_errors = 200;

  // (a), (b): short bursts, L = N = 15.
  cfg.n_symbols = 15;
  cfg.l_branches = {15};
  cfg.detectors = {DetectorKind::kDd, DetectorKind::kBdfdd, DetectorKind::kSbdfdd};
  cfg.snr_db_list = {9, 10, 11, 12, 13, 14, 15, 16};
  cfg.max_bursts = 25000;
  const auto short_result = hn::run_sweep(cfg);
  const double dd_cross = hn::snr_at_ber(short_result.records, "dd", 15, 1e-3);
  const double sb_cross = hn::snr_at_ber(short_result.records, "sbdfdd", 15, 1e-3);
  const double b_cross = hn::snr_at_ber(short_result.records, "bdfdd", 15, 1e-3);
  if (std::isnan(dd_cross) || std::isnan(sb_cross) || std::isnan(b_cross)) {
    out.fail("a 1e-3 crossing was not bracketed by the SNR grid");
  } else {
    const double gain_sorted = dd_cross - sb_cross;
    const double gain_unsorted = dd_cross - b_cross;
    if (!(gain_sorted >= 3.0))
      out.fail("(a) sorted DF-DD gain " + fmt(gain_sorted) + " dB < 3 dB");
    else
      out.note("(a) sorted DF-DD gain " + fmt(gain_sorted) + " dB");
    if (!(gain_unsorted < 1.0))
      out.fail("(b) unsorted DF-DD gain " + fmt(gain_unsorted) + " dB >= 1 dB");
    else
      out.note("(b) unsorted DF-DD gain " + fmt(gain_unsorted) + " dB");
  }

  // (c): long bursts at the 10 dB operating point.
  cfg.n_symbols = 100;
  cfg.l_branches = {10};
  cfg.detectors = {DetectorKind::kDd, DetectorKind::kMsdd, DetectorKind::kVa,
                   DetectorKind::kSbdfdd};
  cfg.snr_db_list = {10};
  cfg.max_bursts = 10000;
  const auto long_result = hn::run_sweep(cfg);
  double ber_dd = 0, ber_msdd = 0, ber_va = 0, ber_sb = 0;
  for (const auto& r : long_result.records) {
    if (r.detector == "dd") ber_dd = r.ber;
    if (r.detector == "msdd") ber_msdd = r.ber;
    if (r.detector == "va") ber_va = r.ber;
    if (r.detector == "sbdfdd") ber_sb = r.ber;
  }
  if (!(ber_va <= ber_msdd && ber_msdd <= ber_dd))
    out.fail("(c) ordering BER(va) <= BER(msdd) <= BER(dd) violated: " + fmt(ber_va) +
             " / " + fmt(ber_msdd) + " / " + fmt(ber_dd));
  if (!(ber_sb <= 2.0 * ber_msdd && ber_msdd <= 2.0 * ber_sb))
    out.fail("(c) sbdfdd BER " + fmt(ber_sb) + " not within 2x of msdd " + fmt(ber_msdd));
  const double lo = std::pow(10.0, -3.5), hi = std::pow(10.0, -2.5);
  if (!(ber_msdd >= lo && ber_msdd <= hi))
    out.fail("(c) msdd BER at 10 dB " + fmt(ber_msdd) + " outside [" + fmt(lo) + ", " +
             fmt(hi) + "]");
  else
    out.note("(c) msdd 10 dB BER " + fmt(ber_msdd) + ", va " + fmt(ber_va) + ", dd " +
             fmt(ber_dd));
  return out;
}

// 7. Physical-layer sanity.
Outcome criterion7() {
  Outcome out;
  std::mt19937_64 rng(707);

  // Noiseless end-to-end recovery through the full waveform pipeline.
  const auto tx = wf::gaussian_monocycle(2.25e9, 3.3e9, 2.0e10);
  const auto sv = wf::SvParams::cm2();
  wf::BurstConfig bc;
  bc.n_symbols = 12;
  bc.symbol_period = 80e-9;
  bc.integration_time = 30e-9;
  bc.noise_psd = 0.0;
  bc.samples_per_symbol = 1600;
  for (int t = 0; t < 10 && out.pass; ++t) {
    const auto ch = wf::generate_channel(sv, 7000 + t);
    const auto p = wf::synthesize_receive_pulse(tx, ch, bc.symbol_period);
    const auto a = testutil::random_pm1(bc.n_symbols, rng);
    const auto b = wf::differential_encode(a, 1);
    for (int l : {1, 2, 3, 5, 12}) {
      bc.l_branches = l;
      const auto r = wf::synthesize_burst(b, p, nullptr, bc, 0);
      const auto band = acr::build_z_band(r, bc, bc.n_symbols);
      for (const auto& name : all_kind_names())
        if (detect_burst(band, *kind_from_name(name), l) != a) {
          out.fail("noiseless recovery failed for " + name + " at L=" + std::to_string(l));
          break;
        }
      if (!out.pass) break;
    }
  }

  for (int t = 0; t < 1000 && out.pass; ++t) {
    const int n = 1 + static_cast<int>(rng() % 256);
    const auto a = testutil::random_pm1(n, rng);
    auto b = wf::differential_encode(a, 1);
    if (wf::differential_decode(b) != a) out.fail("encode/decode roundtrip broke");
    for (auto& s : b) s = static_cast<wf::Symbol>(-s);
    if (wf::differential_decode(b) != a) out.fail("sign-flip invariance broke");
  }

  {
    acr::ZMatrix z(3);
    bool threw = false;
    try {
      z.set(1, 1, 1.0);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    if (!threw) out.fail("nonzero diagonal accepted");
    try {
      acr::ZMatrix::from_full({{0, 1, 2}, {1, 0, 3}, {2, 3.5, 0}});
      out.fail("asymmetric matrix accepted");
    } catch (const std::invalid_argument&) {
    }
  }

  for (double c : {1e-6, 3.7, 1e6}) {
    for (int t = 0; t < 100 && out.pass; ++t) {
      const int n = 6;
      const auto z = testutil::random_z(n + 1, rng);
      acr::ZMatrix zs(n + 1);
      for (int l = 0; l < n; ++l)
        for (int i = l + 1; i <= n; ++i) zs.set(l, i, c * z.at(l, i));
      const auto band = acr::band_from_matrix(z, n);
      const auto band_s = acr::band_from_matrix(zs, n);
      for (const auto& name : all_kind_names())
        if (detect_burst(band, *kind_from_name(name), 3) !=
            detect_burst(band_s, *kind_from_name(name), 3)) {
          out.fail("scale invariance broke for " + name + " at c=" + fmt(c));
          break;
        }
    }
  }
  if (out.pass) out.note("noiseless e2e, roundtrips, construction guards, z -> c z");
  return out;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Entry {
    const char* name;
    Outcome (*run)();
  };

  int failures = 0;
  const auto t0 = Clock::now();

  const auto report = [&](int id, const char* name, const Outcome& out) {
    std::printf("%s  criterion %d: %s%s%s\n", out.pass ? "PASS" : "FAIL", id, name,
                out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  };

  report(1, "oracle optimality of SD-based MSDD", criterion1());
  report(2, "detector identities (bit-exact)", criterion2());
  report(3, "complexity closed forms", criterion3());

  const auto blocks = waveform_blocks_10db(1200);  // 12000 blocks at 10 dB, L = 10
  report(4, "stopping-radius safety", criterion4(blocks));
  report(5, "complexity ordering of SD variants", criterion5(blocks));
  report(6, "BER behavior at desk scale", criterion6());
  report(7, "physical-layer sanity", criterion7());

  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - t0).count();
  std::printf("%s (%d/7 criteria, %lld s)\n", failures ? "FAILED" : "OK", 7 - failures,
              static_cast<long long>(secs));
  return failures ? 1 : 0;
}
