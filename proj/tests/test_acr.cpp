#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "uwbdet/acr.hpp"
#include "uwbdet/waveform.hpp"

using namespace uwbdet::acr;
namespace wf = uwbdet::waveform;

namespace {

struct SmallScenario {
  wf::PulseTemplate tx, h, p;
  wf::BurstConfig cfg;

  explicit SmallScenario(int n, double n0, int l = 2) {
    tx = wf::gaussian_monocycle(2.25e9, 3.3e9, 2.0e10);
    h = wf::matched_filter(tx);
    p = wf::synthesize_receive_pulse(tx, wf::single_tap_channel(), 5e-9);
    cfg.n_symbols = n;
    cfg.symbol_period = 5e-9;
    cfg.integration_time = 3e-9;
    cfg.l_branches = std::min(l, n);
    cfg.noise_psd = n0;
    cfg.samples_per_symbol = 100;
  }

  std::vector<double> burst(const wf::SymbolSeq& b, std::uint64_t seed) const {
    return wf::synthesize_burst(b, p, cfg.noise_psd > 0 ? &h : nullptr, cfg, seed);
  }
};

}  // namespace

TEST_CASE("noiseless correlation equals signed captured energy") {
  SmallScenario sc(2, 0.0);
  const double e_cap = wf::captured_energy(sc.p, sc.cfg.integration_time);
  REQUIRE(e_cap > 0.0);
  const auto r = sc.burst({1, 1, -1}, 0);
  CHECK(acr_correlate(r, 1, 1, sc.cfg) == doctest::Approx(e_cap).epsilon(1e-12));
  CHECK(acr_correlate(r, 2, 1, sc.cfg) == doctest::Approx(-e_cap).epsilon(1e-12));
  CHECK(acr_correlate(r, 2, 2, sc.cfg) == doctest::Approx(-e_cap).epsilon(1e-12));
}

TEST_CASE("correlation rejects out-of-range indices") {
  SmallScenario sc(2, 0.0);
  const auto r = sc.burst({1, 1, -1}, 0);
  CHECK_THROWS_AS(acr_correlate(r, 1, 2, sc.cfg), std::out_of_range);
  CHECK_THROWS_AS(acr_correlate(r, 3, 1, sc.cfg), std::out_of_range);
}

TEST_CASE("noisy correlation mean matches the signal term") {
  SmallScenario sc(2, 0.05);
  const double e_cap = wf::captured_energy(sc.p, sc.cfg.integration_time);
  const int trials = 10000;
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto r = sc.burst({1, -1, -1}, 1000 + t);
    const double z = acr_correlate(r, 1, 1, sc.cfg);
    acc += z;
    acc2 += z * z;
  }
  const double mean = acc / trials;
  const double sd = std::sqrt(acc2 / trials - mean * mean);
  const double se = sd / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(mean - (-e_cap)) < 3.0 * se);
}

TEST_CASE("block matrix has the documented 3x3 layout for L = 2") {
  SmallScenario sc(2, 0.0);
  const double e_cap = wf::captured_energy(sc.p, sc.cfg.integration_time);
  const auto r = sc.burst({1, 1, -1}, 0);
  const auto z = build_block_z(r, 0, 2, sc.cfg);
  REQUIRE(z.order() == 3);
  const double expect[3][3] = {{0, 1, -1}, {1, 0, -1}, {-1, -1, 0}};
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      CHECK(z.at(l, i) == doctest::Approx(expect[l][i] * e_cap).epsilon(1e-12).scale(e_cap));
}

TEST_CASE("zero diagonal and symmetry are enforced at construction") {
  ZMatrix z(3);
  CHECK_THROWS_AS(z.set(1, 1, 0.5), std::invalid_argument);
  z.set(0, 1, 0.25);
  CHECK(z.at(1, 0) == 0.25);
  CHECK_THROWS_AS(ZMatrix::from_full({{0, 1}, {2, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(ZMatrix::from_full({{0, 1, 2}, {1, 0, 3}}), std::invalid_argument);
  // nonzero diagonals are discarded, not copied
  const auto ok = ZMatrix::from_full({{7, 1}, {1, 7}});
  CHECK(ok.at(0, 0) == 0.0);
  CHECK(ok.at(1, 1) == 0.0);
}

TEST_CASE("block layout covers the burst with one overlapping symbol") {
  using P = std::pair<int, int>;
  CHECK(block_layout(5, 2) == std::vector<P>{{0, 2}, {2, 2}, {4, 1}});
  CHECK(block_layout(6, 2) == std::vector<P>{{0, 2}, {2, 2}, {4, 2}});
  CHECK(block_layout(100, 10).size() == 10);
  CHECK(block_layout(3, 3) == std::vector<P>{{0, 3}});
}

TEST_CASE("band entry count and lag-1 stream") {
  SmallScenario sc(4, 0.0, 1);
  const auto b = wf::differential_encode({1, -1, -1, 1}, 1);
  const auto r = sc.burst(b, 0);
  const auto band = build_z_band(r, sc.cfg);
  CHECK(band.bandwidth() == 1);
  CHECK(band.count() == 4);
  for (int i = 1; i <= 4; ++i)
    CHECK(band.at(i - 1, i) == acr_correlate(r, i, 1, sc.cfg));

  ZBand big(100, 10);
  CHECK(big.count() == 955);
}

TEST_CASE("band and block statistics agree where indices coincide") {
  SmallScenario sc(5, 0.08);
  const auto b = wf::differential_encode({1, -1, 1, 1, -1}, 1);
  const auto r = sc.burst(b, 42);
  const auto band = build_z_band(r, sc.cfg);
  for (const auto& [start, len] : block_layout(5, 2)) {
    const auto direct = build_block_z(r, start, len, sc.cfg);
    const auto viewed = extract_block(band, start, len);
    for (int a = 0; a <= len; ++a)
      for (int i = 0; i <= len; ++i) CHECK(direct.at(a, i) == viewed.at(a, i));
  }
}

TEST_CASE("matrix save/load roundtrip") {
  std::mt19937_64 rng(4);
  const auto z = testutil::random_z(4, rng);
  std::stringstream ss;
  z.save(ss);
  const auto back = ZMatrix::load(ss);
  REQUIRE(back.order() == z.order());
  for (int l = 0; l < 4; ++l)
    for (int i = 0; i < 4; ++i) CHECK(back.at(l, i) == z.at(l, i));

  std::stringstream bad("0 1 2\n1 0 3\n");
  CHECK_THROWS(ZMatrix::load(bad));
}

TEST_CASE("statistic-level surrogate reduces to the exact signal term at zero noise") {
  DirectZParams params;
  params.e_cap = 0.37;
  const wf::SymbolSeq b = {1, -1, -1, 1};
  const auto z = model_z_matrix(b, params, 99);
  for (int l = 0; l < 3; ++l)
    for (int i = l + 1; i <= 3; ++i) CHECK(z.at(l, i) == 0.37 * b[l] * b[i]);
}

TEST_CASE("surrogate is deterministic and rejects negative variances") {
  DirectZParams params;
  params.e_cap = 1.0;
  params.var_sn = 0.1;
  const wf::SymbolSeq b = {1, 1, -1};
  const auto z1 = model_z_matrix(b, params, 5);
  const auto z2 = model_z_matrix(b, params, 5);
  CHECK(z1.at(0, 1) == z2.at(0, 1));
  params.var_nn = -1.0;
  CHECK_THROWS_AS(model_z_matrix(b, params, 5), std::invalid_argument);

  DirectZParams pb;
  pb.e_cap = 1.0;
  const auto band1 = model_z_band({1, -1, 1, 1}, 2, pb, 8);
  const auto band2 = model_z_band({1, -1, 1, 1}, 2, pb, 8);
  CHECK(band1.at(1, 2) == band2.at(1, 2));
}

TEST_CASE("surrogate moments match waveform-level statistics within 5%") {
  SmallScenario sc(2, std::pow(10.0, -8.0 / 10.0));  // 8 dB
  const auto params =
      DirectZParams::from_templates(sc.p, sc.h, sc.cfg.noise_psd, sc.cfg.integration_time);

  const int trials = 30000;
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto r = sc.burst({1, 1, 1}, 50000 + t);
    const double z = acr_correlate(r, 1, 1, sc.cfg);
    acc += z;
    acc2 += z * z;
  }
  const double mean_w = acc / trials;
  const double var_w = acc2 / trials - mean_w * mean_w;

  CHECK(mean_w == doctest::Approx(params.e_cap).epsilon(0.05));
  CHECK(var_w == doctest::Approx(params.var_sn + params.var_nn).epsilon(0.05));
}

TEST_CASE("closed-form surrogate parameters track the template calibration") {
  SmallScenario sc(2, 0.1);
  const auto exact =
      DirectZParams::from_templates(sc.p, sc.h, 0.1, sc.cfg.integration_time);
  const double b_eff = effective_noise_bandwidth(sc.h);
  const auto closed = DirectZParams::from_bandwidth(exact.e_cap, 0.1, b_eff,
                                                    sc.cfg.integration_time);
  CHECK(closed.var_nn == doctest::Approx(exact.var_nn).epsilon(1e-9));
  // the signal x noise closed form ignores the pulse/filter band overlap,
  // so it is only a same-order approximation
  const double ratio = closed.var_sn / exact.var_sn;
  CHECK(ratio > 0.3);
  CHECK(ratio < 3.0);
  CHECK_THROWS_AS(DirectZParams::from_bandwidth(1.0, 0.1, -2e9, 30e-9),
                  std::invalid_argument);
}
