#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "uwbdet/acr.hpp"
#include "uwbdet/harness.hpp"

namespace uwbdet::harness {

namespace det = uwbdet::detectors;
namespace wf = uwbdet::waveform;

namespace {

acr::ZMatrix random_z(int order, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  acr::ZMatrix z(order);
  for (int l = 0; l < order; ++l)
    for (int i = l + 1; i < order; ++i) z.set(l, i, normal(rng));
  return z;
}

acr::ZBand random_band(int n, int bw, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  acr::ZBand band(n, bw);
  for (int i = 1; i <= n; ++i)
    for (int l = band.lo(i); l < i; ++l) band.set(l, i, normal(rng));
  return band;
}

const det::DetectorOptions kAllOptionCombos[] = {
    {true, det::InitialRadius::kInfinite, true},
    {true, det::InitialRadius::kInfinite, false},
    {true, det::InitialRadius::kDdMetric, true},
    {true, det::InitialRadius::kDdMetric, false},
    {false, det::InitialRadius::kInfinite, true},
    {false, det::InitialRadius::kInfinite, false},
    {false, det::InitialRadius::kDdMetric, true},
    {false, det::InitialRadius::kDdMetric, false},
};

bool check_oracle_equivalence(std::ostream& os, int trials_per_order) {
  std::mt19937_64 rng(0xACDCull);
  for (int m = 2; m <= 7; ++m) {
    for (int t = 0; t < trials_per_order; ++t) {
      const auto z = random_z(m + 1, rng);
      const auto bf = det::msdd_bruteforce(z);
      for (const auto& opts : kAllOptionCombos) {
        const auto tr = det::msdd_sd(z, opts);
        if (tr.best_metric != bf.metric ||
            det::block_metric(z, tr.best_sequence) != bf.metric) {
          os << "selftest: SD/brute-force mismatch at M=" << m << " trial " << t << "\n";
          return false;
        }
      }
    }
  }
  // Exhaustive off-diagonal sign patterns for small blocks.
  for (int m = 2; m <= 4; ++m) {
    const int pairs = m * (m + 1) / 2;
    for (std::uint32_t pattern = 0; pattern < (1u << pairs); ++pattern) {
      for (int rep = 0; rep < 3; ++rep) {
        acr::ZMatrix z(m + 1);
        std::uniform_real_distribution<double> mag(0.05, 2.0);
        int bit = 0;
        for (int l = 0; l < m; ++l)
          for (int i = l + 1; i <= m; ++i, ++bit)
            z.set(l, i, ((pattern >> bit) & 1u) ? -mag(rng) : mag(rng));
        const auto bf = det::msdd_bruteforce(z);
        for (const auto& opts : kAllOptionCombos) {
          const auto tr = det::msdd_sd(z, opts);
          if (tr.best_metric != bf.metric) {
            os << "selftest: sign-pattern mismatch at M=" << m << "\n";
            return false;
          }
        }
      }
    }
  }
  return true;
}

bool check_identities(std::ostream& os, int trials) {
  std::mt19937_64 rng(0xBEEFull);
  std::uniform_int_distribution<int> m_dist(2, 8);
  for (int t = 0; t < trials; ++t) {
    // sorted block DF-DD solves the block exactly at M = 2
    {
      const auto z = random_z(3, rng);
      if (det::sbdfdd(z) != det::msdd_bruteforce(z).seq) {
        os << "selftest: sbdfdd != brute force at M=2\n";
        return false;
      }
    }
    // the first SD leaf is block DF-DD
    {
      const auto z = random_z(m_dist(rng) + 1, rng);
      const auto first_leaf = det::sd_search(z, std::numeric_limits<double>::infinity());
      if (first_leaf.best_sequence != det::bdfdd(z)) {
        os << "selftest: first SD leaf != bdfdd\n";
        return false;
      }
    }
    // cdfdd with L = N equals bdfdd on the full matrix
    {
      const int n = m_dist(rng);
      const auto z = random_z(n + 1, rng);
      const auto band = acr::band_from_matrix(z, n);
      if (det::cdfdd(band, n) != det::bdfdd(z)) {
        os << "selftest: cdfdd(L=N) != bdfdd\n";
        return false;
      }
    }
    // Viterbi with L = N equals brute-force sequence estimation
    {
      std::uniform_int_distribution<int> n_dist(1, 10);
      const int n = n_dist(rng);
      const auto z = random_z(n + 1, rng);
      const auto band = acr::band_from_matrix(z, n);
      if (det::viterbi(band, n) != det::inse_bruteforce(z)) {
        os << "selftest: viterbi(L=N) != inse\n";
        return false;
      }
    }
    // every detector collapses to DD at L = 1
    {
      std::uniform_int_distribution<int> n_dist(1, 12);
      const int n = n_dist(rng);
      const auto band = random_band(n, 1, rng);
      const auto ref = det::dd(band);
      for (const auto& name : det::all_kind_names()) {
        const auto kind = *det::kind_from_name(name);
        if (kind == det::DetectorKind::kInse && n != 1) continue;  // needs a full band
        if (det::detect_burst(band, kind, 1) != ref) {
          os << "selftest: " << name << " != dd at L=1\n";
          return false;
        }
      }
    }
  }
  return true;
}

bool check_closed_forms(std::ostream& os) {
  std::mt19937_64 rng(0xF00Dull);
  for (int l = 2; l <= 16; ++l) {
    const auto z = random_z(l + 1, rng);
    const auto expect_dfdd = static_cast<std::uint64_t>(l) * (l - 1) / 2;
    complexity::AddCounter cb, cs, ci;
    det::bdfdd(z, &cb);
    det::sbdfdd(z, &cs);
    det::dd_initial_radius(z, &ci);
    const auto expect_metric = static_cast<std::uint64_t>(l) * (l + 1) - 1;
    if (cb.adds != expect_dfdd || cs.adds != expect_dfdd || ci.adds != expect_metric) {
      os << "selftest: DF-DD/initial-radius add counts off at L=" << l << "\n";
      return false;
    }

    // first leaf meeting the stopping radius: exactly one metric evaluation
    wf::SymbolSeq b(l + 1);
    for (auto& s : b) s = (rng() & 1u) ? wf::Symbol{-1} : wf::Symbol{1};
    b[0] = 1;
    acr::ZMatrix noiseless(l + 1);
    for (int a = 0; a < l; ++a)
      for (int i = a + 1; i <= l; ++i) noiseless.set(a, i, 1.0 * b[a] * b[i]);
    const auto tr = det::msdd_sd(noiseless, {true, det::InitialRadius::kInfinite, false});
    if (tr.adds != expect_metric || tr.terminated_by != det::SdTermination::kStoppingRadius) {
      os << "selftest: best-case SD add count off at L=" << l << "\n";
      return false;
    }

    // worst case is bounded by L 2^{L+1}
    const auto bound = static_cast<std::uint64_t>(l) << (l + 1);
    for (int t = 0; t < 20; ++t) {
      const auto zr = random_z(l + 1, rng);
      const auto trace = det::msdd_sd(zr, {false, det::InitialRadius::kInfinite, false});
      if (trace.adds > bound) {
        os << "selftest: SD add count above the worst-case bound at L=" << l << "\n";
        return false;
      }
    }

    // cdfdd steady state: L-1 adds per symbol
    const int n = 3 * l;
    std::normal_distribution<double> normal(0.0, 1.0);
    acr::ZBand band(n, l);
    for (int i = 1; i <= n; ++i)
      for (int j = band.lo(i); j < i; ++j) band.set(j, i, normal(rng));
    std::vector<std::uint32_t> per_symbol;
    det::cdfdd(band, l, nullptr, &per_symbol);
    for (int i = l; i < n; ++i)
      if (per_symbol[i] != static_cast<std::uint32_t>(l - 1)) {
        os << "selftest: cdfdd steady-state adds off at L=" << l << "\n";
        return false;
      }
  }
  return true;
}

}  // namespace

bool run_selftest(std::ostream& os) {
  bool ok = true;
  const struct {
    const char* name;
    bool passed;
  } suites[] = {
      {"oracle-equivalence (SD vs brute force, all option combos)",
       check_oracle_equivalence(os, 1500)},
      {"detector identities", check_identities(os, 1000)},
      {"complexity closed forms", check_closed_forms(os)},
  };
  for (const auto& s : suites) {
    os << (s.passed ? "ok   " : "FAIL ") << s.name << "\n";
    ok = ok && s.passed;
  }
  return ok;
}

namespace {

int run_sweep_command(const ExperimentConfig& cfg, const std::string& out_path,
                      const std::string& hist_dir) {
  const SweepResult result = run_sweep(cfg);
  if (out_path == "-") {
    emit_csv(result.records, std::cout);
  } else {
    emit_csv(result.records, out_path);
    std::cerr << "wrote " << result.records.size() << " records to " << out_path << "\n";
  }
  if (!hist_dir.empty()) {
    std::filesystem::create_directories(hist_dir);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      char snr[32];
      std::snprintf(snr, sizeof snr, "%g", r.snr_db);
      const auto path = std::filesystem::path(hist_dir) /
                        ("hist_" + r.detector + "_L" + std::to_string(r.l) + "_snr" + snr +
                         ".csv");
      result.histograms[i].save_histogram_csv(path.string());
    }
  }
  return 0;
}

int run_trace_command(const std::string& z_path, int order, std::uint64_t seed,
                      const det::DetectorOptions& opts) {
  acr::ZMatrix z(2);
  if (!z_path.empty()) {
    z = acr::ZMatrix::load(z_path);
  } else {
    if (order < 2) {
      std::cerr << "trace: need --z FILE or --order M (M+1 >= 2)\n";
      return 2;
    }
    std::mt19937_64 rng(seed);
    z = random_z(order + 1, rng);
  }
  const auto tr = det::msdd_sd(z, opts);
  std::cout << "order: " << z.order() << " (block length " << z.block_len() << ")\n"
            << "options: sort=" << (opts.sort_input ? "on" : "off")
            << " stopping_radius=" << (opts.use_stopping_radius ? "on" : "off")
            << " initial_radius="
            << (opts.initial_radius == det::InitialRadius::kDdMetric ? "dd_metric"
                                                                     : "infinite")
            << "\n"
            << "stopping_radius_value: " << det::stopping_radius(z) << "\n"
            << "best_sequence:";
  for (auto s : tr.best_sequence) std::cout << (s > 0 ? " +1" : " -1");
  std::cout << "\nbest_metric: " << tr.best_metric << "\nadds: " << tr.adds
            << "\nnodes_visited: " << tr.nodes_visited << "\nterminated_by: "
            << (tr.terminated_by == det::SdTermination::kStoppingRadius ? "stopping_radius"
                                                                        : "exhausted")
            << "\n";
  if (z.block_len() >= 1 && z.block_len() <= 16) {
    std::cout << "va_reference_adds_per_symbol: "
              << complexity::va_reference_adds_per_symbol(z.block_len()) << "\n";
  }
  return 0;
}

std::string allowed_detectors() {
  std::string out;
  for (const auto& name : det::all_kind_names()) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"autocorrelation-receiver IR-UWB detection testbench"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo BER/complexity sweep");
  std::string config_path, out_path = "-", hist_dir;
  std::vector<std::pair<std::string, std::string>> overrides;
  sweep->add_option("--config", config_path, "flat key = value config file");
  sweep->add_option("--out", out_path, "output CSV path ('-' for stdout)");
  sweep->add_option("--hist-dir", hist_dir, "directory for per-record complexity histograms");
  for (const char* key :
       {"snr_db_list", "n_symbols", "l_branches", "detectors", "channel", "ti_seconds",
        "t_seconds", "pulse_center_freq_hz", "pulse_bandwidth_10db_hz", "sample_rate_hz",
        "seed", "min_errors", "max_bursts"}) {
    sweep->add_option_function<std::string>(
        std::string("--") + key,
        [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        std::string("override config key ") + key);
  }

  auto* trace = app.add_subcommand("trace", "run the SD on one block and print its trace");
  std::string z_path;
  int order = 0;
  std::uint64_t trace_seed = 1;
  bool no_sort = false, no_stop = false, dd_init = false;
  trace->add_option("--z", z_path, "plain-text Z matrix file");
  trace->add_option("--order", order, "block length for a random matrix");
  trace->add_option("--seed", trace_seed, "seed for the random matrix");
  trace->add_flag("--no-sort", no_sort, "disable input sorting");
  trace->add_flag("--no-stop", no_stop, "disable the stopping radius");
  trace->add_flag("--dd-init", dd_init, "use the DD metric as initial radius");

  auto* selftest = app.add_subcommand("selftest", "run built-in verification suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sweep->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = ExperimentConfig::from_file(config_path);
      for (const auto& [k, v] : overrides) cfg.apply_key_value(k, v);
      if (!cfg.seed_set) {
        std::cerr << "sweep: --seed is required for reproducible runs\n";
        return 2;
      }
      cfg.validate();
      return run_sweep_command(cfg, out_path, hist_dir);
    }
    if (trace->parsed()) {
      det::DetectorOptions opts;
      opts.sort_input = !no_sort;
      opts.use_stopping_radius = !no_stop;
      opts.initial_radius =
          dd_init ? det::InitialRadius::kDdMetric : det::InitialRadius::kInfinite;
      return run_trace_command(z_path, order, trace_seed, opts);
    }
    if (selftest->parsed()) return run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (std::string_view(e.what()).find("unknown detector") != std::string_view::npos) {
      std::cerr << "allowed detectors: " << allowed_detectors() << "\n";
      return 2;
    }
    return std::string_view(e.what()).find("config") != std::string_view::npos ? 2 : 1;
  }
  return 0;
}

}  // namespace uwbdet::harness
