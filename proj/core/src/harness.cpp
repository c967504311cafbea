#include "uwbdet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "uwbdet/acr.hpp"

namespace uwbdet::harness {

namespace det = uwbdet::detectors;
namespace wf = uwbdet::waveform;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("not an unsigned integer: '" + s + "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct UnknownDetector : std::runtime_error {
  explicit UnknownDetector(const std::string& name)
      : std::runtime_error("unknown detector '" + name + "'") {}
};

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

template <class F>
void parallel_for(std::size_t count, F&& body) {
  const auto workers = static_cast<std::size_t>(worker_count());
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(workers, count);
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t k1, std::uint64_t k2,
                         std::uint64_t k3) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ k1);
  s = mix64(s ^ k2);
  s = mix64(s ^ k3);
  return s;
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("UWB_DETECT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, hw));
  }
  return hw;
}

ChannelSpec ChannelSpec::parse(const std::string& text) {
  ChannelSpec spec;
  if (text == "sv_cm2") {
    spec.kind = ChannelModelKind::kSvCm2;
  } else if (text == "single_tap") {
    spec.kind = ChannelModelKind::kSingleTap;
  } else {
    spec.kind = ChannelModelKind::kFile;
    spec.file_path = text;
  }
  return spec;
}

std::string ChannelSpec::to_string() const {
  switch (kind) {
    case ChannelModelKind::kSvCm2: return "sv_cm2";
    case ChannelModelKind::kSingleTap: return "single_tap";
    case ChannelModelKind::kFile: return file_path;
  }
  return "?";
}

void ExperimentConfig::apply_key_value(const std::string& key, const std::string& value) {
  if (key == "snr_db_list") {
    snr_db_list.clear();
    for (const auto& item : split(value, ','))
      snr_db_list.push_back(item == "inf" ? std::numeric_limits<double>::infinity()
                                          : parse_double(item));
  } else if (key == "n_symbols") {
    n_symbols = static_cast<int>(parse_u64(value));
  } else if (key == "l_branches") {
    l_branches.clear();
    for (const auto& item : split(value, ','))
      l_branches.push_back(static_cast<int>(parse_u64(item)));
  } else if (key == "detectors") {
    detectors.clear();
    for (const auto& item : split(value, ',')) {
      const auto kind = det::kind_from_name(item);
      if (!kind) throw UnknownDetector(item);
      detectors.push_back(*kind);
    }
  } else if (key == "channel") {
    channel = ChannelSpec::parse(value);
  } else if (key == "ti_seconds") {
    ti_seconds = parse_double(value);
  } else if (key == "t_seconds") {
    t_seconds = parse_double(value);
  } else if (key == "pulse_center_freq_hz") {
    pulse_center_freq_hz = parse_double(value);
  } else if (key == "pulse_bandwidth_10db_hz") {
    pulse_bandwidth_10db_hz = parse_double(value);
  } else if (key == "sample_rate_hz") {
    sample_rate_hz = parse_double(value);
  } else if (key == "seed") {
    seed = parse_u64(value);
    seed_set = true;
  } else if (key == "min_errors") {
    min_errors = static_cast<int>(parse_u64(value));
  } else if (key == "max_bursts") {
    max_bursts = parse_u64(value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
    cfg.apply_key_value(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (snr_db_list.empty()) throw std::invalid_argument("config: snr_db_list is empty");
  if (l_branches.empty()) throw std::invalid_argument("config: l_branches is empty");
  if (detectors.empty()) throw std::invalid_argument("config: detectors is empty");
  if (n_symbols < 1) throw std::invalid_argument("config: n_symbols must be >= 1");
  for (int l : l_branches)
    if (l < 1 || l > n_symbols)
      throw std::invalid_argument("config: l_branches entries must be in [1, n_symbols]");
  if (!(ti_seconds > 0.0) || ti_seconds > t_seconds)
    throw std::invalid_argument("config: need 0 < ti_seconds <= t_seconds");
  if (!(pulse_center_freq_hz > 0.0) || !(pulse_bandwidth_10db_hz > 0.0) ||
      !(sample_rate_hz > 0.0))
    throw std::invalid_argument("config: pulse parameters must be positive");
  if (min_errors < 1) throw std::invalid_argument("config: min_errors must be >= 1");
  if (max_bursts < 1) throw std::invalid_argument("config: max_bursts must be >= 1");
  if (channel.kind == ChannelModelKind::kFile && channel.file_path.empty())
    throw std::invalid_argument("config: channel file path is empty");
}

namespace {

struct DetectorState {
  std::uint64_t errors = 0;
  std::uint64_t bursts = 0;
  complexity::ComplexityReport report;
  bool done = false;
};

struct BurstOutcome {
  std::vector<std::uint64_t> errors;
  std::vector<complexity::ComplexityReport> reports;
};

struct PointResult {
  std::vector<BerRecord> records;
  std::vector<complexity::ComplexityReport> histograms;
};

PointResult run_point(const ExperimentConfig& cfg, int l, double snr_db,
                      const wf::PulseTemplate& tx, const wf::PulseTemplate& rx_filter,
                      const wf::ChannelRealization* fixed_channel) {
  const double n0 = std::pow(10.0, -snr_db / 10.0);  // Eb = 1
  const int n = cfg.n_symbols;

  wf::BurstConfig bc;
  bc.n_symbols = n;
  bc.symbol_period = cfg.t_seconds;
  bc.integration_time = cfg.ti_seconds;
  bc.l_branches = l;
  bc.noise_psd = n0;
  bc.samples_per_symbol =
      static_cast<int>(std::lround(cfg.t_seconds * cfg.sample_rate_hz));
  bc.validate();

  const bool wants_inse =
      std::find(cfg.detectors.begin(), cfg.detectors.end(), det::DetectorKind::kInse) !=
      cfg.detectors.end();
  const int band_bw = wants_inse ? n : l;

  // Fixed channels share one receive pulse across the whole point.
  wf::PulseTemplate fixed_pulse;
  if (fixed_channel)
    fixed_pulse = wf::synthesize_receive_pulse(tx, *fixed_channel, cfg.t_seconds);

  const std::uint64_t snr_key = std::bit_cast<std::uint64_t>(snr_db);
  const auto n_detectors = cfg.detectors.size();
  std::vector<DetectorState> states(n_detectors);

  std::uint64_t next_burst = 0;
  while (next_burst < cfg.max_bursts) {
    std::vector<std::size_t> active;
    for (std::size_t d = 0; d < n_detectors; ++d)
      if (!states[d].done) active.push_back(d);
    if (active.empty()) break;

    const std::uint64_t batch = std::min<std::uint64_t>(kBurstBatch, cfg.max_bursts - next_burst);
    std::vector<BurstOutcome> outcomes(batch);

    parallel_for(batch, [&](std::size_t j) {
      const std::uint64_t burst_seed =
          split_seed(cfg.seed, static_cast<std::uint64_t>(l), snr_key, next_burst + j);

      wf::SymbolSeq a(n);
      std::mt19937_64 sym_rng(split_seed(burst_seed, 2, 0, 0));
      for (auto& s : a) s = (sym_rng() & 1u) ? wf::Symbol{-1} : wf::Symbol{1};
      const wf::SymbolSeq b = wf::differential_encode(a, 1);

      const wf::PulseTemplate* pulse = &fixed_pulse;
      wf::PulseTemplate drawn;
      if (!fixed_channel) {
        const auto ch = wf::generate_channel(cfg.channel.sv, split_seed(burst_seed, 1, 0, 0));
        drawn = wf::synthesize_receive_pulse(tx, ch, cfg.t_seconds);
        pulse = &drawn;
      }
      const auto r =
          wf::synthesize_burst(b, *pulse, &rx_filter, bc, split_seed(burst_seed, 3, 0, 0));
      const auto band = acr::build_z_band(r, bc, band_bw);

      auto& out = outcomes[j];
      out.errors.resize(active.size(), 0);
      out.reports.resize(active.size());
      for (std::size_t k = 0; k < active.size(); ++k) {
        const auto kind = cfg.detectors[active[k]];
        const auto info = det::detect_burst(band, kind, l, &out.reports[k]);
        std::uint64_t err = 0;
        for (int s = 0; s < n; ++s) err += info[s] != a[s];
        out.errors[k] = err;
      }
    });

    for (std::uint64_t j = 0; j < batch; ++j)
      for (std::size_t k = 0; k < active.size(); ++k) {
        auto& st = states[active[k]];
        st.errors += outcomes[j].errors[k];
        st.report.merge(outcomes[j].reports[k]);
        ++st.bursts;
      }
    next_burst += batch;

    // Stopping decisions only at batch boundaries keep the processed set
    // independent of the worker count.
    for (auto& st : states)
      if (!st.done && st.errors >= static_cast<std::uint64_t>(cfg.min_errors)) st.done = true;
  }

  PointResult out;
  for (std::size_t d = 0; d < n_detectors; ++d) {
    const auto& st = states[d];
    BerRecord rec;
    rec.detector = det::kind_name(cfg.detectors[d]);
    rec.l = l;
    rec.n = n;
    rec.snr_db = snr_db;
    rec.bits = st.bursts * static_cast<std::uint64_t>(n);
    rec.errors = st.errors;
    rec.ber = rec.bits ? static_cast<double>(rec.errors) / static_cast<double>(rec.bits) : 0.0;
    rec.adds_per_symbol_mean = st.report.adds_per_symbol_mean();
    rec.adds_per_symbol_max = st.report.adds_per_symbol_max();
    out.records.push_back(std::move(rec));
    out.histograms.push_back(st.report);
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto tx = wf::gaussian_monocycle(cfg.pulse_center_freq_hz,
                                         cfg.pulse_bandwidth_10db_hz, cfg.sample_rate_hz);
  const auto rx_filter = wf::matched_filter(tx);

  wf::ChannelRealization fixed;
  const wf::ChannelRealization* fixed_ptr = nullptr;
  if (cfg.channel.kind == ChannelModelKind::kSingleTap) {
    fixed = wf::single_tap_channel();
    fixed_ptr = &fixed;
  } else if (cfg.channel.kind == ChannelModelKind::kFile) {
    fixed = wf::load_channel_file(cfg.channel.file_path);
    fixed_ptr = &fixed;
  }

  SweepResult result;
  for (int l : cfg.l_branches)
    for (double snr : cfg.snr_db_list) {
      auto point = run_point(cfg, l, snr, tx, rx_filter, fixed_ptr);
      for (std::size_t i = 0; i < point.records.size(); ++i) {
        result.records.push_back(std::move(point.records[i]));
        result.histograms.push_back(std::move(point.histograms[i]));
      }
    }

  // Deterministic (detector, L, snr) order.
  std::vector<std::size_t> idx(result.records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = result.records[a];
    const auto& rb = result.records[b];
    if (ra.detector != rb.detector) return ra.detector < rb.detector;
    if (ra.l != rb.l) return ra.l < rb.l;
    return ra.snr_db < rb.snr_db;
  });
  SweepResult sorted;
  for (std::size_t i : idx) {
    sorted.records.push_back(std::move(result.records[i]));
    sorted.histograms.push_back(std::move(result.histograms[i]));
  }
  return sorted;
}

void emit_csv(const std::vector<BerRecord>& records, std::ostream& os) {
  auto rows = records;
  std::sort(rows.begin(), rows.end(), [](const BerRecord& a, const BerRecord& b) {
    if (a.detector != b.detector) return a.detector < b.detector;
    if (a.l != b.l) return a.l < b.l;
    return a.snr_db < b.snr_db;
  });
  os << "detector,L,N,snr_db,bits,errors,ber,adds_per_symbol_mean,adds_per_symbol_max\n";
  for (const auto& r : rows)
    os << r.detector << ',' << r.l << ',' << r.n << ',' << fmt_double(r.snr_db) << ','
       << r.bits << ',' << r.errors << ',' << fmt_double(r.ber) << ','
       << fmt_double(r.adds_per_symbol_mean) << ',' << fmt_double(r.adds_per_symbol_max)
       << '\n';
}

void emit_csv(const std::vector<BerRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open " + path);
  emit_csv(records, out);
}

std::vector<BerRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "detector,L,N,snr_db,bits,errors,ber,adds_per_symbol_mean,adds_per_symbol_max")
    throw std::runtime_error("csv: bad header in " + path);
  std::vector<BerRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw std::runtime_error("csv: bad row: " + line);
    BerRecord r;
    r.detector = f[0];
    r.l = static_cast<int>(parse_u64(f[1]));
    r.n = static_cast<int>(parse_u64(f[2]));
    r.snr_db = parse_double(f[3]);
    r.bits = parse_u64(f[4]);
    r.errors = parse_u64(f[5]);
    r.ber = parse_double(f[6]);
    r.adds_per_symbol_mean = parse_double(f[7]);
    r.adds_per_symbol_max = parse_double(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

double snr_at_ber(const std::vector<BerRecord>& records, const std::string& detector,
                  int l, double ber) {
  std::vector<std::pair<double, double>> curve;  // (snr, ber)
  for (const auto& r : records)
    if (r.detector == detector && r.l == l) curve.emplace_back(r.snr_db, r.ber);
  std::sort(curve.begin(), curve.end());
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const auto [s1, b1] = curve[i];
    const auto [s2, b2] = curve[i + 1];
    if (b1 >= ber && b2 <= ber && b2 > 0.0) {
      if (b1 == b2) return s1;
      const double t = (std::log10(b1) - std::log10(ber)) / (std::log10(b1) - std::log10(b2));
      return s1 + t * (s2 - s1);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace uwbdet::harness
