#include "uwbdet/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uwbdet::detectors {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline Symbol sgn(double x) { return x >= 0.0 ? Symbol{1} : Symbol{-1}; }

using complexity::bump;

void require_pm1_block(const SymbolSeq& seq, int order) {
  if (static_cast<int>(seq.size()) != order || !waveform::is_pm1(seq) || seq[0] != 1)
    throw std::invalid_argument("detector: sequence must be +/-1 of the block order with b0 = +1");
}

}  // namespace

SymbolSeq dd(const ZBand& band) {
  SymbolSeq a(band.n_symbols());
  for (int i = 1; i <= band.n_symbols(); ++i) a[i - 1] = sgn(band.at(i - 1, i));
  return a;
}

SymbolSeq inse_bruteforce(const ZMatrix& z) {
  const int n = z.block_len();
  if (n > 24) throw BlockTooLarge("inse_bruteforce: N > 24");
  SymbolSeq b(n + 1, 1), best;
  double best_val = -kInf;
  // Lexicographic enumeration with +1 before -1; ties keep the first hit.
  for (std::uint64_t g = 0; g < (std::uint64_t{1} << n); ++g) {
    for (int i = 1; i <= n; ++i)
      b[i] = ((g >> (n - i)) & 1u) ? Symbol{-1} : Symbol{1};
    double val = 0.0;
    for (int i = 1; i <= n; ++i) {
      double inner = 0.0;
      for (int l = 0; l < i; ++l) inner += z.at(l, i) * b[l];
      val += b[i] * inner;
    }
    if (val > best_val) {
      best_val = val;
      best = b;
    }
  }
  return best;
}

double block_metric(const ZMatrix& z, const SymbolSeq& seq, AddCounter* counter) {
  const int m = z.block_len();
  require_pm1_block(seq, m + 1);
  double total = 0.0;
  for (int i = 1; i <= m; ++i) {
    double p = 0.0, q = 0.0;
    for (int l = 0; l < i; ++l) {
      p += z.at(l, i) * seq[l];
      q += std::abs(z.at(l, i));
    }
    bump(counter, 2 * static_cast<std::uint64_t>(i - 1));
    const double d = q - seq[i] * p;
    total += d;
    bump(counter, i > 1 ? 2 : 1);  // delta plus the accumulate; Delta_0 = 0 is free
  }
  return total;
}

BruteForceResult msdd_bruteforce(const ZMatrix& z) {
  const int m = z.block_len();
  if (m > 20) throw BlockTooLarge("msdd_bruteforce: M > 20");
  SymbolSeq b(m + 1, 1);
  BruteForceResult best;
  best.metric = kInf;
  for (std::uint64_t g = 0; g < (std::uint64_t{1} << m); ++g) {
    for (int i = 1; i <= m; ++i)
      b[i] = ((g >> (m - i)) & 1u) ? Symbol{-1} : Symbol{1};
    const double metric = block_metric(z, b);
    if (metric < best.metric) {
      best.metric = metric;
      best.seq = b;
    }
  }
  return best;
}

double stopping_radius(const ZMatrix& z) {
  const int m = z.block_len();
  double min_abs = kInf;
  for (int l = 0; l < m; ++l)
    for (int i = l + 1; i <= m; ++i) min_abs = std::min(min_abs, std::abs(z.at(l, i)));
  return m * min_abs;
}

DdInit dd_initial_radius(const ZMatrix& z, AddCounter* counter) {
  const int m = z.block_len();
  DdInit out;
  out.seq.assign(m + 1, 1);
  for (int i = 1; i <= m; ++i)
    out.seq[i] = static_cast<Symbol>(out.seq[i - 1] * sgn(z.at(i - 1, i)));
  out.metric = block_metric(z, out.seq, counter);  // M(M+1)-1 adds
  return out;
}

std::pair<ZMatrix, DecisionOrder> sort_for_sd(const ZMatrix& z, AddCounter* counter) {
  const int m = z.block_len();
  DecisionOrder ord;
  ord.order.reserve(m + 1);
  ord.order.push_back(0);

  std::vector<double> acc(m + 1, 0.0);
  std::vector<bool> decided(m + 1, false);
  decided[0] = true;
  for (int i = 1; i <= m; ++i) acc[i] = std::abs(z.at(0, i));  // first accumulation, free

  for (int k = 1; k <= m; ++k) {
    int pick = -1;
    for (int i = 1; i <= m; ++i)
      if (!decided[i] && (pick < 0 || acc[i] > acc[pick])) pick = i;
    decided[pick] = true;
    ord.order.push_back(pick);
    if (k < m) {
      std::uint64_t adds = 0;
      for (int i = 1; i <= m; ++i)
        if (!decided[i]) {
          acc[i] += std::abs(z.at(pick, i));
          ++adds;
        }
      bump(counter, adds);
    }
  }

  ZMatrix zp(m + 1);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b <= m; ++b) zp.set(a, b, z.at(ord.order[a], ord.order[b]));
  return {std::move(zp), std::move(ord)};
}

SdTrace sd_search(const ZMatrix& z, double r_stop, double initial_radius,
                  const SymbolSeq* initial_seq, AddCounter* counter) {
  const int m = z.block_len();
  AddCounter local;

  std::vector<double> p(m + 1, 0.0), q(m + 1, 0.0), delta(m + 1, 0.0);
  SymbolSeq b(m + 1, 1);
  std::vector<int> n_child(m + 1, 1);

  SdTrace tr;
  double radius = initial_radius;
  SymbolSeq best = initial_seq ? *initial_seq : SymbolSeq{};

  auto fill_level = [&](int i) {
    double pp = 0.0, qq = 0.0;
    for (int l = 0; l < i; ++l) {
      pp += z.at(l, i) * b[l];
      qq += std::abs(z.at(l, i));
    }
    p[i] = pp;
    q[i] = qq;
    local.add(2 * static_cast<std::uint64_t>(i - 1));
  };

  int i = 1;
  fill_level(1);
  b[1] = sgn(p[1]);

  while (i > 0) {
    const double d = q[i] - b[i] * p[i];
    delta[i] = delta[i - 1] + d;
    local.add(i > 1 ? 2 : 1);  // Delta_0 = 0, so the first accumulate is free
    ++tr.nodes_visited;
    if (delta[i] < radius) {
      if (i < m) {
        ++i;
        fill_level(i);
        b[i] = sgn(p[i]);
        n_child[i] = 1;
      } else {
        best = b;
        radius = delta[i];
        if (radius < r_stop) {
          tr.terminated_by = SdTermination::kStoppingRadius;
          break;
        }
        // The sibling leaf cannot beat the radius we just set, so
        // backtracking starts one level up.
        --i;
        while (i > 0 && n_child[i] > 1) --i;
        if (i == 0) break;
        b[i] = static_cast<Symbol>(-b[i]);
        ++n_child[i];
      }
    } else {
      --i;
      while (i > 0 && n_child[i] > 1) --i;
      if (i == 0) break;
      b[i] = static_cast<Symbol>(-b[i]);
      ++n_child[i];
    }
  }

  tr.best_sequence = std::move(best);
  tr.best_metric = radius;
  tr.adds = local.adds;
  if (counter) counter->add(local.adds);
  return tr;
}

namespace {

SymbolSeq permute_seq(const SymbolSeq& natural, const DecisionOrder& ord) {
  SymbolSeq out(natural.size());
  for (std::size_t k = 0; k < natural.size(); ++k) out[k] = natural[ord.order[k]];
  return out;
}

SymbolSeq unpermute_seq(const SymbolSeq& sorted, const DecisionOrder& ord) {
  SymbolSeq out(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) out[ord.order[k]] = sorted[k];
  return out;
}

}  // namespace

SdTrace msdd_sd(const ZMatrix& z, const DetectorOptions& opts, AddCounter* counter) {
  AddCounter local;
  const double r_stop = opts.use_stopping_radius ? stopping_radius(z) : -kInf;

  SdTrace tr;
  if (opts.initial_radius == InitialRadius::kDdMetric) {
    const DdInit init = dd_initial_radius(z, &local);
    if (init.metric < r_stop) {
      // DD sequence is provably optimal; no SD call at all.
      tr.best_sequence = init.seq;
      tr.best_metric = init.metric;
      tr.terminated_by = SdTermination::kStoppingRadius;
      tr.nodes_visited = 0;
    } else if (opts.sort_input) {
      const auto [zp, ord] = sort_for_sd(z, &local);
      const SymbolSeq init_perm = permute_seq(init.seq, ord);
      tr = sd_search(zp, r_stop, init.metric, &init_perm, &local);
      tr.best_sequence = unpermute_seq(tr.best_sequence, ord);
    } else {
      tr = sd_search(z, r_stop, init.metric, &init.seq, &local);
    }
  } else if (opts.sort_input) {
    const auto [zp, ord] = sort_for_sd(z, &local);
    tr = sd_search(zp, r_stop, kInf, nullptr, &local);
    tr.best_sequence = unpermute_seq(tr.best_sequence, ord);
  } else {
    tr = sd_search(z, r_stop, kInf, nullptr, &local);
  }

  // Reported metric in natural index order so it is bit-comparable with
  // the brute-force oracle regardless of sorting; not part of the search.
  tr.best_metric = block_metric(z, tr.best_sequence, nullptr);
  tr.adds = local.adds;
  if (counter) counter->add(local.adds);
  return tr;
}

SymbolSeq bdfdd(const ZMatrix& z, AddCounter* counter) {
  const int m = z.block_len();
  SymbolSeq b(m + 1, 1);
  for (int i = 1; i <= m; ++i) {
    double s = 0.0;
    for (int l = 0; l < i; ++l) s += z.at(l, i) * b[l];
    bump(counter, static_cast<std::uint64_t>(i - 1));
    b[i] = sgn(s);
  }
  return b;
}

SymbolSeq sbdfdd(const ZMatrix& z, AddCounter* counter) {
  const int m = z.block_len();
  SymbolSeq b(m + 1, 1);
  std::vector<double> acc(m + 1, 0.0);
  std::vector<bool> decided(m + 1, false);
  decided[0] = true;
  for (int i = 1; i <= m; ++i) acc[i] = z.at(0, i) * 1.0;  // b0 = +1; first accumulation free

  for (int k = 1; k <= m; ++k) {
    int pick = -1;
    for (int i = 1; i <= m; ++i)
      if (!decided[i] && (pick < 0 || std::abs(acc[i]) > std::abs(acc[pick]))) pick = i;
    decided[pick] = true;
    b[pick] = sgn(acc[pick]);
    if (k < m) {
      std::uint64_t adds = 0;
      for (int i = 1; i <= m; ++i)
        if (!decided[i]) {
          acc[i] += z.at(pick, i) * b[pick];
          ++adds;
        }
      bump(counter, adds);
    }
  }
  return b;
}

SymbolSeq cdfdd(const ZBand& band, int l, AddCounter* counter,
                std::vector<std::uint32_t>* per_symbol_adds) {
  if (l < 1 || l > band.bandwidth())
    throw std::invalid_argument("cdfdd: need 1 <= l <= band bandwidth");
  const int n = band.n_symbols();
  SymbolSeq b(n + 1, 1);
  if (per_symbol_adds) per_symbol_adds->assign(n, 0);
  for (int i = 1; i <= n; ++i) {
    const int lo = std::max(0, i - l);
    double s = 0.0;
    for (int j = lo; j < i; ++j) s += band.at(j, i) * b[j];
    const auto adds = static_cast<std::uint32_t>(i - lo - 1);
    bump(counter, adds);
    if (per_symbol_adds) (*per_symbol_adds)[i - 1] = adds;
    b[i] = sgn(s);
  }
  return b;
}

SymbolSeq viterbi(const ZBand& band, int l, AddCounter* counter,
                  std::vector<std::uint64_t>* per_symbol_adds) {
  if (l < 1 || l > band.bandwidth())
    throw std::invalid_argument("viterbi: need 1 <= l <= band bandwidth");
  if (l > 16) throw BlockTooLarge("viterbi: L > 16 (2^L states)");
  const int n = band.n_symbols();
  if (per_symbol_adds) per_symbol_adds->assign(n, 0);

  // State before step i: the last min(i-1, L) decided symbols, newest in
  // bit 0; bit value 1 encodes -1. b_0 is pinned to +1 and is not part of
  // the state, so the trellis grows from one state to 2^L and only then
  // starts merging.
  std::vector<double> metric{0.0};
  std::vector<std::vector<std::int32_t>> prev(n + 1);
  std::vector<std::vector<std::int8_t>> chosen(n + 1);

  auto state_symbol = [](std::uint32_t state, int back) {
    return ((state >> back) & 1u) ? Symbol{-1} : Symbol{1};
  };

  for (int i = 1; i <= n; ++i) {
    const int m = std::min(i - 1, l);       // state width entering step i
    const int w = std::min(i, l);           // metric window of step i
    const int m_next = std::min(i, l);
    const std::size_t n_states = std::size_t{1} << m;
    const std::size_t n_next = std::size_t{1} << m_next;

    std::vector<double> next(n_next, -kInf);
    prev[i].assign(n_next, -1);
    chosen[i].assign(n_next, 0);
    std::uint64_t adds = 0;

    for (std::size_t s = 0; s < n_states; ++s) {
      if (metric[s] == -kInf) continue;
      // Shared inner sum over the window; b_0 enters for transient steps.
      double inner = 0.0;
      for (int back = 0; back < w; ++back) {
        const int idx = i - 1 - back;  // symbol index b_idx
        const Symbol bs = (idx == 0) ? Symbol{1} : state_symbol(static_cast<std::uint32_t>(s), back);
        inner += band.at(idx, i) * bs;
      }
      adds += static_cast<std::uint64_t>(w - 1);

      for (int bit = 0; bit < 2; ++bit) {               // bit 0 -> b_i = +1
        const double branch = bit ? -inner : inner;
        const double cand = metric[s] + branch;
        if (i > 1) ++adds;  // the stage-1 accumulate starts from zero
        const std::size_t ns = ((s << 1) | static_cast<unsigned>(bit)) & (n_next - 1);
        // Ascending s order makes +1 history win metric ties.
        if (cand > next[ns]) {
          next[ns] = cand;
          prev[i][ns] = static_cast<std::int32_t>(s);
          chosen[i][ns] = static_cast<std::int8_t>(bit);
        }
      }
    }

    bump(counter, adds);
    if (per_symbol_adds) (*per_symbol_adds)[i - 1] = adds;
    metric = std::move(next);
  }

  std::size_t best_state = 0;
  for (std::size_t s = 1; s < metric.size(); ++s)
    if (metric[s] > metric[best_state]) best_state = s;

  SymbolSeq b(n + 1, 1);
  std::size_t state = best_state;
  for (int i = n; i >= 1; --i) {
    b[i] = chosen[i][state] ? Symbol{-1} : Symbol{1};
    state = static_cast<std::size_t>(prev[i][state]);
  }
  return b;
}

const char* kind_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kDd: return "dd";
    case DetectorKind::kInse: return "inse";
    case DetectorKind::kMsdd: return "msdd";
    case DetectorKind::kMsddNoSort: return "msdd-nosort";
    case DetectorKind::kMsddDdInit: return "msdd-ddinit";
    case DetectorKind::kMsddNoStop: return "msdd-nostop";
    case DetectorKind::kVa: return "va";
    case DetectorKind::kBdfdd: return "bdfdd";
    case DetectorKind::kSbdfdd: return "sbdfdd";
    case DetectorKind::kCdfdd: return "cdfdd";
  }
  return "?";
}

const std::vector<std::string>& all_kind_names() {
  static const std::vector<std::string> names = {
      "dd",   "inse", "msdd",  "msdd-nosort", "msdd-ddinit",
      "msdd-nostop", "va",   "bdfdd", "sbdfdd",      "cdfdd"};
  return names;
}

std::optional<DetectorKind> kind_from_name(std::string_view name) {
  static constexpr DetectorKind kinds[] = {
      DetectorKind::kDd,         DetectorKind::kInse,       DetectorKind::kMsdd,
      DetectorKind::kMsddNoSort, DetectorKind::kMsddDdInit, DetectorKind::kMsddNoStop,
      DetectorKind::kVa,         DetectorKind::kBdfdd,      DetectorKind::kSbdfdd,
      DetectorKind::kCdfdd};
  for (DetectorKind k : kinds)
    if (name == kind_name(k)) return k;
  return std::nullopt;
}

DetectorOptions options_for(DetectorKind kind) {
  DetectorOptions opts;  // stopping on, initial infinite, sort on
  switch (kind) {
    case DetectorKind::kMsddNoSort: opts.sort_input = false; break;
    case DetectorKind::kMsddDdInit: opts.initial_radius = InitialRadius::kDdMetric; break;
    case DetectorKind::kMsddNoStop: opts.use_stopping_radius = false; break;
    default: break;
  }
  return opts;
}

bool is_block_kind(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMsdd:
    case DetectorKind::kMsddNoSort:
    case DetectorKind::kMsddDdInit:
    case DetectorKind::kMsddNoStop:
    case DetectorKind::kBdfdd:
    case DetectorKind::kSbdfdd:
      return true;
    default:
      return false;
  }
}

namespace {

// Information symbols of one block from its transmit-symbol decisions;
// the block reference sign cancels, so the overlap symbol carries no new
// information. Differential decoding is not counted.
void map_block_decisions(const SymbolSeq& block, int start, SymbolSeq& info) {
  for (std::size_t j = 1; j < block.size(); ++j)
    info[start + j - 1] = static_cast<Symbol>(block[j] * block[j - 1]);
}

}  // namespace

SymbolSeq detect_burst(const ZBand& band, DetectorKind kind, int l,
                       complexity::ComplexityReport* report) {
  const int n = band.n_symbols();
  if (l < 1 || l > n) throw std::invalid_argument("detect_burst: need 1 <= l <= n");
  if (report) report->detector = kind_name(kind);
  SymbolSeq info(n, 1);

  switch (kind) {
    case DetectorKind::kDd: {
      info = dd(band);
      if (report)
        for (int i = 0; i < n; ++i) report->record_symbol(0);  // DD costs no adds
      return info;
    }
    case DetectorKind::kCdfdd: {
      std::vector<std::uint32_t> per_symbol;
      const SymbolSeq b = cdfdd(band, l, nullptr, report ? &per_symbol : nullptr);
      if (report)
        for (auto a : per_symbol) report->record_symbol(a);
      return waveform::differential_decode(b);
    }
    case DetectorKind::kVa: {
      std::vector<std::uint64_t> per_symbol;
      const SymbolSeq b = viterbi(band, l, nullptr, report ? &per_symbol : nullptr);
      if (report)
        for (auto a : per_symbol) report->record_symbol(a);
      return waveform::differential_decode(b);
    }
    case DetectorKind::kInse: {
      if (band.bandwidth() != n)
        throw std::invalid_argument("detect_burst: inse needs full-burst statistics");
      ZMatrix z(n + 1);
      for (int i = 1; i <= n; ++i)
        for (int lo = band.lo(i); lo < i; ++lo) z.set(lo, i, band.at(lo, i));
      const SdTrace tr = msdd_sd(z, DetectorOptions{});
      if (report) report->record_block(tr.adds, n);
      return waveform::differential_decode(tr.best_sequence);
    }
    default:
      break;
  }

  for (const auto& [start, len] : acr::block_layout(n, l)) {
    const ZMatrix zb = extract_block(band, start, len);
    SymbolSeq block;
    std::uint64_t adds = 0;
    switch (kind) {
      case DetectorKind::kBdfdd: {
        AddCounter c;
        block = bdfdd(zb, &c);
        adds = c.adds;
        break;
      }
      case DetectorKind::kSbdfdd: {
        AddCounter c;
        block = sbdfdd(zb, &c);
        adds = c.adds;
        break;
      }
      default: {  // msdd variants
        const SdTrace tr = msdd_sd(zb, options_for(kind));
        block = tr.best_sequence;
        adds = tr.adds;
        break;
      }
    }
    if (report) report->record_block(adds, len);
    map_block_decisions(block, start, info);
  }
  return info;
}

}  // namespace uwbdet::detectors

namespace uwbdet::complexity {

ComplexityReport count_detector_run(const detectors::ZBand& band,
                                    detectors::DetectorKind kind, int l) {
  ComplexityReport report;
  detectors::detect_burst(band, kind, l, &report);
  return report;
}

}  // namespace uwbdet::complexity
