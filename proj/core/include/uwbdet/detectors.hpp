#pragma once

// Decision units operating on ACR statistics: symbol-wise DD, brute-force
// sequence estimation, sphere-decoder MSDD with stopping radius / initial
// radius / input sorting, Viterbi detection, and the decision-feedback
// variants (block-wise, sorted block-wise, continuous).
//
// Conventions shared by every detector: sign(0) = +1, argmax ties pick
// the lowest index, and the reference transmit symbol of a block or
// burst is fixed to +1.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uwbdet/acr.hpp"
#include "uwbdet/complexity.hpp"
#include "uwbdet/waveform.hpp"

namespace uwbdet::detectors {

using acr::ZBand;
using acr::ZMatrix;
using complexity::AddCounter;
using waveform::Symbol;
using waveform::SymbolSeq;

struct BlockTooLarge : std::runtime_error {
  explicit BlockTooLarge(const std::string& what) : std::runtime_error(what) {}
};

enum class InitialRadius { kInfinite, kDdMetric };

struct DetectorOptions {
  bool use_stopping_radius = true;
  InitialRadius initial_radius = InitialRadius::kInfinite;
  bool sort_input = true;
};

enum class SdTermination { kExhausted, kStoppingRadius };

struct SdTrace {
  SymbolSeq best_sequence;       // transmit symbols, [0] == +1
  double best_metric = 0.0;      // block decision metric, >= 0
  std::uint64_t adds = 0;        // counted adds of this call (incl. sort / initial radius)
  std::uint64_t nodes_visited = 0;  // partial-metric evaluations; 0 if the search was skipped
  SdTermination terminated_by = SdTermination::kExhausted;
};

// Permutation of {0..M} with the reference decided first.
struct DecisionOrder {
  std::vector<int> order;  // order[0] == 0
};

// a_i = sign(Z_{i-1,i}) on lag-1 statistics; returns information symbols.
SymbolSeq dd(const ZBand& band);

// Exact maximizer of the burst GLRT metric over all 2^N sequences with
// b_0 = +1; ties keep the first sequence in lexicographic enumeration
// (+1 before -1). Guarded at N <= 24.
SymbolSeq inse_bruteforce(const ZMatrix& z);

struct BruteForceResult {
  SymbolSeq seq;
  double metric = 0.0;
};
// Exact minimizer of the block decision metric; same tie rule. M <= 20.
BruteForceResult msdd_bruteforce(const ZMatrix& z);

// Canonical evaluation of the block decision metric
//   sum_i ( q_i - b_i p_i ),  p_i = sum_{l<i} Z_{l,i} b_l, q_i = sum_{l<i} |Z_{l,i}|,
// in ascending index order. This is the exact arithmetic the sphere
// decoder performs, so equal sequences give bit-identical metrics.
double block_metric(const ZMatrix& z, const SymbolSeq& seq, AddCounter* counter = nullptr);

// Stopping radius R_stop = M * min_{l != i} |Z_{l,i}| (M = block length);
// any sequence with metric strictly below it is optimal.
double stopping_radius(const ZMatrix& z);

struct DdInit {
  SymbolSeq seq;       // chained lag-1 signs, re-referenced to b_0 = +1
  double metric = 0.0;
};
// DD sequence over a block and its decision metric (one full metric
// evaluation, M(M+1)-1 counted adds).
DdInit dd_initial_radius(const ZMatrix& z, AddCounter* counter = nullptr);

// Successive triangle-inequality ordering for the SD input: pick next the
// undecided index maximizing sum_{decided l} |Z_{l,i}|. Returns the
// permuted matrix and the order used to un-permute SD output.
std::pair<ZMatrix, DecisionOrder> sort_for_sd(const ZMatrix& z, AddCounter* counter = nullptr);

// Depth-first Schnorr-Euchner search with radius pruning and early
// stopping (strict comparisons). Exposed for the first-leaf identity:
// r_stop = +inf returns the first leaf found, which equals bdfdd.
SdTrace sd_search(const ZMatrix& z, double r_stop,
                  double initial_radius = std::numeric_limits<double>::infinity(),
                  const SymbolSeq* initial_seq = nullptr, AddCounter* counter = nullptr);

// SD-based MSDD. best_sequence attains the exact block-metric minimum for
// every option combination; best_metric is re-evaluated in natural index
// order (uncounted) so it is directly comparable with msdd_bruteforce.
// With a DD initial radius whose metric already beats the stopping
// radius, the search is skipped entirely (nodes_visited == 0).
SdTrace msdd_sd(const ZMatrix& z, const DetectorOptions& opts = {},
                AddCounter* counter = nullptr);

// b_i = sign( sum_{l<i} Z_{l,i} b_l ), linearly growing feedback window.
SymbolSeq bdfdd(const ZMatrix& z, AddCounter* counter = nullptr);

// Sorted block-wise DF-DD: decide the most reliable undecided symbol
// next. Output in natural index order. Identical add count to bdfdd.
SymbolSeq sbdfdd(const ZMatrix& z, AddCounter* counter = nullptr);

// Continuous DF-DD: sliding window of the last L decisions over the
// whole burst. per_symbol_adds, when given, receives one entry per
// information symbol.
SymbolSeq cdfdd(const ZBand& band, int l, AddCounter* counter = nullptr,
                std::vector<std::uint32_t>* per_symbol_adds = nullptr);

// Viterbi detection on the 2^L-state trellis of the memory-L truncated
// burst metric; transient steps use the shortened sum, path-metric ties
// prefer +1. Guarded at L <= 16.
SymbolSeq viterbi(const ZBand& band, int l, AddCounter* counter = nullptr,
                  std::vector<std::uint64_t>* per_symbol_adds = nullptr);

enum class DetectorKind {
  kDd,
  kInse,
  kMsdd,
  kMsddNoSort,
  kMsddDdInit,
  kMsddNoStop,
  kVa,
  kBdfdd,
  kSbdfdd,
  kCdfdd,
};

const char* kind_name(DetectorKind kind);
std::optional<DetectorKind> kind_from_name(std::string_view name);
const std::vector<std::string>& all_kind_names();
DetectorOptions options_for(DetectorKind kind);
bool is_block_kind(DetectorKind kind);

// Full-burst detection to information symbols. Block detectors split the
// burst into blocks of L information symbols overlapping by one transmit
// symbol, fix each block reference to +1 and decode within the block;
// streaming detectors decide the transmit sequence and differentially
// decode. "inse" solves the whole burst exactly via the SD on the full
// matrix and requires band.bandwidth() == N.
SymbolSeq detect_burst(const ZBand& band, DetectorKind kind, int l,
                       complexity::ComplexityReport* report = nullptr);

}  // namespace uwbdet::detectors

namespace uwbdet::complexity {

// Runs a detector over a burst with the counter installed and returns
// its accounting.
ComplexityReport count_detector_run(const detectors::ZBand& band,
                                    detectors::DetectorKind kind, int l);

}  // namespace uwbdet::complexity
