#pragma once

// Add-count accounting for the decision units. One count per binary
// addition/subtraction of two real values; sign inversion, absolute
// value, sign extraction and comparisons are free (two's complement
// style), and the first accumulation into a zero-initialized
// accumulator is free. DD decisions, the stopping-radius computation
// and the final differential decoding step are not counted.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

namespace uwbdet::complexity {

struct AddCounter {
  std::uint64_t adds = 0;
  void add(std::uint64_t n) { adds += n; }
};

inline void bump(AddCounter* c, std::uint64_t n) {
  if (c) c->adds += n;
}

// The accounting contract, as data. This is normative for every counter
// in the library; the closed-form tests depend on it.
struct CountingRules {
  const char* counted;
  const char* free_ops;
  bool first_accumulation_free;
  const char* excluded;
};
CountingRules counting_rules();

// Per-detector-run accounting. The histogram maps an adds-per-symbol
// value to the number of information symbols observed at that cost, so
// sum(key * count) == adds_total and mean = adds_total / symbols.
// Block detectors attribute adds/block_len to each symbol of a block,
// which is fractional for even block lengths; per-symbol values are
// therefore reals, not integers.
struct ComplexityReport {
  std::string detector;
  std::uint64_t adds_total = 0;
  std::uint64_t symbols = 0;
  std::map<double, std::uint64_t> histogram;

  void record_block(std::uint64_t adds, int n_info_symbols);
  void record_symbol(std::uint64_t adds);
  void merge(const ComplexityReport& other);

  double adds_per_symbol_mean() const;
  double adds_per_symbol_max() const;
  double adds_per_symbol_variance() const;
  double histogram_mass() const;  // sum(key * count), equals adds_total

  // CSV with columns adds_per_symbol,count (keys ascending).
  void save_histogram_csv(std::ostream& os) const;
  void save_histogram_csv(const std::string& path) const;
};

// The add count per information symbol the original complexity summary
// reports for a 2^L-state Viterbi detector (2L adds per state). A direct
// count of the branch-metric recursion as implemented measures
// (L+1) * 2^L instead; reports show the measured value, this helper is
// the reference figure.
double va_reference_adds_per_symbol(int l);

}  // namespace uwbdet::complexity
