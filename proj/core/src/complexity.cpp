#include "uwbdet/complexity.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace uwbdet::complexity {

CountingRules counting_rules() {
  return CountingRules{
      "one count per binary addition or subtraction of two real values",
      "sign inversion, absolute value, sign extraction, comparisons",
      true,
      "ACR front-end, DD decisions, stopping-radius computation, final differential decoding",
  };
}

void ComplexityReport::record_block(std::uint64_t adds, int n_info_symbols) {
  if (n_info_symbols < 1) throw std::invalid_argument("report: empty block");
  adds_total += adds;
  symbols += static_cast<std::uint64_t>(n_info_symbols);
  histogram[static_cast<double>(adds) / n_info_symbols] +=
      static_cast<std::uint64_t>(n_info_symbols);
}

void ComplexityReport::record_symbol(std::uint64_t adds) {
  adds_total += adds;
  ++symbols;
  histogram[static_cast<double>(adds)] += 1;
}

void ComplexityReport::merge(const ComplexityReport& other) {
  if (detector.empty()) detector = other.detector;
  adds_total += other.adds_total;
  symbols += other.symbols;
  for (const auto& [k, c] : other.histogram) histogram[k] += c;
}

double ComplexityReport::adds_per_symbol_mean() const {
  return symbols ? static_cast<double>(adds_total) / static_cast<double>(symbols) : 0.0;
}

double ComplexityReport::adds_per_symbol_max() const {
  return histogram.empty() ? 0.0 : histogram.rbegin()->first;
}

double ComplexityReport::adds_per_symbol_variance() const {
  if (symbols == 0) return 0.0;
  const double mean = adds_per_symbol_mean();
  double acc = 0.0;
  for (const auto& [k, c] : histogram) acc += static_cast<double>(c) * (k - mean) * (k - mean);
  return acc / static_cast<double>(symbols);
}

double ComplexityReport::histogram_mass() const {
  double acc = 0.0;
  for (const auto& [k, c] : histogram) acc += k * static_cast<double>(c);
  return acc;
}

void ComplexityReport::save_histogram_csv(std::ostream& os) const {
  os << "adds_per_symbol,count\n";
  char buf[64];
  for (const auto& [k, c] : histogram) {
    std::snprintf(buf, sizeof buf, "%.17g", k);
    os << buf << ',' << c << '\n';
  }
}

void ComplexityReport::save_histogram_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path);
  save_histogram_csv(out);
}

double va_reference_adds_per_symbol(int l) {
  return 2.0 * l * std::ldexp(1.0, l);  // 2L * 2^L
}

}  // namespace uwbdet::complexity
