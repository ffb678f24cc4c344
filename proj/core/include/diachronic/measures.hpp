#pragma once

// Finite probability measures on Y^k.
//
// Sequences over an alphabet of size |Y| are stored densely in lexicographic
// order: the sequence (s_1, ..., s_k) has code sum_i s_i |Y|^(k-i). A prefix of
// length j therefore owns the contiguous block of codes
// [code(prefix) * |Y|^(k-j), (code(prefix) + 1) * |Y|^(k-j)).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace diachronic::measures {

inline constexpr double kPositivityFloor = 1e-12;
inline constexpr double kNormalizationTolerance = 1e-9;
/// Largest dense state space the library will allocate (|Y|^k).
inline constexpr std::size_t kMaxDenseSize = std::size_t{1} << 22;

using Symbol = int;
using Sequence = std::vector<Symbol>;

/// The finite observation space Y with its canonical order.
class ObsSpace {
 public:
  explicit ObsSpace(std::vector<std::string> labels);
  /// Y = {0, 1, ..., size-1} labelled by their decimal digits.
  static ObsSpace numeric(int size);

  [[nodiscard]] int size() const noexcept { return static_cast<int>(labels_.size()); }
  [[nodiscard]] const std::string& label(Symbol s) const;
  [[nodiscard]] Symbol index_of(const std::string& label) const;
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Parses a string of concatenated single-character labels, e.g. "011".
  [[nodiscard]] Sequence parse(const std::string& text) const;
  [[nodiscard]] std::string format(std::span<const Symbol> seq) const;

  friend bool operator==(const ObsSpace&, const ObsSpace&) = default;

 private:
  std::vector<std::string> labels_;
};

/// Canonical indexing of Y^k.
namespace seq_index {

/// |Y|^k; throws InvalidArgument past kMaxDenseSize.
std::size_t count(int alphabet, int length);
std::size_t encode(std::span<const Symbol> seq, int alphabet);
Sequence decode(std::size_t code, int length, int alphabet);
/// code(xy) = code(x) * |Y|^|y| + code(y).
std::size_t concat(std::size_t code_x, std::size_t code_y, int length_y, int alphabet);
/// Symbol at 0-based position `pos` of the sequence with the given code.
Symbol symbol_at(std::size_t code, int pos, int length, int alphabet);

}  // namespace seq_index

/// A Cromwell-positive probability measure on Y^horizon.
class ProbMeasure {
 public:
  /// Weights must be in SeqIndex order, each at least kPositivityFloor, and
  /// sum to one within kNormalizationTolerance; they are renormalized exactly.
  ProbMeasure(int alphabet, int horizon, std::vector<double> weights);

  /// Normalizes arbitrary positive weights.
  static ProbMeasure from_unnormalized(int alphabet, int horizon, std::vector<double> weights);
  static ProbMeasure uniform(int alphabet, int horizon);
  /// Same checks as the constructor but keeps the weights bit for bit; used
  /// when reading back a measure that was normalized before it was written.
  static ProbMeasure stored(int alphabet, int horizon, std::vector<double> weights);
  /// i.i.d. product of a one-step distribution.
  static ProbMeasure product(std::span<const double> marginal, int horizon);

  [[nodiscard]] int alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] int horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t size() const noexcept { return weights_->size(); }
  [[nodiscard]] std::span<const double> weights() const noexcept { return *weights_; }
  [[nodiscard]] double weight(std::size_t code) const { return weights_->at(code); }
  [[nodiscard]] double weight(std::span<const Symbol> seq) const;

  /// P(x Y^(K-k)).
  [[nodiscard]] double marginal(std::span<const Symbol> prefix) const;
  /// P(x' | x) = P(x x') / P(x).
  [[nodiscard]] double conditional(std::span<const Symbol> given, std::span<const Symbol> next) const;
  /// Distribution of the first k coordinates.
  [[nodiscard]] ProbMeasure marginalize(int k) const;
  /// One Bayesian update: weights P(y x) / P(y) on Y^(horizon-1).
  [[nodiscard]] ProbMeasure condition_on(Symbol y) const;
  /// Conditional law of the remaining coordinates given a prefix.
  [[nodiscard]] ProbMeasure condition_on_prefix(std::span<const Symbol> prefix) const;

  friend bool operator==(const ProbMeasure& a, const ProbMeasure& b) {
    return a.alphabet_ == b.alphabet_ && a.horizon_ == b.horizon_ && *a.weights_ == *b.weights_;
  }

 private:
  struct Unchecked {};
  ProbMeasure(Unchecked, int alphabet, int horizon, std::vector<double> weights);

  int alphabet_;
  int horizon_;
  // Shared immutable storage: copies are cheap and safe across threads.
  std::shared_ptr<const std::vector<double>> weights_;
};

/// A probability measure on Y^N that may vanish off a prefix cylinder; the
/// class of measures Forecaster uses once Reality has been merged into him.
class CylinderMeasure {
 public:
  CylinderMeasure(int alphabet, int horizon, std::vector<double> weights);

  /// Embeds P over Y^(N - |prefix|) into Y^N: weight P(x without prefix) on the
  /// cylinder of `prefix`, zero elsewhere.
  static CylinderMeasure extend_to_full(const ProbMeasure& p, std::span<const Symbol> prefix, int full_horizon);
  static CylinderMeasure point_mass(int alphabet, std::span<const Symbol> seq);
  static CylinderMeasure from(const ProbMeasure& p);

  [[nodiscard]] int alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] int horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] double weight(std::size_t code) const { return weights_.at(code); }
  [[nodiscard]] double mass(std::span<const Symbol> prefix) const;

  /// True if Q(x Y^(N-len)) = 1 within tolerance for some x of length `len`;
  /// that x is written to `prefix_out` when non-null.
  [[nodiscard]] bool concentrated_on_prefix(int len, Sequence* prefix_out = nullptr) const;

  friend bool operator==(const CylinderMeasure&, const CylinderMeasure&) = default;

 private:
  int alphabet_;
  int horizon_;
  std::vector<double> weights_;
};

/// A loss function lambda(d, x) on D x Y^horizon with values in [0, 1].
class LossFn {
 public:
  LossFn(int decisions, int alphabet, int horizon, std::vector<double> table);

  [[nodiscard]] int decisions() const noexcept { return decisions_; }
  [[nodiscard]] int alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] int horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t outcomes() const noexcept { return table_->size() / static_cast<std::size_t>(decisions_); }
  [[nodiscard]] double operator()(int d, std::size_t code) const { return (*table_)[static_cast<std::size_t>(d) * outcomes() + code]; }
  [[nodiscard]] double at(int d, std::span<const Symbol> x) const;
  [[nodiscard]] std::span<const double> row(int d) const;
  [[nodiscard]] std::span<const double> table() const noexcept { return *table_; }

  /// Expected loss of decision d under P (P must share the horizon).
  [[nodiscard]] double expected(int d, const ProbMeasure& p) const;

  friend bool operator==(const LossFn& a, const LossFn& b) {
    return a.decisions_ == b.decisions_ && a.alphabet_ == b.alphabet_ && a.horizon_ == b.horizon_ &&
           *a.table_ == *b.table_;
  }

 private:
  int decisions_;
  int alphabet_;
  int horizon_;
  std::shared_ptr<const std::vector<double>> table_;
};

// Free-function forms of the core operations.
double marginal(const ProbMeasure& p, std::span<const Symbol> prefix);
double conditional(const ProbMeasure& p, std::span<const Symbol> given, std::span<const Symbol> next);
ProbMeasure condition_on(const ProbMeasure& p, Symbol y);
CylinderMeasure extend_to_full(const ProbMeasure& p, std::span<const Symbol> prefix, int full_horizon);

}  // namespace diachronic::measures
