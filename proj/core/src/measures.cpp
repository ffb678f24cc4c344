#include "diachronic/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "diachronic/error.hpp"

namespace diachronic::measures {

ObsSpace::ObsSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require(labels_.size() >= 2, "observation space needs at least two outcomes");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  require(seen.size() == labels_.size(), "observation labels must be distinct");
}

ObsSpace ObsSpace::numeric(int size) {
  require(size >= 2, "observation space needs at least two outcomes");
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) labels.push_back(std::to_string(i));
  return ObsSpace(std::move(labels));
}

const std::string& ObsSpace::label(Symbol s) const {
  require(s >= 0 && s < size(), "symbol out of range");
  return labels_[static_cast<std::size_t>(s)];
}

Symbol ObsSpace::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  require(it != labels_.end(), "unknown observation label '" + label + "'");
  return static_cast<Symbol>(it - labels_.begin());
}

Sequence ObsSpace::parse(const std::string& text) const {
  Sequence out;
  out.reserve(text.size());
  for (char c : text) out.push_back(index_of(std::string(1, c)));
  return out;
}

std::string ObsSpace::format(std::span<const Symbol> seq) const {
  std::string out;
  for (Symbol s : seq) out += label(s);
  return out;
}

namespace seq_index {

std::size_t count(int alphabet, int length) {
  require(alphabet >= 1 && length >= 0, "invalid sequence space");
  std::size_t n = 1;
  for (int i = 0; i < length; ++i) {
    n *= static_cast<std::size_t>(alphabet);
    require(n <= kMaxDenseSize, "sequence space too large for dense representation");
  }
  return n;
}

std::size_t encode(std::span<const Symbol> seq, int alphabet) {
  std::size_t code = 0;
  for (Symbol s : seq) {
    require(s >= 0 && s < alphabet, "symbol out of range");
    code = code * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(s);
  }
  return code;
}

Sequence decode(std::size_t code, int length, int alphabet) {
  Sequence seq(static_cast<std::size_t>(length));
  for (int i = length - 1; i >= 0; --i) {
    seq[static_cast<std::size_t>(i)] = static_cast<Symbol>(code % static_cast<std::size_t>(alphabet));
    code /= static_cast<std::size_t>(alphabet);
  }
  return seq;
}

std::size_t concat(std::size_t code_x, std::size_t code_y, int length_y, int alphabet) {
  return code_x * count(alphabet, length_y) + code_y;
}

Symbol symbol_at(std::size_t code, int pos, int length, int alphabet) {
  for (int i = length - 1; i > pos; --i) code /= static_cast<std::size_t>(alphabet);
  return static_cast<Symbol>(code % static_cast<std::size_t>(alphabet));
}

}  // namespace seq_index

namespace {

double checked_sum(std::span<const double> w) {
  double total = 0.0;
  for (double v : w) {
    require(std::isfinite(v), "measure weights must be finite");
    total += v;
  }
  return total;
}

}  // namespace

ProbMeasure::ProbMeasure(int alphabet, int horizon, std::vector<double> weights)
    : alphabet_(alphabet), horizon_(horizon) {
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(horizon >= 0, "horizon must be nonnegative");
  require(weights.size() == seq_index::count(alphabet, horizon), "weight vector length must be |Y|^horizon");
  const double total = checked_sum(weights);
  for (double v : weights) require(v >= kPositivityFloor, "measure violates Cromwell's rule (weight below 1e-12)");
  require(std::abs(total - 1.0) <= kNormalizationTolerance, "measure weights must sum to 1");
  for (double& v : weights) v /= total;
  weights_ = std::make_shared<const std::vector<double>>(std::move(weights));
}

ProbMeasure::ProbMeasure(Unchecked, int alphabet, int horizon, std::vector<double> weights)
    : alphabet_(alphabet),
      horizon_(horizon),
      weights_(std::make_shared<const std::vector<double>>(std::move(weights))) {}

ProbMeasure ProbMeasure::from_unnormalized(int alphabet, int horizon, std::vector<double> weights) {
  const double total = checked_sum(weights);
  require(total > 0.0, "weights must have positive total");
  for (double& v : weights) v /= total;
  return ProbMeasure(alphabet, horizon, std::move(weights));
}

ProbMeasure ProbMeasure::stored(int alphabet, int horizon, std::vector<double> weights) {
  const ProbMeasure checked(alphabet, horizon, weights);
  return ProbMeasure(Unchecked{}, alphabet, horizon, std::move(weights));
}

ProbMeasure ProbMeasure::uniform(int alphabet, int horizon) {
  const std::size_t n = seq_index::count(alphabet, horizon);
  return ProbMeasure(alphabet, horizon, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ProbMeasure ProbMeasure::product(std::span<const double> marginal, int horizon) {
  const int alphabet = static_cast<int>(marginal.size());
  require(alphabet >= 2, "alphabet must have at least two symbols");
  std::vector<double> w{1.0};
  for (int step = 0; step < horizon; ++step) {
    std::vector<double> next;
    next.reserve(w.size() * marginal.size());
    for (double v : w)
      for (double m : marginal) next.push_back(v * m);
    w = std::move(next);
  }
  return ProbMeasure(alphabet, horizon, std::move(w));
}

double ProbMeasure::weight(std::span<const Symbol> seq) const {
  require(static_cast<int>(seq.size()) == horizon_, "sequence length must equal horizon");
  return (*weights_)[seq_index::encode(seq, alphabet_)];
}

double ProbMeasure::marginal(std::span<const Symbol> prefix) const {
  const int k = static_cast<int>(prefix.size());
  require(k <= horizon_, "prefix longer than the measure's horizon");
  const std::size_t block = seq_index::count(alphabet_, horizon_ - k);
  const std::size_t begin = seq_index::encode(prefix, alphabet_) * block;
  double total = 0.0;
  for (std::size_t i = begin; i < begin + block; ++i) total += (*weights_)[i];
  return total;
}

double ProbMeasure::conditional(std::span<const Symbol> given, std::span<const Symbol> next) const {
  require(given.size() + next.size() <= static_cast<std::size_t>(horizon_), "conditioning sequences exceed the horizon");
  Sequence joint(given.begin(), given.end());
  joint.insert(joint.end(), next.begin(), next.end());
  return marginal(joint) / marginal(given);
}

ProbMeasure ProbMeasure::marginalize(int k) const {
  require(k >= 0 && k <= horizon_, "marginal horizon out of range");
  if (k == horizon_) return *this;
  const std::size_t block = seq_index::count(alphabet_, horizon_ - k);
  std::vector<double> w(seq_index::count(alphabet_, k), 0.0);
  for (std::size_t i = 0; i < weights_->size(); ++i) w[i / block] += (*weights_)[i];
  return ProbMeasure(Unchecked{}, alphabet_, k, std::move(w));
}

ProbMeasure ProbMeasure::condition_on(Symbol y) const {
  require(horizon_ >= 2, "conditioning needs at least two remaining steps");
  const Symbol prefix[] = {y};
  return condition_on_prefix(prefix);
}

ProbMeasure ProbMeasure::condition_on_prefix(std::span<const Symbol> prefix) const {
  const int k = static_cast<int>(prefix.size());
  require(k < horizon_, "prefix must leave a nonempty remainder");
  const std::size_t block = seq_index::count(alphabet_, horizon_ - k);
  const std::size_t begin = seq_index::encode(prefix, alphabet_) * block;
  std::vector<double> w(weights_->begin() + static_cast<std::ptrdiff_t>(begin),
                        weights_->begin() + static_cast<std::ptrdiff_t>(begin + block));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return ProbMeasure(Unchecked{}, alphabet_, horizon_ - k, std::move(w));
}

CylinderMeasure::CylinderMeasure(int alphabet, int horizon, std::vector<double> weights)
    : alphabet_(alphabet), horizon_(horizon), weights_(std::move(weights)) {
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(weights_.size() == seq_index::count(alphabet, horizon), "weight vector length must be |Y|^horizon");
  const double total = checked_sum(weights_);
  for (double v : weights_) require(v >= 0.0, "cylinder measure weights must be nonnegative");
  require(std::abs(total - 1.0) <= kNormalizationTolerance, "cylinder measure weights must sum to 1");
}

CylinderMeasure CylinderMeasure::extend_to_full(const ProbMeasure& p, std::span<const Symbol> prefix, int full_horizon) {
  const int k = static_cast<int>(prefix.size());
  require(k + p.horizon() == full_horizon, "prefix length plus measure horizon must equal the full horizon");
  std::vector<double> w(seq_index::count(p.alphabet(), full_horizon), 0.0);
  const std::size_t begin = seq_index::encode(prefix, p.alphabet()) * p.size();
  std::copy(p.weights().begin(), p.weights().end(), w.begin() + static_cast<std::ptrdiff_t>(begin));
  return CylinderMeasure(p.alphabet(), full_horizon, std::move(w));
}

CylinderMeasure CylinderMeasure::point_mass(int alphabet, std::span<const Symbol> seq) {
  const int n = static_cast<int>(seq.size());
  std::vector<double> w(seq_index::count(alphabet, n), 0.0);
  w[seq_index::encode(seq, alphabet)] = 1.0;
  return CylinderMeasure(alphabet, n, std::move(w));
}

CylinderMeasure CylinderMeasure::from(const ProbMeasure& p) {
  return CylinderMeasure(p.alphabet(), p.horizon(), std::vector<double>(p.weights().begin(), p.weights().end()));
}

double CylinderMeasure::mass(std::span<const Symbol> prefix) const {
  const int k = static_cast<int>(prefix.size());
  require(k <= horizon_, "prefix longer than the measure's horizon");
  const std::size_t block = seq_index::count(alphabet_, horizon_ - k);
  const std::size_t begin = seq_index::encode(prefix, alphabet_) * block;
  double total = 0.0;
  for (std::size_t i = begin; i < begin + block; ++i) total += weights_[i];
  return total;
}

bool CylinderMeasure::concentrated_on_prefix(int len, Sequence* prefix_out) const {
  require(len >= 0 && len <= horizon_, "prefix length out of range");
  const std::size_t block = seq_index::count(alphabet_, horizon_ - len);
  const std::size_t blocks = weights_.size() / block;
  for (std::size_t b = 0; b < blocks; ++b) {
    double total = 0.0;
    for (std::size_t i = b * block; i < (b + 1) * block; ++i) total += weights_[i];
    if (std::abs(total - 1.0) <= kNormalizationTolerance) {
      if (prefix_out) *prefix_out = seq_index::decode(b, len, alphabet_);
      return true;
    }
  }
  return false;
}

LossFn::LossFn(int decisions, int alphabet, int horizon, std::vector<double> table)
    : decisions_(decisions), alphabet_(alphabet), horizon_(horizon) {
  require(decisions >= 1, "decision space must be nonempty");
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(table.size() == static_cast<std::size_t>(decisions) * seq_index::count(alphabet, horizon),
          "loss table size must be |D| * |Y|^horizon");
  for (double v : table) require(v >= 0.0 && v <= 1.0, "loss values must lie in [0, 1]");
  table_ = std::make_shared<const std::vector<double>>(std::move(table));
}

double LossFn::at(int d, std::span<const Symbol> x) const {
  require(d >= 0 && d < decisions_, "decision out of range");
  require(static_cast<int>(x.size()) == horizon_, "loss argument length must equal the horizon");
  return (*this)(d, seq_index::encode(x, alphabet_));
}

std::span<const double> LossFn::row(int d) const {
  require(d >= 0 && d < decisions_, "decision out of range");
  return std::span<const double>(*table_).subspan(static_cast<std::size_t>(d) * outcomes(), outcomes());
}

double LossFn::expected(int d, const ProbMeasure& p) const {
  require(p.horizon() == horizon_ && p.alphabet() == alphabet_, "loss and measure must share the horizon");
  const auto r = row(d);
  const auto w = p.weights();
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) total += r[i] * w[i];
  return total;
}

double marginal(const ProbMeasure& p, std::span<const Symbol> prefix) { return p.marginal(prefix); }

double conditional(const ProbMeasure& p, std::span<const Symbol> given, std::span<const Symbol> next) {
  return p.conditional(given, next);
}

ProbMeasure condition_on(const ProbMeasure& p, Symbol y) { return p.condition_on(y); }

CylinderMeasure extend_to_full(const ProbMeasure& p, std::span<const Symbol> prefix, int full_horizon) {
  return CylinderMeasure::extend_to_full(p, prefix, full_horizon);
}

}  // namespace diachronic::measures
