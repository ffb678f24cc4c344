#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "diachronic/error.hpp"
#include "diachronic/measures.hpp"
#include "diachronic/rng.hpp"

using namespace diachronic;
using namespace diachronic::measures;

namespace {

ProbMeasure random_measure(CounterRng& rng, int alphabet, int horizon) {
  std::vector<double> w(seq_index::count(alphabet, horizon));
  for (double& v : w) v = 0.05 + rng.uniform();
  return ProbMeasure::from_unnormalized(alphabet, horizon, std::move(w));
}

const ProbMeasure kSkewed(2, 2, {0.1, 0.2, 0.3, 0.4});

}  // namespace

TEST(SeqIndex, EncodeDecodeRoundTrip) {
  for (int len = 0; len <= 4; ++len)
    for (std::size_t code = 0; code < seq_index::count(3, len); ++code)
      EXPECT_EQ(seq_index::encode(seq_index::decode(code, len, 3), 3), code);
}

TEST(SeqIndex, ConcatenationLaw) {
  const Sequence x{1, 0, 2};
  const Sequence y{2, 1};
  Sequence xy = x;
  xy.insert(xy.end(), y.begin(), y.end());
  EXPECT_EQ(seq_index::encode(xy, 3), seq_index::concat(seq_index::encode(x, 3), seq_index::encode(y, 3), 2, 3));
}

TEST(SeqIndex, RefusesHugeSpaces) { EXPECT_THROW(seq_index::count(2, 40), InvalidArgument); }

TEST(ObsSpace, ParseAndFormat) {
  const ObsSpace space({"H", "T"});
  EXPECT_EQ(space.parse("HTT"), (Sequence{0, 1, 1}));
  EXPECT_EQ(space.format(Sequence{1, 0}), "TH");
  EXPECT_THROW(ObsSpace({"a"}), InvalidArgument);
  EXPECT_THROW(ObsSpace({"a", "a"}), InvalidArgument);
}

TEST(ProbMeasure, MarginalExamples) {
  const auto u = ProbMeasure::uniform(2, 2);
  EXPECT_DOUBLE_EQ(u.marginal(Sequence{0}), 0.5);
  EXPECT_DOUBLE_EQ(u.marginal(Sequence{}), 1.0);
  EXPECT_NEAR(kSkewed.marginal(Sequence{1}), 0.7, 1e-15);
  EXPECT_THROW((void)u.marginal(Sequence{0, 0, 0}), InvalidArgument);
}

TEST(ProbMeasure, ConditionalExamples) {
  const auto u = ProbMeasure::uniform(2, 2);
  EXPECT_DOUBLE_EQ(u.conditional(Sequence{0}, Sequence{0}), 0.5);
  EXPECT_NEAR(kSkewed.conditional(Sequence{1}, Sequence{1}), 0.4 / 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(kSkewed.conditional(Sequence{}, Sequence{0, 1}), kSkewed.marginal(Sequence{0, 1}));
  EXPECT_THROW((void)u.conditional(Sequence{0}, Sequence{0, 1}), InvalidArgument);
}

TEST(ProbMeasure, ConditionOnExamples) {
  EXPECT_EQ(ProbMeasure::uniform(2, 2).condition_on(0), ProbMeasure::uniform(2, 1));
  const auto c = kSkewed.condition_on(1);
  EXPECT_NEAR(c.weight(0), 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(c.weight(1), 4.0 / 7.0, 1e-15);
  const auto twice = ProbMeasure::uniform(2, 3).condition_on(1).condition_on(0);
  EXPECT_EQ(twice.horizon(), 1);
  EXPECT_NEAR(twice.weight(0), 0.5, 1e-15);
  EXPECT_THROW((void)ProbMeasure::uniform(2, 1).condition_on(0), InvalidArgument);
}

TEST(ProbMeasure, RejectsInvalidWeights) {
  EXPECT_THROW(ProbMeasure(2, 1, {1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(ProbMeasure(2, 1, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(ProbMeasure(2, 1, {0.5}), InvalidArgument);
  EXPECT_THROW(ProbMeasure(2, 1, {NAN, 1.0}), InvalidArgument);
}

TEST(ProbMeasure, ProductMatchesHandComputation) {
  const double m[] = {0.3, 0.7};
  const auto p = ProbMeasure::product(m, 2);
  EXPECT_NEAR(p.weight(Sequence{1, 0}), 0.21, 1e-15);
  EXPECT_NEAR(p.weight(Sequence{1, 1}), 0.49, 1e-15);
}

TEST(ProbMeasureProperty, ConditionalsSumToOne) {
  CounterRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int a = 2 + static_cast<int>(rng.below(2));
    const int k = 1 + static_cast<int>(rng.below(4));
    const auto p = random_measure(rng, a, k);
    for (int len = 0; len < k; ++len)
      for (std::size_t code = 0; code < seq_index::count(a, len); ++code) {
        const auto x = seq_index::decode(code, len, a);
        double total = 0.0;
        for (Symbol y = 0; y < a; ++y) total += p.conditional(x, Sequence{y});
        EXPECT_NEAR(total, 1.0, 1e-9);
      }
  }
}

TEST(ProbMeasureProperty, ChainRule) {
  CounterRng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_measure(rng, 2, 6);
    for (int len = 0; len < 6; ++len)
      for (std::size_t code = 0; code < seq_index::count(2, len); ++code) {
        auto x = seq_index::decode(code, len, 2);
        for (Symbol y = 0; y < 2; ++y) {
          auto xy = x;
          xy.push_back(y);
          EXPECT_NEAR(p.marginal(xy), p.marginal(x) * p.conditional(x, Sequence{y}), 1e-12);
        }
      }
  }
}

// Repeated condition_on along a path must reproduce P(y_n | y_1..y_{n-1})
// computed directly from sums of the joint weights.
TEST(ProbMeasureProperty, RepeatedConditioningMatchesBruteForce) {
  CounterRng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 4;
    const auto p = random_measure(rng, 2, N);
    for (std::size_t code = 0; code < seq_index::count(2, N); ++code) {
      const auto path = seq_index::decode(code, N, 2);
      ProbMeasure cur = p;
      for (int n = 0; n < N; ++n) {
        double joint = 0.0;
        double prefix = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) {
          const auto s = seq_index::decode(c, N, 2);
          if (!std::equal(path.begin(), path.begin() + n, s.begin())) continue;
          prefix += p.weight(c);
          if (s[static_cast<std::size_t>(n)] == path[static_cast<std::size_t>(n)]) joint += p.weight(c);
        }
        EXPECT_NEAR(cur.marginal(Sequence{path[static_cast<std::size_t>(n)]}), joint / prefix, 1e-12);
        if (n + 1 < N) cur = cur.condition_on(path[static_cast<std::size_t>(n)]);
      }
    }
  }
}

TEST(ProbMeasure, MarginalizeAndPrefixConditioning) {
  CounterRng rng(14);
  const auto p = random_measure(rng, 3, 3);
  const auto m = p.marginalize(2);
  EXPECT_NEAR(m.weight(Sequence{2, 1}), p.marginal(Sequence{2, 1}), 1e-15);
  const auto c = p.condition_on_prefix(Sequence{1, 2});
  EXPECT_NEAR(c.weight(Sequence{0}), p.conditional(Sequence{1, 2}, Sequence{0}), 1e-15);
}

TEST(CylinderMeasure, ExtendToFullExamples) {
  const auto a = extend_to_full(ProbMeasure::uniform(2, 1), Sequence{0}, 2);
  EXPECT_EQ(std::vector<double>(a.weights().begin(), a.weights().end()), (std::vector<double>{0.5, 0.5, 0, 0}));
  const auto b = extend_to_full(ProbMeasure(2, 1, {0.3, 0.7}), Sequence{1}, 2);
  EXPECT_EQ(std::vector<double>(b.weights().begin(), b.weights().end()), (std::vector<double>{0, 0, 0.3, 0.7}));
  const auto c = extend_to_full(kSkewed, Sequence{}, 2);
  EXPECT_EQ(c, CylinderMeasure::from(kSkewed));
  EXPECT_THROW((void)extend_to_full(kSkewed, Sequence{1}, 2), InvalidArgument);
}

TEST(CylinderMeasureProperty, ExtensionMassAndSupport) {
  CounterRng rng(15);
  for (int trial = 0; trial < 40; ++trial) {
    const int N = 4;
    const int k = static_cast<int>(rng.below(N));
    Sequence prefix;
    for (int i = 0; i < k; ++i) prefix.push_back(static_cast<Symbol>(rng.below(2)));
    const auto q = extend_to_full(random_measure(rng, 2, N - k), prefix, N);
    double total = 0.0;
    for (std::size_t code = 0; code < q.weights().size(); ++code) {
      total += q.weight(code);
      const auto s = seq_index::decode(code, N, 2);
      if (!std::equal(prefix.begin(), prefix.end(), s.begin())) EXPECT_EQ(q.weight(code), 0.0);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    Sequence found;
    ASSERT_TRUE(q.concentrated_on_prefix(k, &found));
    EXPECT_EQ(found, prefix);
  }
}

TEST(LossFn, ValidatesRangeAndExpectation) {
  EXPECT_THROW(LossFn(2, 2, 1, {0, 1, 1, 1.5}), InvalidArgument);
  const LossFn loss(2, 2, 1, {0, 1, 1, 0});
  const ProbMeasure p(2, 1, {0.3, 0.7});
  EXPECT_NEAR(loss.expected(0, p), 0.7, 1e-15);
  EXPECT_NEAR(loss.expected(1, p), 0.3, 1e-15);
  EXPECT_EQ(loss.at(1, Sequence{0}), 1.0);
}
