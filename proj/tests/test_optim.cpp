#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "imitation/errors.hpp"
#include "imitation/optim.hpp"

using namespace imitation;

namespace {

// Textbook Adam with bias correction, one scalar.
struct ScalarAdam {
  double lr, b1, b2, eps, m = 0, v = 0;
  int t = 0;
  double step(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

// Nesterov-accelerated Adam with a constant momentum schedule.
struct ScalarNadam {
  double lr, b1, b2, eps, m = 0, v = 0;
  int t = 0;
  double step(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = b1 * m / (1 - std::pow(b1, t + 1)) + (1 - b1) * g / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST(Adam, TwoStepsMatchRecurrence) {
  const AdamHyper h{0.05, 0.9, 0.999, 1e-8};
  AdamState s(1, h);
  std::vector<double> p{1.5};
  ScalarAdam ref{h.lr, h.beta1, h.beta2, h.eps};
  double x = 1.5;
  for (double g : {0.3, -1.2}) {
    const std::vector<double> grad{g};
    adam_step(s, p, grad);
    x = ref.step(x, g);
    EXPECT_NEAR(p[0], x, 1e-12);
  }
  EXPECT_EQ(s.step_count, 2);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState s(2, AdamHyper{0.01});
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{4.0, -1e-3};
  adam_step(s, p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-6);
}

TEST(Nadam, TwoStepsMatchRecurrence) {
  const AdamHyper h{0.02, 0.9, 0.999, 1e-8};
  NadamState s(1, h);
  std::vector<double> p{-0.4};
  ScalarNadam ref{h.lr, h.beta1, h.beta2, h.eps};
  double x = -0.4;
  for (double g : {2.0, 0.5}) {
    const std::vector<double> grad{g};
    nadam_step(s, p, grad);
    x = ref.step(x, g);
    EXPECT_NEAR(p[0], x, 1e-12);
  }
}

TEST(Ascend, IsAdamOnNegatedGradientBitExact) {
  AdamState a(3, AdamHyper{0.05}), b(3, AdamHyper{0.05});
  std::vector<double> pa{0.1, -2.0, 3.0}, pb = pa;
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> g{0.3 * k - 0.2, 1.0 / (k + 1), -std::sqrt(k + 2.0)};
    std::vector<double> neg(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
    ascend(a, pa, g);
    adam_step(b, pb, neg);
    EXPECT_EQ(pa, pb);
    EXPECT_EQ(a.m, b.m);
    EXPECT_EQ(a.v, b.v);
  }
}

TEST(Optim, LengthMismatchThrows) {
  AdamState s(2, AdamHyper{});
  std::vector<double> p{0, 0};
  const std::vector<double> g{1};
  EXPECT_THROW(adam_step(s, p, g), DimensionError);
  std::vector<double> p3{0, 0, 0};
  const std::vector<double> g3{1, 1, 1};
  EXPECT_THROW(nadam_step(s, p3, g3), DimensionError);
}

TEST(Optim, NonFiniteGradientLeavesStateUntouched) {
  AdamState s(2, AdamHyper{});
  std::vector<double> p{1, 2};
  const std::vector<double> g{0.5, std::nan("")};
  EXPECT_THROW(adam_step(s, p, g), NumericalError);
  EXPECT_EQ(s.step_count, 0);
  EXPECT_EQ(p, (std::vector<double>{1, 2}));
  EXPECT_EQ(s.m, (std::vector<double>{0, 0}));
}
