#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ddqkd/physmodel.hpp"

using namespace ddqkd;

namespace {

ExperimentParams no_dark(ExperimentParams p = {}) {
  p.dark_rate = 0.0;
  return p;
}

// Plain 500-term sum with factorials accumulated by multiplication.
double brute_force_p(const ClickModel& m, double mu, double eta) {
  double sum = 0.0;
  double weight = std::exp(-mu);
  for (int n = 0; n < 500; ++n) {
    if (n > 0)
      weight *= mu / n;
    sum += weight * (1.0 - std::pow(1.0 - eta * m.eta_alice, n) * (1.0 - m.p_dark)) *
           (1.0 - std::pow(1.0 - m.eta_bob * m.eta_channel, n) * (1.0 - m.p_dark));
  }
  return sum;
}

} // namespace

TEST(Transmittance, Examples) {
  EXPECT_EQ(channel_transmittance(0.2, 0.0), 1.0);
  EXPECT_EQ(channel_transmittance(0.2, 50.0), 0.1);
  EXPECT_EQ(channel_transmittance(0.2, 100.0), 0.01);
  EXPECT_THROW(channel_transmittance(-0.1, 1.0), DomainError);
  EXPECT_THROW(channel_transmittance(0.2, -1.0), DomainError);
}

TEST(Derived, FrameAndDarkCount) {
  ExperimentParams p;
  const DerivedParams d = derive(p);
  EXPECT_NEAR(d.sigma_coh, 240e-12, 1e-24);
  EXPECT_NEAR(d.frame_duration, 2.0 * std::sqrt(std::numbers::ln2) * 240e-12, 1e-15);
  EXPECT_DOUBLE_EQ(d.p_dark, 1000.0 * d.frame_duration);
  EXPECT_DOUBLE_EQ(d.i_r, 3.0);
  p.dimension = 32;
  EXPECT_DOUBLE_EQ(derive(p).i_r, 5.0);
}

TEST(Poisson, Examples) {
  EXPECT_EQ(poisson_pn(0.0, 0), 1.0);
  EXPECT_EQ(poisson_pn(0.0, 3), 0.0);
  EXPECT_NEAR(poisson_pn(0.1, 0), 0.9048374, 1e-7);
  double sum = 0.0;
  for (std::size_t n = 0; n <= 200; ++n)
    sum += poisson_pn(0.1, n);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // large n stays finite
  EXPECT_GT(poisson_pn(400.0, 400), 0.0);
  EXPECT_THROW(poisson_pn(-1.0, 0), DomainError);
}

TEST(Clicks, AlphaExamples) {
  EXPECT_NEAR(alpha_click(0, 0.3, 0.93, 1e-6), 1e-6, 1e-21);
  EXPECT_DOUBLE_EQ(alpha_click(1, 1.0, 0.93, 0.0), 0.93);
  EXPECT_NEAR(alpha_click(2, 1.0, 0.93, 0.0), 0.9951, 1e-15);
  EXPECT_THROW(alpha_click(1, 1.2, 0.93, 0.0), DomainError);
}

TEST(Clicks, BetaExamples) {
  EXPECT_NEAR(beta_click(0, 0.93, 0.1, 2e-6), 2e-6, 1e-21);
  EXPECT_NEAR(beta_click(1, 0.93, 0.1, 0.0), 0.093, 1e-15);
  EXPECT_DOUBLE_EQ(beta_click(3, 0.5, 0.5, 0.0), 0.578125);
  EXPECT_THROW(beta_click(1, 0.93, -0.1, 0.0), DomainError);
}

TEST(Postselection, MatchesBruteForceSeries) {
  ExperimentParams p = no_dark();
  p.distance_km = 50.0;
  const ClickModel m = ClickModel::from(p);
  EXPECT_NEAR(postselection_probability(p, 1.0), brute_force_p(m, 0.1, 1.0), 1e-16);

  ExperimentParams q;
  q.distance_km = 20.0;
  q.mu = 2.5;
  const ClickModel mq = ClickModel::from(q);
  EXPECT_NEAR(postselection_probability(q, 0.5), brute_force_p(mq, 2.5, 0.5), 1e-14);
}

TEST(Postselection, VanishingIntensityLeavesDarkCoincidences) {
  ExperimentParams p;
  const ClickModel m = ClickModel::from(p);
  const double pd2 = m.p_dark * m.p_dark;
  // To first order P = p_d^2 + mu (alpha_1 beta_1 - p_d^2).
  p.mu = 1e-12;
  const double first = p.mu * (m.alpha(1, 1.0) * m.beta(1) - pd2);
  EXPECT_NEAR(postselection_probability(p, 1.0), pd2 + first, 1e-12 * (pd2 + first));
  p.mu = 1e-30;
  EXPECT_NEAR(postselection_probability(p, 1.0), pd2, 1e-12 * pd2);
}

TEST(Postselection, ZeroAttenuatorWithoutDarkCounts) {
  const ExperimentParams p = no_dark();
  EXPECT_EQ(postselection_probability(p, 0.0), 0.0);
}

TEST(Postselection, TruncationAgreesWithLongerSeries) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mu(0.001, 8.0), eta(0.0, 1.0), dist(0.0, 200.0);
  for (int i = 0; i < 300; ++i) {
    ExperimentParams p;
    p.mu = mu(rng);
    p.distance_km = dist(rng);
    p.eta_alice = eta(rng);
    p.eta_bob = eta(rng);
    const ClickModel m = ClickModel::from(p);
    const double e = eta(rng);
    const std::size_t n = series_terms_needed(p.mu);
    const double truncated = postselection_probability(m, p.mu, e);
    const double longer = postselection_series(m, p.mu, e, {}, 10 * n);
    EXPECT_LT(std::abs(truncated - longer), 1e-12) << "mu=" << p.mu;
  }
}

TEST(Postselection, TermCap) {
  EXPECT_EQ(series_term_cap(0.1), 60u);
  EXPECT_EQ(series_term_cap(3.2), 90u);
  EXPECT_LE(series_terms_needed(0.1), series_term_cap(0.1));
  EXPECT_LE(series_terms_needed(50.0), series_term_cap(50.0));
}

TEST(Postselection, RejectsInvalidBetaSequence) {
  const ExperimentParams p;
  const std::vector<double> bad{0.0, 0.5, 1.5};
  EXPECT_THROW(postselection_probability(p, 1.0, bad), DomainError);
  const std::vector<double> neg{0.0, -0.1};
  EXPECT_THROW(postselection_probability(p, 1.0, neg), DomainError);
}

TEST(Postselection, CustomBetaSequenceExtendsLastEntry) {
  ExperimentParams p = no_dark();
  p.mu = 0.3;
  const std::vector<double> beta{0.0, 0.2, 0.4};
  const ClickModel m = ClickModel::from(p);
  double expect = 0.0;
  for (std::size_t n = 1; n < 80; ++n)
    expect += poisson_pn(p.mu, n) * m.alpha(n, 1.0) * (n == 1 ? 0.2 : 0.4);
  EXPECT_NEAR(postselection_probability(p, 1.0, beta), expect, 1e-15);
}

TEST(Postselection, MonotoneInEveryArgument) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto eval = [](const ExperimentParams& p, double eta) { return postselection_probability(p, eta); };
  for (int i = 0; i < 400; ++i) {
    ExperimentParams p;
    p.mu = 0.01 + 0.5 * u(rng);
    p.eta_alice = u(rng);
    p.eta_bob = u(rng);
    p.distance_km = 200.0 * u(rng);
    p.dark_rate = 1e6 * u(rng);
    const double eta = u(rng);
    const double base = eval(p, eta);
    ASSERT_GE(base, 0.0);
    ASSERT_LE(base, 1.0);

    ExperimentParams q = p;
    q.mu *= 1.3;
    EXPECT_GE(eval(q, eta), base);
    EXPECT_GE(eval(p, std::min(1.0, eta + 0.1)), base);
    q = p;
    q.eta_alice = std::min(1.0, p.eta_alice + 0.1);
    EXPECT_GE(eval(q, eta), base);
    q = p;
    q.eta_bob = std::min(1.0, p.eta_bob + 0.1);
    EXPECT_GE(eval(q, eta), base);
    q = p;
    q.distance_km = 0.5 * p.distance_km; // larger eta_T
    EXPECT_GE(eval(q, eta), base);
    q = p;
    q.dark_rate = 2.0 * p.dark_rate + 1.0;
    EXPECT_GE(eval(q, eta), base);
  }
}

TEST(Postselection, OrderedInAttenuator) {
  ExperimentParams p;
  p.distance_km = 30.0;
  EXPECT_GE(postselection_probability(p, p.eta1), postselection_probability(p, p.eta2));
}

namespace {

double alpha_ratio(std::size_t n, double e1, double e2, double ea, double d) {
  return alpha_click(n, e1, ea, d) / alpha_click(n, e2, ea, d);
}

} // namespace

// Without dark counts alpha_n(eta1)/alpha_n(eta2) never exceeds its n = 2 value.
TEST(RatioInequality, HoldsWithoutDarkCounts) {
  int checked = 0;
  for (int i = 1; i <= 10; ++i) {
    for (int j = 1; j < i; ++j) {
      for (int a = 1; a <= 5; ++a) {
        const double e1 = i / 10.0, e2 = j / 10.0, ea = a / 5.0;
        const double r2 = alpha_ratio(2, e1, e2, ea, 0.0);
        for (std::size_t n = 2; n <= 60; ++n) {
          EXPECT_LE(alpha_ratio(n, e1, e2, ea, 0.0), r2 * (1.0 + 1e-14));
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 10000);
}

// Small dark counts next to eta2 * eta_alice keep the ordering.
TEST(RatioInequality, HoldsWhenDarkCountsAreSmall) {
  for (double d : {1e-9, 4e-7, 1e-5}) {
    for (double e2 : {0.3, 0.5, 0.8}) {
      for (double ea : {0.045, 0.5, 0.93}) {
        const double r2 = alpha_ratio(2, 1.0, e2, ea, d);
        for (std::size_t n = 3; n <= 60; ++n)
          EXPECT_LE(alpha_ratio(n, 1.0, e2, ea, d), r2 * (1.0 + 1e-14)) << d << ' ' << e2 << ' ' << ea;
      }
    }
  }
}

// With a dark vacuum setting the ratio climbs toward 1/p_d, so the ordering
// is not universal.  The bounds module reports this case.
TEST(RatioInequality, FailsForDarkVacuumSetting) {
  const double d = 1e-2;
  EXPECT_GT(alpha_ratio(3, 0.5, 0.0, 0.5, d), alpha_ratio(2, 0.5, 0.0, 0.5, d));
  EXPECT_GT(alpha_ratio(10, 0.2, 0.1, 0.1, 0.1), alpha_ratio(2, 0.2, 0.1, 0.1, 0.1));
}

TEST(Params, Validation) {
  ExperimentParams p;
  EXPECT_NO_THROW(p.validate());
  p.eta2 = p.eta1;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.dimension = 1;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.mu = -0.1;
  EXPECT_THROW(p.validate(), DomainError);
}
