#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ddqkd/bounds.hpp"
#include "ddqkd/simulator.hpp"

using namespace ddqkd;
using namespace ddqkd::sim;

namespace {

SimScenario section4(std::uint64_t frames, std::uint64_t seed = 1) {
  SimScenario s;
  s.true_zeta_t = s.true_zeta_w = 7.0 / 9.0;
  s.n_frames = frames;
  s.seed = seed;
  return s;
}

} // namespace

TEST(Simulator, PostselectionConvergesToSeries) {
  const SimScenario s = section4(10'000'000, 17);
  const SimResult r = run_scenario(s);
  for (std::size_t i = 0; i < 2; ++i) {
    const Measured m = r.postselection(i);
    EXPECT_LT(std::abs(m.value - r.truth.per_setting[i].postselection), 5.0 * m.se) << i;
    const Measured o = r.omega_t(i);
    EXPECT_LT(std::abs(o.value - r.truth.per_setting[i].omega_t), 5.0 * o.se + 1e-12) << i;
  }
  // analytic truth is the physmodel series
  EXPECT_DOUBLE_EQ(r.truth.per_setting[0].postselection, postselection_probability(s.params, s.params.eta1));
}

TEST(Simulator, MultiplierIsOneWithoutExcessNoise) {
  SimScenario s = section4(500'000);
  s.true_zeta_t = s.true_zeta_w = 0.0;
  s.delta_omega_t = s.delta_omega_w = 1.0;
  const SimResult r = run_scenario(s);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.omega_t(i).value, 1.0);
    EXPECT_EQ(r.omega_w(i).value, 1.0);
  }
}

TEST(Simulator, VacuumSourceGivesDarkCoincidences) {
  SimScenario s = section4(2'000'000, 3);
  s.params.mu = 0.0;
  s.params.dark_rate = 5e8; // p_d ~ 0.2 so coincidences are observable
  const double pd = derive(s.params).p_dark;
  const SimResult r = run_scenario(s);
  for (std::size_t i = 0; i < 2; ++i) {
    const double expect = pd * pd * s.sift_prob;
    const double n = static_cast<double>(r.tallies[i].frames);
    const double se = std::sqrt(expect * (1.0 - expect) / n);
    EXPECT_LT(std::abs(r.raw_postselection_rate(i) - expect), 5.0 * se);
    EXPECT_EQ(r.tallies[i].frames_by_n[0], r.tallies[i].frames);
  }
}

TEST(Simulator, ErrorScalesAsInverseRootN) {
  const SimScenario base = section4(0);
  const double truth = postselection_probability(base.params, base.params.eta1);
  auto rms = [&](std::uint64_t frames) {
    double ss = 0.0;
    const int reps = 40;
    for (int k = 0; k < reps; ++k) {
      SimScenario s = base;
      s.n_frames = frames;
      s.seed = 1000 + static_cast<std::uint64_t>(k);
      const double e = run_scenario(s, 1).postselection(0).value - truth;
      ss += e * e;
    }
    return std::sqrt(ss / reps);
  };
  const double small = rms(100'000);
  const double large = rms(400'000);
  const double ratio = small / large; // 2 expected
  EXPECT_GT(ratio, 1.0);
  EXPECT_LT(ratio, 4.0);
}

TEST(Simulator, BitIdenticalAcrossThreadCounts) {
  SimScenario s = section4(1'000'000, 99);
  s.tamper_beta = attack_library(AttackId::boost_multiphoton, 0.4, s.params);
  const SimResult a = run_scenario(s, 1);
  for (std::size_t threads : {2u, 3u, 8u}) {
    const SimResult b = run_scenario(s, threads);
    EXPECT_EQ(a.tallies, b.tallies) << threads;
  }
  s.seed = 100;
  EXPECT_NE(a.tallies, run_scenario(s, 1).tallies);
}

TEST(Simulator, AliceUnaffectedByTampering) {
  SimScenario honest = section4(1'000'000, 5);
  SimScenario attacked = honest;
  attacked.tamper_beta = attack_library(AttackId::pns_suppress_single, 1.0, honest.params);
  const SimResult a = run_scenario(honest);
  const SimResult b = run_scenario(attacked);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.tallies[i].frames_by_n, b.tallies[i].frames_by_n);
    EXPECT_EQ(a.tallies[i].alice_clicks_by_n, b.tallies[i].alice_clicks_by_n);
  }
  EXPECT_NE(a.tallies[0].postselected, b.tallies[0].postselected);
}

TEST(Simulator, AliceClickRatesMatchModel) {
  const SimResult r = run_scenario(section4(2'000'000, 8));
  const ClickModel m = ClickModel::from(ExperimentParams{});
  for (std::size_t i = 0; i < 2; ++i) {
    const double eta = r.settings[i].attenuator;
    for (std::size_t n = 0; n < 3; ++n) {
      const double frames = static_cast<double>(r.tallies[i].frames_by_n[n]);
      const double rate = static_cast<double>(r.tallies[i].alice_clicks_by_n[n]) / frames;
      const double a = m.alpha(n, eta);
      EXPECT_LT(std::abs(rate - a), 5.0 * std::sqrt(a * (1.0 - a) / frames) + 1e-12) << i << ' ' << n;
    }
  }
}

TEST(Simulator, RejectsBadScenarios) {
  SimScenario s = section4(0);
  EXPECT_THROW(run_scenario(s), DomainError);
  s.n_frames = 10;
  s.tamper_beta = {0.0, 0.5};
  EXPECT_THROW(run_scenario(s), DomainError); // beta_0 below p_d
  s.tamper_beta.clear();
  s.sift_prob = 0.0;
  EXPECT_THROW(run_scenario(s), DomainError);
}

TEST(Simulator, TruthConsistentWithTamperTable) {
  SimScenario s = section4(1000);
  s.tamper_beta = attack_library(AttackId::uniform_loss, 0.5, s.params);
  const SimTruth t = compute_truth(s);
  EXPECT_EQ(t.beta1, s.tamper_beta[1]);
  const ClickModel m = ClickModel::from(s.params);
  EXPECT_DOUBLE_EQ(t.f_key, poisson_pn(s.params.mu, 1) * m.alpha(1, 1.0) * t.beta1 /
                                t.per_setting[0].postselection);
}

TEST(Attacks, DefinitionsAtFullStrength) {
  ExperimentParams p;
  p.distance_km = 40.0;
  const ClickModel m = ClickModel::from(p);
  ClickModel lossless = m;
  lossless.eta_channel = 1.0;
  const auto pns = attack_library(AttackId::pns_suppress_single, 1.0, p);
  EXPECT_EQ(pns[0], m.p_dark);
  EXPECT_EQ(pns[1], m.p_dark);
  EXPECT_DOUBLE_EQ(pns[2], lossless.beta(2));
  EXPECT_DOUBLE_EQ(pns[5], lossless.beta(5));

  for (double s : {0.0, 0.3, 1.0}) {
    const auto ul = attack_library(AttackId::uniform_loss, s, p);
    for (std::size_t n = 1; n < 6; ++n)
      EXPECT_NEAR(ul[n], m.p_dark + (1.0 - s) * (m.beta(n) - m.p_dark), 1e-15);
  }
  const auto boost = attack_library(AttackId::boost_multiphoton, 1.0, p);
  EXPECT_DOUBLE_EQ(boost[1], m.beta(1));
  EXPECT_EQ(boost[2], 1.0);
}

TEST(Attacks, StayWithinDarkFloorAndOne) {
  for (double km : {0.0, 100.0}) {
    ExperimentParams p;
    p.distance_km = km;
    const double pd = derive(p).p_dark;
    for (AttackId a : kAllAttacks) {
      for (double s = 0.0; s <= 1.0; s += 0.1) {
        for (double b : attack_library(a, s, p)) {
          EXPECT_GE(b, pd);
          EXPECT_LE(b, 1.0);
        }
      }
    }
  }
}

TEST(Attacks, NamesAndErrors) {
  for (AttackId a : kAllAttacks)
    EXPECT_EQ(parse_attack(to_string(a)), a);
  EXPECT_THROW(parse_attack("beam-splitter"), DomainError);
  EXPECT_THROW(attack_library(AttackId::uniform_loss, 1.5, ExperimentParams{}), DomainError);
}

TEST(Simulator, DecoySettingsRun) {
  SimScenario s = section4(1'000'000, 2);
  s.settings = decoy_settings(s.params, {0.1, 0.02, 0.0}, true);
  const SimResult r = run_scenario(s);
  ASSERT_EQ(r.tallies.size(), 3u);
  EXPECT_TRUE(r.vacuum_without_counts(2));
  const DecoyObservables o = r.decoy_observables();
  EXPECT_GT(o.gain[0], o.gain[1]);
  EXPECT_EQ(o.omega_t[2], 0.0);
}
