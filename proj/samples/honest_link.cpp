// Bounds for an honest 50 km link at the SNSPD operating point, next to the
// values an eavesdropper-free channel actually has.

#include <cstdio>

#include "ddqkd/baselines.hpp"
#include "ddqkd/bounds.hpp"
#include "ddqkd/infomodel.hpp"
#include "ddqkd/observables.hpp"

int main() {
  using namespace ddqkd;

  ExperimentParams p;
  p.distance_km = 50.0;
  const double zeta = info::zeta_from_broadening(10e-12, p.sigma_cor);
  const NoiseModel noise = NoiseModel::matched(zeta, zeta);

  const ChannelObservables obs = expected_channel_observables(p, noise);
  const BoundEstimates est = bounds::estimate(obs, p);
  const baselines::ExactQuantities exact = baselines::infinite_decoy_oracle(p);
  const auto model = info::InfoModelParams::from(p);
  const auto cap = info::capacity_from_bounds(est.f_lb, est.zeta_t_ub, est.zeta_w_ub, model);

  std::printf("P(eta1) = %.6g  P(eta2) = %.6g\n", obs.p_eta1, obs.p_eta2);
  std::printf("beta1   >= %.6g   (true %.6g)\n", est.beta1_lb, exact.beta1);
  std::printf("F       >= %.6g   (true %.6g)\n", est.f_lb, exact.f_eta1);
  std::printf("zeta_t  <= %.6g   (true %.6g)\n", est.zeta_t_ub, zeta);
  std::printf("dI      >= %.6g bits per coincidence\n", cap.delta_i);
  return 0;
}
