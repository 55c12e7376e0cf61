#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coopreg/paper_example.hpp"
#include "coopreg/regulator.hpp"
#include "coopreg/scenario.hpp"
#include "coopreg/synthesis.hpp"
#include "helpers.hpp"

using namespace coopreg;
using namespace coopreg::testing;

namespace {

AgentPlant reference_agent(int i = 1) {
  return paper_example_scenario().agents[static_cast<std::size_t>(i - 1)];
}

Eigen::MatrixXd reference_k1() {
  Eigen::MatrixXd K1(1, 2);
  K1 << -0.075, -0.465;
  return K1;
}

AgentPlant random_observable_plant(std::mt19937_64& rng, int n = 3, int s = 2) {
  AgentPlant a;
  a.delays = {0};
  a.A = random_with_radius(rng, n, 1.1);
  a.B = {random_matrix(rng, n, 1)};
  a.Ex = random_matrix(rng, n, 2);
  a.Ew = random_matrix(rng, n, s);
  a.C = random_matrix(rng, 1, n);
  a.D = {Eigen::MatrixXd::Zero(1, 1)};
  a.Fx = random_matrix(rng, 1, 2);
  a.Fw = random_matrix(rng, 1, s);
  a.Cm = Eigen::MatrixXd::Identity(n, n);  // full state measurement
  a.Dm = {Eigen::MatrixXd::Zero(n, 1)};
  a.Fxm = random_matrix(rng, n, 2);
  a.Fwm = random_matrix(rng, n, s);
  a.Q = random_with_radius(rng, s, 1.0);
  a.validate();
  return a;
}

}  // namespace

TEST_CASE("reference gain is certified stable at the frozen radius") {
  const K1Certificate cert = verify_k1(reference_agent(), reference_k1());
  CHECK(cert.stable);
  CHECK(cert.radius == doctest::Approx(0.7782698468624166).epsilon(1e-9));
}

TEST_CASE("zero gain leaves the double integrator marginal") {
  const K1Certificate cert = verify_k1(reference_agent(), Eigen::MatrixXd::Zero(1, 2));
  CHECK_FALSE(cert.stable);
  CHECK(cert.radius == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gain search stabilizes the reference plant") {
  const auto K1 = search_k1(reference_agent(), 10000);
  REQUIRE(K1.has_value());
  CHECK(verify_k1(reference_agent(), *K1).stable);
}

TEST_CASE("gain search returns not-found when no input authority exists") {
  AgentPlant a = reference_agent();
  a.A = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  for (auto& Bl : a.B) Bl.setZero();
  CHECK_FALSE(search_k1(a, 2000).has_value());
}

TEST_CASE("delay-free stabilizable pairs are found via the Riccati seed") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    AgentPlant a = random_observable_plant(rng);
    const auto K1 = search_k1(a, 4000, 17 + static_cast<unsigned>(trial));
    REQUIRE(K1.has_value());
    CHECK(verify_k1(a, *K1).stable);
  }
}

TEST_CASE("every gain returned by the search verifies") {
  std::mt19937_64 rng(5);
  int found = 0;
  for (int trial = 0; trial < 50; ++trial) {
    AgentPlant a = random_observable_plant(rng, 2);
    a.delays = {0, 1 + trial % 2};
    a.B = {random_matrix(rng, 2, 1), random_matrix(rng, 2, 1)};
    a.D = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    a.Dm = {Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(2, 1)};
    a.validate();
    if (const auto K1 = search_k1(a, 3000, 100 + static_cast<unsigned>(trial))) {
      ++found;
      CHECK(verify_k1(a, *K1).stable);
    }
  }
  CHECK(found > 25);  // the draw is mildly unstable; most instances are workable
}

TEST_CASE("reference agent is detectable; blind agents are not") {
  CHECK(check_detectability(reference_agent()).pass);

  AgentPlant blind = reference_agent();
  blind.Cm.setZero();
  blind.Fwm.setZero();
  const DetectabilityReport rep = check_detectability(blind);
  CHECK_FALSE(rep.pass);
  CHECK(!rep.per_eigenvalue.empty());  // marginal modes must be listed
}

TEST_CASE("random observable instances pass the PBH test") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial)
    CHECK(check_detectability(random_observable_plant(rng)).pass);
}

TEST_CASE("estimator design: supplied gains, zero gains, random instances") {
  const Scenario sc = paper_example_scenario();
  // The supplied estimator gains pass the post-check.
  for (int i = 0; i < 4; ++i) {
    const AgentPlant& a = sc.agents[static_cast<std::size_t>(i)];
    const double radius = spectral_radius(composite_system_matrix(a) -
                                          *sc.user_L[static_cast<std::size_t>(i)] *
                                              composite_output_matrix(a));
    CHECK(radius < 1.0 - kStabilityMargin);
  }

  // Already-Schur composite: the zero gain is admissible and the design works.
  std::mt19937_64 rng(11);
  AgentPlant stable = random_observable_plant(rng);
  stable.A = random_with_radius(rng, 3, 0.6);
  stable.Q = random_with_radius(rng, 2, 0.5);
  stable.Ew.setZero();
  CHECK(spectral_radius(composite_system_matrix(stable)) < 1.0);
  const EstimatorGain g = design_l(stable);
  CHECK(g.radius < 1.0 - kStabilityMargin);

  for (int trial = 0; trial < 100; ++trial) {
    const AgentPlant a = random_observable_plant(rng);
    const EstimatorGain gain = design_l(a);
    CHECK(gain.radius < 1.0 - kStabilityMargin);
    CHECK(spectral_radius(composite_system_matrix(a) - gain.L * composite_output_matrix(a)) ==
          doctest::Approx(gain.radius).epsilon(1e-12));
  }
}

TEST_CASE("estimator radius is invariant under output row permutation") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const AgentPlant a = random_observable_plant(rng);
    AgentPlant permuted = a;
    const Eigen::Index pm = a.pm();
    Eigen::PermutationMatrix<Eigen::Dynamic> P(pm);
    P.setIdentity();
    std::shuffle(P.indices().data(), P.indices().data() + pm, rng);
    permuted.Cm = P * a.Cm;
    permuted.Dm = {P * a.Dm[0]};
    permuted.Fxm = P * a.Fxm;
    permuted.Fwm = P * a.Fwm;
    CHECK(design_l(permuted).radius == doctest::Approx(design_l(a).radius).epsilon(1e-9));
  }
}

TEST_CASE("controller assembly reproduces the reference K2 partition") {
  const Scenario sc = paper_example_scenario();
  const HMatrix h = build_h_matrix(sc.network);
  for (int i : {1, 3}) {
    const AgentPlant& a = sc.agents[static_cast<std::size_t>(i - 1)];
    const CompositeExo exo = make_composite_exo(sc.S0, a);
    const RegulatorSolution sol = solve_regulator(a, exo);
    REQUIRE(sol.ok);
    const ControllerRealization ctrl =
        assemble_controller(a, sol.X, sol.U, reference_k1(),
                            *sc.user_L[static_cast<std::size_t>(i - 1)], 0.5, sc.S0, h);
    Eigen::MatrixXd K2x_expected(1, 2), K2w_expected(1, 2);
    K2x_expected << 0.925, 0.465;
    K2w_expected << -0.925, -0.5 * i + 0.465;
    CHECK((ctrl.K2x - K2x_expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((ctrl.K2w - K2w_expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(ctrl.observer_radius == doctest::Approx(0.5).epsilon(1e-9));

    // Partition identity: concatenation equals U - K1 X exactly.
    Eigen::MatrixXd K2(1, 4);
    K2 << ctrl.K2x, ctrl.K2w;
    CHECK((K2 - (sol.U - reference_k1() * sol.X)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero regulator solution gives a zero feedforward gain") {
  const Scenario sc = paper_example_scenario();
  const HMatrix h = build_h_matrix(sc.network);
  const AgentPlant& a = sc.agents[0];
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 4);
  const Eigen::MatrixXd U = Eigen::MatrixXd::Zero(1, 4);
  const ControllerRealization ctrl =
      assemble_controller(a, X, U, reference_k1(), *sc.user_L[0], 0.5, sc.S0, h);
  CHECK(ctrl.K2x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(ctrl.K2w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembly names the violated certificate") {
  const Scenario sc = paper_example_scenario();
  const HMatrix h = build_h_matrix(sc.network);
  const AgentPlant& a = sc.agents[0];
  const CompositeExo exo = make_composite_exo(sc.S0, a);
  const RegulatorSolution sol = solve_regulator(a, exo);

  try {
    assemble_controller(a, sol.X, sol.U, Eigen::MatrixXd::Zero(1, 2), *sc.user_L[0], 0.5, sc.S0,
                        h);
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.assumption == "A1");
  }

  try {
    assemble_controller(a, sol.X, sol.U, reference_k1(), Eigen::MatrixXd::Zero(4, 1), 0.5, sc.S0,
                        h);
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.assumption == "A2");  // zero estimator gain leaves marginal modes
  }

  try {
    assemble_controller(a, sol.X, sol.U, reference_k1(), *sc.user_L[0], 3.0, sc.S0, h);
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.assumption == "observer");
  }
}

TEST_CASE("controller certificates survive a serialization round trip") {
  const Scenario sc = paper_example_scenario();
  const HMatrix h = build_h_matrix(sc.network);
  GainBundle bundle;
  bundle.mu = 0.5;
  for (int i = 0; i < sc.n_agents(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const AgentPlant& a = sc.agents[si];
    const RegulatorSolution sol = solve_regulator(a, make_composite_exo(sc.S0, a));
    bundle.controllers.push_back(assemble_controller(a, sol.X, sol.U, *sc.user_K1[si],
                                                     *sc.user_L[si], 0.5, sc.S0, h));
  }

  const GainBundle loaded = parse_gains(gains_to_json(bundle), sc);
  REQUIRE(loaded.controllers.size() == bundle.controllers.size());
  for (int i = 0; i < sc.n_agents(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const AgentPlant& a = sc.agents[si];
    const auto& c = loaded.controllers[si];
    // Bit-exact gain round trip, certificates re-verify.
    CHECK((c.K1 - bundle.controllers[si].K1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c.L - bundle.controllers[si].L).cwiseAbs().maxCoeff() == 0.0);
    const K1Certificate k1cert = verify_k1(a, c.K1);
    CHECK(k1cert.stable);
    CHECK(k1cert.radius == bundle.controllers[si].k1_radius);
    const double est =
        spectral_radius(composite_system_matrix(a) - c.L * composite_output_matrix(a));
    CHECK(est == doctest::Approx(bundle.controllers[si].estimator_radius).epsilon(1e-12));
    CHECK(spectral_radius(observer_matrix(sc.S0, h, loaded.mu)) < 1.0 - kStabilityMargin);
  }
}
