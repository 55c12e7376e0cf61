#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coopreg/kron.hpp"
#include "coopreg/spectral.hpp"
#include "helpers.hpp"

using namespace coopreg;
using namespace coopreg::testing;

namespace {

Eigen::MatrixXd rotation(double theta) {
  Eigen::MatrixXd R(2, 2);
  R << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return R;
}

// Reference loop: A = [[1,1],[0,1]], B0 = [-0.5;0] at delay 0, B1 = [1;1] at
// delay 1, K1 = [-0.075, -0.465].
std::pair<Eigen::MatrixXd, std::vector<DelayTerm>> reference_loop() {
  Eigen::MatrixXd A(2, 2), B0(2, 1), B1(2, 1), K1(1, 2);
  A << 1, 1, 0, 1;
  B0 << -0.5, 0;
  B1 << 1, 1;
  K1 << -0.075, -0.465;
  return {A, {{0, Eigen::MatrixXd(B0 * K1)}, {1, Eigen::MatrixXd(B1 * K1)}}};
}

}  // namespace

TEST_CASE("kron of identity replicates the spectrum") {
  const Eigen::MatrixXd S0 = rotation(1.0);
  const Eigen::MatrixXd K = kron(Eigen::MatrixXd::Identity(2, 2), S0);
  const Eigen::VectorXcd eigs = eigenvalues(K);
  const Eigen::VectorXcd base = eigenvalues(S0);
  Eigen::VectorXcd expected(4);
  expected << base, base;
  REQUIRE(match_root_multisets(eigs, expected, 1e-12).has_value());
}

TEST_CASE("kron spectrum is the product set") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int na = trial % 2 ? 2 : 3;
    const int nb = trial % 3 ? 2 : 3;
    const Eigen::MatrixXd A = random_matrix(rng, na, na);
    const Eigen::MatrixXd B = random_matrix(rng, nb, nb);
    const Eigen::VectorXcd ea = eigenvalues(A);
    const Eigen::VectorXcd eb = eigenvalues(B);
    Eigen::VectorXcd expected(na * nb);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < nb; ++j) expected(k++) = ea(i) * eb(j);
    REQUIRE(match_root_multisets(eigenvalues(kron(A, B)), expected, 1e-8).has_value());
  }
}

TEST_CASE("kron mixed-product identity") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd A = random_matrix(rng, 2, 3), B = random_matrix(rng, 3, 2);
  const Eigen::MatrixXd C = random_matrix(rng, 3, 2), D = random_matrix(rng, 2, 4);
  const Eigen::MatrixXd lhs = kron(A, C) * kron(B, D);
  const Eigen::MatrixXd rhs = kron(Eigen::MatrixXd(A * B), Eigen::MatrixXd(C * D));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spectral radius of a rotation is 1") {
  CHECK(spectral_radius(rotation(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spectral_radius(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
  CHECK_FALSE(is_schur(rotation(1.0)));
  CHECK(classify_radius(1.0) == Stability::Marginal);
}

TEST_CASE("lift of a delay-free system is the system itself") {
  Eigen::MatrixXd F(1, 1);
  F << 0.5;
  const DelaySystem sys = make_delay_system({0}, {F});
  const LiftedSystem lifted = lift(sys);
  CHECK(lifted.augmented.rows() == 1);
  CHECK(lifted.augmented(0, 0) == 0.5);
}

TEST_CASE("two-term scalar recursion lifts to the companion matrix") {
  Eigen::MatrixXd F0(1, 1), F1(1, 1);
  F0 << 0.3;
  F1 << 0.4;
  const LiftedSystem lifted = lift(make_delay_system({0, 1}, {F0, F1}));
  Eigen::MatrixXd expected(2, 2);
  expected << 0.3, 0.4, 1, 0;
  CHECK((lifted.augmented - expected).cwiseAbs().maxCoeff() == 0.0);
  // Companion roots (0.3 +- sqrt(0.09 + 1.6)) / 2 = {0.8, -0.5}.
  Eigen::VectorXcd expected_eigs(2);
  expected_eigs << std::complex<double>(0.8, 0.0), std::complex<double>(-0.5, 0.0);
  REQUIRE(match_root_multisets(eigenvalues(lifted.augmented), expected_eigs, 1e-12).has_value());
  CHECK(is_exponentially_stable(make_delay_system({0, 1}, {F0, F1})).stable);
}

TEST_CASE("lift reproduces the delay recursion trajectory") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<int> delays{0};
    int d = 0;
    while (delays.size() < 1 + trial % 3 + 1u) delays.push_back(d += 1 + trial % 2);
    std::vector<Eigen::MatrixXd> coeffs;
    for (std::size_t l = 0; l < delays.size(); ++l)
      coeffs.push_back(random_matrix(rng, n, n, 0.4));
    const DelaySystem sys = make_delay_system(delays, coeffs);
    const int tau = sys.delays.back();

    std::vector<Eigen::VectorXd> history;
    for (int k = 0; k <= tau; ++k) history.push_back(random_vector(rng, n));
    const auto direct = simulate_delay_recursion(sys, history, 100);

    const LiftedSystem lifted = lift(sys);
    Eigen::VectorXd stacked(n * (tau + 1));
    for (int k = 0; k <= tau; ++k)
      stacked.segment(k * n, n) = history[static_cast<std::size_t>(tau - k)];
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      stacked = lifted.augmented * stacked;
      const Eigen::VectorXd x_t = stacked.head(n);
      const Eigen::VectorXd& ref = direct[static_cast<std::size_t>(tau + 1 + t)];
      worst = std::max(worst, (x_t - ref).norm() / (1.0 + ref.norm()));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("marginal oscillator x(t+1) = x(t-1) is not stable") {
  Eigen::MatrixXd F0 = Eigen::MatrixXd::Zero(1, 1), F1 = Eigen::MatrixXd::Identity(1, 1);
  const StabilityResult res = is_exponentially_stable(make_delay_system({0, 1}, {F0, F1}));
  CHECK_FALSE(res.stable);
  CHECK(res.radius == doctest::Approx(1.0).epsilon(1e-12));

  const StabilityResult zero = is_exponentially_stable(
      make_delay_system({0, 1}, {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)}));
  CHECK(zero.stable);
  CHECK(zero.radius == 0.0);
}

TEST_CASE("reference loop roots and radius") {
  const auto [A, terms] = reference_loop();
  const CharPolyRoots roots = char_poly_roots(A, terms);
  CHECK(roots.all.size() == 4);
  CHECK(roots.nonzero.size() == 3);
  CHECK(roots.artifact_count == 1);
  CHECK(roots.cleared);

  // Frozen from the determinant oracle below: roots of
  // z^3 - 2.0375 z^2 + 1.5775 z - 0.465 (one cleared zero dropped).
  Eigen::VectorXcd expected(3);
  expected << std::complex<double>(0.6296150765687922, 0.448401602261131),
      std::complex<double>(0.6296150765687922, -0.448401602261131),
      std::complex<double>(0.7782698468624166, 0.0);
  REQUIRE(match_root_multisets(roots.nonzero, expected, 1e-6).has_value());

  // Independent determinant-form check at every computed root.
  for (Eigen::Index i = 0; i < roots.nonzero.size(); ++i)
    CHECK(std::abs(char_poly_eval(A, terms, roots.nonzero(i))) < 1e-10);

  const StabilityResult res = is_exponentially_stable(make_delay_system(
      {0, 1}, {Eigen::MatrixXd(A + terms[0].gain), terms[1].gain}));
  CHECK(res.stable);
  CHECK(res.radius == doctest::Approx(0.7782698468624166).epsilon(1e-9));
}

TEST_CASE("char_poly_roots without delayed terms reduces to the spectrum") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 0.5;
  A(1, 1) = 0.2;
  const CharPolyRoots roots = char_poly_roots(A, {});
  Eigen::VectorXcd expected(2);
  expected << std::complex<double>(0.2, 0.0), std::complex<double>(0.5, 0.0);
  REQUIRE(match_root_multisets(roots.all, expected, 1e-12).has_value());
  CHECK_FALSE(roots.cleared);
  CHECK(roots.artifact_count == 0);
}

TEST_CASE("char_poly_roots matches the lift spectrum on random loops") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 2;
    const Eigen::MatrixXd A = random_matrix(rng, n, n, 0.7);
    const Eigen::MatrixXd BK = random_matrix(rng, n, n, 0.5);
    const std::vector<DelayTerm> terms{{1 + trial % 3, BK}};
    const CharPolyRoots roots = char_poly_roots(A, terms);

    std::vector<int> delays{0, terms[0].delay};
    const Eigen::VectorXcd lift_eigs =
        eigenvalues(lift(make_delay_system(delays, {A, BK})).augmented);
    REQUIRE(match_root_multisets(roots.all, lift_eigs, 1e-6).has_value());
    for (Eigen::Index i = 0; i < roots.nonzero.size(); ++i) {
      const auto z = roots.nonzero(i);
      // Determinant evaluation drifts with the root magnitude; normalize.
      CHECK(std::abs(char_poly_eval(A, terms, z)) <
            1e-7 * std::max(1.0, std::pow(std::abs(z), n * (terms[0].delay + 1))));
    }
  }
}

TEST_CASE("char_poly_roots rejects malformed input") {
  Eigen::MatrixXd A(2, 3);
  A.setZero();
  CHECK_THROWS_AS(char_poly_roots(A, {}), std::invalid_argument);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(char_poly_roots(sq, {{0, Eigen::MatrixXd::Zero(3, 3)}}), std::invalid_argument);
  CHECK_THROWS_AS(make_delay_system({0, 0}, {sq, sq}), std::invalid_argument);
  CHECK_THROWS_AS(make_delay_system({1}, {sq}), std::invalid_argument);
}

TEST_CASE("cascade factorization: decoupled, coupled, unstable") {
  std::mt19937_64 rng(41);
  const std::vector<int> delays{0, 2};

  // Decoupled stable pair.
  std::vector<Eigen::MatrixXd> F{random_matrix(rng, 2, 2, 0.3), random_matrix(rng, 2, 2, 0.3)};
  std::vector<Eigen::MatrixXd> H{random_matrix(rng, 2, 2, 0.3), random_matrix(rng, 2, 2, 0.3)};
  std::vector<Eigen::MatrixXd> Gz{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  const CascadeCheck decoupled = factored_char_poly_check(delays, F, Gz, H);
  CHECK(decoupled.factorization_holds);
  CHECK(decoupled.stable);

  // Arbitrary coupling never moves the roots (100 random instances).
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::MatrixXd> Fr{random_matrix(rng, 2, 2, 0.35), random_matrix(rng, 2, 2, 0.35)};
    std::vector<Eigen::MatrixXd> Hr{random_matrix(rng, 2, 2, 0.35), random_matrix(rng, 2, 2, 0.35)};
    std::vector<Eigen::MatrixXd> Gr{random_matrix(rng, 2, 2, 2.0), random_matrix(rng, 2, 2, 2.0)};
    const CascadeCheck res = factored_char_poly_check(delays, Fr, Gr, Hr);
    CHECK(res.factorization_holds);
  }

  // Stable diagonal blocks with coupling stay stable and the trajectory decays.
  std::vector<Eigen::MatrixXd> G{random_matrix(rng, 2, 2, 2.0), random_matrix(rng, 2, 2, 2.0)};
  const CascadeCheck coupled = factored_char_poly_check(delays, F, G, H);
  CHECK(coupled.factorization_holds);
  CHECK(coupled.stable);
  {
    std::vector<Eigen::MatrixXd> blocks(2);
    for (std::size_t l = 0; l < 2; ++l) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
      M.topLeftCorner(2, 2) = F[l];
      M.topRightCorner(2, 2) = G[l];
      M.bottomRightCorner(2, 2) = H[l];
      blocks[l] = M;
    }
    const DelaySystem sys = make_delay_system(delays, blocks);
    std::vector<Eigen::VectorXd> history;
    for (int k = 0; k <= 2; ++k) history.push_back(random_vector(rng, 4));
    const auto traj = simulate_delay_recursion(sys, history, 500);
    CHECK(traj.back().norm() < 1e-6);
  }

  // One unstable diagonal block poisons the cascade.
  std::vector<Eigen::MatrixXd> Hu{2.0 * Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::MatrixXd::Zero(2, 2)};
  const CascadeCheck unstable = factored_char_poly_check(delays, F, G, Hu);
  CHECK(unstable.factorization_holds);
  CHECK_FALSE(unstable.stable);
}
