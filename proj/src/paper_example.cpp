#include "coopreg/paper_example.hpp"

#include <cmath>

namespace coopreg {

namespace {

Eigen::MatrixXd rotation(double theta) {
  Eigen::MatrixXd R(2, 2);
  R << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return R;
}

Eigen::MatrixXd disturbance_coupling(int agent) {
  const double th = agent + 1.0;
  const double c = std::cos(th), s = std::sin(th);
  Eigen::MatrixXd Ew(2, 2);
  switch (agent) {
    case 1:
      Ew << -1.5 + 2 * c + 0.5 * s, -1.25 + 0.5 * c, -0.5 * s + c, 1.5 * c - 1 - s;
      break;
    case 2:
      Ew << -1.5 + 2 * c + s, -1.5 + c, c, 2 * c - 1 - s;
      break;
    case 3:
      Ew << -1.5 + 2 * c + 1.5 * s, -1.75 + 1.5 * c, 0.5 * s + c, 2.5 * c - 1 - s;
      break;
    default:
      Ew << -1.5 + 2 * c + 2 * s, -2 + 2 * c, s + c, 3 * c - 1 - s;
      break;
  }
  return Ew;
}

}  // namespace

Scenario paper_example_scenario() {
  Scenario sc;
  sc.S0 = rotation(1.0);
  sc.delays = {0, 1};

  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(5, 5);
  adj(1, 0) = 1.0;
  adj(2, 0) = 1.0;
  adj(3, 1) = 1.0;
  adj(4, 1) = 1.0;
  sc.network = make_network(adj);

  Eigen::MatrixXd A(2, 2), B0(2, 1), B1(2, 1), Ex(2, 2);
  A << 1, 1, 0, 1;
  B0 << -0.5, 0;
  B1 << 1, 1;
  const double c1 = std::cos(1.0), s1 = std::sin(1.0);
  Ex << -2 * c1 + 1.5, -1, -c1 - s1, c1 - 1 + s1;
  Eigen::MatrixXd C(1, 2), Fx(1, 2), Fw(1, 2);
  C << 1, 0;
  Fx << 1, 0;
  Fw << -1, 0;
  const Eigen::MatrixXd Dz = Eigen::MatrixXd::Zero(1, 1);

  Eigen::MatrixXd K1(1, 2);
  K1 << -0.075, -0.465;
  std::vector<Eigen::VectorXd> L_cols = {
      (Eigen::VectorXd(4) << 0.0293, -1.5213, 0.2372, -0.9982).finished(),
      (Eigen::VectorXd(4) << -10.5975, 3.6208, -9.2420, 4.4453).finished(),
      (Eigen::VectorXd(4) << -1.6276, -1.1082, -0.9447, -0.4423).finished(),
      (Eigen::VectorXd(4) << 1.3550, 0.1854, 0.1633, 0.0026).finished(),
  };

  for (int i = 1; i <= 4; ++i) {
    AgentPlant a;
    a.delays = sc.delays;
    a.A = A;
    a.B = {B0, B1};
    a.Ex = Ex;
    a.Ew = disturbance_coupling(i);
    a.C = C;
    a.D = {Dz, Dz};
    a.Fx = Fx;
    a.Fw = Fw;
    a.Cm = C;
    a.Dm = {Dz, Dz};
    a.Fxm = Fx;
    a.Fwm = Fw;
    a.Q = rotation(i + 1.0);
    sc.agents.push_back(std::move(a));
    sc.user_K1.emplace_back(K1);
    sc.user_L.emplace_back(L_cols[static_cast<std::size_t>(i - 1)]);
  }

  sc.sim.horizon = 500;
  sc.sim.seed = 1;
  sc.sim.mu = 0.5;
  sc.sim.initial = InitialMode::Random;
  sc.sim.tail_fraction = 0.6;
  sc.sim.tail_tolerance = 1e-2;
  sc.validate();
  return sc;
}

PaperReference paper_example_reference() {
  PaperReference ref;
  ref.h_spectrum = Eigen::VectorXcd::Constant(4, std::complex<double>(1.0, 0.0));
  ref.mu_lower = 0.0;
  ref.mu_upper = 2.0;
  ref.mu_choice = 0.5;
  ref.loop_roots.resize(3);
  ref.loop_roots << std::complex<double>(0.6435, 0.4436), std::complex<double>(0.6435, -0.4436),
      std::complex<double>(0.7530, 0.0);
  ref.X.resize(2, 4);
  ref.X << -1, 0, 1, 0, 0, 1, 0, 1;
  for (int i = 1; i <= 4; ++i) {
    Eigen::MatrixXd U(1, 4);
    U << 1, 0, -1, -0.5 * i;
    ref.U.push_back(U);
    Eigen::MatrixXd K2(1, 4);
    K2 << 0.925, 0.465, -0.925, -0.5 * i + 0.465;
    ref.K2.push_back(K2);
  }
  return ref;
}

}  // namespace coopreg
