#include "coopreg/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace coopreg {

DelayHistory::DelayHistory(int max_delay, const Eigen::VectorXd& fill)
    : buffer_(static_cast<std::size_t>(max_delay) + 1, fill) {}

void DelayHistory::push(const Eigen::VectorXd& v) {
  head_ = (head_ + 1) % buffer_.size();
  buffer_[head_] = v;
}

const Eigen::VectorXd& DelayHistory::at(int steps_back) const {
  if (steps_back < 0 || steps_back >= static_cast<int>(buffer_.size()))
    throw std::out_of_range("DelayHistory: read outside the delay window");
  return buffer_[(head_ + buffer_.size() - static_cast<std::size_t>(steps_back)) % buffer_.size()];
}

InitialConditions zero_initial_conditions(const Scenario& sc) {
  InitialConditions init;
  init.x0 = Eigen::VectorXd::Zero(sc.S0.rows());
  for (const AgentPlant& a : sc.agents) {
    init.x.push_back(Eigen::VectorXd::Zero(a.n()));
    init.w.push_back(Eigen::VectorXd::Zero(a.s()));
    init.xi.push_back(Eigen::VectorXd::Zero(a.n() + a.s()));
    init.eta.push_back(Eigen::VectorXd::Zero(a.q()));
    init.u_history.emplace_back(static_cast<std::size_t>(sc.max_delay()),
                                Eigen::VectorXd::Zero(a.m()));
  }
  return init;
}

InitialConditions random_initial_conditions(const Scenario& sc, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto draw = [&](Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = unit(rng);
    return v;
  };
  InitialConditions init;
  init.x0 = draw(sc.S0.rows());
  for (const AgentPlant& a : sc.agents) {
    init.x.push_back(draw(a.n()));
    init.w.push_back(draw(a.s()));
    init.xi.push_back(draw(a.n() + a.s()));
    init.eta.push_back(draw(a.q()));
    std::vector<Eigen::VectorXd> hist;
    for (int k = 0; k < sc.max_delay(); ++k) hist.push_back(draw(a.m()));
    init.u_history.push_back(std::move(hist));
  }
  return init;
}

SimulationTrace run(const Scenario& sc, const GainBundle& gains, const InitialConditions& init,
                    int horizon) {
  const int N = sc.n_agents();
  if (static_cast<int>(gains.controllers.size()) != N)
    throw std::invalid_argument("run: one controller per agent required");
  const int r = sc.max_delay();
  const double mu = gains.mu;

  SimulationTrace trace;
  trace.horizon = horizon;
  trace.agents.resize(static_cast<std::size_t>(N));

  Eigen::VectorXd x0 = init.x0;
  std::vector<Eigen::VectorXd> x = init.x, w = init.w, xi = init.xi, eta = init.eta;
  std::vector<DelayHistory> u_hist;
  for (int i = 0; i < N; ++i) {
    const auto& seed = init.u_history[static_cast<std::size_t>(i)];
    if (static_cast<int>(seed.size()) != r)
      throw std::invalid_argument("run: pre-horizon input history must cover I[-r,-1]");
    DelayHistory h(r, Eigen::VectorXd::Zero(sc.agents[static_cast<std::size_t>(i)].m()));
    for (const auto& u : seed) h.push(u);  // oldest first; ends at u(-1)
    u_hist.emplace_back(std::move(h));
  }

  for (int t = 0; t <= horizon; ++t) {
    // Outputs from the time-t snapshot.
    std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const auto& c = gains.controllers[static_cast<std::size_t>(i)];
      const std::size_t si = static_cast<std::size_t>(i);
      const int n = sc.agents[si].n();
      u[si] = c.K1 * xi[si].head(n) + c.K2w * xi[si].tail(sc.agents[si].s()) + c.K2x * eta[si];
      u_hist[si].push(u[si]);  // window now holds u(t-r)..u(t)
    }

    bool finite = x0.allFinite();
    std::vector<Eigen::VectorXd> e(static_cast<std::size_t>(N)), ym(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const AgentPlant& a = sc.agents[si];
      e[si] = a.C * x[si] + a.Fx * x0 + a.Fw * w[si];
      ym[si] = a.Cm * x[si] + a.Fxm * x0 + a.Fwm * w[si];
      for (std::size_t l = 0; l < a.delays.size(); ++l) {
        const Eigen::VectorXd& ud = u_hist[si].at(a.delays[l]);
        e[si] += a.D[l] * ud;
        ym[si] += a.Dm[l] * ud;
      }
      finite = finite && x[si].allFinite() && w[si].allFinite() && xi[si].allFinite() &&
               eta[si].allFinite() && u[si].allFinite();
    }
    if (!finite) {
      trace.overflow_step = t;
      break;
    }

    trace.x0.push_back(x0);
    for (int i = 0; i < N; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      AgentTrace& at = trace.agents[si];
      at.x.push_back(x[si]);
      at.w.push_back(w[si]);
      at.eta.push_back(eta[si]);
      at.xi.push_back(xi[si]);
      at.u.push_back(u[si]);
      at.e.push_back(e[si]);
      at.ym.push_back(ym[si]);
    }
    if (t == horizon) break;

    // Advance every state from the same snapshot.
    const Eigen::VectorXd x0_next = sc.S0 * x0;
    std::vector<Eigen::VectorXd> x_next(static_cast<std::size_t>(N)),
        w_next(static_cast<std::size_t>(N)), xi_next(static_cast<std::size_t>(N)),
        eta_next(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const AgentPlant& a = sc.agents[si];
      const auto& c = gains.controllers[si];

      Eigen::VectorXd coupling = Eigen::VectorXd::Zero(a.q());
      for (int j = 0; j <= N; ++j) {
        const double aij = sc.network.adjacency(i + 1, j);
        if (aij > 0.0) {
          const Eigen::VectorXd& eta_j = j == 0 ? x0 : eta[static_cast<std::size_t>(j - 1)];
          coupling += aij * (eta_j - eta[si]);
        }
      }
      eta_next[si] = sc.S0 * eta[si] + mu * (sc.S0 * coupling);

      const int n = a.n(), s = a.s();
      Eigen::VectorXd innovation = ym[si] - a.Cm * xi[si].head(n) - a.Fwm * xi[si].tail(s) -
                                   a.Fxm * eta[si];
      Eigen::VectorXd xi_drive = Eigen::VectorXd::Zero(n + s);
      xi_drive.head(n) = a.Ex * eta[si];
      Eigen::VectorXd x_new = a.A * x[si] + a.Ex * x0 + a.Ew * w[si];
      for (std::size_t l = 0; l < a.delays.size(); ++l) {
        const Eigen::VectorXd& ud = u_hist[si].at(a.delays[l]);
        xi_drive.head(n) += a.B[l] * ud;
        innovation -= a.Dm[l] * ud;
        x_new += a.B[l] * ud;
      }
      Eigen::VectorXd xi_new(n + s);
      xi_new.head(n) = a.A * xi[si].head(n) + a.Ew * xi[si].tail(s);
      xi_new.tail(s) = a.Q * xi[si].tail(s);
      xi_new += xi_drive + c.L * innovation;

      xi_next[si] = xi_new;
      x_next[si] = x_new;
      w_next[si] = a.Q * w[si];
    }

    x0 = x0_next;
    x = std::move(x_next);
    w = std::move(w_next);
    xi = std::move(xi_next);
    eta = std::move(eta_next);
  }
  return trace;
}

namespace {

double rel_residual(const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs) {
  return (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm());
}

}  // namespace

ErrorCoordinates error_coordinates(const SimulationTrace& trace, const Scenario& sc,
                                   const GainBundle& gains,
                                   const std::vector<RegulatorSolution>& regulator) {
  const int N = sc.n_agents();
  if (static_cast<int>(regulator.size()) != N)
    throw std::invalid_argument("error_coordinates: one regulator solution per agent required");
  const int T = trace.steps_recorded() - 1;
  const int r = sc.max_delay();

  ErrorCoordinates out;
  out.xbar.resize(static_cast<std::size_t>(N));
  out.ubar.resize(static_cast<std::size_t>(N));
  out.xie.resize(static_cast<std::size_t>(N));
  out.etatil.resize(static_cast<std::size_t>(N));

  IdentityResiduals& cert = out.certificate;
  for (int i = 0; i < N; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const AgentPlant& a = sc.agents[si];
    const auto& c = gains.controllers[si];
    const Eigen::MatrixXd& X = regulator[si].X;
    const Eigen::MatrixXd& U = regulator[si].U;
    Eigen::MatrixXd K_xi(a.m(), a.n() + a.s());
    K_xi << c.K1, c.K2w;
    const AgentTrace& at = trace.agents[si];

    for (int t = 0; t <= T; ++t) {
      const std::size_t st = static_cast<std::size_t>(t);
      Eigen::VectorXd v(a.q() + a.s());
      v << trace.x0[st], at.w[st];
      Eigen::VectorXd xw(a.n() + a.s());
      xw << at.x[st], at.w[st];
      out.xbar[si].push_back(at.x[st] - X * v);
      out.ubar[si].push_back(at.u[st] - U * v);
      out.xie[si].push_back(at.xi[st] - xw);
      out.etatil[si].push_back(at.eta[st] - trace.x0[st]);
    }

    for (int t = 0; t <= T; ++t) {
      const std::size_t st = static_cast<std::size_t>(t);
      const Eigen::VectorXd rhs = c.K1 * out.xbar[si][st] + K_xi * out.xie[si][st] +
                                  c.K2x * out.etatil[si][st];
      const double resid = rel_residual(out.ubar[si][st], rhs);
      if (resid > cert.control) {
        cert.control = resid;
        cert.worst_step = t;
      }
    }

    // Shifted identities use only indices >= 0; the earliest steps depend on
    // pre-horizon inputs that deviation coordinates do not cover.
    for (int t = 0; t + r + 1 <= T; ++t) {
      Eigen::VectorXd rhs = a.A * out.xbar[si][static_cast<std::size_t>(t + r)];
      for (std::size_t l = 0; l < a.delays.size(); ++l)
        rhs += a.B[l] * out.ubar[si][static_cast<std::size_t>(t + r - a.delays[l])];
      const double resid =
          rel_residual(out.xbar[si][static_cast<std::size_t>(t + r + 1)], rhs);
      if (resid > cert.state) {
        cert.state = resid;
        cert.worst_step = t;
      }
    }

    for (int t = 0; t + r <= T; ++t) {
      Eigen::VectorXd rhs = a.C * out.xbar[si][static_cast<std::size_t>(t + r)];
      for (std::size_t l = 0; l < a.delays.size(); ++l)
        rhs += a.D[l] * out.ubar[si][static_cast<std::size_t>(t + r - a.delays[l])];
      const double resid =
          rel_residual(trace.agents[si].e[static_cast<std::size_t>(t + r)], rhs);
      if (resid > cert.error) {
        cert.error = resid;
        cert.worst_step = t;
      }
    }
  }

  cert.ok = cert.control <= 1e-9 && cert.state <= 1e-9 && cert.error <= 1e-9;
  if (!cert.ok) {
    std::ostringstream msg;
    msg << "error_coordinates: closed-loop identity violated near step " << cert.worst_step
        << " (control " << cert.control << ", state " << cert.state << ", error " << cert.error
        << ")";
    throw std::logic_error(msg.str());
  }
  return out;
}

ConvergenceMetrics convergence_metrics(const SimulationTrace& trace, double tail_fraction) {
  const int T = trace.steps_recorded() - 1;
  if (trace.horizon < 50) throw std::invalid_argument("convergence_metrics: horizon must be >= 50");
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw std::invalid_argument("convergence_metrics: tail fraction must lie in (0,1)");

  const int t0 = std::max(0, T - static_cast<int>(std::floor(tail_fraction * T)));
  ConvergenceMetrics metrics;
  for (const AgentTrace& at : trace.agents) {
    AgentConvergence agent;
    for (int t = t0; t <= T; ++t)
      agent.tail_max =
          std::max(agent.tail_max, at.e[static_cast<std::size_t>(t)].lpNorm<Eigen::Infinity>());

    // Rounding noise left after the transient has fully decayed carries no
    // rate information; windows at the cancellation floor are excluded.
    double scale = 0.0;
    for (const auto& e : at.e) scale = std::max(scale, e.norm());
    const double floor = 1e-12 * scale;

    // Log-envelope fit: window maxima are robust to oscillatory zero crossings.
    const int window = std::max(5, (T - t0 + 1) / 20);
    std::vector<double> centers, logs;
    for (int start = t0; start + window - 1 <= T; start += window) {
      double peak = 0.0;
      for (int t = start; t < start + window; ++t)
        peak = std::max(peak, at.e[static_cast<std::size_t>(t)].norm());
      if (peak <= floor) continue;
      centers.push_back(start + 0.5 * (window - 1));
      logs.push_back(std::log(peak));
    }
    if (centers.size() >= 2) {
      double mean_c = 0.0, mean_l = 0.0;
      for (std::size_t k = 0; k < centers.size(); ++k) {
        mean_c += centers[k];
        mean_l += logs[k];
      }
      mean_c /= static_cast<double>(centers.size());
      mean_l /= static_cast<double>(centers.size());
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < centers.size(); ++k) {
        num += (centers[k] - mean_c) * (logs[k] - mean_l);
        den += (centers[k] - mean_c) * (centers[k] - mean_c);
      }
      agent.fitted_rate = den > 0.0 ? std::exp(num / den) : 0.0;
    }
    if (agent.tail_max == 0.0) agent.fitted_rate = 0.0;
    agent.decaying = agent.fitted_rate < 1.0;
    metrics.worst_tail = std::max(metrics.worst_tail, agent.tail_max);
    metrics.worst_rate = std::max(metrics.worst_rate, agent.fitted_rate);
    metrics.agents.push_back(agent);
  }
  return metrics;
}

namespace {

void write_value(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  out << buf;
}

}  // namespace

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
  const int N = static_cast<int>(trace.agents.size());
  out << "t";
  const auto header_group = [&](const char* name, const std::vector<Eigen::VectorXd>& sample,
                                int agent) {
    for (Eigen::Index k = 0; k < sample.front().size(); ++k)
      out << "," << name << agent + 1 << "_" << k + 1;
  };
  for (int i = 0; i < N; ++i) header_group("e", trace.agents[static_cast<std::size_t>(i)].e, i);
  for (int i = 0; i < N; ++i) header_group("u", trace.agents[static_cast<std::size_t>(i)].u, i);
  for (int i = 0; i < N; ++i) header_group("eta", trace.agents[static_cast<std::size_t>(i)].eta, i);
  for (Eigen::Index k = 0; k < trace.x0.front().size(); ++k) out << ",x0_" << k + 1;
  for (int i = 0; i < N; ++i) header_group("x", trace.agents[static_cast<std::size_t>(i)].x, i);
  for (int i = 0; i < N; ++i) header_group("w", trace.agents[static_cast<std::size_t>(i)].w, i);
  for (int i = 0; i < N; ++i) header_group("xi", trace.agents[static_cast<std::size_t>(i)].xi, i);
  out << "\n";

  const auto row_group = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out << ",";
      write_value(out, v(k));
    }
  };
  for (int t = 0; t < trace.steps_recorded(); ++t) {
    const std::size_t st = static_cast<std::size_t>(t);
    out << t;
    for (const auto& at : trace.agents) row_group(at.e[st]);
    for (const auto& at : trace.agents) row_group(at.u[st]);
    for (const auto& at : trace.agents) row_group(at.eta[st]);
    row_group(trace.x0[st]);
    for (const auto& at : trace.agents) row_group(at.x[st]);
    for (const auto& at : trace.agents) row_group(at.w[st]);
    for (const auto& at : trace.agents) row_group(at.xi[st]);
    out << "\n";
  }
}

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace CSV: " + path);
  write_trace_csv(trace, out);
}

}  // namespace coopreg
