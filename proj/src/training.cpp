#include "powerdoa/training.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "powerdoa/rng.hpp"

namespace powerdoa {

Eigen::MatrixXd TrainingSet::power_matrix() const {
  Eigen::MatrixXd out(n_angles(), n_mics());
  for (int k = 0; k < n_angles(); ++k) {
    out.row(k) = powers[static_cast<size_t>(k)].power.transpose();
  }
  return out;
}

void TrainingSet::validate() const {
  if (angles.empty()) {
    throw_error(ErrorCode::invalid_input, "training set needs at least one angle");
  }
  if (powers.size() != angles.size()) {
    throw_error(ErrorCode::invalid_input, "training set has mismatched angle/power counts");
  }
  noise.validate();
  const int n = n_mics();
  if (n < 1 || noise.n_mics() != n) {
    throw_error(ErrorCode::invalid_input, "facing angles must match the microphone count");
  }
  for (const PowerVector& p : powers) {
    p.validate();
    if (p.n_mics() != n) {
      throw_error(ErrorCode::invalid_input, "power vector width does not match mic count");
    }
    if (p.frame_length != noise.frame_length) {
      throw_error(ErrorCode::invalid_input, "power vector frame length disagrees with noise stats");
    }
  }
}

void DirectivityModel::validate() const {
  if (n_mics() < 1 || static_cast<int>(mics.size()) != n_mics() ||
      static_cast<int>(facing_angles.size()) != n_mics()) {
    throw_error(ErrorCode::invalid_input, "model has inconsistent microphone counts");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw_error(ErrorCode::invalid_input, "model alpha must be positive");
  }
  if ((gains.array() <= 0.0).any() || !gains.allFinite()) {
    throw_error(ErrorCode::invalid_input, "model gains must be positive");
  }
  if (std::abs(gains.squaredNorm() - 1.0) > 1e-8) {
    throw_error(ErrorCode::invalid_input, "model gains must have unit square sum");
  }
  noise.validate();
  if (noise.n_mics() != n_mics()) {
    throw_error(ErrorCode::invalid_input, "noise stats width does not match mic count");
  }
  const FourierBasis b = basis();
  for (int n = 0; n < n_mics(); ++n) {
    const MicDirectivity& mic = mics[static_cast<size_t>(n)];
    mic.validate();
    if (mic.theta.size() != b.row_length()) {
      throw_error(ErrorCode::invalid_input, "coefficient length does not match model order");
    }
    if (std::abs(eval(b, mic, facing_angles[static_cast<size_t>(n)]) - 1.0) > 1e-6) {
      throw_error(ErrorCode::invalid_input, "directivity peak is not normalized at facing angle");
    }
  }
}

int free_parameter_count(int n_mics, int order) { return n_mics * (2 * order + 1); }

double bic_score(double loss_value, int n_mics, int n_angles, int order) {
  return 2.0 * loss_value +
         free_parameter_count(n_mics, order) * std::log(double(n_mics) * n_angles);
}

double loss(const DirectivityModel& model, const TrainingSet& data) {
  data.validate();
  if (model.n_mics() != data.n_mics()) {
    throw_error(ErrorCode::invalid_input, "model and training set disagree on mic count");
  }
  const FourierBasis b = model.basis();
  const int L = data.noise.frame_length;
  double total = 0.0;
  for (int n = 0; n < model.n_mics(); ++n) {
    const double s2 = data.noise.sigma2[n];
    const double weight = L / (2.0 * s2 * s2);
    double acc = 0.0;
    for (int k = 0; k < data.n_angles(); ++k) {
      const double predicted =
          model.alpha * model.gains[n] *
              eval(b, model.mics[static_cast<size_t>(n)], data.angles[static_cast<size_t>(k)]) +
          s2;
      const double r = data.powers[static_cast<size_t>(k)].power[n] - predicted;
      acc += r * r;
    }
    total += weight * acc;
  }
  return total;
}

namespace {

// Reduced-variable layout: [a | u_0..u_{N-1} | per mic: 2D harmonic coeffs].
// alpha = exp(a); g = exp(u)/|exp(u)|; theta_0 is solved out of the peak
// constraint, so h(psi) = 1 + sum_d c_d (cos d psi - cos d psi_n)
//                           + s_d (sin d psi - sin d psi_n).
struct ReducedProblem {
  int n_mics = 0;
  int n_angles = 0;
  int order = 0;
  Eigen::MatrixXd powers;        // K x N
  Eigen::VectorXd sqrt_weight;   // N
  Eigen::VectorXd sigma2;        // N
  // basis_diff[n] is K x 2D with columns (cos d psi_k - cos d psi_n,
  // sin d psi_k - sin d psi_n) interleaved per harmonic.
  std::vector<Eigen::MatrixXd> basis_diff;

  int var_count() const { return 1 + n_mics + n_mics * 2 * order; }
  int residual_count() const { return n_mics * n_angles; }

  int harmonic_offset(int mic) const { return 1 + n_mics + mic * 2 * order; }

  Eigen::VectorXd gains_of(const Eigen::VectorXd& x) const {
    Eigen::VectorXd w = x.segment(1, n_mics).array().exp();
    return w / w.norm();
  }

  // h values for all (k, n) given reduced variables.
  Eigen::MatrixXd directivity_values(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Ones(n_angles, n_mics);
    for (int n = 0; n < n_mics; ++n) {
      if (order > 0) {
        h.col(n) += basis_diff[static_cast<size_t>(n)] *
                    x.segment(harmonic_offset(n), 2 * order);
      }
    }
    return h;
  }

  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    const double alpha = std::exp(x[0]);
    const Eigen::VectorXd g = gains_of(x);
    const Eigen::MatrixXd h = directivity_values(x);
    r.resize(residual_count());
    for (int n = 0; n < n_mics; ++n) {
      for (int k = 0; k < n_angles; ++k) {
        const double predicted = alpha * g[n] * h(k, n) + sigma2[n];
        r[n * n_angles + k] = sqrt_weight[n] * (predicted - powers(k, n));
      }
    }
  }

  void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    const double alpha = std::exp(x[0]);
    const Eigen::VectorXd g = gains_of(x);
    const Eigen::MatrixXd h = directivity_values(x);
    jac.setZero(residual_count(), var_count());
    const Eigen::VectorXd g2 = g.array().square();
    for (int n = 0; n < n_mics; ++n) {
      const double sw = sqrt_weight[n];
      for (int k = 0; k < n_angles; ++k) {
        const int row = n * n_angles + k;
        const double common = sw * alpha * h(k, n);
        jac(row, 0) = common * g[n];
        // dg_n/du_m = g_n (delta_nm - g_m^2)
        for (int m = 0; m < n_mics; ++m) {
          jac(row, 1 + m) = common * g[n] * ((m == n ? 1.0 : 0.0) - g2[m]);
        }
        if (order > 0) {
          jac.row(row).segment(harmonic_offset(n), 2 * order) =
              sw * alpha * g[n] * basis_diff[static_cast<size_t>(n)].row(k);
        }
      }
    }
  }
};

ReducedProblem build_problem(const TrainingSet& data, int order) {
  ReducedProblem p;
  p.n_mics = data.n_mics();
  p.n_angles = data.n_angles();
  p.order = order;
  p.powers = data.power_matrix();
  p.sigma2 = data.noise.sigma2;
  const double L = data.noise.frame_length;
  p.sqrt_weight = (L / (2.0 * p.sigma2.array().square())).sqrt();
  p.basis_diff.resize(static_cast<size_t>(p.n_mics));
  for (int n = 0; n < p.n_mics; ++n) {
    Eigen::MatrixXd diff(p.n_angles, 2 * order);
    const double facing = data.facing_angles[static_cast<size_t>(n)].radians();
    for (int k = 0; k < p.n_angles; ++k) {
      const double psi = data.angles[static_cast<size_t>(k)].radians();
      for (int d = 1; d <= order; ++d) {
        diff(k, 2 * d - 2) = std::cos(d * psi) - std::cos(d * facing);
        diff(k, 2 * d - 1) = std::sin(d * psi) - std::sin(d * facing);
      }
    }
    p.basis_diff[static_cast<size_t>(n)] = std::move(diff);
  }
  return p;
}

Eigen::VectorXd warm_start(const ReducedProblem& p, const TrainingSet& data,
                           const SolverConfig& config) {
  const int n_mics = p.n_mics;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.var_count());

  double alpha0 = (p.powers.rowwise() - p.sigma2.transpose()).mean();
  alpha0 = std::max(alpha0, 1e-12);
  x[0] = std::log(alpha0);

  // Uniform gains: u = 0 gives g = 1/sqrt(N).
  const double g0 = 1.0 / std::sqrt(double(n_mics));

  if (p.order > 0) {
    // The model is linear in theta given (alpha, g): ridge-fit the full basis
    // per mic, then drop theta_0 (the peak constraint recomputes it).
    const FourierBasis basis{p.order};
    Eigen::MatrixXd phi(p.n_angles, basis.row_length());
    for (int k = 0; k < p.n_angles; ++k) {
      phi.row(k) = basis_row(basis, data.angles[static_cast<size_t>(k)]);
    }
    Eigen::MatrixXd normal = phi.transpose() * phi;
    normal.diagonal().array() += config.ridge * p.n_angles;
    Eigen::LDLT<Eigen::MatrixXd> solver(normal);
    for (int n = 0; n < n_mics; ++n) {
      const Eigen::VectorXd y =
          (p.powers.col(n).array() - p.sigma2[n]) / (alpha0 * g0);
      const Eigen::VectorXd theta_full = solver.solve(phi.transpose() * y);
      for (int d = 1; d <= p.order; ++d) {
        x[p.harmonic_offset(n) + 2 * d - 2] = theta_full[2 * d - 1];
        x[p.harmonic_offset(n) + 2 * d - 1] = theta_full[2 * d];
      }
    }
  }

  if (config.init_perturbation_seed != 0) {
    RandomEngine engine = make_engine(config.init_perturbation_seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < x.size(); ++i) {
      x[i] += config.init_perturbation_scale * unit(engine);
    }
  }
  return x;
}

DirectivityModel assemble_model(const ReducedProblem& p, const TrainingSet& data,
                                const Eigen::VectorXd& x) {
  DirectivityModel model;
  model.alpha = std::exp(x[0]);
  model.gains = p.gains_of(x);
  model.order = p.order;
  model.noise = data.noise;
  model.facing_angles = data.facing_angles;
  model.mics.resize(static_cast<size_t>(p.n_mics));
  for (int n = 0; n < p.n_mics; ++n) {
    Eigen::VectorXd theta(2 * p.order + 1);
    const double facing = data.facing_angles[static_cast<size_t>(n)].radians();
    double theta0 = 1.0;
    for (int d = 1; d <= p.order; ++d) {
      const double c = x[p.harmonic_offset(n) + 2 * d - 2];
      const double s = x[p.harmonic_offset(n) + 2 * d - 1];
      theta[2 * d - 1] = c;
      theta[2 * d] = s;
      theta0 -= c * std::cos(d * facing) + s * std::sin(d * facing);
    }
    theta[0] = theta0;
    model.mics[static_cast<size_t>(n)].theta = std::move(theta);
  }
  return model;
}

ConstraintResiduals measure_constraints(const DirectivityModel& model) {
  ConstraintResiduals res;
  res.gain_norm = std::abs(model.gains.squaredNorm() - 1.0);
  res.gain_floor = std::max(0.0, -model.gains.minCoeff());
  res.alpha_floor = std::max(0.0, -model.alpha);
  const FourierBasis b = model.basis();
  for (int n = 0; n < model.n_mics(); ++n) {
    res.peak = std::max(res.peak,
                        std::abs(eval(b, model.mics[static_cast<size_t>(n)],
                                      model.facing_angles[static_cast<size_t>(n)]) -
                                 1.0));
  }
  return res;
}

std::vector<int> find_uninformative_mics(const Eigen::MatrixXd& powers) {
  std::vector<int> flagged;
  for (int n = 0; n < powers.cols(); ++n) {
    const double lo = powers.col(n).minCoeff();
    const double hi = powers.col(n).maxCoeff();
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) {
      flagged.push_back(n);
    }
  }
  return flagged;
}

}  // namespace

std::pair<DirectivityModel, FitReport> fit(const TrainingSet& data, int order,
                                           const SolverConfig& config) {
  data.validate();
  if (order < 0) {
    throw_error(ErrorCode::invalid_input, "Fourier order must be >= 0");
  }
  const int n_mics = data.n_mics();
  const int n_angles = data.n_angles();
  if (n_angles * n_mics < free_parameter_count(n_mics, order)) {
    std::ostringstream msg;
    msg << "infeasible fit: " << n_angles * n_mics << " observations for "
        << free_parameter_count(n_mics, order) << " free parameters (order " << order << ")";
    throw_error(ErrorCode::invalid_input, msg.str());
  }

  const ReducedProblem problem = build_problem(data, order);
  Eigen::VectorXd x = warm_start(problem, data, config);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  problem.residuals(x, r);
  problem.jacobian(x, jac);
  Eigen::MatrixXd normal = jac.transpose() * jac;
  Eigen::VectorXd gradient = jac.transpose() * r;  // gradient of V/2

  double half_loss = 0.5 * r.squaredNorm();
  FitReport report;
  report.loss_history.push_back(2.0 * half_loss);

  double damping = config.initial_damping_scale * normal.diagonal().maxCoeff();
  damping = std::max(damping, 1e-300);
  double growth = 2.0;
  bool converged = 2.0 * gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance;

  int iteration = 0;
  while (!converged && iteration < config.max_iterations) {
    ++iteration;
    Eigen::MatrixXd damped = normal;
    damped.diagonal().array() += damping;
    const Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(-gradient);

    if (!step.allFinite()) {
      break;
    }
    if (step.norm() <= 1e-14 * (x.norm() + 1e-14)) {
      converged = true;
      break;
    }

    Eigen::VectorXd x_new = x + step;
    Eigen::VectorXd r_new;
    problem.residuals(x_new, r_new);
    const double half_loss_new = 0.5 * r_new.squaredNorm();
    const double predicted = 0.5 * step.dot(damping * step - gradient);
    const double rho = predicted > 0.0 ? (half_loss - half_loss_new) / predicted : -1.0;

    if (rho > 0.0 && half_loss_new < half_loss) {
      // Gain gauge: shifting all u by a constant leaves g unchanged.
      x_new.segment(1, n_mics).array() -= x_new.segment(1, n_mics).mean();
      const double improvement = half_loss - half_loss_new;
      x = std::move(x_new);
      problem.residuals(x, r);
      problem.jacobian(x, jac);
      normal = jac.transpose() * jac;
      gradient = jac.transpose() * r;
      half_loss = 0.5 * r.squaredNorm();
      report.loss_history.push_back(2.0 * half_loss);

      damping *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      growth = 2.0;

      if (2.0 * gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance ||
          improvement <= config.relative_loss_tolerance *
                             std::max(half_loss + improvement, 1e-300)) {
        converged = true;
      }
    } else {
      damping *= growth;
      growth *= 2.0;
      if (damping > 1e120) {
        // Normal-equation conditioning is exhausted; nothing more to gain.
        converged = 2.0 * gradient.lpNorm<Eigen::Infinity>() < 1e3 * config.gradient_tolerance;
        break;
      }
    }
  }

  DirectivityModel model = assemble_model(problem, data, x);
  report.loss = 2.0 * half_loss;
  report.iterations = iteration;
  report.converged = converged;
  report.constraint_residuals = measure_constraints(model);
  report.bic = bic_score(report.loss, n_mics, n_angles, order);
  report.uninformative_mics = find_uninformative_mics(problem.powers);
  return {std::move(model), std::move(report)};
}

OrderSelection select_order(const TrainingSet& data, const std::vector<int>& candidate_orders,
                            const SolverConfig& config) {
  if (candidate_orders.empty()) {
    throw_error(ErrorCode::invalid_input, "no candidate orders supplied");
  }
  OrderSelection selection;
  bool have_best = false;
  double best_bic = 0.0;
  std::vector<int> orders = candidate_orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

  for (int order : orders) {
    try {
      auto [model, report] = fit(data, order, config);
      if (!report.converged) {
        selection.failures[order] = "fit did not converge";
        selection.reports[order] = std::move(report);
        continue;
      }
      selection.scores[order] = report.bic;
      selection.reports[order] = report;
      // Ascending scan: ties within 1e-9 keep the smaller order.
      if (!have_best || report.bic < best_bic - 1e-9) {
        best_bic = report.bic;
        selection.best_order = order;
        have_best = true;
      }
    } catch (const Error& e) {
      selection.failures[order] = e.what();
    }
  }

  if (!have_best) {
    std::ostringstream msg;
    msg << "every candidate order failed:";
    for (const auto& [order, reason] : selection.failures) {
      msg << " [order " << order << ": " << reason << "]";
    }
    throw_error(ErrorCode::non_convergence, msg.str());
  }
  return selection;
}

NoiseStats estimate_noise_floor(const SignalFrame& background) {
  background.validate();
  if (background.n_samples() < 1000) {
    throw_error(ErrorCode::invalid_input,
                "background recording too short: need at least 1000 samples per mic");
  }
  NoiseStats stats;
  stats.frame_length = background.n_samples();
  stats.sigma2 = background.samples.array().square().rowwise().mean();
  if ((stats.sigma2.array() <= 0.0).any()) {
    throw_error(ErrorCode::invalid_input,
                "background recording has a silent channel; sigma^2 must be > 0");
  }
  return stats;
}

}  // namespace powerdoa
