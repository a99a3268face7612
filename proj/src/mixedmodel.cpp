#include "fcnet/mixedmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fcnet/diagnostics.hpp"
#include "fcnet/error.hpp"
#include "fcnet/optimize.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLog2Pi = std::log(2 * std::numbers::pi);

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

bool distance_based(CorrelationKind k) {
  return k != CorrelationKind::Identity && k != CorrelationKind::CompoundSymmetry;
}

/// Column of the design for a named term.
Eigen::VectorXd term_column(const DyadDataset& data, const std::string& name) {
  if (name == "intercept") return Eigen::VectorXd::Ones(data.rows());
  const auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(), name);
  if (it == data.covariate_names.end()) throw ValidationError("unknown covariate '" + name + "'");
  return data.covariates.col(it - data.covariate_names.begin());
}

Eigen::MatrixXd design(const DyadDataset& data, const std::vector<std::string>& terms) {
  if (terms.empty()) throw ValidationError("a model part needs at least one term");
  Eigen::MatrixXd x(data.rows(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t t = 0; t < terms.size(); ++t) x.col(static_cast<Eigen::Index>(t)) = term_column(data, terms[t]);
  return x;
}

void require_full_rank(const Eigen::MatrixXd& x, const std::string& part) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols())
    throw ValidationError(part + " design matrix is rank deficient; drop a collinear term");
}

std::vector<std::vector<Eigen::Index>> rows_by_subject(const DyadDataset& data, bool present_only) {
  std::vector<std::vector<Eigen::Index>> out(data.subject_count);
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    if (!present_only || data.presence[r]) out[data.subject[r]].push_back(r);
  return out;
}

/// Gauss-Hermite nodes and weights for weight exp(-x^2) (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int points) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
  const Eigen::VectorXd w =
      std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).transpose().array().square();
  return {eig.eigenvalues(), w};
}

// Unconstrained <-> natural transforms of correlation parameters.
std::vector<double> to_unconstrained(const CorrelationStructure& s) {
  switch (s.kind) {
    case CorrelationKind::Identity: return {};
    case CorrelationKind::CompoundSymmetry:
    case CorrelationKind::Ar1: return {logit(s.rho)};
    case CorrelationKind::Lear: return {logit(s.rho), std::log(std::max(s.delta, 1e-8))};
    case CorrelationKind::DampedExponential: return {logit(s.rho), std::log(s.nu)};
    default: return {std::log(s.phi)};
  }
}

CorrelationStructure from_unconstrained(CorrelationStructure s, const double* u) {
  switch (s.kind) {
    case CorrelationKind::Identity: break;
    case CorrelationKind::CompoundSymmetry:
    case CorrelationKind::Ar1: s.rho = inv_logit(u[0]); break;
    case CorrelationKind::Lear:
      s.rho = inv_logit(u[0]);
      s.delta = std::exp(u[1]);
      break;
    case CorrelationKind::DampedExponential:
      s.rho = inv_logit(u[0]);
      s.nu = std::exp(u[1]);
      break;
    default: s.phi = std::exp(u[0]); break;
  }
  return s;
}

/// Objective wrapper that counts evaluations and records the best value.
struct Traced {
  std::function<double(const Eigen::VectorXd&)> f;
  std::vector<double>* trace;
  int count = 0;
  double best = kInf;
  double operator()(const Eigen::VectorXd& x) {
    const double v = f(x);
    if (std::isfinite(v)) best = std::min(best, v);
    if (++count % 50 == 0) trace->push_back(best);
    return v;
  }
};

[[noreturn]] void fail_convergence(const std::string& part, int evaluations,
                                   const std::vector<double>& trace) {
  std::string msg = part + " did not converge in " + std::to_string(evaluations) +
                    " evaluations; best objective trace:";
  const std::size_t from = trace.size() > 8 ? trace.size() - 8 : 0;
  for (std::size_t k = from; k < trace.size(); ++k) msg += " " + std::to_string(trace[k]);
  throw ConvergenceError(msg);
}

/// Covariance of the inverse Hessian, or NaN when it is not positive definite.
Eigen::MatrixXd inverse_hessian(const Eigen::MatrixXd& h) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0)
    return Eigen::MatrixXd::Constant(h.rows(), h.cols(), kNaN);
  return ldlt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
}

// ---- Part I -----------------------------------------------------------------

struct PresenceProblem {
  std::vector<std::vector<Eigen::Index>> subjects;
  Eigen::MatrixXd x;
  Eigen::VectorXd v;
  Eigen::VectorXd nodes, weights;

  /// Marginal log-likelihood of one subject with random-intercept sd tau.
  double subject_loglik(const std::vector<Eigen::Index>& rows, const Eigen::VectorXd& eta,
                        double tau) const {
    auto cond = [&](double b) {
      double s = 0;
      for (auto r : rows) s += v[r] * (eta[r] + b) - log1p_exp(eta[r] + b);
      return s;
    };
    if (std::abs(tau) < 1e-8) return cond(0.0);
    const double var = tau * tau;
    // Mode of the integrand by Newton; it is strictly concave in b.
    double b = 0, curvature = 0;
    for (int it = 0; it < 100; ++it) {
      double g = -b / var;
      curvature = -1 / var;
      for (auto r : rows) {
        const double mu = inv_logit(eta[r] + b);
        g += v[r] - mu;
        curvature -= mu * (1 - mu);
      }
      const double step = -g / curvature;
      b += step;
      if (std::abs(step) < 1e-10 * (1 + std::abs(b))) break;
    }
    const double scale = std::sqrt(2.0 / -curvature);
    std::vector<double> terms(nodes.size());
    for (Eigen::Index q = 0; q < nodes.size(); ++q) {
      const double bq = b + scale * nodes[q];
      terms[q] = std::log(weights[q]) + nodes[q] * nodes[q] + cond(bq) - 0.5 * bq * bq / var;
    }
    return std::log(scale) - 0.5 * std::log(2 * std::numbers::pi * var) + log_sum_exp(terms);
  }

  double negative_loglik(const Eigen::VectorXd& theta) const {
    const Eigen::Index p = x.cols();
    const Eigen::VectorXd eta = x * theta.head(p);
    double ll = 0;
    for (const auto& rows : subjects)
      if (!rows.empty()) ll += subject_loglik(rows, eta, theta[p]);
    return -ll;
  }
};

/// Logistic regression without random effects, for starting values.
Eigen::VectorXd logistic_start(const Eigen::MatrixXd& x, const Eigen::VectorXd& v) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      mu[r] = inv_logit(eta[r]);
      w[r] = std::max(mu[r] * (1 - mu[r]), 1e-10);
    }
    const Eigen::VectorXd step =
        (x.transpose() * w.asDiagonal() * x).ldlt().solve(x.transpose() * (v - mu));
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10 || beta.lpNorm<Eigen::Infinity>() > 30) break;
  }
  return beta.cwiseMax(-10).cwiseMin(10);
}

void fit_presence(const DyadDataset& data, const TwoPartModel& model, TwoPartFit& fit) {
  PresenceProblem prob;
  prob.subjects = rows_by_subject(data, false);
  prob.x = design(data, model.presence_terms);
  require_full_rank(prob.x, "presence");
  prob.v.resize(data.rows());
  for (Eigen::Index r = 0; r < data.rows(); ++r) prob.v[r] = data.presence[r];
  if (prob.v.minCoeff() == prob.v.maxCoeff())
    throw ValidationError("presence is identical for every dyad; the presence model is degenerate");
  if (model.quadrature_points < 1) throw ValidationError("quadrature needs at least one point");
  std::tie(prob.nodes, prob.weights) = gauss_hermite(model.quadrature_points);

  const Eigen::Index p = prob.x.cols();
  Eigen::VectorXd start(p + 1);
  start << logistic_start(prob.x, prob.v), 0.5;
  Traced objective{[&](const Eigen::VectorXd& t) { return prob.negative_loglik(t); }, &fit.trace};
  const auto res = nelder_mead(std::ref(objective), start,
                               {.max_evaluations = model.max_evaluations, .initial_step = 0.5,
                                .f_tolerance = 1e-12, .x_tolerance = 1e-7});
  fit.evaluations += res.evaluations;
  if (!res.converged) fail_convergence("presence model", res.evaluations, fit.trace);

  const auto cov = inverse_hessian(
      numerical_hessian([&](const Eigen::VectorXd& t) { return prob.negative_loglik(t); }, res.x));
  fit.beta_v = res.x.head(p);
  fit.beta_v_se = cov.diagonal().head(p).cwiseSqrt();
  fit.presence_intercept_variance = res.x[p] * res.x[p];
  fit.presence_loglik = -res.value;
  fit.presence_converged = true;
}

// ---- Part II ----------------------------------------------------------------

struct StrengthProblem {
  const DyadDataset* data = nullptr;
  std::vector<std::vector<Eigen::Index>> subjects;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> dyad;
  Eigen::MatrixXd omega_distances;  // empty for non-distance structures
  Eigen::MatrixXd task_distances;

  /// Log-likelihood at given covariance parameters with beta profiled out
  /// (or fixed when `fixed_beta` is set). NaN when a covariance is not PD.
  double loglik(double tau2, const Eigen::VectorXd& sigma2, const Eigen::MatrixXd& omega,
                const Eigen::MatrixXd& gamma, const Eigen::VectorXd* fixed_beta,
                Eigen::VectorXd* beta_out = nullptr, Eigen::MatrixXd* beta_cov = nullptr) const {
    const Eigen::Index p = x.cols();
    const Eigen::VectorXd sd = sigma2.cwiseSqrt();
    std::vector<Eigen::MatrixXd> xw(subjects.size());
    std::vector<Eigen::VectorXd> yw(subjects.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    double base = 0;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      const auto& rows = subjects[s];
      const auto m = static_cast<Eigen::Index>(rows.size());
      if (m == 0) continue;
      Eigen::MatrixXd v(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const int ti = data->task[rows[i]];
        for (Eigen::Index j = 0; j <= i; ++j) {
          const int tj = data->task[rows[j]];
          v(i, j) = v(j, i) =
              tau2 + sd[ti] * sd[tj] * gamma(ti, tj) * omega(dyad[rows[i]], dyad[rows[j]]);
        }
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(v);
      if (llt.info() != Eigen::Success) return kNaN;
      const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
      if (diag.minCoeff() <= 0) return kNaN;
      base += m * kLog2Pi + 2 * diag.array().log().sum();
      Eigen::MatrixXd xs(m, p);
      Eigen::VectorXd ys(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        xs.row(i) = x.row(rows[i]);
        ys[i] = y[rows[i]];
      }
      xw[s] = llt.matrixL().solve(xs);
      yw[s] = llt.matrixL().solve(ys);
      a += xw[s].transpose() * xw[s];
      c += xw[s].transpose() * yw[s];
    }
    Eigen::VectorXd beta;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (fixed_beta) {
      beta = *fixed_beta;
    } else {
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return kNaN;
      beta = ldlt.solve(c);
    }
    double quad = 0;
    for (std::size_t s = 0; s < subjects.size(); ++s)
      if (!subjects[s].empty()) quad += (yw[s] - xw[s] * beta).squaredNorm();
    if (beta_out) *beta_out = beta;
    if (beta_cov) *beta_cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return -0.5 * (base + quad);
  }
};

/// Distance matrix and effective structure for the dyad correlation.
CorrelationStructure resolve_omega(const DyadDataset& data, const CorrelationStructure& requested,
                                   Eigen::MatrixXd& distances) {
  if (!distance_based(requested.kind)) return requested;
  if (!data.coordinates) {
    warn("dyad correlation '" + to_string(requested.kind) +
         "' needs node coordinates; using compound symmetry");
    CorrelationStructure cs;
    cs.kind = CorrelationKind::CompoundSymmetry;
    cs.rho = 0.1;
    return cs;
  }
  distances = dyad_distances(*data.coordinates);
  return requested;
}

Eigen::MatrixXd task_gamma(const TaskCorrelation& spec, const Eigen::MatrixXd& task_distances,
                           int tasks, const double* u) {
  switch (spec.mode) {
    case TaskCorrelation::Mode::Independent: return Eigen::MatrixXd::Identity(tasks, tasks);
    case TaskCorrelation::Mode::Patterned:
      return corr_structure_eval(from_unconstrained(spec.pattern, u), task_distances, false);
    case TaskCorrelation::Mode::Unstructured:
      return unstructured_correlation(
          Eigen::Map<const Eigen::VectorXd>(u, tasks * (tasks - 1) / 2), tasks);
  }
  return {};
}

void fit_strength(const DyadDataset& data, const TwoPartModel& model, TwoPartFit& fit) {
  StrengthProblem prob;
  prob.data = &data;
  prob.subjects = rows_by_subject(data, true);
  int with_rows = 0;
  for (const auto& s : prob.subjects) with_rows += !s.empty();
  if (with_rows == 0) throw ValidationError("no present dyads; the strength model has no rows");
  prob.x = design(data, model.strength_terms);
  prob.y = Eigen::VectorXd::Zero(data.rows());
  prob.dyad.resize(data.rows());
  Eigen::Index present = 0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    prob.dyad[r] = data.dyad_index(r);
    if (data.presence[r]) {
      prob.y[r] = fisher_z(data.strength[r]);
      ++present;
    }
  }
  {
    Eigen::MatrixXd xp(present, prob.x.cols());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r)
      if (data.presence[r]) xp.row(k++) = prob.x.row(r);
    require_full_rank(xp, "strength");
  }

  const CorrelationStructure omega0 = resolve_omega(data, model.omega, prob.omega_distances);
  omega0.validate();
  const int tasks = data.task_count;
  if (model.gamma.mode == TaskCorrelation::Mode::Patterned) {
    if (data.task_times.size() != tasks)
      throw ValidationError("patterned task correlation needs one acquisition time per task");
    prob.task_distances.resize(tasks, tasks);
    for (int a = 0; a < tasks; ++a)
      for (int b = 0; b < tasks; ++b)
        prob.task_distances(a, b) = std::abs(data.task_times[a] - data.task_times[b]);
    model.gamma.pattern.validate();
  }
  const int dyads = data.node_count * (data.node_count - 1) / 2;

  // theta = [tau, log sigma2(task)..., omega (unconstrained)..., gamma...]
  const auto omega_u = to_unconstrained(omega0);
  std::vector<double> gamma_u;
  if (model.gamma.mode == TaskCorrelation::Mode::Patterned)
    gamma_u = to_unconstrained(model.gamma.pattern);
  else if (model.gamma.mode == TaskCorrelation::Mode::Unstructured)
    gamma_u.assign(static_cast<std::size_t>(tasks) * (tasks - 1) / 2, 0.0);
  if (tasks == 1) gamma_u.clear();
  const Eigen::Index k_omega = static_cast<Eigen::Index>(omega_u.size());
  const Eigen::Index k_gamma = static_cast<Eigen::Index>(gamma_u.size());
  const Eigen::Index dim = 1 + tasks + k_omega + k_gamma;

  auto omega_of = [&](const double* u) -> Eigen::MatrixXd {
    const auto s = from_unconstrained(omega0, u);
    switch (s.kind) {
      case CorrelationKind::Identity: return Eigen::MatrixXd::Identity(dyads, dyads);
      case CorrelationKind::CompoundSymmetry: {
        Eigen::MatrixXd o = Eigen::MatrixXd::Constant(dyads, dyads, s.rho);
        o.diagonal().setOnes();
        return o;
      }
      default: return corr_structure_eval(s, prob.omega_distances, false);
    }
  };
  auto gamma_of = [&](const double* u) -> Eigen::MatrixXd {
    if (tasks == 1) return Eigen::MatrixXd::Ones(1, 1);
    return task_gamma(model.gamma, prob.task_distances, tasks, u);
  };
  auto eval = [&](const Eigen::VectorXd& t, Eigen::VectorXd* beta = nullptr,
                  Eigen::MatrixXd* beta_cov = nullptr) {
    if (t.tail(dim - 1).head(tasks).maxCoeff() > 50) return kNaN;
    const Eigen::VectorXd sigma2 = t.segment(1, tasks).array().exp();
    return prob.loglik(t[0] * t[0], sigma2, omega_of(t.data() + 1 + tasks),
                       gamma_of(t.data() + 1 + tasks + k_omega), nullptr, beta, beta_cov);
  };

  // Starting values from ordinary least squares on the present rows.
  Eigen::VectorXd start(dim);
  {
    Eigen::MatrixXd xp(present, prob.x.cols());
    Eigen::VectorXd yp(present);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r)
      if (data.presence[r]) {
        xp.row(k) = prob.x.row(r);
        yp[k++] = prob.y[r];
      }
    const Eigen::VectorXd b = xp.colPivHouseholderQr().solve(yp);
    const double rss = (yp - xp * b).squaredNorm() / std::max<Eigen::Index>(present - xp.cols(), 1);
    start[0] = 0.3 * std::sqrt(rss);
    start.segment(1, tasks).setConstant(std::log(std::max(rss, 1e-8)));
    for (Eigen::Index i = 0; i < k_omega; ++i) start[1 + tasks + i] = omega_u[i];
    for (Eigen::Index i = 0; i < k_gamma; ++i) start[1 + tasks + k_omega + i] = gamma_u[i];
  }

  auto negative = [&](const Eigen::VectorXd& t) { return -eval(t); };
  Traced objective{negative, &fit.trace};
  const auto res = nelder_mead(std::ref(objective), start,
                               {.max_evaluations = model.max_evaluations, .initial_step = 0.5,
                                .f_tolerance = 1e-12, .x_tolerance = 1e-7});
  fit.evaluations += res.evaluations;
  if (!res.converged) fail_convergence("strength model", res.evaluations, fit.trace);

  Eigen::MatrixXd beta_cov;
  fit.strength_loglik = eval(res.x, &fit.beta_s, &beta_cov);
  fit.beta_s_se = beta_cov.diagonal().cwiseSqrt();
  fit.strength_intercept_variance = res.x[0] * res.x[0];
  fit.residual_variance = res.x.segment(1, tasks).array().exp();
  fit.omega = from_unconstrained(omega0, res.x.data() + 1 + tasks);
  fit.gamma = gamma_of(res.x.data() + 1 + tasks + k_omega);
  fit.strength_converged = true;

  // Natural-scale parameters: omega params, then gamma params.
  auto natural = [&](const Eigen::VectorXd& t) {
    std::vector<double> out = from_unconstrained(omega0, t.data() + 1 + tasks).parameters();
    if (k_gamma == 0) return out;
    if (model.gamma.mode == TaskCorrelation::Mode::Patterned) {
      const auto g = from_unconstrained(model.gamma.pattern, t.data() + 1 + tasks + k_omega);
      for (double v : g.parameters()) out.push_back(v);
    } else {
      const auto g = gamma_of(t.data() + 1 + tasks + k_omega);
      for (int a = 0; a < tasks; ++a)
        for (int b = a + 1; b < tasks; ++b) out.push_back(g(a, b));
    }
    return out;
  };
  const auto nat0 = natural(res.x);
  fit.gamma_params.assign(nat0.begin() + k_omega, nat0.end());

  const Eigen::MatrixXd cov = inverse_hessian(numerical_hessian(negative, res.x));
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(nat0.size()), dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(res.x[c]));
    Eigen::VectorXd up = res.x, down = res.x;
    up[c] += h;
    down[c] -= h;
    const auto fu = natural(up), fd = natural(down);
    for (std::size_t r = 0; r < nat0.size(); ++r) jac(static_cast<Eigen::Index>(r), c) = (fu[r] - fd[r]) / (2 * h);
  }
  const Eigen::VectorXd se = (jac * cov * jac.transpose()).diagonal().cwiseSqrt();
  fit.omega_se.assign(se.data(), se.data() + k_omega);
  fit.gamma_se.assign(se.data() + k_omega, se.data() + se.size());
  if (!se.allFinite() && se.size() > 0)
    warn("strength model: covariance-parameter Hessian is not positive definite; some standard "
         "errors are undefined");
}

}  // namespace

int DyadDataset::dyad_index(Eigen::Index row) const {
  const int j = node_j[row], k = node_k[row];
  return j * node_count - j * (j + 1) / 2 + (k - j - 1);
}

void DyadDataset::validate() const {
  const auto n = static_cast<std::size_t>(rows());
  if (task.size() != n || node_j.size() != n || node_k.size() != n || presence.size() != n ||
      static_cast<std::size_t>(strength.size()) != n ||
      static_cast<std::size_t>(covariates.rows()) != n ||
      static_cast<std::size_t>(covariates.cols()) != covariate_names.size())
    throw ShapeError("dyad dataset columns have inconsistent lengths");
  if (node_count < 2 || subject_count < 1 || task_count < 1)
    throw ValidationError("dyad dataset needs at least 2 nodes, 1 subject and 1 task");
  for (std::size_t r = 0; r < n; ++r) {
    if (subject[r] < 0 || subject[r] >= subject_count || task[r] < 0 || task[r] >= task_count)
      throw ShapeError("subject or task id out of range at row " + std::to_string(r));
    if (node_j[r] < 0 || node_j[r] >= node_k[r] || node_k[r] >= node_count)
      throw ShapeError("dyad must satisfy 0 <= j < k < n at row " + std::to_string(r));
    const double s = strength[static_cast<Eigen::Index>(r)];
    if (presence[r] ? !(std::abs(s) < 1) : !std::isnan(s))
      throw DomainError("present dyads need a strength in (-1, 1) and absent dyads none (row " +
                        std::to_string(r) + ")");
  }
  if (coordinates && coordinates->cols() != node_count)
    throw ShapeError("coordinates must have one column per node");
  for (const auto& name : covariate_names)
    if (name == "intercept") throw ValidationError("'intercept' is reserved");
}

DyadDataset build_dyad_dataset(const std::vector<std::vector<ConnectionMatrix>>& scans,
                               const DatasetCovariates& covariates, double threshold) {
  if (scans.empty() || scans.front().empty()) throw ValidationError("no scans");
  if (threshold < 0) throw DomainError("presence threshold must be non-negative");
  DyadDataset d;
  d.subject_count = static_cast<int>(scans.size());
  d.task_count = static_cast<int>(scans.front().size());
  d.node_count = static_cast<int>(scans.front().front().size());
  const int n = d.node_count;
  for (const auto& subject : scans) {
    if (static_cast<int>(subject.size()) != d.task_count)
      throw ShapeError("every subject needs the same number of task scans");
    for (const auto& cm : subject) {
      if (cm.size() != n) throw ShapeError("all connection matrices must have the same size");
      if (!is_correlation_family(cm.measure))
        throw ValidationError("dyad datasets need correlation or partial correlation matrices");
    }
  }
  for (const auto& [name, v] : covariates.subject)
    if (v.size() != d.subject_count)
      throw ShapeError("subject covariate '" + name + "' needs one value per subject");
  for (const auto& [name, m] : covariates.dyad)
    if (m.rows() != n || m.cols() != n)
      throw ShapeError("dyad covariate '" + name + "' must be n x n");

  for (const auto& [name, v] : covariates.subject) d.covariate_names.push_back(name);
  for (const auto& [name, m] : covariates.dyad) d.covariate_names.push_back(name);
  if (covariates.nodal_effects)
    for (int v = 1; v < n; ++v) d.covariate_names.push_back("node_" + std::to_string(v));
  const std::size_t base_columns = d.covariate_names.size();
  for (const auto& [a, b] : covariates.interactions) d.covariate_names.push_back(a + ":" + b);

  const long dyads = static_cast<long>(n) * (n - 1) / 2;
  const Eigen::Index rows = static_cast<Eigen::Index>(d.subject_count) * d.task_count * dyads;
  d.strength.resize(rows);
  d.covariates.resize(rows, static_cast<Eigen::Index>(d.covariate_names.size()));
  Eigen::Index r = 0;
  for (int s = 0; s < d.subject_count; ++s)
    for (int t = 0; t < d.task_count; ++t)
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k, ++r) {
          const double value = std::max(scans[s][t].values(j, k), 0.0);
          if (value >= 1) throw DomainError("connection strength must be below 1");
          d.subject.push_back(s);
          d.task.push_back(t);
          d.node_j.push_back(j);
          d.node_k.push_back(k);
          d.presence.push_back(value > threshold ? 1 : 0);
          d.strength[r] = value > threshold ? value : kNaN;
          Eigen::Index c = 0;
          for (const auto& [name, v] : covariates.subject) d.covariates(r, c++) = v[s];
          for (const auto& [name, m] : covariates.dyad) d.covariates(r, c++) = m(j, k);
          if (covariates.nodal_effects)
            for (int v = 1; v < n; ++v) d.covariates(r, c++) = (j == v || k == v) ? 1.0 : 0.0;
        }
  for (std::size_t i = 0; i < covariates.interactions.size(); ++i) {
    const auto& [a, b] = covariates.interactions[i];
    auto col = [&](const std::string& name) {
      const auto it = std::find(d.covariate_names.begin(),
                                d.covariate_names.begin() + static_cast<long>(base_columns), name);
      if (it == d.covariate_names.begin() + static_cast<long>(base_columns))
        throw ValidationError("interaction names unknown covariate '" + name + "'");
      return d.covariates.col(it - d.covariate_names.begin());
    };
    d.covariates.col(static_cast<Eigen::Index>(base_columns + i)) = col(a).cwiseProduct(col(b));
  }
  d.validate();
  return d;
}

DyadDataset build_dyad_dataset(const std::vector<ConnectionMatrix>& scans,
                               const DatasetCovariates& covariates, double threshold) {
  std::vector<std::vector<ConnectionMatrix>> nested;
  for (const auto& cm : scans) nested.push_back({cm});
  return build_dyad_dataset(nested, covariates, threshold);
}

std::string to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Identity: return "identity";
    case CorrelationKind::CompoundSymmetry: return "compound_symmetry";
    case CorrelationKind::Lear: return "lear";
    case CorrelationKind::Ar1: return "ar1";
    case CorrelationKind::DampedExponential: return "damped_exponential";
    case CorrelationKind::Exponential: return "exponential";
    case CorrelationKind::Gaussian: return "gaussian";
    case CorrelationKind::Linear: return "linear";
    case CorrelationKind::Spherical: return "spherical";
  }
  return "";
}

CorrelationKind parse_correlation_kind(const std::string& text) {
  for (auto k : {CorrelationKind::Identity, CorrelationKind::CompoundSymmetry,
                 CorrelationKind::Lear, CorrelationKind::Ar1, CorrelationKind::DampedExponential,
                 CorrelationKind::Exponential, CorrelationKind::Gaussian, CorrelationKind::Linear,
                 CorrelationKind::Spherical})
    if (to_string(k) == text) return k;
  if (text == "cs") return CorrelationKind::CompoundSymmetry;
  if (text == "de") return CorrelationKind::DampedExponential;
  throw ValidationError("unknown correlation structure '" + text + "'");
}

std::vector<std::string> CorrelationStructure::parameter_names() const {
  switch (kind) {
    case CorrelationKind::Identity: return {};
    case CorrelationKind::CompoundSymmetry:
    case CorrelationKind::Ar1: return {"rho"};
    case CorrelationKind::Lear: return {"rho", "delta"};
    case CorrelationKind::DampedExponential: return {"rho", "nu"};
    default: return {"phi"};
  }
}

int CorrelationStructure::parameter_count() const {
  return static_cast<int>(parameter_names().size());
}

std::vector<double> CorrelationStructure::parameters() const {
  std::vector<double> out;
  for (const auto& name : parameter_names())
    out.push_back(name == "rho" ? rho : name == "delta" ? delta : name == "nu" ? nu : phi);
  return out;
}

void CorrelationStructure::validate() const {
  const auto names = parameter_names();
  auto uses = [&](const char* p) { return std::find(names.begin(), names.end(), p) != names.end(); };
  if (uses("rho") && !(rho > 0 && rho < 1))
    throw DomainError(to_string(kind) + ": rho must lie in (0, 1), got " + std::to_string(rho));
  if (uses("delta") && !(delta >= 0))
    throw DomainError(to_string(kind) + ": delta must be >= 0, got " + std::to_string(delta));
  if (uses("nu") && !(nu > 0))
    throw DomainError(to_string(kind) + ": nu must be > 0, got " + std::to_string(nu));
  if (uses("phi") && !(phi > 0))
    throw DomainError(to_string(kind) + ": phi must be > 0, got " + std::to_string(phi));
  if (kind == CorrelationKind::Lear && d_min && d_max && !(*d_max > *d_min))
    throw DomainError("lear: d_max must exceed d_min");
}

double correlation_at(const CorrelationStructure& s, double d, double d_min, double d_max) {
  if (d == 0) return 1.0;
  switch (s.kind) {
    case CorrelationKind::Identity: return 0.0;
    case CorrelationKind::CompoundSymmetry: return s.rho;
    case CorrelationKind::Lear:
      return std::pow(s.rho, d_min + s.delta * (d - d_min) / (d_max - d_min));
    case CorrelationKind::Ar1: return std::pow(s.rho, d);
    case CorrelationKind::DampedExponential: return std::pow(s.rho, std::pow(d, s.nu));
    case CorrelationKind::Exponential: return std::exp(-d / s.phi);
    case CorrelationKind::Gaussian: return std::exp(-d * d / (s.phi * s.phi));
    case CorrelationKind::Linear: return s.phi * d <= 1 ? 1 - s.phi * d : 0.0;
    case CorrelationKind::Spherical: {
      if (d > s.phi) return 0.0;
      const double u = d / s.phi;
      return 1 - 1.5 * u + 0.5 * u * u * u;
    }
  }
  return 0.0;
}

Eigen::MatrixXd corr_structure_eval(const CorrelationStructure& s, const Eigen::MatrixXd& distances,
                                    bool check_psd) {
  s.validate();
  if (distances.rows() != distances.cols()) throw ShapeError("distance matrix must be square");
  const Eigen::Index m = distances.rows();
  double lo = s.d_min.value_or(kInf), hi = s.d_max.value_or(-kInf);
  if (s.kind == CorrelationKind::Lear && (!s.d_min || !s.d_max)) {
    double found_lo = kInf, found_hi = -kInf;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        if (i != j && distances(i, j) > 0) {
          found_lo = std::min(found_lo, distances(i, j));
          found_hi = std::max(found_hi, distances(i, j));
        }
    if (!s.d_min) lo = found_lo;
    if (!s.d_max) hi = found_hi;
    if (!(hi > lo)) throw DomainError("lear: d_max must exceed d_min (distances are all equal)");
  }
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = distances(i, j);
      if (d < 0 || !std::isfinite(d)) throw DomainError("distances must be finite and non-negative");
      out(i, j) = out(j, i) = correlation_at(s, d, lo, hi);
    }
  }
  if (check_psd && m > 0) {
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(out, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < -1e-8) {
      std::string params;
      const auto names = s.parameter_names();
      const auto values = s.parameters();
      for (std::size_t k = 0; k < names.size(); ++k)
        params += " " + names[k] + "=" + std::to_string(values[k]);
      throw DomainError(to_string(s.kind) + " correlation is not positive semi-definite on these "
                        "distances (min eigenvalue " + std::to_string(min_eig) + ";" + params + ")");
    }
  }
  return out;
}

Eigen::MatrixXd dyad_distances(const Eigen::Matrix3Xd& coordinates) {
  const int n = static_cast<int>(coordinates.cols());
  std::vector<Eigen::Vector3d> mid;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) mid.push_back(0.5 * (coordinates.col(j) + coordinates.col(k)));
  const auto m = static_cast<Eigen::Index>(mid.size());
  Eigen::MatrixXd d(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) d(a, b) = d(b, a) = (mid[a] - mid[b]).norm();
  return d;
}

Eigen::MatrixXd unstructured_correlation(const Eigen::VectorXd& params, int size) {
  if (params.size() != static_cast<Eigen::Index>(size) * (size - 1) / 2)
    throw ShapeError("unstructured correlation needs T(T-1)/2 parameters");
  // Row i of the factor: canonical partial correlations z_ij = tanh(u_ij)
  // spend the row's unit norm left to right.
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(size, size);
  Eigen::Index k = 0;
  for (int i = 0; i < size; ++i) {
    double remaining = 1.0;
    for (int j = 0; j < i; ++j) {
      const double z = std::tanh(params[k++]);
      l(i, j) = z * std::sqrt(remaining);
      remaining -= l(i, j) * l(i, j);
    }
    l(i, i) = std::sqrt(std::max(remaining, 0.0));
  }
  Eigen::MatrixXd g = l * l.transpose();
  g.diagonal().setOnes();
  return g;
}

TwoPartFit twopart_fit(const DyadDataset& data, const TwoPartModel& model) {
  data.validate();
  if (data.subject_count < 2) throw ValidationError("the two-part model needs at least 2 subjects");
  TwoPartFit fit;
  fit.presence_terms = model.presence_terms;
  fit.strength_terms = model.strength_terms;
  fit_presence(data, model, fit);
  fit_strength(data, model, fit);
  return fit;
}

double strength_loglik(const DyadDataset& data, const std::vector<std::string>& terms,
                       const StrengthParameters& params) {
  data.validate();
  StrengthProblem prob;
  prob.data = &data;
  prob.subjects = rows_by_subject(data, true);
  prob.x = design(data, terms);
  if (params.beta.size() != prob.x.cols()) throw ShapeError("beta length does not match the terms");
  if (params.residual_variance.size() != data.task_count)
    throw ShapeError("one residual variance per task is required");
  if (params.gamma.rows() != data.task_count || params.gamma.cols() != data.task_count)
    throw ShapeError("gamma must be tasks x tasks");
  prob.y = Eigen::VectorXd::Zero(data.rows());
  prob.dyad.resize(data.rows());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    prob.dyad[r] = data.dyad_index(r);
    if (data.presence[r]) prob.y[r] = fisher_z(data.strength[r]);
  }
  const int dyads = data.node_count * (data.node_count - 1) / 2;
  Eigen::MatrixXd omega;
  if (params.omega.kind == CorrelationKind::Identity) {
    omega = Eigen::MatrixXd::Identity(dyads, dyads);
  } else if (params.omega.kind == CorrelationKind::CompoundSymmetry) {
    params.omega.validate();
    omega = Eigen::MatrixXd::Constant(dyads, dyads, params.omega.rho);
    omega.diagonal().setOnes();
  } else {
    if (!data.coordinates) throw ValidationError("distance-based correlation needs coordinates");
    omega = corr_structure_eval(params.omega, dyad_distances(*data.coordinates));
  }
  const double ll = prob.loglik(params.intercept_variance, params.residual_variance, omega,
                                params.gamma, &params.beta);
  if (std::isnan(ll)) throw DomainError("covariance is not positive definite");
  return ll;
}

double kronecker_loglik(const std::vector<Eigen::MatrixXd>& residuals, const Eigen::MatrixXd& gamma,
                        const Eigen::MatrixXd& omega, const Eigen::VectorXd& sigma2_task) {
  const Eigen::Index t = gamma.rows(), m = omega.rows();
  if (gamma.cols() != t || omega.cols() != m || sigma2_task.size() != t)
    throw ShapeError("gamma must be T x T, omega m x m and sigma2 of length T");
  if (!(sigma2_task.array() > 0).all()) throw DomainError("task variances must be positive");
  const Eigen::VectorXd sd = sigma2_task.cwiseSqrt();
  // sigma2(task)[Gamma x Omega] = (S Gamma S) x Omega with S = diag(sd).
  const Eigen::MatrixXd g = sd.asDiagonal() * gamma * sd.asDiagonal();
  const Eigen::LLT<Eigen::MatrixXd> lg(g), lo(omega);
  if (lg.info() != Eigen::Success || lo.info() != Eigen::Success)
    throw DomainError("Kronecker factors must be positive definite");
  const double logdet_g = 2 * lg.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_o = 2 * lo.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double ll = 0;
  for (const auto& r : residuals) {
    if (r.rows() != t || r.cols() != m) throw ShapeError("residual block must be tasks x dyads");
    // vec(R)' (G x O)^-1 vec(R) = sum((G^-1 R) .* (R O^-1)) for row-major vec.
    const Eigen::MatrixXd left = lg.solve(r);
    const Eigen::MatrixXd right = lo.solve(r.transpose()).transpose();
    const double quad = left.cwiseProduct(right).sum();
    ll -= 0.5 * (static_cast<double>(t * m) * kLog2Pi + m * logdet_g + t * logdet_o + quad);
  }
  return ll;
}

TwoPartPrediction twopart_predict(const TwoPartFit& fit,
                                  const std::map<std::string, double>& covariates) {
  if (!fit.presence_converged || !fit.strength_converged)
    throw ValidationError("prediction needs a converged fit");
  for (const auto& [name, value] : covariates) {
    const bool known = std::find(fit.presence_terms.begin(), fit.presence_terms.end(), name) !=
                           fit.presence_terms.end() ||
                       std::find(fit.strength_terms.begin(), fit.strength_terms.end(), name) !=
                           fit.strength_terms.end();
    if (!known || name == "intercept")
      throw ValidationError("covariate '" + name + "' is not a term of the fit");
  }
  auto linear = [&](const std::vector<std::string>& terms, const Eigen::VectorXd& beta) {
    double eta = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (terms[t] == "intercept") {
        eta += beta[static_cast<Eigen::Index>(t)];
        continue;
      }
      const auto it = covariates.find(terms[t]);
      if (it == covariates.end()) throw ValidationError("missing covariate '" + terms[t] + "'");
      eta += beta[static_cast<Eigen::Index>(t)] * it->second;
    }
    return eta;
  };
  return {inv_logit(linear(fit.presence_terms, fit.beta_v)),
          inverse_fisher_z(linear(fit.strength_terms, fit.beta_s))};
}

}  // namespace fcnet
