#include <algorithm>
#include <iostream>
#include <mutex>
#include <utility>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include <unsupported/Eigen/SpecialFunctions>

#include "fcnet/diagnostics.hpp"
#include "fcnet/error.hpp"
#include "fcnet/optimize.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

// ---------------------------------------------------------------- random ---

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  // FNV-1a over the stage name
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound == 0) throw DomainError("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

double standard_normal(Rng& rng) {
  // Marsaglia polar method, one variate per call
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// -------------------------------------------------------------- parallel ---

namespace {

std::size_t default_workers() {
  if (const char* env = std::getenv("FCNET_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& worker_setting() {
  static std::atomic<std::size_t> workers{default_workers()};
  return workers;
}

}  // namespace

std::size_t worker_count() { return worker_setting().load(); }

void set_worker_count(std::size_t workers) {
  worker_setting().store(std::max<std::size_t>(1, workers));
}

// ----------------------------------------------------------------- stats ---

double student_t_sf(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * Eigen::numext::betainc(0.5 * df, 0.5, x);
  return t >= 0 ? half_tail : 1.0 - half_tail;
}

double student_t_pvalue(double t, double df, Tail tail) {
  switch (tail) {
    case Tail::Greater:
      return student_t_sf(t, df);
    case Tail::Less:
      return student_t_sf(-t, df);
    case Tail::TwoSided:
      break;
  }
  return std::min(1.0, 2.0 * student_t_sf(std::abs(t), df));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return Eigen::numext::ndtri(p);
}

std::string to_string(Correction c) {
  switch (c) {
    case Correction::None: return "none";
    case Correction::Bonferroni: return "bonferroni";
    case Correction::BhFdr: return "bh-fdr";
  }
  return "unknown";
}

Correction parse_correction(const std::string& text) {
  if (text == "none") return Correction::None;
  if (text == "bonferroni") return Correction::Bonferroni;
  if (text == "bh-fdr" || text == "fdr" || text == "bh") return Correction::BhFdr;
  throw ValidationError("unknown correction '" + text + "'");
}

std::string to_string(Tail t) {
  switch (t) {
    case Tail::TwoSided: return "two-sided";
    case Tail::Greater: return "greater";
    case Tail::Less: return "less";
  }
  return "unknown";
}

Tail parse_tail(const std::string& text) {
  if (text == "two-sided" || text == "two_sided") return Tail::TwoSided;
  if (text == "greater") return Tail::Greater;
  if (text == "less") return Tail::Less;
  throw ValidationError("unknown tail '" + text + "'");
}

Eigen::VectorXd adjust_pvalues(const Eigen::VectorXd& p, Correction correction) {
  const Eigen::Index size = p.size();
  Eigen::VectorXd q = p;
  std::vector<Eigen::Index> valid;
  for (Eigen::Index i = 0; i < size; ++i)
    if (!std::isnan(p[i])) valid.push_back(i);
  const double m = static_cast<double>(valid.size());
  switch (correction) {
    case Correction::None:
      break;
    case Correction::Bonferroni:
      for (auto i : valid) q[i] = std::min(1.0, p[i] * m);
      break;
    case Correction::BhFdr: {
      std::stable_sort(valid.begin(), valid.end(),
                       [&](auto a, auto b) { return p[a] < p[b]; });
      double running = 1.0;
      for (std::size_t r = valid.size(); r-- > 0;) {
        const double candidate = p[valid[r]] * m / static_cast<double>(r + 1);
        running = std::min(running, candidate);
        q[valid[r]] = running;
      }
      break;
    }
  }
  return q;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  if (lambda < 1e-3) {
    p = 1.0;
  } else {
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
      const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
      p += term;
      if (std::abs(term) < 1e-12) break;
      sign = -sign;
    }
    p = std::clamp(2.0 * p, 0.0, 1.0);
  }
  return {d, p};
}

// -------------------------------------------------------------- optimize ---

MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                           const NelderMeadOptions& options) {
  const Eigen::Index dim = start.size();
  auto eval = [&](const Eigen::VectorXd& x, int& count) {
    ++count;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  MinimizeResult result;
  result.x = start;
  int evals = 0;
  Eigen::VectorXd origin = start;

  // One restart from the converged point guards against premature collapse.
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<Eigen::VectorXd> simplex(dim + 1, origin);
    std::vector<double> values(dim + 1);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double step = options.initial_step * (attempt == 0 ? 1.0 : 0.2);
      simplex[k + 1][k] += step * std::max(1.0, std::abs(origin[k]));
    }
    for (std::size_t k = 0; k < simplex.size(); ++k) values[k] = eval(simplex[k], evals);

    std::vector<std::size_t> order(dim + 1);
    bool converged = false;
    while (evals < options.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](auto a, auto b) { return values[a] < values[b]; });
      const auto best = order.front();
      const auto worst = order.back();
      const auto second_worst = order[order.size() - 2];

      double spread = 0.0;
      for (const auto& v : simplex) spread = std::max(spread, (v - simplex[best]).cwiseAbs().maxCoeff());
      if (std::isfinite(values[worst]) &&
          std::abs(values[worst] - values[best]) <=
              options.f_tolerance * (std::abs(values[best]) + 1e-12) &&
          spread <= options.x_tolerance * (simplex[best].cwiseAbs().maxCoeff() + 1.0)) {
        converged = true;
        break;
      }
      if (spread < 1e-14) {
        converged = std::isfinite(values[best]);
        break;
      }

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
      for (auto k : order)
        if (k != worst) centroid += simplex[k];
      centroid /= static_cast<double>(dim);

      const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
      const double f_reflected = eval(reflected, evals);
      if (f_reflected < values[best]) {
        const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
        const double f_expanded = eval(expanded, evals);
        if (f_expanded < f_reflected) {
          simplex[worst] = expanded;
          values[worst] = f_expanded;
        } else {
          simplex[worst] = reflected;
          values[worst] = f_reflected;
        }
        continue;
      }
      if (f_reflected < values[second_worst]) {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
        continue;
      }
      const bool outside = f_reflected < values[worst];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double f_contracted = eval(contracted, evals);
      if (f_contracted < std::min(f_reflected, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = f_contracted;
        continue;
      }
      for (auto k : order) {
        if (k == best) continue;
        simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
        values[k] = eval(simplex[k], evals);
      }
    }
    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best = static_cast<std::size_t>(best_it - values.begin());
    if (attempt == 0 || values[best] <= result.value) {
      result.x = simplex[best];
      result.value = values[best];
    }
    result.converged = converged;
    if (!converged) break;
    origin = result.x;
  }
  result.evaluations = evals;
  return result;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double h) {
  const Eigen::Index dim = x.size();
  Eigen::VectorXd step(dim);
  for (Eigen::Index i = 0; i < dim; ++i) step[i] = h * std::max(1.0, std::abs(x[i]));
  Eigen::MatrixXd hessian(dim, dim);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step[i];
    xm[i] -= step[i];
    hessian(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (step[i] * step[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += step[i]; pp[j] += step[j];
      pm[i] += step[i]; pm[j] -= step[j];
      mp[i] -= step[i]; mp[j] += step[j];
      mm[i] -= step[i]; mm[j] -= step[j];
      hessian(i, j) = hessian(j, i) =
          (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step[i] * step[j]);
    }
  }
  return hessian;
}

double brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                      double tolerance) {
  constexpr double golden = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol1 = tolerance * std::abs(x) + 1e-12;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace fcnet

// ----------------------------------------------------------- diagnostics ---

namespace fcnet {
namespace {

std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::string>& warning_log() {
  static std::vector<std::string> log;
  return log;
}

std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler;
  return handler;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(warning_mutex());
  warning_log().push_back(message);
  if (warning_handler())
    warning_handler()(message);
  else
    std::cerr << "warning: " << message << '\n';
}

void set_warning_handler(std::function<void(const std::string&)> handler) {
  std::lock_guard lock(warning_mutex());
  warning_handler() = std::move(handler);
}

std::vector<std::string> take_warnings() {
  std::lock_guard lock(warning_mutex());
  return std::exchange(warning_log(), {});
}

}  // namespace fcnet
