#include "fcnet/nullmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <unsupported/Eigen/SpecialFunctions>

#include "fcnet/diagnostics.hpp"
#include "fcnet/error.hpp"
#include "fcnet/optimize.hpp"
#include "fcnet/parallel.hpp"
#include "fcnet/random.hpp"
#include "fcnet/stats.hpp"

namespace fcnet {

BinaryNetwork rewire_preserving_degree(const BinaryNetwork& g, int swaps_per_edge,
                                       std::uint64_t seed) {
  const std::size_t m = g.edge_count();
  if (m < 2) throw ValidationError("rewiring needs at least two edges");
  if (swaps_per_edge < 0) throw ValidationError("swaps_per_edge must be non-negative");
  const auto n = static_cast<std::uint64_t>(g.size());
  auto key = [n](int a, int b) {
    return a < b ? static_cast<std::uint64_t>(a) * n + b : static_cast<std::uint64_t>(b) * n + a;
  };
  std::vector<Edge> edges = g.edges();
  std::unordered_set<std::uint64_t> present;
  present.reserve(2 * m);
  for (const auto& e : edges) present.insert(key(e.i, e.j));

  Rng rng(seed);
  const std::size_t target = static_cast<std::size_t>(swaps_per_edge) * m;
  const std::size_t patience = 100 * m;
  std::size_t done = 0, failures = 0;
  while (done < target) {
    if (failures >= patience) {
      warn("rewiring stopped after " + std::to_string(done) + " of " + std::to_string(target) +
           " swaps: no valid swap in " + std::to_string(patience) + " attempts");
      break;
    }
    const auto e1 = uniform_index(rng, m), e2 = uniform_index(rng, m);
    const bool flip = uniform01(rng) < 0.5;
    if (e1 == e2) {
      ++failures;
      continue;
    }
    const int a = edges[e1].i, b = edges[e1].j;
    int c = edges[e2].i, d = edges[e2].j;
    if (flip) std::swap(c, d);
    // (a,b),(c,d) -> (a,d),(c,b)
    if (a == d || c == b || present.count(key(a, d)) || present.count(key(c, b))) {
      ++failures;
      continue;
    }
    present.erase(key(a, b));
    present.erase(key(c, d));
    present.insert(key(a, d));
    present.insert(key(c, b));
    edges[e1] = {std::min(a, d), std::max(a, d)};
    edges[e2] = {std::min(c, b), std::max(c, b)};
    ++done;
    failures = 0;
  }
  BinaryNetwork out(g.size(), std::move(edges));
  out.provenance.strategy = "degree_preserving_rewire";
  out.provenance.params["swaps"] = static_cast<double>(done);
  return out;
}

BinaryNetwork lattice_reference(const BinaryNetwork& g) {
  const int n = g.size();
  const std::size_t m = g.edge_count();
  if (m < static_cast<std::size_t>(n))
    warn("lattice reference: " + std::to_string(m) + " edges cannot close a ring on " +
         std::to_string(n) + " nodes; returning a partial ring");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (int d = 1; d <= n / 2 && edges.size() < m; ++d)
    for (int i = 0; i < n && edges.size() < m; ++i) {
      const int j = (i + d) % n;
      // At d = n/2 on even n each chord is reached from both ends.
      if (2 * d == n && i >= d) continue;
      edges.push_back({std::min(i, j), std::max(i, j)});
    }
  BinaryNetwork out(n, std::move(edges));
  out.provenance.strategy = "ring_lattice";
  return out;
}

namespace {

SmallWorldResult small_world_impl(const BinaryNetwork& g, const SmallWorldOptions& options,
                                  bool need_lattice) {
  if (options.null_count < 1) throw ValidationError("null_count must be at least 1");
  SmallWorldResult r;
  r.null_count = options.null_count;
  r.seed = options.seed;

  BinaryNetwork target = g;
  const auto giant = largest_component(g);
  if (giant.size() < static_cast<std::size_t>(g.size())) {
    r.largest_component_only = true;
    warn("small-world indices computed on the largest component (" +
         std::to_string(giant.size()) + " of " + std::to_string(g.size()) + " nodes)");
    target = induced_subgraph(g, giant);
  }
  r.nodes_used = target.size();
  r.clustering = clustering(target, options.clustering).value;
  r.path_length = path_length(target).value;

  std::vector<double> c_null(options.null_count), l_null(options.null_count);
  parallel_for(static_cast<std::size_t>(options.null_count), [&](std::size_t k) {
    const auto null = rewire_preserving_degree(target, options.swaps_per_edge,
                                               derive_seed(options.seed, k));
    c_null[k] = clustering(null, options.clustering).value;
    l_null[k] = path_length(null).value;
  });
  r.clustering_random = mean(c_null);
  r.path_length_random = mean(l_null);
  r.sigma = r.clustering_random > 0.0
                ? (r.clustering / r.clustering_random) / (r.path_length / r.path_length_random)
                : std::numeric_limits<double>::quiet_NaN();
  if (need_lattice) {
    r.clustering_lattice = clustering(lattice_reference(target), options.clustering).value;
    r.omega = r.clustering_lattice > 0.0
                  ? r.path_length_random / r.path_length - r.clustering / r.clustering_lattice
                  : std::numeric_limits<double>::quiet_NaN();
  } else {
    r.omega = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace

SmallWorldResult small_world(const BinaryNetwork& g, const SmallWorldOptions& options) {
  return small_world_impl(g, options, true);
}

SmallWorldResult small_world_sigma(const BinaryNetwork& g, const SmallWorldOptions& options) {
  auto r = small_world_impl(g, options, false);
  if (!(r.clustering_random > 0.0))
    throw UndefinedMetric("sigma undefined: the random nulls have zero clustering");
  return r;
}

SmallWorldResult small_world_omega(const BinaryNetwork& g, const SmallWorldOptions& options) {
  auto r = small_world_impl(g, options, true);
  if (!(r.clustering_lattice > 0.0))
    throw UndefinedMetric("omega undefined: the lattice reference has zero clustering");
  return r;
}

// ------------------------------------------------------------- power law ---

namespace {

constexpr double kAlphaLo = 1.0001;
constexpr double kAlphaHi = 20.0;

double hurwitz(double s, double q) { return Eigen::numext::zeta(s, q); }

struct TailFit {
  int x_min = 0;
  int count = 0;
  double alpha = 0.0;
  double ks = std::numeric_limits<double>::infinity();
  double loglik = 0.0;
};

// `sorted` ascending and positive; the tail starts at index `start`.
TailFit fit_tail(const std::vector<int>& sorted, std::size_t start, double sum_log) {
  TailFit f;
  f.x_min = sorted[start];
  f.count = static_cast<int>(sorted.size() - start);
  const double m = f.count;
  const double xm = f.x_min;
  auto nll = [&](double a) { return a * sum_log + m * std::log(hurwitz(a, xm)); };
  f.alpha = brent_minimize(nll, kAlphaLo, kAlphaHi, 1e-9);
  f.loglik = -nll(f.alpha);

  const double z0 = hurwitz(f.alpha, xm);
  auto cdf = [&](double x) { return 1.0 - hurwitz(f.alpha, x + 1.0) / z0; };
  double d = 0.0;
  std::size_t k = start;
  while (k < sorted.size()) {
    const int x = sorted[k];
    std::size_t next = k;
    while (next < sorted.size() && sorted[next] == x) ++next;
    const double emp = static_cast<double>(next - start) / m;
    d = std::max(d, std::abs(emp - cdf(x)));
    // The empirical CDF is flat up to the next observed value.
    if (next < sorted.size() && sorted[next] - 1 > x)
      d = std::max(d, std::abs(emp - cdf(sorted[next] - 1)));
    k = next;
  }
  f.ks = d;
  return f;
}

TailFit best_tail_fit(std::vector<int> values, int min_tail) {
  values.erase(std::remove_if(values.begin(), values.end(), [](int v) { return v < 1; }),
               values.end());
  std::sort(values.begin(), values.end());
  if (values.empty() || values.front() == values.back())
    throw DomainError("power-law fit needs at least two distinct positive values");
  const std::size_t n = values.size();
  std::vector<double> suffix_log(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix_log[k] = suffix_log[k + 1] + std::log(values[k]);

  std::vector<std::size_t> starts;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && values[k] == values[k - 1]) continue;
    if (n - k < static_cast<std::size_t>(min_tail)) break;
    if (values[k] == values.back()) break;  // single distinct value left
    starts.push_back(k);
  }
  if (starts.empty())
    throw LengthError("power-law fit needs at least " + std::to_string(min_tail) +
                      " observations at or above some cutoff, with two distinct values");
  TailFit best;
  for (auto s : starts) {
    auto f = fit_tail(values, s, suffix_log[s]);
    if (f.ks < best.ks) best = f;
  }
  return best;
}

// Inverse-CDF sampler: a survival table near x_min, zeta search beyond it.
class PowerLawSampler {
 public:
  PowerLawSampler(double alpha, int x_min) : alpha_(alpha), x_min_(x_min) {
    z0_ = hurwitz(alpha, x_min);
    survival_.resize(kTable + 1);
    for (int k = 0; k <= kTable; ++k) survival_[k] = survival(x_min + static_cast<double>(k));
  }

  int draw(Rng& rng) const {
    const double r = 1.0 - uniform01(rng);  // in (0, 1]
    // Smallest x with P(X >= x + 1) <= r.
    if (survival_[kTable] <= r) {
      const auto it = std::lower_bound(survival_.begin() + 1, survival_.end(), r,
                                       [](double s, double v) { return s > v; });
      return x_min_ + static_cast<int>(it - survival_.begin()) - 1;
    }
    double lo = x_min_ + static_cast<double>(kTable), hi = 2.0 * lo;
    while (survival(hi) > r) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e9) return static_cast<int>(1e9);
    }
    while (hi - lo > 1.0) {
      const double mid = std::floor(0.5 * (lo + hi));
      (survival(mid) > r ? lo : hi) = mid;
    }
    return static_cast<int>(hi) - 1;
  }

 private:
  static constexpr int kTable = 4096;
  double survival(double y) const { return hurwitz(alpha_, y) / z0_; }

  double alpha_;
  int x_min_;
  double z0_;
  std::vector<double> survival_;
};

// Normalizer of x^-a e^(-lambda x) over x >= x_min: direct sum, then an
// Euler-Maclaurin tail whose integral is done on a log scale.
double truncated_log_normalizer(double a, double lambda, int x_min) {
  constexpr int kDirect = 2000;
  auto log_f = [&](double x) { return -a * std::log(x) - lambda * x; };
  const double anchor = log_f(x_min);
  double sum = 0.0;
  for (int k = 0; k < kDirect; ++k) sum += std::exp(log_f(x_min + k) - anchor);
  const double big_n = x_min + kDirect;
  const double f_n = std::exp(log_f(big_n) - anchor);
  const double df_n = f_n * (-a / big_n - lambda);
  const double upper = std::log1p(60.0 / (lambda * big_n));
  constexpr int kSteps = 4000;
  const double h = upper / kSteps;
  auto g = [&](double u) {
    const double x = big_n * std::exp(u);
    return std::exp(log_f(x) - anchor) * x;
  };
  double integral = g(0.0) + g(upper);
  for (int k = 1; k < kSteps; ++k) integral += (k % 2 ? 4.0 : 2.0) * g(k * h);
  integral *= h / 3.0;
  sum += integral + 0.5 * f_n - df_n / 12.0;
  return std::log(sum) + anchor;
}

}  // namespace

std::vector<int> sample_discrete_powerlaw(double alpha, int x_min, std::size_t count,
                                          std::uint64_t seed) {
  if (!(alpha > 1.0)) throw DomainError("power-law exponent must exceed 1");
  if (x_min < 1) throw DomainError("power-law cutoff must be at least 1");
  const PowerLawSampler sampler(alpha, x_min);
  Rng rng(seed);
  std::vector<int> out(count);
  for (auto& v : out) v = sampler.draw(rng);
  return out;
}

PowerLawFit powerlaw_fit(const std::vector<int>& values, const PowerLawOptions& options) {
  if (options.min_tail < 2) throw ValidationError("min_tail must be at least 2");
  const TailFit fit = best_tail_fit(values, options.min_tail);
  PowerLawFit out;
  out.alpha = fit.alpha;
  out.x_min = fit.x_min;
  out.tail_count = fit.count;
  out.ks_statistic = fit.ks;
  out.pure_loglik = fit.loglik;

  std::vector<int> tail, body;
  for (int v : values) (v >= fit.x_min ? tail : body).push_back(v);
  double sum_log = 0.0, sum_x = 0.0;
  for (int v : tail) {
    sum_log += std::log(v);
    sum_x += v;
  }
  const double m = static_cast<double>(tail.size());
  auto nll = [&](const Eigen::VectorXd& p) {
    const double lambda = std::exp(p[1]);
    return p[0] * sum_log + lambda * sum_x + m * truncated_log_normalizer(p[0], lambda, fit.x_min);
  };
  Eigen::VectorXd start(2);
  start << fit.alpha, std::log(1.0 / (10.0 * *std::max_element(tail.begin(), tail.end())));
  const auto trunc = nelder_mead(nll, start, {.max_evaluations = 2000, .initial_step = 0.5});
  out.truncated_alpha = trunc.x[0];
  out.truncated_lambda = std::exp(trunc.x[1]);
  out.truncated_loglik = -trunc.value;

  out.bootstrap_reps = options.bootstrap_reps;
  if (options.bootstrap_reps <= 0) {
    out.gof_p = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const PowerLawSampler sampler(fit.alpha, fit.x_min);
  const double tail_share = m / static_cast<double>(values.size());
  std::vector<double> ks(static_cast<std::size_t>(options.bootstrap_reps));
  parallel_for(ks.size(), [&](std::size_t b) {
    Rng rng = make_rng(options.seed, b);
    std::vector<int> synthetic(values.size());
    for (auto& v : synthetic)
      v = (body.empty() || uniform01(rng) < tail_share)
              ? sampler.draw(rng)
              : body[uniform_index(rng, body.size())];
    try {
      ks[b] = best_tail_fit(std::move(synthetic), options.min_tail).ks;
    } catch (const Error&) {
      ks[b] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  int valid = 0, extreme = 0;
  for (double d : ks)
    if (!std::isnan(d)) {
      ++valid;
      if (d >= fit.ks) ++extreme;
    }
  if (valid < options.bootstrap_reps)
    warn("power-law bootstrap: " + std::to_string(options.bootstrap_reps - valid) +
         " synthetic data sets could not be fitted");
  out.gof_p = valid > 0 ? static_cast<double>(extreme) / valid
                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace fcnet
