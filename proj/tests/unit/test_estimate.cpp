#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "fcnet/estimate.hpp"
#include "fcnet/random.hpp"
#include "fcnet/stats.hpp"

using namespace fcnet;

namespace {

Eigen::MatrixXd white_noise(int n, int length, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, length);
  for (auto& v : x.reshaped()) v = standard_normal(rng);
  return x;
}

bool symmetric_zero_diagonal(const ConnectionMatrix& cm) {
  return cm.values == cm.values.transpose() && cm.values.diagonal().isZero(0.0);
}

// Rows rescaled so the sample covariance is exactly `target`.
Eigen::MatrixXd with_sample_covariance(Eigen::MatrixXd x, const Eigen::MatrixXd& target) {
  const auto length = x.cols();
  x = x.colwise() - x.rowwise().mean();
  const Eigen::MatrixXd s = x * x.transpose() / double(length - 1);
  const Eigen::MatrixXd white = Eigen::LLT<Eigen::MatrixXd>(s).matrixL().solve(x);
  return Eigen::LLT<Eigen::MatrixXd>(target).matrixL() * white;
}

}  // namespace

TEST_CASE("correlation of copies, negations and orthogonal sinusoids") {
  const int length = 100;
  Eigen::MatrixXd x(4, length);
  Rng rng(3);
  for (int t = 0; t < length; ++t) {
    x(0, t) = standard_normal(rng);
    x(2, t) = std::sin(2 * std::numbers::pi * 5 * t / length);
    x(3, t) = std::cos(2 * std::numbers::pi * 5 * t / length);
  }
  x.row(1) = -x.row(0);
  Eigen::MatrixXd dup(2, length);
  dup.row(0) = x.row(0);
  dup.row(1) = x.row(0);
  CHECK(correlation_matrix(dup).values(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  const auto cm = correlation_matrix(x);
  CHECK(cm.values(0, 1) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(cm.values(2, 3)) < 1e-10);
  CHECK(symmetric_zero_diagonal(cm));
}

TEST_CASE("zero-variance nodes are reported by index") {
  Eigen::MatrixXd x = white_noise(3, 20, 4);
  x.row(1).setConstant(2.0);
  try {
    correlation_matrix(x);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("correlation is invariant to positive affine rescaling") {
  Eigen::MatrixXd x = white_noise(5, 60, 5);
  Eigen::MatrixXd y = x;
  y.row(2) = 3.5 * y.row(2).array() + 7.0;
  CHECK((correlation_matrix(x).values - correlation_matrix(y).values).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((partial_correlation_matrix(x).values - partial_correlation_matrix(y).values)
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("partial correlation of a Gaussian chain vanishes between its ends") {
  Eigen::Matrix3d target;
  target << 1, .6, .36, .6, 1, .6, .36, .6, 1;
  const Eigen::MatrixXd x = with_sample_covariance(white_noise(3, 500, 6), target);
  const auto pc = partial_correlation_matrix(x);
  // Oracle: cofactor of the (0,2) entry of the target is .6*.6 - .36 = 0.
  CHECK(std::abs(pc.values(0, 2)) < 1e-8);
  // Oracle for (0,1): -cof01 / sqrt(cof00 * cof11) from the explicit inverse.
  const double c00 = 1 - .36, c11 = 1 - .36 * .36, c01 = -(.6 - .6 * .36);
  CHECK(pc.values(0, 1) == doctest::Approx(-c01 / std::sqrt(c00 * c11)).epsilon(1e-8));
  CHECK(symmetric_zero_diagonal(pc));
}

TEST_CASE("partial correlation limits") {
  const Eigen::MatrixXd x = white_noise(6, 5000, 7);
  const auto pc = partial_correlation_matrix(x);
  CHECK(pc.values.cwiseAbs().maxCoeff() < 3.0 / std::sqrt(5000.0));
  CHECK(partial_correlation_matrix(x, 1.0).values.isZero(0.0));

  const Eigen::MatrixXd pair = white_noise(2, 40, 8);
  CHECK(std::abs(partial_correlation_matrix(pair).values(0, 1) -
                 correlation_matrix(pair).values(0, 1)) < 1e-10);

  const Eigen::MatrixXd wide = white_noise(10, 8, 9);
  CHECK_THROWS_AS(partial_correlation_matrix(wide, 0.0), Error);
  CHECK_NOTHROW(partial_correlation_matrix(wide, 0.2));
}

TEST_CASE("coherence of identical, lagged and independent series") {
  CoherenceOptions opts{{0.01, 0.2}, 8, 1.0};
  const Eigen::MatrixXd noise = white_noise(2, 4096, 10);
  const Eigen::VectorXd x = noise.row(0).transpose();
  const auto self = coherence_spectrum(x, x, opts);
  REQUIRE(self.size() > 0);
  CHECK((self.array() - 1.0).abs().maxCoeff() < 1e-12);

  Eigen::VectorXd lagged(4096);
  for (int t = 0; t < 4096; ++t) lagged[t] = -2.5 * x[(t + 4096 - 3) % 4096];
  CHECK(coherence_spectrum(x, lagged, opts).mean() > 0.95);

  const auto cm = coherence_matrix(noise, opts);
  CHECK(cm.values(0, 1) < 0.2);
  CHECK(cm.values(0, 1) >= 0.0);
  CHECK(symmetric_zero_diagonal(cm));
}

TEST_CASE("coherence rejects short segments and empty bands") {
  const Eigen::MatrixXd noise = white_noise(2, 30, 11);
  CHECK_THROWS_AS(coherence_matrix(noise, {{0.01, 0.2}, 8, 1.0}), Error);
  const Eigen::MatrixXd longer = white_noise(2, 256, 11);
  CHECK_THROWS_AS(coherence_matrix(longer, {{0.001, 0.002}, 8, 1.0}), Error);
}

TEST_CASE("mutual information of identical and Gaussian pairs") {
  const Eigen::MatrixXd noise = white_noise(1, 1000, 12);
  Eigen::MatrixXd dup(2, 1000);
  dup.row(0) = noise.row(0);
  dup.row(1) = noise.row(0);
  const int bins = default_mi_bins(1000);
  CHECK(bins == static_cast<int>(std::ceil(std::sqrt(1000.0 / 5.0))));
  // Oracle: entropy of the rank-bin occupancy floor(rank * bins / T).
  std::vector<double> counts(bins, 0.0);
  for (int r = 0; r < 1000; ++r) counts[r * bins / 1000] += 1.0;
  double entropy = 0.0;
  for (double c : counts) entropy -= c / 1000 * std::log2(c / 1000);
  const double mi = mutual_information_matrix(dup, bins).values(0, 1);
  CHECK(mi == doctest::Approx(entropy).epsilon(1e-12));
  CHECK(mutual_information_matrix(dup, bins, true).values(0, 1) == 1.0);

  // Analytic Gaussian MI: -0.5 log2(1 - rho^2).
  const int length = 100000;
  Rng rng(13);
  Eigen::MatrixXd g(2, length);
  for (int t = 0; t < length; ++t) {
    const double a = standard_normal(rng), b = standard_normal(rng);
    g(0, t) = a;
    g(1, t) = 0.9 * a + std::sqrt(1 - 0.81) * b;
  }
  const double oracle = -0.5 * std::log2(1 - 0.81);
  CHECK(std::abs(mutual_information_matrix(g, 50).values(0, 1) - oracle) < 0.05);
}

TEST_CASE("mutual information of independent series sits inside the permutation null") {
  // Each data set exceeds its own permutation 95th percentile with
  // probability 0.05; over 40 data sets the exceedance count stays small.
  const int bins = default_mi_bins(300);
  Rng rng(15);
  int exceed = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::MatrixXd x = white_noise(2, 300, 1000 + rep);
    const double observed = mutual_information_matrix(x, bins).values(0, 1);
    std::vector<double> y(x.row(1).begin(), x.row(1).end()), null;
    Eigen::MatrixXd p(2, 300);
    p.row(0) = x.row(0);
    for (int k = 0; k < 99; ++k) {
      shuffle(y, rng);
      p.row(1) = Eigen::Map<Eigen::RowVectorXd>(y.data(), 300);
      null.push_back(mutual_information_matrix(p, bins).values(0, 1));
    }
    if (observed > quantile(null, 0.95)) ++exceed;
  }
  // Binomial(40, 0.05): P(count > 6) < 0.01.
  CHECK(exceed <= 6);
}

TEST_CASE("mutual information is invariant under monotone transforms") {
  Eigen::MatrixXd x = white_noise(3, 400, 16);
  Eigen::MatrixXd y = x;
  y.row(0) = y.row(0).array().exp();
  y.row(2) = y.row(2).array().cube() * 4.0 - 1.0;
  const int bins = default_mi_bins(400);
  CHECK(mutual_information_matrix(x, bins).values == mutual_information_matrix(y, bins).values);
  Eigen::MatrixXd flat = x;
  flat.row(1).setConstant(0.5);
  CHECK_THROWS_AS(mutual_information_matrix(flat, bins), Error);
  CHECK_THROWS(mutual_information_matrix(x, 1));
}

TEST_CASE("synchronization of identical, driven and independent series") {
  const int length = 600;
  Rng rng(17);
  Eigen::MatrixXd x(4, length);
  double state = 0.0;
  for (int t = 0; t < length; ++t) {
    state = 0.8 * state + standard_normal(rng);
    x(0, t) = state;
    x(1, t) = state;
    x(2, t) = state + 0.2 * standard_normal(rng);
    x(3, t) = standard_normal(rng);
  }
  const auto cm = synchronization_matrix(x);
  CHECK(cm.values(0, 1) == 1.0);
  CHECK(cm.values(0, 2) > cm.values(0, 3));
  CHECK(symmetric_zero_diagonal(cm));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(cm.values(i, j) >= 0.0);
      CHECK(cm.values(i, j) <= 1.0);
    }

  // Chance level: independent noise against circularly shifted copies of itself.
  const Eigen::MatrixXd pair = white_noise(2, 400, 18);
  const double observed = synchronization_matrix(pair).values(0, 1);
  std::vector<double> null;
  for (int shift = 20; shift < 400; shift += 19) {
    Eigen::MatrixXd p(2, 400);
    p.row(0) = pair.row(0);
    for (int t = 0; t < 400; ++t) p(1, t) = pair(1, (t + shift) % 400);
    null.push_back(synchronization_matrix(p).values(0, 1));
  }
  CHECK(observed >= quantile(null, 0.0) - 0.02);
  CHECK(observed <= quantile(null, 1.0) + 0.02);

  CHECK_THROWS(synchronization_matrix(white_noise(2, 4, 19)));
}
