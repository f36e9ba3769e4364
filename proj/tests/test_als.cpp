#include <doctest.h>

#include <cmath>
#include <random>

#include "dals/als.hpp"
#include "dals/filter.hpp"
#include "dals/linalg.hpp"

using namespace dals;
using namespace dals::als;
using linalg::StructureMap;

namespace {

Matrix random_matrix(std::mt19937& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

Matrix random_spd(std::mt19937& gen, Eigen::Index n) {
  Matrix m = random_matrix(gen, n, n);
  return m * m.transpose() + 0.2 * Matrix::Identity(n, n);
}

// Independent oracle for the innovation autocovariances: solve the steady
// prediction-error Lyapunov equation through a direct vectorized inversion,
// then apply the closed-form lag expressions.
std::vector<Matrix> oracle_autocov(const Matrix& f, const Matrix& h, const Matrix& k,
                                   const Matrix& q, const Matrix& r, int n_lags) {
  const Eigen::Index nx = f.rows();
  const Matrix fbar = f - k * h * f;
  const Matrix fk = f * k;
  const Matrix c = q + fk * r * fk.transpose();
  Matrix lhs = Matrix::Identity(nx * nx, nx * nx) - linalg::kron(fbar, fbar);
  Vector vp = lhs.fullPivLu().solve(linalg::vec(c));
  Matrix p = linalg::unvec(vp, nx, nx);
  p = 0.5 * (p + p.transpose());

  std::vector<Matrix> out;
  out.push_back(h * p * h.transpose() + r);
  Matrix power = Matrix::Identity(nx, nx);
  for (int l = 1; l < n_lags; ++l) {
    out.push_back(h * power * fbar * p * h.transpose() - h * power * fk * r);
    power = power * fbar;
  }
  return out;
}

Vector stack_vec(const std::vector<Matrix>& cs) {
  const Eigen::Index nz = cs.front().rows();
  Matrix stack(static_cast<Eigen::Index>(cs.size()) * nz, nz);
  for (size_t l = 0; l < cs.size(); ++l)
    stack.middleRows(static_cast<Eigen::Index>(l) * nz, nz) = cs[l];
  return linalg::vec(stack);
}

}  // namespace

TEST_CASE("empirical autocovariance basics") {
  SUBCASE("constant sequence gives c^2 at every lag") {
    std::vector<Vector> e(20, Vector::Constant(1, 3.0));
    auto st = empirical_autocov(e, 4);
    REQUIRE(st.lag_count() == 4);
    CHECK(st.tau == 20);
    for (const auto& c : st.lags) CHECK(c(0, 0) == doctest::Approx(9.0).epsilon(1e-12));
  }
  SUBCASE("two-sample example") {
    std::vector<Vector> e = {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
    CHECK_THROWS_AS(empirical_autocov(e, 2), ConfigError);  // tau <= N
    e.push_back(Vector::Constant(1, 0.0));
    auto st = empirical_autocov({e.begin(), e.begin() + 2}, 1);
    CHECK(st.lags[0](0, 0) == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("lags of white noise are small") {
    std::mt19937 gen(5);
    std::normal_distribution<double> nd;
    const int tau = 10000;
    std::vector<Vector> e;
    e.reserve(tau);
    for (int i = 0; i < tau; ++i) e.push_back(Vector::Constant(1, nd(gen)));
    auto st = empirical_autocov(e, 6);
    CHECK(st.lags[0](0, 0) == doctest::Approx(1.0).epsilon(0.05));
    for (int l = 1; l < 6; ++l)
      CHECK(std::abs(st.lags[static_cast<size_t>(l)](0, 0)) < 3.0 / std::sqrt(tau));
  }
  SUBCASE("lag 0 is symmetrized") {
    std::mt19937 gen(6);
    std::vector<Vector> e;
    for (int i = 0; i < 30; ++i) e.push_back(random_matrix(gen, 2, 1).col(0));
    auto st = empirical_autocov(e, 2);
    CHECK((st.lags[0] - st.lags[0].transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("segmented autocovariance never pairs across gaps") {
  auto v = [](double x) { return Vector::Constant(1, x); };
  std::vector<std::vector<Vector>> segs = {{v(1), v(2), v(3)}, {v(4), v(5)}};
  auto st = empirical_autocov_segments(segs, 2);
  CHECK(st.tau == 5);
  // Lag 0: all five samples.
  CHECK(st.lags[0](0, 0) == doctest::Approx((1 + 4 + 9 + 16 + 25) / 5.0).epsilon(1e-12));
  // Lag 1: (2*1 + 3*2 + 5*4) / 3 — the pair (4,3) spans the gap and is excluded.
  CHECK(st.lags[1](0, 0) == doctest::Approx((2.0 + 6.0 + 20.0) / 3.0).epsilon(1e-12));

  // Concatenating the segments would include the spanning pair.
  std::vector<Vector> flat = {v(1), v(2), v(3), v(4), v(5)};
  auto flat_st = empirical_autocov(flat, 2);
  CHECK(flat_st.lags[1](0, 0) != doctest::Approx(st.lags[1](0, 0)));

  // All-singleton segments leave no pairs at lag 1.
  std::vector<std::vector<Vector>> singles = {{v(1)}, {v(2)}, {v(3)}};
  CHECK_THROWS_AS(empirical_autocov_segments(singles, 2), ConfigError);
}

TEST_CASE("average_autocov is the elementwise mean") {
  auto mk = [](double c0, double c1, int tau) {
    AutoCovStack st;
    st.lags = {Matrix::Constant(1, 1, c0), Matrix::Constant(1, 1, c1)};
    st.tau = tau;
    return st;
  };
  auto avg = average_autocov({mk(2, 1, 50), mk(4, 3, 70)});
  CHECK(avg.lags[0](0, 0) == doctest::Approx(3.0));
  CHECK(avg.lags[1](0, 0) == doctest::Approx(2.0));
  CHECK(avg.tau == 120);
  CHECK_THROWS_AS(average_autocov({}), ConfigError);
  CHECK_THROWS_AS(average_autocov({mk(1, 1, 10), AutoCovStack{}}), ConfigError);
}

TEST_CASE("als matrix maps true parameters to the analytic autocovariances") {
  SUBCASE("scalar benchmark") {
    Matrix f = Matrix::Constant(1, 1, -0.8);
    Matrix h = Matrix::Constant(1, 1, 1.0);
    Matrix q = Matrix::Constant(1, 1, 8.0);
    Matrix r = Matrix::Constant(1, 1, 1.0);
    auto d = filter::steady_kalman_gain(f, h, q, r);

    const int n = 5;
    auto sq = StructureMap::scalar();
    auto sr = StructureMap::scalar();
    Matrix a = build_als_matrix(f, h, d.K, n, sq, sr);
    REQUIRE(a.rows() == n);
    REQUIRE(a.cols() == 2);

    Vector theta(2);
    theta << 8.0, 1.0;
    Vector predicted = a * theta;
    Vector expected = stack_vec(oracle_autocov(f, h, d.K, q, r, n));
    CHECK((predicted - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("single lag reduces to H P H^T + R") {
    Matrix f = Matrix::Constant(1, 1, -0.8);
    Matrix h = Matrix::Constant(1, 1, 1.0);
    Matrix q = Matrix::Constant(1, 1, 8.0);
    Matrix r = Matrix::Constant(1, 1, 1.0);
    auto d = filter::steady_kalman_gain(f, h, q, r);
    Matrix a = build_als_matrix(f, h, d.K, 1, StructureMap::scalar(), StructureMap::scalar());
    Vector theta(2);
    theta << 8.0, 1.0;
    Matrix p = filter::prediction_error_steady_cov(f, h, d.K, q, r);
    CHECK((a * theta)(0) == doctest::Approx((h * p * h.transpose() + r)(0, 0)).epsilon(1e-9));
  }
  SUBCASE("multivariate random systems") {
    std::mt19937 gen(11);
    for (int rep = 0; rep < 8; ++rep) {
      const Eigen::Index nx = 2 + rep % 2;
      const Eigen::Index nz = 1 + rep % 2;
      Matrix f = random_matrix(gen, nx, nx);
      const double rho = linalg::spectral_radius(f);
      if (rho > 0.0) f *= 0.75 / rho;
      Matrix h = random_matrix(gen, nz, nx);
      Matrix q = random_spd(gen, nx);
      Matrix r = random_spd(gen, nz);
      auto d = filter::steady_kalman_gain(f, h, q, r);

      const int n = 4;
      auto sq = StructureMap::full_symmetric(nx);
      auto sr = StructureMap::full_symmetric(nz);
      Matrix a = build_als_matrix(f, h, d.K, n, sq, sr);

      AlsProblem prob;
      prob.A = a;
      prob.q_structure = sq;
      prob.r_structures = {sr};
      Vector theta = pack_parameters(prob, q, {r});
      Vector predicted = a * theta;
      Vector expected = stack_vec(oracle_autocov(f, h, d.K, q, r, n));
      const double scale = expected.cwiseAbs().maxCoeff();
      CHECK((predicted - expected).cwiseAbs().maxCoeff() / scale < 1e-9);
    }
  }
  SUBCASE("analytic_autocov agrees with the oracle") {
    std::mt19937 gen(13);
    Matrix f = random_matrix(gen, 3, 3);
    f *= 0.7 / linalg::spectral_radius(f);
    Matrix h = random_matrix(gen, 2, 3);
    Matrix q = random_spd(gen, 3);
    Matrix r = random_spd(gen, 2);
    auto d = filter::steady_kalman_gain(f, h, q, r);
    auto lib = analytic_autocov(f, h, d.K, q, r, 4);
    auto ora = oracle_autocov(f, h, d.K, q, r, 4);
    for (size_t l = 0; l < lib.size(); ++l)
      CHECK((lib[l] - ora[l]).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("unstable closed loop throws") {
    Matrix f = Matrix::Constant(1, 1, 1.5);
    Matrix h = Matrix::Constant(1, 1, 1.0);
    Matrix k = Matrix::Zero(1, 1);  // K = 0 leaves the unstable plant untouched
    CHECK_THROWS_AS(build_als_matrix(f, h, k, 3, StructureMap::scalar(), StructureMap::scalar()),
                    NumericalError);
  }
}

TEST_CASE("solve_als recovers the generating parameters exactly") {
  std::mt19937 gen(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index nx = 1 + rep % 3;
    const Eigen::Index nz = 1 + rep % 2;
    Matrix f = random_matrix(gen, nx, nx);
    const double rho = linalg::spectral_radius(f);
    if (rho > 0.0) f *= 0.75 / rho;
    Matrix h = random_matrix(gen, nz, nx);
    Matrix q = random_spd(gen, nx);
    Matrix r = random_spd(gen, nz);
    auto d = filter::steady_kalman_gain(f, h, q, r);

    const int n = 2 + static_cast<int>(nx) * 2;
    AlsProblem prob;
    prob.q_structure = StructureMap::full_symmetric(nx);
    prob.r_structures = {StructureMap::full_symmetric(nz)};
    prob.A = build_als_matrix(f, h, d.K, n, prob.q_structure, prob.r_structures[0]);
    prob.b = prob.A * pack_parameters(prob, q, {r});
    prob.mu = 0.0;

    if (prob.A.cols() > prob.A.rows()) continue;  // underdetermined layout, skip
    filter::NoiseHypothesis hyp;
    try {
      hyp = solve_als(prob);
    } catch (const NumericalError&) {
      continue;  // rank-deficient draw; exactness is only claimed when admissible
    }
    const double qs = q.cwiseAbs().maxCoeff();
    const double rs = r.cwiseAbs().maxCoeff();
    CHECK((hyp.Q - q).cwiseAbs().maxCoeff() / qs < 1e-6);
    CHECK((hyp.R[0] - r).cwiseAbs().maxCoeff() / rs < 1e-6);
  }
}

TEST_CASE("solve_als clips inadmissible estimates to the PSD cone") {
  AlsProblem prob;
  prob.A = Matrix::Identity(2, 2);
  prob.b = Vector(2);
  prob.b << -1.0, 2.0;
  prob.mu = 0.0;
  prob.q_structure = StructureMap::scalar();
  prob.r_structures = {StructureMap::scalar()};
  auto hyp = solve_als(prob);
  CHECK(hyp.Q(0, 0) == 0.0);
  CHECK(hyp.R[0](0, 0) == doctest::Approx(2.0));
}

TEST_CASE("pack_parameters matches the problem column layout") {
  AlsProblem prob;
  prob.q_structure = StructureMap::diagonal(2);
  prob.r_structures = {StructureMap::scalar(), StructureMap::scalar()};
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 3.0;
  q(1, 1) = 4.0;
  Vector theta = pack_parameters(prob, q, {Matrix::Constant(1, 1, 5.0),
                                           Matrix::Constant(1, 1, 6.0)});
  REQUIRE(theta.size() == 4);
  CHECK(theta(0) == doctest::Approx(3.0));
  CHECK(theta(1) == doctest::Approx(4.0));
  CHECK(theta(2) == doctest::Approx(5.0));
  CHECK(theta(3) == doctest::Approx(6.0));
  CHECK_THROWS_AS(pack_parameters(prob, q, {Matrix::Constant(1, 1, 5.0)}), ConfigError);
}

TEST_CASE("stacked() flattens the lag stack columnwise") {
  AutoCovStack st;
  Matrix c0(2, 2), c1(2, 2);
  c0 << 1, 2, 2, 4;
  c1 << 5, 6, 7, 8;
  st.lags = {c0, c1};
  Vector v = st.stacked();
  REQUIRE(v.size() == 8);
  // vec of [C0; C1]: first column of the vertical stack, then the second.
  CHECK(v(0) == 1.0);
  CHECK(v(1) == 2.0);
  CHECK(v(2) == 5.0);
  CHECK(v(3) == 7.0);
  CHECK(v(4) == 2.0);
  CHECK(v(5) == 4.0);
  CHECK(v(6) == 6.0);
  CHECK(v(7) == 8.0);
}
