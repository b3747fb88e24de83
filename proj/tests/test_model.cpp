#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "enkf/errors.hpp"
#include "enkf/model.hpp"

using namespace enkf;

namespace {

SystemModel scalar_model(double a, double h, double q, double r, double m0, double s0) {
  Matrix A(1, 1), H(1, 1), Q(1, 1), R(1, 1), S(1, 1);
  A << a;
  H << h;
  Q << q;
  R << r;
  S << s0;
  Vector mu(1);
  mu << m0;
  return validate_model(make_model(A, H, Q, R, mu, S));
}

}  // namespace

TEST_CASE("validate_model rejects bad inputs") {
  Matrix I1 = Matrix::Identity(1, 1);
  Vector z1 = Vector::Zero(1);

  CHECK_THROWS_AS(validate_model(make_model(I1, I1, I1, Matrix::Zero(1, 1), z1, I1)), NotPsd);

  Matrix Qbad(2, 2);
  Qbad << 0.0, 1.0, 0.0, 0.0;
  Matrix I2 = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(validate_model(make_model(I2, I2, Qbad, I2, Vector::Zero(2), I2)),
                  AsymmetricMatrix);

  Matrix Qneg(2, 2);
  Qneg << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(validate_model(make_model(I2, I2, Qneg, I2, Vector::Zero(2), I2)), NotPsd);

  CHECK_THROWS_AS(validate_model(make_model(I2, Matrix::Identity(1, 1), I2, I2, Vector::Zero(2), I2)),
                  DimensionMismatch);
  CHECK_THROWS_AS(validate_model(make_model(I2, I2, I2, I2, Vector::Zero(3), I2)),
                  DimensionMismatch);
}

TEST_CASE("validate_model fills consistent square roots") {
  Matrix A = Matrix::Identity(2, 2);
  Matrix Q(2, 2);
  Q << 2.0, 1.0, 1.0, 2.0;
  SystemModel model = validate_model(make_model(A, A, Q, A, Vector::Zero(2), Q));
  CHECK(model.checked);
  CHECK((model.sqrt_q(0) * model.sqrt_q(0) - Q).norm() < 1e-13);
  CHECK((model.sqrt_Sigma0 * model.sqrt_Sigma0 - Q).norm() < 1e-13);
}

TEST_CASE("unchecked models cannot be sampled") {
  Matrix I1 = Matrix::Identity(1, 1);
  SystemModel raw = make_model(I1, I1, I1, I1, Vector::Zero(1), I1);
  NoiseStreams streams;
  CHECK_THROWS_AS(simulate_truth(raw, 3, streams), ValidationError);
  CHECK_THROWS_AS(draw_copy_x0(streams, raw, 0), ValidationError);
}

TEST_CASE("sequences of length one broadcast over time") {
  SystemModel model = scalar_model(0.9, 1.0, 0.1, 1.0, 0.0, 1.0);
  StepModel s0 = model.at(0);
  StepModel s7 = model.at(7);
  CHECK(s0.A(0, 0) == s7.A(0, 0));
  CHECK(&model.sqrt_q(0) == &model.sqrt_q(7));
}

TEST_CASE("time-varying sequences index by step and reject overruns") {
  SystemModel model = scalar_model(1.0, 1.0, 0.0, 1.0, 0.0, 1.0);
  Matrix A0(1, 1), A1(1, 1);
  A0 << 2.0;
  A1 << 3.0;
  model.A = {A0, A1};
  model = validate_model(std::move(model));
  CHECK(model.at(0).A(0, 0) == 2.0);
  CHECK(model.at(1).A(0, 0) == 3.0);
  CHECK_THROWS_AS(model.at(2), ValidationError);
}

TEST_CASE("simulate_truth with zero dynamics produces pure measurement noise") {
  Matrix Z1 = Matrix::Zero(1, 1);
  Matrix I1 = Matrix::Identity(1, 1);
  SystemModel model = validate_model(make_model(Z1, I1, Z1, I1, Vector::Zero(1), Z1));
  NoiseStreams streams;
  streams.seed = 5;
  Trajectory traj = simulate_truth(model, 4, streams);
  REQUIRE(traj.states.size() == 5);
  REQUIRE(traj.observations.size() == 4);
  for (const auto& x : traj.states) CHECK(x(0) == 0.0);
  for (const auto& z : traj.observations) CHECK(z(0) != 0.0);
}

TEST_CASE("zero process noise makes the state recursion exact") {
  SystemModel model = scalar_model(2.0, 1.0, 0.0, 1.0, 0.0, 1.0);
  NoiseStreams streams;
  streams.seed = 9;
  Trajectory traj = simulate_truth(model, 6, streams);
  for (int t = 0; t < 6; ++t)
    CHECK(traj.states[static_cast<size_t>(t) + 1](0) == 2.0 * traj.states[static_cast<size_t>(t)](0));
}

TEST_CASE("simulate_truth is reproducible and seed-sensitive") {
  SystemModel model = scalar_model(0.8, 1.0, 0.3, 0.5, 1.0, 2.0);
  NoiseStreams streams;
  streams.seed = 31;
  Trajectory a = simulate_truth(model, 10, streams);
  Trajectory b = simulate_truth(model, 10, streams);
  for (size_t t = 0; t < a.states.size(); ++t)
    CHECK(a.states[t](0) == b.states[t](0));
  streams.seed = 32;
  Trajectory c = simulate_truth(model, 10, streams);
  CHECK(a.states[1](0) != c.states[1](0));
  CHECK(a.observations[0](0) != c.observations[0](0));
}

TEST_CASE("one-step variance matches A^2 Sigma0 + Q") {
  SystemModel model = scalar_model(1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
  const int trials = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < trials; ++s) {
    NoiseStreams streams;
    streams.seed = static_cast<uint64_t>(s);
    Trajectory traj = simulate_truth(model, 1, streams);
    double x1 = traj.states[1](0);
    sum += x1;
    sumsq += x1 * x1;
  }
  double mean = sum / trials;
  double var = sumsq / trials - mean * mean;
  // Var(X_1) = 2; three-sigma band for the sample variance of a normal.
  CHECK(std::abs(mean) < 3.0 * std::sqrt(2.0 / trials));
  CHECK(std::abs(var - 2.0) < 3.0 * 2.0 * std::sqrt(2.0 / trials));
}

TEST_CASE("observation noise follows R") {
  SystemModel model = scalar_model(1.0, 1.0, 0.0, 4.0, 0.0, 0.0);
  const int trials = 20000;
  double sumsq = 0.0;
  for (int s = 0; s < trials; ++s) {
    NoiseStreams streams;
    streams.seed = static_cast<uint64_t>(s);
    Trajectory traj = simulate_truth(model, 1, streams);
    // X stays 0, so Z_0 is the raw measurement noise.
    sumsq += traj.observations[0](0) * traj.observations[0](0);
  }
  CHECK(std::abs(sumsq / trials - 4.0) < 3.0 * 4.0 * std::sqrt(2.0 / trials));
}

TEST_CASE("draw_copies is pure per (member, t) and scaled by the model") {
  SystemModel model = scalar_model(1.0, 1.0, 0.25, 9.0, 0.0, 1.0);
  NoiseStreams streams;
  streams.seed = 77;
  auto [xi_a, zeta_a] = draw_copies(streams, model, 3, 5);
  auto [xi_b, zeta_b] = draw_copies(streams, model, 3, 5);
  CHECK(xi_a(0) == xi_b(0));
  CHECK(zeta_a(0) == zeta_b(0));
  auto [xi_c, zeta_c] = draw_copies(streams, model, 4, 5);
  CHECK(xi_a(0) != xi_c(0));
  CHECK(zeta_a(0) != zeta_c(0));
  // sqrt(Q) = 0.5 and sqrt(R) = 3 scale the unit draws.
  Vector raw_xi = normal_draws(77, streams.copy_process, 5, 3, 1);
  Vector raw_zeta = normal_draws(77, streams.copy_meas, 5, 3, 1);
  CHECK(xi_a(0) == 0.5 * raw_xi(0));
  CHECK(zeta_a(0) == 3.0 * raw_zeta(0));
}

TEST_CASE("zero Q yields exactly zero process copies") {
  SystemModel model = scalar_model(1.0, 1.0, 0.0, 1.0, 0.0, 1.0);
  NoiseStreams streams;
  auto [xi, zeta] = draw_copies(streams, model, 0, 0);
  CHECK(xi(0) == 0.0);
  CHECK(zeta(0) != 0.0);
}

TEST_CASE("draw_all_copies agrees with per-step draws") {
  SystemModel model = scalar_model(0.9, 1.0, 0.2, 1.5, 0.0, 1.0);
  NoiseStreams streams;
  streams.seed = 13;
  NoiseCopies copies = draw_all_copies(model, 4, streams, 2);
  CHECK(copies.x0(0) == draw_copy_x0(streams, model, 2)(0));
  for (int t = 0; t < 4; ++t) {
    auto [xi, zeta] = draw_copies(streams, model, 2, t);
    CHECK(copies.xi[static_cast<size_t>(t)](0) == xi(0));
    CHECK(copies.zeta[static_cast<size_t>(t)](0) == zeta(0));
  }
}

TEST_CASE("copy initial conditions have the prior moments") {
  Matrix A = Matrix::Identity(2, 2);
  Matrix S(2, 2);
  S << 2.0, 0.5, 0.5, 1.0;
  Vector mu(2);
  mu << -1.0, 3.0;
  SystemModel model = validate_model(make_model(A, A, A, A, mu, S));
  NoiseStreams streams;
  streams.seed = 400;
  const int N = 100000;
  Vector mean = Vector::Zero(2);
  Matrix second = Matrix::Zero(2, 2);
  for (int j = 0; j < N; ++j) {
    Vector x = draw_copy_x0(streams, model, static_cast<uint64_t>(j));
    mean += x;
    second += x * x.transpose();
  }
  mean /= N;
  Matrix cov = second / N - mean * mean.transpose();
  CHECK((mean - mu).cwiseAbs().maxCoeff() < 3.0 * std::sqrt(2.0 / N));
  CHECK((cov - S).cwiseAbs().maxCoeff() < 3.0 * 2.0 * std::sqrt(2.0 / N));
}
