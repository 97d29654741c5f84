#include "sebeu/game_model.hpp"

#include "support/random_spec.hpp"

#include <doctest.h>

using namespace sebeu;

namespace {

// Scalar spec with all couplings zero, both horizon modes.
GameSpec scalar_spec(bool infinite) {
  GameSpec spec;
  PlayerSpec p;
  p.A = Matrix::Constant(1, 1, 1.0);
  p.B = Matrix::Constant(1, 1, 1.0);
  p.C = Matrix::Zero(1, 1);
  p.Q_stage = Matrix::Constant(1, 1, 1.0);
  p.R = Matrix::Constant(1, 1, 1.0);
  p.K = Matrix::Zero(1, 1);
  p.L = Matrix::Zero(1, 1);
  p.Q_terminal = Matrix::Constant(1, 1, 1.0);
  p.beta = 0.9;
  spec.players.push_back(p);
  spec.environment.A0 = Matrix::Constant(1, 1, 0.5);
  spec.environment.D = Matrix::Constant(1, 1, 1.0);
  spec.environment.B1 = {Matrix::Zero(1, 1)};
  spec.environment.B2 = {Matrix::Zero(1, 1)};
  spec.environment.E1 = {Matrix::Zero(1, 1)};
  spec.environment.E2 = {Matrix::Zero(1, 1)};
  spec.noise.x0_mean = Vector::Zero(2);
  spec.noise.x0_cov = Matrix::Identity(2, 2);
  spec.noise.w_mean = Vector::Zero(2);
  spec.noise.w_cov = 0.5 * Matrix::Identity(2, 2);
  spec.noise.xi_mean = Vector::Zero(1);
  spec.noise.xi_cov = Matrix::Constant(1, 1, 1.0);
  spec.horizon = infinite ? Horizon::endless() : Horizon::finite(4);
  return spec;
}

}  // namespace

TEST_CASE("validate accepts the scalar reference spec") {
  const GameSpec spec = scalar_spec(true);
  const ValidationReport report = validate(spec);
  CHECK(report.valid());
  // Idempotent and side-effect free.
  const ValidationReport again = validate(spec);
  CHECK(again.violations.size() == report.violations.size());
}

TEST_CASE("validate flags R not positive definite") {
  GameSpec spec = scalar_spec(true);
  spec.players[0].R = Matrix::Zero(1, 1);
  const ValidationReport report = validate(spec);
  CHECK_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.field == "players[0].R" &&
        v.message.find("not positive definite") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("validate flags unstable environment dynamics in infinite mode") {
  GameSpec spec = scalar_spec(true);
  spec.environment.A0 = Matrix::Constant(1, 1, 1.0);
  const ValidationReport report = validate(spec);
  CHECK_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.field == "environment.A0" &&
        v.message.find("not stable") != std::string::npos)
      found = true;
  CHECK(found);

  // The same spec is fine over a finite horizon.
  spec.horizon = Horizon::finite(4);
  CHECK(validate(spec).valid());
}

TEST_CASE("validate rejects beta out of range and non-stabilizable pairs") {
  GameSpec spec = scalar_spec(true);
  spec.players[0].beta = 1.0;
  CHECK_FALSE(validate(spec).valid());

  spec = scalar_spec(true);
  spec.players[0].A = Matrix::Constant(1, 1, 1.2);
  spec.players[0].B = Matrix::Zero(1, 1);
  CHECK_FALSE(validate(spec).valid());

  // Unstable but stabilizable is allowed.
  spec = scalar_spec(true);
  spec.players[0].A = Matrix::Constant(1, 1, 1.2);
  CHECK(validate(spec).valid());
}

TEST_CASE("validate requires at least one player") {
  GameSpec spec = scalar_spec(false);
  spec.players.clear();
  CHECK_FALSE(validate(spec).valid());
}

TEST_CASE("stabilizability test matches hand-built cases") {
  Matrix A(2, 2), B(2, 1);
  A << 1.5, 0.0, 0.0, 0.5;
  B << 1.0, 0.0;
  CHECK(is_stabilizable(A, B));  // unstable mode reachable
  B << 0.0, 1.0;
  CHECK_FALSE(is_stabilizable(A, B));  // unstable mode untouched
  A << 0.5, 0.0, 0.0, 0.3;
  B << 0.0, 0.0;
  CHECK(is_stabilizable(A, B));  // already stable
}

TEST_CASE("are_identical compares data and noise blocks") {
  GameSpec spec = scalar_spec(false);
  spec.players.push_back(spec.players[0]);
  spec.environment.B1.push_back(spec.environment.B1[0]);
  spec.environment.B2.push_back(spec.environment.B2[0]);
  spec.environment.E1.push_back(spec.environment.E1[0]);
  spec.environment.E2.push_back(spec.environment.E2[0]);
  spec.noise.x0_mean = Vector::Zero(3);
  spec.noise.x0_cov = Matrix::Identity(3, 3);
  spec.noise.w_mean = Vector::Zero(3);
  spec.noise.w_cov = 0.5 * Matrix::Identity(3, 3);
  REQUIRE(validate(spec).valid());

  CHECK(are_identical(spec, 0, 1));
  CHECK(are_identical(spec, 1, 0));  // symmetric
  CHECK(are_identical(spec, 0, 0));  // reflexive

  SUBCASE("differing discount factor") {
    spec.players[1].beta = 0.8;
    CHECK_FALSE(are_identical(spec, 0, 1));
  }
  SUBCASE("differing own-noise covariance") {
    spec.noise.w_cov(2, 2) = 0.7;
    CHECK_FALSE(are_identical(spec, 0, 1));
  }
  SUBCASE("differing terminal weight") {
    spec.players[1].Q_terminal = Matrix::Constant(1, 1, 2.0);
    CHECK_FALSE(are_identical(spec, 0, 1));
  }
  SUBCASE("index out of range throws") {
    CHECK_THROWS_AS((void)are_identical(spec, 0, 2), Error);
  }
}

TEST_CASE("are_identical is transitive on a pool of identical players") {
  GameSpec spec = scalar_spec(false);
  spec.players.push_back(spec.players[0]);
  spec.players.push_back(spec.players[0]);
  for (int i = 0; i < 2; ++i) {
    spec.environment.B1.push_back(spec.environment.B1[0]);
    spec.environment.B2.push_back(spec.environment.B2[0]);
    spec.environment.E1.push_back(spec.environment.E1[0]);
    spec.environment.E2.push_back(spec.environment.E2[0]);
  }
  spec.noise.x0_mean = Vector::Zero(4);
  spec.noise.x0_cov = Matrix::Identity(4, 4);
  spec.noise.w_mean = Vector::Zero(4);
  spec.noise.w_cov = 0.5 * Matrix::Identity(4, 4);
  CHECK(are_identical(spec, 0, 1));
  CHECK(are_identical(spec, 1, 2));
  CHECK(are_identical(spec, 0, 2));
}

TEST_CASE("stack_dimensions lays out environment first") {
  testing::RandomSpecOptions opts;
  opts.min_players = 2;
  opts.max_players = 2;
  GameSpec spec = testing::random_spec(7, opts);
  // Pin the documented example: N=2, n_x0=1, n_x1=n_x2=2.
  spec.players[0].A = Matrix::Identity(2, 2) * 0.5;
  spec.players[0].B = Matrix::Ones(2, 1);
  spec.players[0].C = Matrix::Zero(2, spec.environment.ny());
  spec.players[0].Q_stage = Matrix::Identity(2, 2);
  spec.players[0].R = Matrix::Identity(1, 1);
  spec.players[0].K = Matrix::Zero(spec.environment.ny(), 1);
  spec.players[0].L = Matrix::Zero(spec.environment.ny(), 2);
  spec.players[0].Q_terminal = Matrix::Identity(2, 2);
  spec.players[1] = spec.players[0];
  spec.environment.A0 = Matrix::Constant(1, 1, 0.5);
  spec.environment.D = Matrix::Ones(spec.environment.ny(), 1);

  const DimensionTable dims = stack_dimensions(spec);
  CHECK(dims.x_dim == 5);
  CHECK(dims.env_dim == 1);
  CHECK(dims.x_offset[0] == 1);
  CHECK(dims.x_offset[1] == 3);

  // Row ranges partition [0, x_dim).
  int covered = dims.env_dim;
  for (int i = 0; i < dims.num_players(); ++i) {
    CHECK(dims.x_offset[static_cast<size_t>(i)] == covered);
    covered += dims.player_x[static_cast<size_t>(i)];
  }
  CHECK(covered == dims.x_dim);
}

TEST_CASE("stack_dimensions single player with wide environment") {
  GameSpec spec = scalar_spec(false);
  spec.environment.A0 = Matrix::Identity(3, 3) * 0.4;
  spec.environment.D = Matrix::Ones(1, 3);
  spec.environment.B1 = {Matrix::Zero(3, 1)};
  spec.environment.B2 = {Matrix::Zero(3, 1)};
  spec.noise.x0_mean = Vector::Zero(4);
  spec.noise.x0_cov = Matrix::Identity(4, 4);
  spec.noise.w_mean = Vector::Zero(4);
  spec.noise.w_cov = Matrix::Identity(4, 4);
  const DimensionTable dims = stack_dimensions(spec);
  CHECK(dims.x_dim == 4);
  CHECK(dims.env_dim == 3);
}

TEST_CASE("random specs all validate") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    testing::RandomSpecOptions opts;
    opts.infinite = (seed % 2 == 0);
    const GameSpec spec = testing::random_spec(seed, opts);
    const ValidationReport report = validate(spec);
    INFO(report.to_string());
    CHECK(report.valid());
  }
}
