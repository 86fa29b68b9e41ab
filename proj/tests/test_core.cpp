#include <doctest.h>

#include "mad/core.hpp"

#include <random>

using namespace mad;

namespace {
Series random_series(int T, int q, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Series x(T, q);
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < q; ++f) x(t, f) = n(rng);
  return x;
}
}  // namespace

TEST_CASE("frame cost is symmetric and non-negative") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Series a = random_series(1, 3, rng), b = random_series(1, 3, rng);
    for (auto metric : {FrameMetric::Euclidean, FrameMetric::SquaredEuclidean}) {
      const double ab = frame_cost(a.row(0), b.row(0), metric);
      CHECK(ab == frame_cost(b.row(0), a.row(0), metric));
      CHECK(ab >= 0.0);
      CHECK(std::isfinite(ab));
    }
  }
}

TEST_CASE("frame cost of a 3-4-5 triangle") {
  Eigen::RowVector2d a(0.0, 0.0), b(3.0, 4.0);
  CHECK(frame_cost(a, b, FrameMetric::Euclidean) == doctest::Approx(5.0));
  CHECK(frame_cost(a, b, FrameMetric::SquaredEuclidean) == doctest::Approx(25.0));
}

TEST_CASE("self slice has a zero diagonal") {
  std::mt19937_64 rng(5);
  const Series x = random_series(7, 2, rng);
  const CostMatrix c = pairwise_frame_cost_slice(x, x, FrameMetric::Euclidean);
  CHECK(c.rows() == 7);
  CHECK(c.diagonal().isZero(0.0));
  CHECK((c.array() >= 0.0).all());
  CHECK(c.isApprox(c.transpose()));
}

TEST_CASE("slice rejects mismatched feature dimensions") {
  Series a(3, 2), b(4, 3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(pairwise_frame_cost_slice(a, b, FrameMetric::Euclidean), DimensionError);
}

TEST_CASE("metric names round-trip") {
  CHECK(parse_metric("euclidean") == FrameMetric::Euclidean);
  CHECK(parse_metric("sqeuclidean") == FrameMetric::SquaredEuclidean);
  CHECK(parse_metric(to_string(FrameMetric::SquaredEuclidean)) == FrameMetric::SquaredEuclidean);
  CHECK_THROWS_AS(parse_metric("cosine"), InvalidInput);
}

TEST_CASE("dataset validation") {
  std::vector<Series> xs(3, Series::Zero(4, 2));
  CHECK_NOTHROW(TimeSeriesDataset::uniform(xs));

  SUBCASE("weights must sum to one") {
    CHECK_THROWS_AS(TimeSeriesDataset(xs, Eigen::Vector3d(0.5, 0.5, 0.5)), InvalidInput);
  }
  SUBCASE("negative weight") {
    CHECK_THROWS_AS(TimeSeriesDataset(xs, Eigen::Vector3d(1.5, -0.25, -0.25)), InvalidInput);
  }
  SUBCASE("weights length") {
    CHECK_THROWS_AS(TimeSeriesDataset(xs, Eigen::Vector2d(0.5, 0.5)), DimensionError);
  }
  SUBCASE("length mismatch") {
    xs[1] = Series::Zero(5, 2);
    CHECK_THROWS_AS(TimeSeriesDataset::uniform(xs), DimensionError);
  }
  SUBCASE("non-finite value") {
    xs[2](1, 1) = std::nan("");
    CHECK_THROWS_AS(TimeSeriesDataset::uniform(xs), InvalidInput);
  }
  SUBCASE("empty class is reported by id") {
    const auto d = TimeSeriesDataset::uniform(xs, std::vector<int>{0, 2, 0});
    CHECK(d.num_classes() == 3);
    CHECK_THROWS_WITH_AS(d.require_all_classes_present(), "class 1 has no series", InvalidInput);
  }
}

TEST_CASE("renormalization is explicit") {
  std::vector<Series> xs(2, Series::Zero(2, 1));
  TimeSeriesDataset d = TimeSeriesDataset::uniform(xs);
  d.weights << 2.0, 6.0;
  d.renormalize_weights();
  CHECK(d.weights[0] == doctest::Approx(0.25));
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("warping path validity") {
  WarpingPath p;
  p.steps = {{0, 0}, {1, 1}, {1, 2}, {2, 2}};
  CHECK(p.is_valid(3, 3));
  CHECK_FALSE(p.is_valid(3, 4));

  WarpingPath jump;
  jump.steps = {{0, 0}, {2, 2}};
  CHECK_FALSE(jump.is_valid(3, 3));

  WarpingPath backwards;
  backwards.steps = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  CHECK_FALSE(backwards.is_valid(2, 2));
  CHECK_THROWS_AS(backwards.require_valid(2, 2), InvalidInput);
}

TEST_CASE("diagonal path resamples non-square shapes") {
  for (int rows = 1; rows <= 9; ++rows) {
    for (int cols = 1; cols <= 9; ++cols) {
      const WarpingPath d = WarpingPath::diagonal(rows, cols);
      CHECK(d.is_valid(rows, cols));
      CHECK(d.steps.size() == static_cast<std::size_t>(std::max(rows, cols)));
    }
  }
  const WarpingPath square = WarpingPath::diagonal(5, 5);
  CHECK(square.to_matrix(5, 5).isIdentity());
  CHECK(square.midpoint_offset() == 0.0);
}

TEST_CASE("plan dense round trip conserves mass") {
  Eigen::MatrixXd dense(2, 3);
  dense << 0.25, 0.0, 0.25, 0.0, 0.5, 0.0;
  const TransportPlan plan = TransportPlan::from_dense(dense);
  CHECK(plan.nonzeros() == 3);
  CHECK(plan.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plan.to_dense() == dense);
  CostMatrix c = CostMatrix::Ones(2, 3);
  CHECK(plan_cost(c, plan) == doctest::Approx(1.0));
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
  set_thread_limit(4);
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t k) { hits[k] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t k) { if (k == 7) throw SolverError("boom"); }), SolverError);
  set_thread_limit(0);
}
