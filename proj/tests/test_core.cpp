#include "sparse_exchange/core.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace sparse_exchange;
using sparse_exchange::testing::Gen;

namespace {

MatrixXd ring4() {
  // Peer j gives its unit to peer j + 1.
  MatrixXd x = MatrixXd::Zero(4, 4);
  for (int j = 0; j < 4; ++j) x((j + 1) % 4, j) = 1.0;
  return x;
}

MatrixXd pairs4() {
  MatrixXd x = MatrixXd::Zero(4, 4);
  x(1, 0) = x(0, 1) = 1.0;
  x(3, 2) = x(2, 3) = 1.0;
  return x;
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("strong types validate their invariants") {
    CHECK_THROWS_AS(EndowmentVector<double>(VectorXd::Ones(1)), DomainError);
    CHECK_THROWS_AS(EndowmentVector<double>(VectorXd::Zero(3)), DomainError);
    MatrixXd bad = MatrixXd::Zero(3, 3);
    bad(0, 0) = 1.0;
    CHECK_THROWS_AS(AllocationMatrix<double>{bad}, DomainError);
    bad(0, 0) = 0.0;
    bad(1, 0) = -0.5;
    CHECK_THROWS_AS(AllocationMatrix<double>{bad}, DomainError);
    CHECK_THROWS_AS(AllocationMatrix<double>(MatrixXd::Zero(2, 3)), DomainError);

    SparsityParams p;
    p.eps = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
  }

  TEST_CASE("receive_vector") {
    MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK(receive_vector(swap).isApprox(VectorXd::Ones(2)));

    CHECK(receive_vector(testing::equal_split(VectorXd::Ones(3))).isApprox(VectorXd::Ones(3)));

    VectorXd a(3);
    a << 2, 1, 1;
    const VectorXd r = receive_vector(testing::equal_split(a));
    CHECK(r(0) == doctest::Approx(1.0));
    CHECK(r(1) == doctest::Approx(1.5));
    CHECK(r(2) == doctest::Approx(1.5));
  }

  TEST_CASE("exchange_ratios") {
    VectorXd a(3);
    a << 2, 1, 1;
    const VectorXd rho = exchange_ratios(testing::equal_split(a), a);
    CHECK(rho(0) == doctest::Approx(0.5));
    CHECK(rho(1) == doctest::Approx(1.5));
    CHECK(rho(2) == doctest::Approx(1.5));
    CHECK(min_exchange_ratio(testing::equal_split(a), a) == doctest::Approx(0.5));

    VectorXd bad = a;
    bad(1) = 0.0;
    CHECK_THROWS_AS(exchange_ratios(testing::equal_split(a), bad), DomainError);

    // All ratios one means perfect reciprocation: D(r, a) = 0.
    const VectorXd ones = VectorXd::Ones(4);
    CHECK(kl_divergence(receive_vector(ring4()), ones) == 0.0);
    CHECK(min_exchange_ratio(ring4(), ones) == 1.0);
  }

  TEST_CASE("kl_divergence examples") {
    VectorXd u(2);
    u << 0.3, 0.7;
    CHECK(kl_divergence(u, u) == 0.0);

    VectorXd two(1), one(1);
    two << 2.0;
    one << 1.0;
    CHECK(kl_divergence(two, one) == doctest::Approx(0.38629436111989061883).epsilon(1e-15));

    VectorXd p(2), q(2);
    p << 0.0, 1.0;
    q << 0.5, 1.0;
    CHECK(kl_divergence(p, q) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(kl_divergence(q, p), DomainError);
  }

  TEST_CASE("cardinality and reciprocity of the four-node graphs") {
    const VectorXd ones = VectorXd::Ones(4);
    CHECK(cardinality(ring4(), ones, 0.01) == 4);
    CHECK(reciprocity(ring4(), ones, 0.01) == 0);
    CHECK(cardinality(pairs4(), ones, 0.01) == 4);
    CHECK(reciprocity(pairs4(), ones, 0.01) == 4);

    CHECK(cardinality(testing::equal_split(ones), ones, 0.01) == 12);
    CHECK(reciprocity(testing::equal_split(VectorXd::Ones(3)), VectorXd::Ones(3), 0.01) == 6);
  }

  TEST_CASE("entries at or below the threshold are not links") {
    const VectorXd ones = VectorXd::Ones(4);
    // threshold = 0.01 * 1 / 3
    MatrixXd x = ring4();
    x(2, 0) = 0.003;
    x(1, 0) = 0.997;
    CHECK(cardinality(x, ones, 0.01) == 4);
    x(2, 0) = 0.004;
    x(1, 0) = 0.996;
    CHECK(cardinality(x, ones, 0.01) == 5);
    CHECK(link_threshold(ones, 0.01) == doctest::Approx(0.01 / 3.0));
    CHECK_THROWS_AS(link_threshold(ones, 0.0), DomainError);
  }

  TEST_CASE("conservation and ratio bounds on random feasible allocations") {
    Gen gen(11);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = gen.integer(2, 12);
      const VectorXd a = gen.endowments(n);
      const MatrixXd x = gen.allocation(a);
      REQUIRE(column_residual(x, a) <= 1e-12);
      const VectorXd r = receive_vector(x);
      CHECK(std::abs(r.sum() - a.sum()) <= 1e-9 * a.sum());
      const VectorXd rho = exchange_ratios(x, a);
      CHECK(rho.minCoeff() <= 1.0 + 1e-12);
      CHECK(rho.maxCoeff() >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("kl_divergence is nonnegative and vanishes only on equal arguments") {
    Gen gen(12);
    for (int trial = 0; trial < 10000; ++trial) {
      const int n = gen.integer(1, 8);
      VectorXd u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u(i) = gen.uniform() < 0.2 ? 0.0 : gen.uniform(0.0, 3.0);
        v(i) = gen.uniform(0.01, 3.0);
      }
      const double d = kl_divergence(u, v);
      CHECK(d >= 0.0);
      CHECK(kl_divergence(v, v) <= 1e-12);
      if ((u - v).cwiseAbs().maxCoeff() > 1e-3) CHECK(d > 0.0);
    }
  }

  TEST_CASE("receive vectors contract the divergence between allocations") {
    Gen gen(13);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = gen.integer(2, 8);
      const VectorXd a = gen.endowments(n);
      const MatrixXd x = gen.allocation(a);
      const MatrixXd y = gen.allocation(a);
      CHECK(kl_divergence(receive_vector(x), receive_vector(y)) <= kl_divergence(x, y) + 1e-12);
    }
  }

  TEST_CASE("reciprocity is transpose-invariant and bounded by cardinality") {
    Gen gen(14);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = gen.integer(2, 10);
      const VectorXd a = VectorXd::Ones(n);
      MatrixXd x = gen.allocation(a, 6.0);
      const int rec = reciprocity(x, a, 0.2);
      CHECK(rec <= cardinality(x, a, 0.2));
      CHECK(reciprocity(MatrixXd(x.transpose()), a, 0.2) == rec);
    }
  }

  TEST_CASE("measure collects all metrics") {
    const VectorXd ones = VectorXd::Ones(4);
    const auto state = testing::make_state(pairs4(), ones);
    const auto m = measure(state, 0.01, 0.25);
    CHECK(m.cardinality == 4);
    CHECK(m.reciprocity == 4);
    CHECK(m.min_ratio == 1.0);
    CHECK(m.d_ra == 0.0);
    CHECK(m.d_ar == 0.0);
    CHECK(m.step_delta == 0.25);
  }
}
