#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/reduction.hpp"

using namespace sdfsnn;

namespace {

FeatureTables tables_from_psi(const Eigen::MatrixXd& psi) {
    // Hand-built tables (only psi matters for the reduction step).
    FeatureTables t;
    t.psi = psi;
    t.z = psi.topRows(psi.rows() - 1);
    t.s1 = t.z;
    t.s2 = t.z;
    return t;
}

CollocationSet unit_weights(int n, int d) {
    CollocationSet set;
    set.points = Eigen::MatrixXd::Zero(n, d);
    set.quad_weights = Eigen::VectorXd::Ones(n);
    set.log_quad_weights = Eigen::VectorXd::Zero(n);
    return set;
}

} // namespace

TEST_CASE("svd of a row-orthogonal matrix keeps every direction") {
    // psi with orthogonal rows of distinct norms.
    Eigen::MatrixXd psi(3, 4);
    psi << 2, 0, 0, 0,
           0, 1.5, 0, 0,
           0, 0, 1, 0;
    const auto basis = build_reduced_basis(tables_from_psi(psi), 1e-10);
    CHECK(basis.rank() == 3);
    const Eigen::MatrixXd gram = basis.psi_r * basis.psi_r.transpose();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::abs(gram(i, j)) < 1e-10 * gram(0, 0));
    CHECK(basis.sing_vals[0] == doctest::Approx(2.0));
    CHECK(basis.sing_vals[2] == doctest::Approx(1.0));
}

TEST_CASE("duplicate rows drop the rank") {
    RngHandle rng(61);
    Eigen::MatrixXd psi = Eigen::MatrixXd::NullaryExpr(5, 16, [&]() { return rng.normal(); });
    psi.row(3) = psi.row(1);  // duplicate neuron
    const auto basis = build_reduced_basis(tables_from_psi(psi), 1e-10);
    CHECK(basis.rank() == 4);
}

TEST_CASE("svd reconstruction error on a random feature matrix") {
    RngHandle rng(62);
    Eigen::MatrixXd psi = Eigen::MatrixXd::NullaryExpr(65, 128, [&]() { return rng.normal(); });
    const auto basis = build_reduced_basis(tables_from_psi(psi), 1e-10);
    CHECK(basis.rank() == 65);
    // v_r v_r^T psi == psi when nothing is truncated
    const Eigen::MatrixXd recon = basis.v_r * basis.psi_r;
    CHECK((recon - psi).norm() / psi.norm() < 1e-9);
}

TEST_CASE("reduction errors") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 3);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(build_reduced_basis(tables_from_psi(bad), 1e-10), NumericalError);
    Eigen::MatrixXd ok = Eigen::MatrixXd::Ones(2, 3);
    CHECK_THROWS_AS(build_reduced_basis(tables_from_psi(ok), 2.0), ConfigError);
}

TEST_CASE("pseudo-inverse: diagonal case and Moore-Penrose identities") {
    // rows scaled to norm 2 each: pinv = psi_r^T / 4
    Eigen::MatrixXd psi(2, 4);
    psi << 2, 0, 0, 0,
           0, 0, 2, 0;
    Eigen::VectorXd sv(2);
    sv << 2, 2;
    const auto pinv = pseudo_inverse(psi, sv);
    CHECK((pinv - psi.transpose() / 4.0).cwiseAbs().maxCoeff() < 1e-15);

    RngHandle rng(63);
    Eigen::MatrixXd raw = Eigen::MatrixXd::NullaryExpr(6, 20, [&]() { return rng.normal(); });
    const auto basis = build_reduced_basis(tables_from_psi(raw), 1e-12);
    const Eigen::MatrixXd a = basis.psi_r;
    const Eigen::MatrixXd p = basis.pinv_psi_r;
    CHECK((a * p * a - a).norm() < 1e-10 * a.norm());
    CHECK((p * a * p - p).norm() < 1e-10 * p.norm());
    CHECK(((a * p).transpose() - a * p).norm() < 1e-10);
    CHECK(((p * a).transpose() - p * a).norm() < 1e-10);

    // scaled recovery: (c*psi_r) * pinv == c*I
    const double c = 3.7;
    const Eigen::MatrixXd lhs = (c * a) * p;
    CHECK((lhs - c * Eigen::MatrixXd::Identity(a.rows(), a.rows())).cwiseAbs().maxCoeff()
          < 1e-12 * c);

    Eigen::VectorXd tiny(1);
    tiny << 1e-301;
    CHECK_THROWS_AS(pseudo_inverse(psi, tiny), NumericalError);
}

TEST_CASE("condition number bounded by the truncation threshold") {
    RngHandle rng(64);
    // Nearly dependent rows force truncation at eps = 1e-6.
    Eigen::MatrixXd psi = Eigen::MatrixXd::NullaryExpr(8, 32, [&]() { return rng.normal(); });
    psi.row(7) = psi.row(6) + 1e-9 * psi.row(5);
    const double eps = 1e-6;
    const auto basis = build_reduced_basis(tables_from_psi(psi), eps);
    CHECK(basis.rank() < 8);
    CHECK(basis.sing_vals[basis.rank() - 1] / basis.sing_vals[0] >= eps);
}

TEST_CASE("reduced derivative tables commute with the projection") {
    RngHandle rng(65);
    Eigen::MatrixXd psi = Eigen::MatrixXd::NullaryExpr(6, 24, [&]() { return rng.normal(); });
    Eigen::MatrixXd lap = Eigen::MatrixXd::NullaryExpr(6, 24, [&]() { return rng.normal(); });
    const auto basis = build_reduced_basis(tables_from_psi(psi), 1e-12);
    // reduce is linear, so reduce(a*x + b*y) = a*reduce(x) + b*reduce(y)
    const Eigen::MatrixXd lhs = basis.reduce(2.0 * psi + 3.0 * lap);
    const Eigen::MatrixXd rhs = 2.0 * basis.reduce(psi) + 3.0 * basis.reduce(lap);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram matrix: diagonal case and hand-computed 1x1") {
    // quad weights all w, psi_r rows orthogonal with norms sigma: g = w diag(sigma^2)
    Eigen::MatrixXd psi(2, 3);
    psi << 1, 1, 1,
           1, 0, -1;
    {
        FeatureTables t = tables_from_psi(psi);
        auto basis = build_reduced_basis(t, 1e-12);
        CollocationSet x = unit_weights(3, 1);
        x.quad_weights.setConstant(0.25);
        x.log_quad_weights.setConstant(std::log(0.25));
        EnvelopeSpec spec{0.5, EnvelopeMode::NoDecay};
        const auto gram = build_gram(basis, x, spec);
        // rows of psi are orthogonal already: G = 0.25 * diag(sigma_i^2)
        for (int i = 0; i < 2; ++i)
            CHECK(gram.g(i, i) ==
                  doctest::Approx(0.25 * basis.sing_vals[i] * basis.sing_vals[i]));
        CHECK(std::abs(gram.g(0, 1)) < 1e-14);
        CHECK(gram.min_eig > 0.0);
    }
    {
        // r=1: psi_r = (1,1), weights (0.5, 0.5) -> g = [1], min_eig = 1
        Eigen::MatrixXd one_row(1, 2);
        one_row << 1, 1;
        ReducedBasis basis;
        basis.v_r = Eigen::MatrixXd::Identity(1, 1);
        basis.psi_r = one_row;
        basis.sing_vals = Eigen::VectorXd::Constant(1, std::sqrt(2.0));
        basis.pinv_psi_r = pseudo_inverse(one_row, basis.sing_vals);
        CollocationSet x = unit_weights(2, 1);
        x.quad_weights.setConstant(0.5);
        x.log_quad_weights.setConstant(std::log(0.5));
        EnvelopeSpec spec{0.5, EnvelopeMode::NoDecay};
        const auto gram = build_gram(basis, x, spec);
        CHECK(gram.g(0, 0) == doctest::Approx(1.0));
        CHECK(gram.min_eig == doctest::Approx(1.0));
    }
}

TEST_CASE("gram rejects non-positive weights") {
    Eigen::MatrixXd psi(1, 2);
    psi << 1, 1;
    ReducedBasis basis;
    basis.v_r = Eigen::MatrixXd::Identity(1, 1);
    basis.psi_r = psi;
    basis.sing_vals = Eigen::VectorXd::Constant(1, 1.0);
    basis.pinv_psi_r = pseudo_inverse(psi, basis.sing_vals);
    CollocationSet x = unit_weights(2, 1);
    x.quad_weights[0] = 0.0;
    EnvelopeSpec spec{0.5, EnvelopeMode::NoDecay};
    CHECK_THROWS_AS(build_gram(basis, x, spec), ConfigError);
}
