#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/features.hpp"

using namespace sdfsnn;

namespace {

CollocationSet points_from(const Eigen::MatrixXd& pts) {
    CollocationSet set;
    set.points = pts;
    set.quad_weights = Eigen::VectorXd::Constant(pts.rows(), 1.0 / pts.rows());
    set.log_quad_weights = set.quad_weights.array().log();
    return set;
}

FeatureBank random_bank(int m, int d, RngHandle& rng, double scale = 1.0) {
    FeatureBank bank;
    bank.alpha = 0.5;
    bank.W.resize(m, d);
    bank.b.resize(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < d; ++j) bank.W(i, j) = scale * rng.normal();
        bank.b[i] = rng.normal();
    }
    return bank;
}

// All size-m subsets of {0..d-1}.
void enumerate_subsets(int d, int m, std::vector<std::vector<int>>& out) {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (int(cur.size()) == m) {
            out.push_back(cur);
            return;
        }
        for (int j = start; j < d; ++j) {
            cur.push_back(j);
            rec(j + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

DimensionSubset manual_subset(const std::vector<int>& indices, int d) {
    DimensionSubset s;
    s.indices = indices;
    s.scheme = SubsetScheme::UniformWithoutReplacement;
    s.ambient_dim = d;
    return s;
}

} // namespace

TEST_CASE("feature values: zero weights and a frozen tanh point") {
    Eigen::MatrixXd pts(3, 2);
    pts << 0.5, 0.0, -1.0, 2.0, 0.0, 0.0;
    auto set = points_from(pts);

    FeatureBank bank;
    bank.alpha = 0.5;
    bank.W.resize(2, 2);
    bank.W << 0.0, 0.0, 1.0, 0.0;
    bank.b.resize(2);
    bank.b << 0.0, 0.0;

    const auto t = eval_features(bank, set);
    CHECK(t.psi.rows() == 3);
    CHECK(t.psi.cols() == 3);
    CHECK(t.psi(0, 0) == 0.0);                       // tanh(0)
    CHECK(t.psi(1, 0) ==
          doctest::Approx(0.46211715726000975850).epsilon(1e-14));  // tanh(0.5)
    CHECK((t.psi.row(2).array() == 1.0).all());      // bias channel

    CollocationSet bad = points_from(Eigen::MatrixXd::Zero(2, 3));
    CHECK_THROWS_AS(eval_features(bank, bad), ConfigError);
}

TEST_CASE("first derivatives match central finite differences") {
    RngHandle rng(31);
    for (int rep = 0; rep < 8; ++rep) {
        const int d = 1 + int(rng.index(5));
        const int m = 2 + int(rng.index(7));
        const int n = 2 + int(rng.index(9));
        const auto bank = random_bank(m, d, rng);
        Eigen::MatrixXd pts(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
        auto set = points_from(pts);
        const auto t = eval_features(bank, set);

        const double h = 1e-6;
        for (int j = 0; j < d; ++j) {
            const auto dj = eval_dim_first(bank, t, j);
            CHECK((dj.row(m).array() == 0.0).all());
            Eigen::MatrixXd plus = pts, minus = pts;
            plus.col(j).array() += h;
            minus.col(j).array() -= h;
            const auto psi_p = eval_features_at(bank, plus);
            const auto psi_m = eval_features_at(bank, minus);
            for (int mm = 0; mm < m; ++mm)
                for (int nn = 0; nn < n; ++nn) {
                    const double fd = (psi_p(mm, nn) - psi_m(mm, nn)) / (2.0 * h);
                    const double scale = std::max(1.0, std::abs(dj(mm, nn)));
                    CHECK(std::abs(fd - dj(mm, nn)) / scale < 1e-6);
                }
        }
    }
}

TEST_CASE("derivative at z=0 equals the weight component") {
    FeatureBank bank;
    bank.alpha = 0.5;
    bank.W.resize(1, 2);
    bank.W << 1.7, -0.3;
    bank.b.resize(1);
    bank.b << 0.0;
    auto set = points_from(Eigen::MatrixXd::Zero(1, 2));
    const auto t = eval_features(bank, set);
    CHECK(eval_dim_first(bank, t, 0)(0, 0) == doctest::Approx(1.7));
    CHECK(eval_dim_first(bank, t, 1)(0, 0) == doctest::Approx(-0.3));
    // zero weight component kills the derivative
    bank.W(0, 1) = 0.0;
    const auto t2 = eval_features(bank, set);
    CHECK(eval_dim_first(bank, t2, 1)(0, 0) == 0.0);
}

TEST_CASE("full Laplacian: frozen value and finite-difference oracle") {
    // d=1, w=1, b=0, x=0.5: sigma''(0.5) = -0.72686198138358727554
    FeatureBank bank;
    bank.alpha = 0.5;
    bank.W = Eigen::MatrixXd::Ones(1, 1);
    bank.b = Eigen::VectorXd::Zero(1);
    Eigen::MatrixXd pts(1, 1);
    pts << 0.5;
    auto set = points_from(pts);
    const auto t = eval_features(bank, set);
    const auto lap = eval_laplacian_full(bank, t);
    CHECK(lap(0, 0) == doctest::Approx(-0.72686198138358727554).epsilon(1e-13));
    CHECK(lap(1, 0) == 0.0);

    // sigma''(0) = 0
    Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 1);
    auto set0 = points_from(origin);
    const auto t0 = eval_features(bank, set0);
    CHECK(eval_laplacian_full(bank, t0)(0, 0) == 0.0);

    // second-order stencil cross-check on random instances
    RngHandle rng(32);
    for (int rep = 0; rep < 6; ++rep) {
        const int d = 1 + int(rng.index(5));
        const int m = 2 + int(rng.index(6));
        const auto rb = random_bank(m, d, rng);
        Eigen::MatrixXd x(4, d);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
        auto s = points_from(x);
        const auto tt = eval_features(rb, s);
        const auto lap_full = eval_laplacian_full(rb, tt);
        const double h = 1e-4;
        for (int nn = 0; nn < 4; ++nn)
            for (int mm = 0; mm < m; ++mm) {
                double fd = 0.0;
                const auto psi_c = eval_features_at(rb, x.row(nn));
                for (int j = 0; j < d; ++j) {
                    Eigen::MatrixXd p = x.row(nn), q = x.row(nn);
                    p(0, j) += h;
                    q(0, j) -= h;
                    fd += (eval_features_at(rb, p)(mm, 0) - 2.0 * psi_c(mm, 0) +
                           eval_features_at(rb, q)(mm, 0)) /
                          (h * h);
                }
                const double scale = std::max(1.0, std::abs(lap_full(mm, nn)));
                CHECK(std::abs(fd - lap_full(mm, nn)) / scale < 1e-5);
            }
    }
}

TEST_CASE("full Laplacian equals the sum of per-dimension second partials") {
    RngHandle rng(33);
    const int d = 3, m = 4, n = 6;
    const auto bank = random_bank(m, d, rng);
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
    auto set = points_from(pts);
    const auto t = eval_features(bank, set);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m + 1, n);
    for (int j = 0; j < d; ++j) acc += eval_dim_second(bank, t, j);
    const auto lap = eval_laplacian_full(bank, t);
    CHECK((acc - lap).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stochastic Laplacian: full subset is bitwise identical") {
    RngHandle rng(34);
    const int d = 5, m = 6, n = 7;
    const auto bank = random_bank(m, d, rng);
    Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(n, d, [&]() { return rng.normal(); });
    auto set = points_from(pts);
    const auto t = eval_features(bank, set);
    std::vector<int> all(d);
    for (int j = 0; j < d; ++j) all[j] = j;
    const auto est = eval_laplacian_stochastic(bank, t, manual_subset(all, d));
    const auto full = eval_laplacian_full(bank, t);
    CHECK(est == full);

    CHECK_THROWS_AS(eval_laplacian_stochastic(bank, t, manual_subset({}, d)), ConfigError);
}

TEST_CASE("exhaustive subset enumeration proves exact unbiasedness") {
    RngHandle rng(35);
    for (int d = 2; d <= 6; ++d) {
        const int m_neurons = 3 + int(rng.index(4));
        const int n = 4;
        const auto bank = random_bank(m_neurons, d, rng);
        Eigen::MatrixXd pts =
            Eigen::MatrixXd::NullaryExpr(n, d, [&]() { return rng.normal(); });
        auto set = points_from(pts);
        const auto t = eval_features(bank, set);
        const auto full = eval_laplacian_full(bank, t);
        for (int m = 1; m <= d; ++m) {
            std::vector<std::vector<int>> subsets;
            enumerate_subsets(d, m, subsets);
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m_neurons + 1, n);
            for (const auto& idx : subsets)
                mean += eval_laplacian_stochastic(bank, t, manual_subset(idx, d));
            mean /= double(subsets.size());
            CHECK((mean - full).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}

TEST_CASE("horvitz-thompson estimator is unbiased in Monte Carlo") {
    RngHandle rng(36);
    const int d = 5, m_neurons = 3, n = 4, m = 2;
    const auto bank = random_bank(m_neurons, d, rng);
    Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(n, d, [&]() { return rng.normal(); });
    auto set = points_from(pts);
    const auto t = eval_features(bank, set);
    const auto full = eval_laplacian_full(bank, t);

    const std::vector<double> p(d, 1.0 / d);
    const int resamples = 100000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m_neurons + 1, n);
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(m_neurons + 1, n);
    for (int rep = 0; rep < resamples; ++rep) {
        const auto s = sample_dimension_subset(d, m, SubsetScheme::HorvitzThompson, rng, p);
        const auto est = eval_laplacian_stochastic(bank, t, s);
        mean += est;
        sq += est.cwiseProduct(est);
    }
    mean /= double(resamples);
    sq /= double(resamples);
    for (int i = 0; i <= m_neurons; ++i)
        for (int j = 0; j < n; ++j) {
            const double se =
                std::sqrt(std::max(0.0, sq(i, j) - mean(i, j) * mean(i, j)) / resamples);
            CHECK(std::abs(mean(i, j) - full(i, j)) < 5.0 * se + 1e-12);
        }
}

TEST_CASE("feature boundedness and channel structure") {
    RngHandle rng(37);
    const auto bank = random_bank(16, 3, rng, 2.0);
    Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(32, 3, [&]() { return 3.0 * rng.normal(); });
    auto set = points_from(pts);
    const auto t = eval_features(bank, set);
    CHECK(t.psi.cwiseAbs().maxCoeff() <= 1.0);
    CHECK((t.psi.row(16).array() == 1.0).all());
    for (int j = 0; j < 3; ++j) {
        CHECK((eval_dim_first(bank, t, j).row(16).array() == 0.0).all());
        CHECK((eval_dim_second(bank, t, j).row(16).array() == 0.0).all());
    }
}

TEST_CASE("envelope corrections satisfy the Gaussian identities") {
    EnvelopeSpec spec{0.5, EnvelopeMode::DeEnveloped};

    Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 3);
    auto env0 = eval_envelope_corrections(spec, origin);
    CHECK((env0.a.array() == 0.0).all());
    CHECK(env0.b_corr[0] == doctest::Approx(-2.0 * 0.5 * 3));
    CHECK(env0.rho[0] == 1.0);

    // alpha=0.5, d=2, x=(1,1): b = 4*0.25*2 - 2*0.5*2 = 0
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, 2);
    auto env1 = eval_envelope_corrections(spec, ones);
    CHECK(env1.b_corr[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(env1.a(0, 0) == doctest::Approx(-1.0));

    // finite-difference cross-check of d_j rho / rho and lap rho / rho
    RngHandle rng(38);
    const int d = 4;
    Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(5, d, [&]() { return rng.normal(); });
    auto env = eval_envelope_corrections(spec, pts);
    const auto rho_at = [&](const Eigen::RowVectorXd& x) {
        return std::exp(-spec.alpha * x.squaredNorm());
    };
    for (int n = 0; n < 5; ++n) {
        const Eigen::RowVectorXd x = pts.row(n);
        const double r0 = rho_at(x);
        double lap_fd = 0.0;
        for (int j = 0; j < d; ++j) {
            const double h1 = 1e-6;
            Eigen::RowVectorXd p = x, q = x;
            p[j] += h1;
            q[j] -= h1;
            const double a_fd = (rho_at(p) - rho_at(q)) / (2.0 * h1 * r0);
            CHECK(std::abs(a_fd - env.a(j, n)) /
                      std::max(1.0, std::abs(env.a(j, n))) < 1e-6);
            const double h2 = 1e-4;
            Eigen::RowVectorXd pp = x, qq = x;
            pp[j] += h2;
            qq[j] -= h2;
            lap_fd += (rho_at(pp) - 2.0 * r0 + rho_at(qq)) / (h2 * h2 * r0);
        }
        CHECK(std::abs(lap_fd - env.b_corr[n]) / std::max(1.0, std::abs(env.b_corr[n])) < 1e-6);
        CHECK(env.rho_sq[n] == doctest::Approx(r0 * r0).epsilon(1e-13));
    }

    // no-decay mode: identity envelope
    EnvelopeSpec none{0.5, EnvelopeMode::NoDecay};
    auto envn = eval_envelope_corrections(none, pts);
    CHECK((envn.a.array() == 0.0).all());
    CHECK((envn.rho.array() == 1.0).all());
}

TEST_CASE("stochastic Laplacian cost is flat in the ambient dimension") {
    // Fixed (M, N_c, m); d sweeps 50..1000. Only sampled columns of W are
    // touched, so the wall time must stay within 2x. Instances are built
    // up front and timed in interleaved rounds (minimum per dimension) so
    // thread-pool spin-up and scheduler noise do not skew the ratio.
    const int m_neurons = 256, n_pts = 2048, m_sub = 8;
    const std::vector<int> dims = {50, 100, 500, 1000};

    std::vector<FeatureBank> banks;
    std::vector<FeatureTables> tables;
    std::vector<DimensionSubset> subsets;
    for (int d : dims) {
        RngHandle rng(40 + d);
        banks.push_back(random_bank(m_neurons, d, rng, 1.0 / std::sqrt(double(d))));
        Eigen::MatrixXd pts =
            Eigen::MatrixXd::NullaryExpr(n_pts, d, [&]() { return rng.normal(); });
        auto set = points_from(pts);
        tables.push_back(eval_features(banks.back(), set));
        subsets.push_back(
            sample_dimension_subset(d, m_sub, SubsetScheme::UniformWithoutReplacement, rng));
    }

    volatile double sink = 0.0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto warm = eval_laplacian_stochastic(banks[i], tables[i], subsets[i]);
        sink += warm(0, 0);
    }

    std::vector<double> best(dims.size(), 1e300);
    for (int round = 0; round < 15; ++round) {
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const auto start = std::chrono::steady_clock::now();
            const auto est = eval_laplacian_stochastic(banks[i], tables[i], subsets[i]);
            const auto stop = std::chrono::steady_clock::now();
            sink += est(0, 0);
            best[i] = std::min(best[i],
                               std::chrono::duration<double>(stop - start).count());
        }
    }
    const double mx = *std::max_element(best.begin(), best.end());
    const double mn = *std::min_element(best.begin(), best.end());
    CHECK(mx / mn < 2.0);
}
