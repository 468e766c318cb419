#include "sdfsnn/static_solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/features.hpp"
#include "sdfsnn/reduction.hpp"

namespace sdfsnn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Gaussian prefactor and quadratic exponent of psi_exact, evaluated in log
// space so that dimensions up to 10^3 stay representable.
double gaussian_part(const MmsSpec& spec, const Eigen::VectorXd& x) {
    double log_amp = 0.0, quad = 0.0;
    for (int j = 0; j < spec.d; ++j) {
        log_amp += 0.25 * std::log(spec.gammas[j] / kPi);
        quad += 0.5 * spec.gammas[j] * x[j] * x[j];
    }
    return std::exp(log_amp - quad);
}

struct FDerivs {
    double f = 1.0;       // F(x)
    double grad_dot = 0.0;  // sum_j gamma_j x_j dF/dx_j
    double lap = 0.0;       // sum_j d2F/dx_j^2
};

// F and the two derivative contractions needed by the source, accumulated
// over the coupled-pair terms in O(d).
FDerivs f_derivs(const MmsSpec& spec, const Eigen::VectorXd& x) {
    FDerivs out;
    if (spec.d < 2 || spec.epsilon == 0.0) return out;
    for (int i = 0; i + 1 < spec.d; ++i) {
        const double xi = x[i], xn = x[i + 1];
        const double theta = xi + std::cos(xn) + xn * std::cos(xi);
        const double s = std::sin(theta), c = std::cos(theta);
        const double ci = spec.c_coeffs[i];

        const double dth_i = 1.0 - xn * std::sin(xi);
        const double dth_n = -std::sin(xn) + std::cos(xi);
        const double d2th_i = -xn * std::cos(xi);
        const double d2th_n = -std::cos(xn);

        out.f += spec.epsilon * ci * s;
        out.grad_dot += spec.epsilon * ci * c *
                        (spec.gammas[i] * xi * dth_i + spec.gammas[i + 1] * xn * dth_n);
        out.lap += spec.epsilon * ci *
                   (-s * (dth_i * dth_i + dth_n * dth_n) + c * (d2th_i + d2th_n));
    }
    return out;
}

} // namespace

MmsSpec make_mms_spec(int d, const Eigen::VectorXd& gammas, double beta_d, double epsilon,
                      std::uint64_t seed) {
    if (d < 1) throw ConfigError("make_mms_spec: dimension must be >= 1");
    if (gammas.size() != d) throw ConfigError("make_mms_spec: gammas must have length d");
    MmsSpec spec;
    spec.d = d;
    spec.gammas = gammas;
    spec.beta_d = beta_d;
    spec.epsilon = epsilon;
    spec.seed = seed;
    RngHandle rng(seed, 0xC0EFF5);
    spec.c_coeffs.resize(std::max(0, d - 1));
    for (int i = 0; i + 1 < d; ++i) spec.c_coeffs[i] = rng.normal();
    return spec;
}

double mms_exact(const MmsSpec& spec, const Eigen::VectorXd& x) {
    return gaussian_part(spec, x) * f_derivs(spec, x).f;
}

double mms_source(const MmsSpec& spec, const Eigen::VectorXd& x) {
    const double gauss = gaussian_part(spec, x);
    const FDerivs fd = f_derivs(spec, x);

    // lap psi = gauss * [ (sum_j (g_j^2 x_j^2 - g_j)) F
    //                     - 2 sum_j g_j x_j dF/dx_j + lap F ].
    double base = 0.0, pot = 0.0;
    for (int j = 0; j < spec.d; ++j) {
        const double g = spec.gammas[j];
        base += g * g * x[j] * x[j] - g;
        pot += 0.5 * g * g * x[j] * x[j];
    }
    const double lap_psi = gauss * (base * fd.f - 2.0 * fd.grad_dot + fd.lap);
    const double psi = gauss * fd.f;
    return 0.5 * lap_psi - pot * psi - spec.beta_d * psi * psi * psi;
}

Eigen::VectorXd mms_exact_batch(const MmsSpec& spec, const Eigen::MatrixXd& pts) {
    Eigen::VectorXd out(pts.rows());
    const Eigen::Index n = pts.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) out[i] = mms_exact(spec, pts.row(i));
    return out;
}

Eigen::VectorXd mms_source_batch(const MmsSpec& spec, const Eigen::MatrixXd& pts) {
    Eigen::VectorXd out(pts.rows());
    const Eigen::Index n = pts.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) out[i] = mms_source(spec, pts.row(i));
    return out;
}

StaticProblem make_static_problem(const MmsSpec& spec, int n_interior, int n_boundary,
                                  RngHandle& rng) {
    if (n_interior < 2) throw ConfigError("make_static_problem: need at least two interior points");
    if (n_boundary < 1) throw ConfigError("make_static_problem: need boundary points");

    StaticProblem problem;
    problem.mms = spec;
    problem.interior.resize(n_interior, spec.d);
    problem.boundary.resize(n_boundary, spec.d);

    Eigen::VectorXd dir(spec.d);
    for (int n = 0; n < n_interior; ++n) {
        double nrm = 0.0;
        do {
            for (int j = 0; j < spec.d; ++j) dir[j] = rng.normal();
            nrm = dir.norm();
        } while (nrm == 0.0);
        const double radius = std::pow(rng.uniform01(), 1.0 / spec.d);
        problem.interior.row(n) = (radius / nrm) * dir.transpose();
    }
    for (int n = 0; n < n_boundary; ++n) {
        double nrm = 0.0;
        do {
            for (int j = 0; j < spec.d; ++j) dir[j] = rng.normal();
            nrm = dir.norm();
        } while (nrm == 0.0);
        problem.boundary.row(n) = dir.transpose() / nrm;
    }
    return problem;
}

StaticReport solve_static(const StaticProblem& problem, const StaticSolveConfig& config,
                          RngHandle& rng) {
    const auto t_setup = std::chrono::steady_clock::now();
    const MmsSpec& mms = problem.mms;
    const int d = mms.d;
    const Eigen::Index n_int = problem.interior.rows();
    const Eigen::Index n_bnd = problem.boundary.rows();

    // Frozen basis from interior point pairs; plain tanh features (the domain
    // is bounded, no decay envelope).
    CollocationSet ball_points;
    ball_points.points = problem.interior;
    ball_points.quad_weights = Eigen::VectorXd::Constant(n_int, 1.0 / double(n_int));
    ball_points.log_quad_weights =
        Eigen::VectorXd::Constant(n_int, -std::log(double(n_int)));
    ball_points.density_exponent = 0.0;

    RngHandle bank_rng = rng.fork(0xBA);
    const FeatureBank bank = sample_weights_agnostic(ball_points, config.neurons, bank_rng);

    // Features on interior and boundary stacked; the SVD sees both.
    CollocationSet all_points;
    all_points.points.resize(n_int + n_bnd, d);
    all_points.points.topRows(n_int) = problem.interior;
    all_points.points.bottomRows(n_bnd) = problem.boundary;
    all_points.quad_weights = Eigen::VectorXd::Constant(n_int + n_bnd, 1.0);
    all_points.log_quad_weights = Eigen::VectorXd::Zero(n_int + n_bnd);

    const FeatureTables tables = eval_features(bank, all_points);
    const ReducedBasis basis = build_reduced_basis(tables, config.svd_eps);
    const Eigen::Index rank = basis.rank();

    // Laplacian rows: exact per-neuron scales, or a fixed per-row stochastic
    // estimate (resampling across Picard iterations would move the fixed
    // point). Only sampled columns of W are touched.
    const bool stochastic = config.subset_size > 0 && config.subset_size < d;
    Eigen::MatrixXd lap_scaled(bank.neurons() + 1, n_int);
    {
        RngHandle subset_rng = rng.fork(0x5B);
        Eigen::VectorXd scales;
        if (!stochastic) scales = laplacian_scales_full(bank);
        for (Eigen::Index n = 0; n < n_int; ++n) {
            if (stochastic) {
                const DimensionSubset subset = sample_dimension_subset(
                    d, config.subset_size, SubsetScheme::UniformWithoutReplacement, subset_rng);
                scales = laplacian_scales_subset(bank, subset);
            }
            lap_scaled.col(n).head(bank.neurons()) =
                scales.cwiseProduct(tables.s2.col(n));
        }
        lap_scaled.row(bank.neurons()).setZero();
    }
    const Eigen::MatrixXd lap_r = basis.v_r.transpose() * lap_scaled;  // r x N_int

    const Eigen::MatrixXd psi_int = basis.psi_r.leftCols(n_int);
    const Eigen::MatrixXd psi_bnd = basis.psi_r.rightCols(n_bnd);

    Eigen::VectorXd pot(n_int);
    for (Eigen::Index n = 0; n < n_int; ++n) {
        double v = 0.0;
        for (int j = 0; j < d; ++j) {
            const double g = mms.gammas[j];
            v += 0.5 * g * g * problem.interior(n, j) * problem.interior(n, j);
        }
        pot[n] = v;
    }
    const Eigen::VectorXd source = mms_source_batch(mms, problem.interior);
    const Eigen::VectorXd bnd_values = mms_exact_batch(mms, problem.boundary);

    const double setup_seconds = seconds_since(t_setup);
    const auto t_solve = std::chrono::steady_clock::now();

    // Stacked least squares: interior rows 1/2 lap - V psi - beta nu psi = g,
    // boundary rows lambda_b * psi = lambda_b * psi_exact.
    const Eigen::Index n_rows = n_int + n_bnd;
    Eigen::MatrixXd a_mat(n_rows, rank);
    Eigen::VectorXd b_vec(n_rows);
    a_mat.bottomRows(n_bnd) = config.boundary_weight * psi_bnd.transpose();
    b_vec.tail(n_bnd) = config.boundary_weight * bnd_values;

    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(rank);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n_int);  // frozen |psi|^2
    double prev_residual = -1.0;
    double residual = 0.0;
    int iters = 0;
    int growth_streak = 0;

    auto interior_residual = [&](const Eigen::VectorXd& c) {
        Eigen::VectorXd psi_c = psi_int.transpose() * c;
        Eigen::VectorXd lap_c = lap_r.transpose() * c;
        Eigen::VectorXd res = 0.5 * lap_c - pot.cwiseProduct(psi_c) -
                              mms.beta_d * psi_c.array().square().matrix().cwiseProduct(psi_c) -
                              source;
        return res.norm();
    };

    for (iters = 1; iters <= config.picard_cap; ++iters) {
        for (Eigen::Index n = 0; n < n_int; ++n) {
            a_mat.row(n) = 0.5 * lap_r.col(n).transpose() -
                           (pot[n] + mms.beta_d * nu[n]) * psi_int.col(n).transpose();
        }
        b_vec.head(n_int) = source;

        Eigen::VectorXd c_new = a_mat.colPivHouseholderQr().solve(b_vec);
        double res_new = interior_residual(c_new);
        if (prev_residual >= 0.0 && res_new > prev_residual) {
            // Damping 0.5 on residual growth.
            c_new = 0.5 * (c_new + coeffs);
            res_new = interior_residual(c_new);
            if (res_new > prev_residual) {
                if (++growth_streak >= 3)
                    throw NumericalError("solve_static: Picard residual grew for three "
                                         "consecutive iterations; increase damping");
            } else {
                growth_streak = 0;
            }
        } else {
            growth_streak = 0;
        }

        const double delta = (c_new - coeffs).norm();
        coeffs = c_new;
        residual = res_new;
        prev_residual = res_new;
        Eigen::VectorXd psi_c = psi_int.transpose() * coeffs;
        nu = psi_c.array().square();
        if (delta < config.picard_tol * std::max(1.0, coeffs.norm())) break;
    }

    const double solve_seconds = seconds_since(t_solve);
    const auto t_eval = std::chrono::steady_clock::now();

    // Independent uniform-in-ball test set.
    RngHandle test_rng = rng.fork(0x7E57);
    const int n_test = config.test_factor * static_cast<int>(n_int);
    Eigen::MatrixXd test_pts(n_test, d);
    Eigen::VectorXd dir(d);
    for (int n = 0; n < n_test; ++n) {
        double nrm = 0.0;
        do {
            for (int j = 0; j < d; ++j) dir[j] = test_rng.normal();
            nrm = dir.norm();
        } while (nrm == 0.0);
        const double radius = std::pow(test_rng.uniform01(), 1.0 / d);
        test_pts.row(n) = (radius / nrm) * dir.transpose();
    }

    const Eigen::MatrixXd psi_test = basis.reduce_features(eval_features_at(bank, test_pts));
    const Eigen::VectorXd pred = psi_test.transpose() * coeffs;
    const Eigen::VectorXd truth = mms_exact_batch(mms, test_pts);

    StaticReport report;
    report.errors = compute_errors(pred.cast<std::complex<double>>(),
                                   truth.cast<std::complex<double>>(),
                                   "uniform-ball test set");
    report.picard_iters = iters > config.picard_cap ? config.picard_cap : iters;
    report.rank = static_cast<int>(rank);
    report.final_residual = residual;
    report.setup_seconds = setup_seconds;
    report.solve_seconds = solve_seconds;
    report.eval_seconds = seconds_since(t_eval);
    report.coeffs = coeffs;
    return report;
}

} // namespace sdfsnn
