#include "sdfsnn/dynamics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/kernels.hpp"

namespace sdfsnn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Mass quadrature weights w_n rho(x_n)^2 in log space (exact envelope
// cancellation; safe at any dimension).
Eigen::VectorXd mass_weights(const CollocationSet& x, const EnvelopeSpec& spec) {
    Eigen::VectorXd mw(x.size());
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        double log_mw = x.log_quad_weights[n];
        if (spec.mode == EnvelopeMode::DeEnveloped)
            log_mw -= 2.0 * spec.alpha * x.points.row(n).squaredNorm();
        mw[n] = std::exp(log_mw);
    }
    return mw;
}

} // namespace

double derive_beta_d(double beta, int n_orig, int d, double gamma_tail) {
    if (n_orig < d) throw ConfigError("derive_beta_d: original dimension n must be >= d");
    double factor = 1.0;
    for (int j = d; j < n_orig; ++j) factor *= std::sqrt(gamma_tail / kTwoPi);
    return beta * factor;
}

RhsAssembler::RhsAssembler(const GpeProblem& problem, const FeatureBank& bank,
                           const CollocationSet& x, const FeatureTables& tables,
                           const ReducedBasis& basis, const EnvelopeSpec& spec)
    : problem_(&problem), bank_(&bank), x_(&x), tables_(&tables), basis_(&basis), spec_(spec) {
    if (problem.dim() != bank.dim())
        throw ConfigError("RhsAssembler: problem and bank dimensions differ");
    if (x.dim() != bank.dim())
        throw ConfigError("RhsAssembler: collocation set dimension differs from bank");

    full_scales_ = laplacian_scales_full(bank);

    pot_.resize(x.size());
    for (Eigen::Index n = 0; n < x.size(); ++n)
        pot_[n] = problem.potential(x.points.row(n));

    const EnvelopeCorrections env = eval_envelope_corrections(spec_, x.points);
    b_corr_ = env.b_corr;
    rho_sq_ = env.rho_sq;

    if (spec_.mode == EnvelopeMode::DeEnveloped) {
        // Collapsed drift table: sum_j a_j w_{m,j} sigma' = -2a (z - b) sigma'.
        Eigen::MatrixXd drift(bank.neurons() + 1, x.size());
        Eigen::MatrixXd z_minus_b = tables.z;
        z_minus_b.colwise() -= bank.b;
        drift.topRows(bank.neurons()) =
            (-2.0 * spec_.alpha) * z_minus_b.cwiseProduct(tables.s1);
        drift.row(bank.neurons()).setZero();
        drift_r_.noalias() = basis.v_r.transpose() * drift;
    }
}

Eigen::VectorXcd RhsAssembler::field_u(const CoefficientState& state) const {
    Eigen::VectorXd u_re = basis_->psi_r.transpose() * state.c_re;
    Eigen::VectorXd u_im = basis_->psi_r.transpose() * state.c_im;
    Eigen::VectorXcd u(u_re.size());
    u.real() = u_re;
    u.imag() = u_im;
    return u;
}

void RhsAssembler::rhs(const CoefficientState& state, Eigen::VectorXd& c_re_dot,
                       Eigen::VectorXd& c_im_dot, const Eigen::VectorXd* lap_scales) const {
    const Eigen::VectorXd& scales = lap_scales ? *lap_scales : full_scales_;

    const Eigen::VectorXd u_re = basis_->psi_r.transpose() * state.c_re;
    const Eigen::VectorXd u_im = basis_->psi_r.transpose() * state.c_im;

    const Eigen::VectorXd cf_re = basis_->v_r * state.c_re;  // coefficients in raw feature space
    const Eigen::VectorXd cf_im = basis_->v_r * state.c_im;
    Eigen::VectorXcd lap_u;
    kernels::scaled_action(cf_re.head(bank_->neurons()), cf_im.head(bank_->neurons()),
                           scales, tables_->s2, lap_u);

    // G = 1/2 lap u + drift + 1/2 b u - V u - beta rho^2 |u|^2 u; rhs = i G.
    Eigen::ArrayXd g_re = 0.5 * lap_u.real().array();
    Eigen::ArrayXd g_im = 0.5 * lap_u.imag().array();

    if (spec_.mode == EnvelopeMode::DeEnveloped) {
        g_re += (drift_r_.transpose() * state.c_re).array();
        g_im += (drift_r_.transpose() * state.c_im).array();
        g_re += 0.5 * b_corr_.array() * u_re.array();
        g_im += 0.5 * b_corr_.array() * u_im.array();
    }

    g_re -= pot_.array() * u_re.array();
    g_im -= pot_.array() * u_im.array();

    if (problem_->beta_d != 0.0) {
        const Eigen::ArrayXd absq = u_re.array().square() + u_im.array().square();
        if (spec_.mode == EnvelopeMode::DeEnveloped) {
            const Eigen::ArrayXd cubic = problem_->beta_d * rho_sq_.array() * absq;
            g_re -= cubic * u_re.array();
            g_im -= cubic * u_im.array();
        } else {
            const Eigen::ArrayXd cubic = problem_->beta_d * absq;
            g_re -= cubic * u_re.array();
            g_im -= cubic * u_im.array();
        }
    }

    // Multiply by i and project back: C_t = (i G) pinv.
    c_re_dot.noalias() = basis_->pinv_psi_r.transpose() * (-g_im).matrix();
    c_im_dot.noalias() = basis_->pinv_psi_r.transpose() * g_re.matrix();

    if (!c_re_dot.allFinite() || !c_im_dot.allFinite()) {
        std::ostringstream msg;
        msg << "rhs: non-finite time derivative at t = " << state.t
            << " (|c| = " << std::sqrt(state.c_re.squaredNorm() + state.c_im.squaredNorm())
            << "); instability or blow-up";
        throw NumericalError(msg.str());
    }
}

Eigen::MatrixXd RhsAssembler::linear_matrix(const Eigen::VectorXd* lap_scales) const {
    const Eigen::VectorXd& scales = lap_scales ? *lap_scales : full_scales_;
    const Eigen::Index n_pts = x_->size();
    const Eigen::Index neurons = bank_->neurons();

    // B maps c to the collocation values of the linear operator applied to u:
    // B c = 1/2 lap u + drift u + (1/2 b - V) u.
    Eigen::MatrixXd b_mat(n_pts, basis_->rank());
    b_mat.noalias() =
        0.5 * tables_->s2.transpose() * scales.asDiagonal() * basis_->v_r.topRows(neurons);
    if (spec_.mode == EnvelopeMode::DeEnveloped) {
        b_mat.noalias() += drift_r_.transpose();
        b_mat.noalias() +=
            (0.5 * b_corr_ - pot_).asDiagonal() * basis_->psi_r.transpose();
    } else {
        b_mat.noalias() -= pot_.asDiagonal() * basis_->psi_r.transpose();
    }
    return basis_->pinv_psi_r.transpose() * b_mat;
}

CoefficientState initial_coefficients(const GpeProblem& problem, const ReducedBasis& basis,
                                      const EnvelopeCorrections& env, const CollocationSet& x,
                                      const GramMatrix& gram, double residual_cap) {
    if (!problem.initial_psi0)
        throw ConfigError("initial_coefficients: problem has no initial data");

    const Eigen::Index n_pts = x.size();
    Eigen::VectorXd y_re(n_pts), y_im(n_pts);
    for (Eigen::Index n = 0; n < n_pts; ++n) {
        if (!(env.rho[n] > 0.0))
            throw NumericalError("initial_coefficients: envelope vanished at a collocation point");
        const std::complex<double> v = problem.initial_psi0(x.points.row(n)) / env.rho[n];
        y_re[n] = v.real();
        y_im[n] = v.imag();
    }

    CoefficientState state;
    state.t = 0.0;
    state.c_re.noalias() = basis.pinv_psi_r.transpose() * y_re;
    state.c_im.noalias() = basis.pinv_psi_r.transpose() * y_im;

    const double norm_y = std::sqrt(y_re.squaredNorm() + y_im.squaredNorm());
    if (norm_y == 0.0)
        throw NumericalError("initial_coefficients: zero initial data cannot be normalized");
    const Eigen::VectorXd fit_re = basis.psi_r.transpose() * state.c_re - y_re;
    const Eigen::VectorXd fit_im = basis.psi_r.transpose() * state.c_im - y_im;
    const double rel_res = std::sqrt(fit_re.squaredNorm() + fit_im.squaredNorm()) / norm_y;
    if (rel_res > residual_cap) {
        std::ostringstream msg;
        msg << "initial_coefficients: least-squares fit residual " << rel_res
            << " exceeds cap " << residual_cap << " (basis cannot represent psi0)";
        throw NumericalError(msg.str());
    }

    mass_project(state, gram);
    return state;
}

double discrete_mass(const CoefficientState& state, const GramMatrix& gram) {
    // G is real symmetric, so the quadratic form C G C^* is real by
    // construction (the imaginary cross terms cancel exactly).
    const double m = state.c_re.dot(gram.g * state.c_re) + state.c_im.dot(gram.g * state.c_im);
    return m;
}

void mass_project(CoefficientState& state, const GramMatrix& gram) {
    const double m = discrete_mass(state, gram);
    if (!(m > 1e-300))
        throw NumericalError("mass_project: zero state cannot be projected onto the mass manifold");
    const double scale = 1.0 / std::sqrt(m);
    state.c_re *= scale;
    state.c_im *= scale;
}

EnergyBreakdown discrete_energy(const CoefficientState& state, const GpeProblem& problem,
                                const FeatureBank& bank, const FeatureTables& tables,
                                const ReducedBasis& basis, const EnvelopeCorrections& env,
                                const EnvelopeSpec& spec, const CollocationSet& x) {
    const Eigen::Index n_pts = x.size();
    const int d = static_cast<int>(x.dim());

    const Eigen::VectorXd u_re = basis.psi_r.transpose() * state.c_re;
    const Eigen::VectorXd u_im = basis.psi_r.transpose() * state.c_im;
    const Eigen::VectorXd cf_re = basis.v_r * state.c_re;
    const Eigen::VectorXd cf_im = basis.v_r * state.c_im;

    // |grad(rho u)|^2 = rho^2 sum_j |d_j u + a_j u|^2, accumulated per point.
    Eigen::VectorXd kin(n_pts);
    kin.setZero();
    Eigen::VectorXcd dju;
    for (int j = 0; j < d; ++j) {
        kernels::scaled_action(cf_re.head(bank.neurons()), cf_im.head(bank.neurons()),
                               bank.W.col(j), tables.s1, dju);
        for (Eigen::Index n = 0; n < n_pts; ++n) {
            const double a = (spec.mode == EnvelopeMode::DeEnveloped) ? env.a(j, n) : 0.0;
            const double vr = dju[n].real() + a * u_re[n];
            const double vi = dju[n].imag() + a * u_im[n];
            kin[n] += vr * vr + vi * vi;
        }
    }

    const Eigen::VectorXd mw = mass_weights(x, spec);
    Eigen::VectorXd kin_buf(n_pts), pot_buf(n_pts), int_buf(n_pts);
    for (Eigen::Index n = 0; n < n_pts; ++n) {
        const double absq = u_re[n] * u_re[n] + u_im[n] * u_im[n];
        const double pot = problem.potential(x.points.row(n));
        const double rho_sq = (spec.mode == EnvelopeMode::DeEnveloped) ? env.rho_sq[n] : 1.0;
        kin_buf[n] = 0.5 * mw[n] * kin[n];
        pot_buf[n] = mw[n] * pot * absq;
        int_buf[n] = 0.5 * problem.beta_d * mw[n] * rho_sq * absq * absq;
    }

    EnergyBreakdown e;
    e.kinetic = kernels::ordered_sum(kin_buf);
    e.potential = kernels::ordered_sum(pot_buf);
    e.interaction = kernels::ordered_sum(int_buf);
    e.total = e.kinetic + e.potential + e.interaction;
    return e;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace dp {
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double safety = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
constexpr double fac_min = 0.2, fac_max = 10.0;
} // namespace dp

Dopri5Stepper::Dopri5Stepper(double rtol, double atol, double dt_max)
    : rtol_(rtol), atol_(atol), dt_max_(dt_max) {
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw ConfigError("Dopri5Stepper: tolerances must be positive");
}

void Dopri5Stepper::reset() { have_k1_ = false; }

Dopri5Stepper::StepResult Dopri5Stepper::step(double t, Eigen::VectorXd& y, double h,
                                              const RhsFunction& rhs) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y_stage(n), y_new(n);

    if (!have_k1_ || k1_.size() != n) {
        k1_.resize(n);
        rhs(t, y, k1_);
        have_k1_ = true;
    }

    int rejections = 0;
    for (;;) {
        if (!(h > 1e-14))
            throw NumericalError("step_adaptive: step size underflow (stiffness or instability)");

        y_stage = y + h * dp::a21 * k1_;
        rhs(t + dp::c2 * h, y_stage, k2);
        y_stage = y + h * (dp::a31 * k1_ + dp::a32 * k2);
        rhs(t + dp::c3 * h, y_stage, k3);
        y_stage = y + h * (dp::a41 * k1_ + dp::a42 * k2 + dp::a43 * k3);
        rhs(t + dp::c4 * h, y_stage, k4);
        y_stage = y + h * (dp::a51 * k1_ + dp::a52 * k2 + dp::a53 * k3 + dp::a54 * k4);
        rhs(t + dp::c5 * h, y_stage, k5);
        y_stage = y + h * (dp::a61 * k1_ + dp::a62 * k2 + dp::a63 * k3 + dp::a64 * k4 +
                           dp::a65 * k5);
        rhs(t + h, y_stage, k6);
        y_new = y + h * (dp::a71 * k1_ + dp::a73 * k3 + dp::a74 * k4 + dp::a75 * k5 +
                         dp::a76 * k6);
        rhs(t + h, y_new, k7);  // FSAL stage

        double err_sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = h * (dp::e1 * k1_[i] + dp::e3 * k3[i] + dp::e4 * k4[i] +
                                  dp::e5 * k5[i] + dp::e6 * k6[i] + dp::e7 * k7[i]);
            const double sk = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err_sq += (e / sk) * (e / sk);
        }
        const double err = std::sqrt(err_sq / double(n));

        if (err <= 1.0) {
            const double fac11 = (err == 0.0) ? 0.0 : std::pow(err, dp::expo1);
            double fac = fac11 / std::pow(facold_, dp::beta);
            fac = std::max(1.0 / dp::fac_max, std::min(1.0 / dp::fac_min, fac / dp::safety));
            double h_next = std::min(h / fac, dt_max_);
            facold_ = std::max(err, 1e-4);
            y = y_new;
            k1_ = k7;
            return {t + h, h, h_next, rejections};
        }

        ++rejections;
        const double fac11 = std::pow(err, dp::expo1);
        h = h / std::min(1.0 / dp::fac_min, fac11 / dp::safety);
    }
}

void implicit_midpoint_step(double t, Eigen::VectorXd& y, double dt,
                            const RhsFunction& rhs, double inner_tol, int inner_cap) {
    const double t_mid = t + 0.5 * dt;
    Eigen::VectorXd f(y.size()), w(y.size()), w_next(y.size());

    rhs(t, y, f);
    w = y + 0.5 * dt * f;  // explicit-Euler predictor for the midpoint value

    bool converged = false;
    for (int it = 0; it < inner_cap; ++it) {
        rhs(t_mid, w, f);
        w_next = y + 0.5 * dt * f;
        const double delta = (w_next - w).lpNorm<Eigen::Infinity>();
        const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                             (y.lpNorm<Eigen::Infinity>() +
                              0.5 * dt * f.lpNorm<Eigen::Infinity>());
        w.swap(w_next);
        if (delta <= std::max(inner_tol, floor)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericalError("implicit_midpoint_step: fixed-point iteration did not converge "
                             "(reduce dt or loosen the inner tolerance)");
    y = 2.0 * w - y;
}

// ---------------------------------------------------------------------------
// Evolution driver

EvolveResult evolve(const GpeProblem& problem, const FeatureBank& bank,
                    const CollocationSet& x, const FeatureTables& tables,
                    const ReducedBasis& basis, const EnvelopeCorrections& env,
                    const EnvelopeSpec& spec, const GramMatrix& gram,
                    const IntegratorConfig& config, double t_final,
                    const std::vector<double>& snapshot_times, RngHandle& rng,
                    std::optional<CoefficientState> initial_state) {
    if (t_final < 0.0) throw ConfigError("evolve: t_final must be >= 0");

    RhsAssembler assembler(problem, bank, x, tables, basis, spec);

    CoefficientState state = initial_state
        ? *initial_state
        : initial_coefficients(problem, basis, env, x, gram);

    const double bound = std::sqrt(1.0 / gram.min_eig) + 1e-9;

    EvolveResult result;
    const int d = problem.dim();
    const bool stochastic = config.subset_size > 0 && config.subset_size < d;
    RngHandle subset_rng = rng.fork(0x5DULL);

    Eigen::VectorXd scales = assembler.full_scales();
    auto resample = [&]() {
        if (!stochastic) return;
        const DimensionSubset subset = sample_dimension_subset(
            d, config.subset_size, SubsetScheme::UniformWithoutReplacement, subset_rng);
        scales = laplacian_scales_subset(bank, subset);
    };

    CoefficientState scratch;
    scratch.c_re.resize(basis.rank());
    scratch.c_im.resize(basis.rank());
    RhsFunction rhs_fn = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) {
        if (config.subset_policy == SubsetPolicy::ResamplePerStage) resample();
        const Eigen::Index r = basis.rank();
        scratch.t = t;
        scratch.c_re = y.head(r);
        scratch.c_im = y.tail(r);
        Eigen::VectorXd dre, dim_;
        assembler.rhs(scratch, dre, dim_, &scales);
        dydt.resize(2 * r);
        dydt.head(r) = dre;
        dydt.tail(r) = dim_;
        ++result.n_rhs_evals;
    };

    auto record_snapshot = [&](double t_snap) {
        result.snapshot_times.push_back(t_snap);
        result.snapshots.push_back(state);
        const double mass = discrete_mass(state, gram);
        result.ledger.mass_history.emplace_back(t_snap, mass);
        const EnergyBreakdown e =
            discrete_energy(state, problem, bank, tables, basis, env, spec, x);
        result.ledger.energy_history.emplace_back(t_snap, e);
    };

    auto post_step = [&](double t_now) {
        state.t = t_now;
        const double raw_mass = discrete_mass(state, gram);
        result.ledger.drift_max_mass_raw =
            std::max(result.ledger.drift_max_mass_raw, std::abs(raw_mass - 1.0));
        if (config.project_mass) {
            mass_project(state, gram);
            const double mass = discrete_mass(state, gram);
            result.ledger.drift_max_mass =
                std::max(result.ledger.drift_max_mass, std::abs(mass - 1.0));
            const double cnorm = std::sqrt(state.c_re.squaredNorm() + state.c_im.squaredNorm());
            result.ledger.max_cnorm_ratio =
                std::max(result.ledger.max_cnorm_ratio, cnorm / (bound - 1e-9));
            if (cnorm > bound) {
                std::ostringstream msg;
                msg << "evolve: a-priori coefficient bound violated at t = " << t_now
                    << " (|c| = " << cnorm << " > " << bound << ")";
                throw NumericalError(msg.str());
            }
        } else {
            result.ledger.drift_max_mass =
                std::max(result.ledger.drift_max_mass, std::abs(raw_mass - 1.0));
        }
        ++result.n_accepted;
    };

    record_snapshot(0.0);

    // Targets: requested snapshot times plus the final time.
    std::vector<double> targets = snapshot_times;
    std::sort(targets.begin(), targets.end());
    for (double ts : targets)
        if (ts <= 0.0 || ts > t_final + 1e-12)
            throw ConfigError("evolve: snapshot times must lie in (0, t_final]");
    if (targets.empty() || std::abs(targets.back() - t_final) > 1e-12)
        targets.push_back(t_final);

    if (t_final == 0.0) return result;

    Eigen::VectorXd y(2 * basis.rank());
    y.head(basis.rank()) = state.c_re;
    y.tail(basis.rank()) = state.c_im;

    const double e0 = result.ledger.energy_history.front().second.total;

    if (config.scheme == OdeScheme::AdaptiveRk45) {
        Dopri5Stepper stepper(config.rtol, config.atol, config.dt_max);
        double t = 0.0;
        double h = std::min(config.dt_init, config.dt_max);
        for (double target : targets) {
            while (t < target - 1e-13) {
                if (config.subset_policy != SubsetPolicy::ResamplePerStage) {
                    if (config.subset_policy == SubsetPolicy::ResamplePerStep || t == 0.0)
                        resample();
                }
                const double h_try = std::min(h, target - t);
                auto res = stepper.step(t, y, h_try, rhs_fn);
                result.n_rejected += res.rejections;
                t = res.t_new;
                h = res.h_next;
                state.c_re = y.head(basis.rank());
                state.c_im = y.tail(basis.rank());
                post_step(t);
                y.head(basis.rank()) = state.c_re;
                y.tail(basis.rank()) = state.c_im;
                stepper.reset();  // projection invalidates the FSAL cache
            }
            record_snapshot(target);
        }
    } else {
        if (config.subset_policy == SubsetPolicy::ResamplePerStage)
            throw ConfigError("evolve: per-stage resampling is incompatible with the "
                              "implicit midpoint scheme (the fixed point would move)");
        // Semi-implicit inner iteration for the midpoint equations: the
        // stiff linear part is factorized, so convergence only requires
        // dt * Lip(nonlinear part) < 2.
        const Eigen::Index r = basis.rank();
        Eigen::MatrixXd a_mat = Eigen::MatrixXd::Zero(2 * r, 2 * r);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        double lu_dt = -1.0;
        bool lu_fresh = false;

        auto refactor = [&](double dt_step) {
            const Eigen::MatrixXd m_lin = assembler.linear_matrix(&scales);
            a_mat.topRightCorner(r, r) = -m_lin;
            a_mat.bottomLeftCorner(r, r) = m_lin;
            lu.compute(Eigen::MatrixXd::Identity(2 * r, 2 * r) - (0.5 * dt_step) * a_mat);
            lu_dt = dt_step;
            lu_fresh = true;
        };

        Eigen::VectorXd f(2 * r), w(2 * r), w_next(2 * r), nl(2 * r), aw(2 * r);
        auto midpoint_step = [&](double t_now, double dt_step) {
            const double t_mid = t_now + 0.5 * dt_step;
            w = y;
            bool converged = false;
            for (int it = 0; it < config.newton_cap; ++it) {
                rhs_fn(t_mid, w, f);
                aw.noalias() = a_mat * w;
                nl = f - aw;
                w_next = lu.solve(y + 0.5 * dt_step * nl);
                const double delta = (w_next - w).lpNorm<Eigen::Infinity>();
                // The cancellation F(w) - A w cannot be resolved below
                // rounding of its operands; stop once delta reaches that floor.
                const double floor =
                    64.0 * std::numeric_limits<double>::epsilon() *
                    (w.lpNorm<Eigen::Infinity>() +
                     0.5 * dt_step *
                         (f.lpNorm<Eigen::Infinity>() + aw.lpNorm<Eigen::Infinity>()));
                w.swap(w_next);
                if (delta <= std::max(config.newton_tol, floor)) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw NumericalError("evolve: implicit midpoint inner iteration did not "
                                     "converge (reduce dt)");
            y = 2.0 * w - y;
        };

        double t = 0.0;
        for (double target : targets) {
            const double seg = target - t;
            if (seg <= 1e-13) {
                record_snapshot(target);
                continue;
            }
            const long n_sub = std::max<long>(1, std::lround(seg / config.dt));
            const double dt_local = seg / double(n_sub);
            for (long k = 0; k < n_sub; ++k) {
                bool scales_changed = false;
                if (stochastic &&
                    (config.subset_policy == SubsetPolicy::ResamplePerStep || !lu_fresh)) {
                    resample();
                    scales_changed = true;
                }
                if (!lu_fresh || scales_changed || dt_local != lu_dt) refactor(dt_local);
                midpoint_step(t, dt_local);
                t += dt_local;
                state.c_re = y.head(r);
                state.c_im = y.tail(r);
                post_step(t);
                y.head(r) = state.c_re;
                y.tail(r) = state.c_im;
            }
            t = target;
            record_snapshot(target);
        }
    }

    for (const auto& [ts, e] : result.ledger.energy_history)
        result.ledger.drift_max_energy =
            std::max(result.ledger.drift_max_energy, std::abs(e.total - e0));

    return result;
}

Eigen::VectorXcd reconstruct(const CoefficientState& state, const FeatureBank& bank,
                             const ReducedBasis& basis, const EnvelopeSpec& spec,
                             const Eigen::MatrixXd& query_pts) {
    if (query_pts.cols() != bank.dim())
        throw ConfigError("reconstruct: query point dimension does not match bank");
    const Eigen::MatrixXd psi_at = eval_features_at(bank, query_pts);
    const Eigen::MatrixXd red = basis.reduce_features(psi_at);  // r x Nq
    const Eigen::VectorXd v_re = red.transpose() * state.c_re;
    const Eigen::VectorXd v_im = red.transpose() * state.c_im;

    Eigen::VectorXcd out(query_pts.rows());
    for (Eigen::Index n = 0; n < query_pts.rows(); ++n) {
        const double rho = (spec.mode == EnvelopeMode::DeEnveloped)
                               ? std::exp(-spec.alpha * query_pts.row(n).squaredNorm())
                               : 1.0;
        out[n] = rho * std::complex<double>(v_re[n], v_im[n]);
    }
    return out;
}

} // namespace sdfsnn
