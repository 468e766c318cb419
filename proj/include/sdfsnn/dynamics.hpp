#ifndef SDFSNN_DYNAMICS_HPP
#define SDFSNN_DYNAMICS_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "sdfsnn/features.hpp"
#include "sdfsnn/reduction.hpp"

namespace sdfsnn {

// Complex output coefficients in reduced coordinates, split into real and
// imaginary parts; the only time-evolving state of the solver.
struct CoefficientState {
    Eigen::VectorXd c_re;
    Eigen::VectorXd c_im;
    double t = 0.0;

    Eigen::Index rank() const { return c_re.size(); }
    Eigen::VectorXcd complex() const {
        return c_re.cast<std::complex<double>>() +
               std::complex<double>(0.0, 1.0) * c_im.cast<std::complex<double>>();
    }
};

struct GpeProblem {
    Eigen::VectorXd gammas;  // trap frequencies, length d, all positive
    double beta_d = 0.0;     // effective interaction in d dimensions
    double beta = 0.0;       // original-dimension interaction (bookkeeping)
    int n_orig = 0;          // original spatial dimension n >= d
    std::function<std::complex<double>(const Eigen::VectorXd&)> initial_psi0;

    int dim() const { return static_cast<int>(gammas.size()); }
    double potential(const Eigen::VectorXd& x) const {
        double v = 0.0;
        for (Eigen::Index j = 0; j < gammas.size(); ++j)
            v += gammas[j] * gammas[j] * x[j] * x[j];
        return 0.5 * v;
    }
};

// beta_d = beta * prod_{j=d+1}^{n} sqrt(gamma_j / (2 pi)) with a common trap
// frequency gamma_tail for the reduced-out dimensions.
double derive_beta_d(double beta, int n_orig, int d, double gamma_tail = 1.0);

struct EnergyBreakdown {
    double total = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    double interaction = 0.0;
};

struct ConservationLedger {
    std::vector<std::pair<double, double>> mass_history;  // (t, N(t)) at snapshots
    std::vector<std::pair<double, EnergyBreakdown>> energy_history;
    double drift_max_mass = 0.0;          // max |N-1| after projection, all steps
    double drift_max_mass_raw = 0.0;      // max |N-1| before projection
    double drift_max_energy = 0.0;        // max |E-E0| over snapshots
    double max_cnorm_ratio = 0.0;         // max |c|_2 / a-priori bound
};

enum class OdeScheme { AdaptiveRk45, ImplicitMidpoint };
enum class SubsetPolicy { ResamplePerStep, ResamplePerStage, Fixed };

struct IntegratorConfig {
    OdeScheme scheme = OdeScheme::AdaptiveRk45;
    double rtol = 1e-10;
    double atol = 1e-10;
    double dt_init = 1e-3;
    double dt_max = 0.1;
    double dt = 1e-2;           // fixed step for the implicit midpoint scheme
    double newton_tol = 1e-12;  // inner fixed-point tolerance
    int newton_cap = 50;
    SubsetPolicy subset_policy = SubsetPolicy::ResamplePerStep;
    int subset_size = 0;        // 0 or >= d means the full Laplacian
    bool project_mass = true;   // turned off only by the conservation ablation
};

// Precomputed right-hand-side assembly for the reduced coefficient ODE
//   C_t = R_rho(X, C) pinv(psi_r),
//   R_rho = i [ 1/2 C lap psi  +  sum_j a_j (C d_j psi)  +  1/2 b co C psi
//               - V_d (C psi)  -  beta_d rho^2 |C psi|^2 (C psi) ].
// The envelope drift sum collapses for ridge features:
//   sum_j a_j w_{m,j} sigma'(z) = -2 alpha (z - b_m) sigma'(z),
// so every per-step evaluation costs O((M + r) N_c), independent of d.
class RhsAssembler {
public:
    RhsAssembler(const GpeProblem& problem, const FeatureBank& bank,
                 const CollocationSet& x, const FeatureTables& tables,
                 const ReducedBasis& basis, const EnvelopeSpec& spec);

    // Time derivative of (c_re, c_im); scales = per-neuron Laplacian factors
    // (full by default, or a stochastic-subset estimate).
    void rhs(const CoefficientState& state, Eigen::VectorXd& c_re_dot,
             Eigen::VectorXd& c_im_dot,
             const Eigen::VectorXd* lap_scales = nullptr) const;

    // Real r x r matrix of the beta-independent part: F_lin(c) = i (M c).
    // The implicit midpoint stepper factorizes it so stiff linear modes do
    // not constrain the inner fixed-point iteration.
    Eigen::MatrixXd linear_matrix(const Eigen::VectorXd* lap_scales = nullptr) const;

    const Eigen::VectorXd& full_scales() const { return full_scales_; }
    Eigen::Index rank() const { return basis_->rank(); }
    const ReducedBasis& basis() const { return *basis_; }
    const FeatureBank& bank() const { return *bank_; }
    const FeatureTables& tables() const { return *tables_; }
    const EnvelopeSpec& envelope() const { return spec_; }

    // Field values u = C psi_r on the collocation set (de-enveloped field).
    Eigen::VectorXcd field_u(const CoefficientState& state) const;

private:
    const GpeProblem* problem_;
    const FeatureBank* bank_;
    const CollocationSet* x_;
    const FeatureTables* tables_;
    const ReducedBasis* basis_;
    EnvelopeSpec spec_;

    Eigen::VectorXd full_scales_;  // |w_m|^2 per neuron
    Eigen::MatrixXd drift_r_;      // r x N_c reduced envelope-drift table
    Eigen::VectorXd pot_;          // V_d at collocation points
    Eigen::VectorXd b_corr_;       // envelope curvature field
    Eigen::VectorXd rho_sq_;
};

CoefficientState initial_coefficients(const GpeProblem& problem, const ReducedBasis& basis,
                                      const EnvelopeCorrections& env, const CollocationSet& x,
                                      const GramMatrix& gram, double residual_cap = 1e-3);

void mass_project(CoefficientState& state, const GramMatrix& gram);

double discrete_mass(const CoefficientState& state, const GramMatrix& gram);

EnergyBreakdown discrete_energy(const CoefficientState& state, const GpeProblem& problem,
                                const FeatureBank& bank, const FeatureTables& tables,
                                const ReducedBasis& basis, const EnvelopeCorrections& env,
                                const EnvelopeSpec& spec, const CollocationSet& x);

using RhsFunction = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

// One-step Dormand-Prince 5(4) with PI step-size control (FSAL).
class Dopri5Stepper {
public:
    explicit Dopri5Stepper(double rtol, double atol, double dt_max);

    struct StepResult {
        double t_new;
        double h_used;
        double h_next;
        int rejections;
    };

    // Advances y in place by one accepted step starting with trial size h.
    StepResult step(double t, Eigen::VectorXd& y, double h, const RhsFunction& rhs);

    void reset();

private:
    double rtol_, atol_, dt_max_;
    double facold_ = 1e-4;
    bool have_k1_ = false;
    Eigen::VectorXd k1_;  // FSAL cache
};

// One implicit-midpoint step of fixed size dt (fixed-point inner iteration),
// without the mass projection; the caller projects afterwards.
void implicit_midpoint_step(double t, Eigen::VectorXd& y, double dt,
                            const RhsFunction& rhs, double inner_tol, int inner_cap);

struct EvolveResult {
    std::vector<double> snapshot_times;
    std::vector<CoefficientState> snapshots;
    ConservationLedger ledger;
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs_evals = 0;
};

EvolveResult evolve(const GpeProblem& problem, const FeatureBank& bank,
                    const CollocationSet& x, const FeatureTables& tables,
                    const ReducedBasis& basis, const EnvelopeCorrections& env,
                    const EnvelopeSpec& spec, const GramMatrix& gram,
                    const IntegratorConfig& config, double t_final,
                    const std::vector<double>& snapshot_times, RngHandle& rng,
                    std::optional<CoefficientState> initial_state = std::nullopt);

// psi_hat(x) = rho(x) * sum_i c_i [reduced basis at x].
Eigen::VectorXcd reconstruct(const CoefficientState& state, const FeatureBank& bank,
                             const ReducedBasis& basis, const EnvelopeSpec& spec,
                             const Eigen::MatrixXd& query_pts);

} // namespace sdfsnn

#endif
