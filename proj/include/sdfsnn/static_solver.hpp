#ifndef SDFSNN_STATIC_SOLVER_HPP
#define SDFSNN_STATIC_SOLVER_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "sdfsnn/metrics.hpp"
#include "sdfsnn/rng.hpp"
#include "sdfsnn/sampling.hpp"

namespace sdfsnn {

// Manufactured solution on the unit ball:
//   psi_exact(x) = prod_j (gamma_j/pi)^{1/4} exp(-1/2 sum gamma_j x_j^2) F(x),
//   F(x) = 1 + eps sum_{i=1}^{d-1} c_i sin(x_i + cos(x_{i+1}) + x_{i+1} cos(x_i)),
// with seeded standard-normal c_i, and the induced source
//   g = 1/2 lap psi_exact - V_d psi_exact - beta_d |psi_exact|^2 psi_exact.
struct MmsSpec {
    int d = 1;
    Eigen::VectorXd gammas;
    double beta_d = 1.0;
    double epsilon = 0.01;
    Eigen::VectorXd c_coeffs;  // length d-1
    std::uint64_t seed = 0;
};

MmsSpec make_mms_spec(int d, const Eigen::VectorXd& gammas, double beta_d, double epsilon,
                      std::uint64_t seed);

double mms_exact(const MmsSpec& spec, const Eigen::VectorXd& x);
double mms_source(const MmsSpec& spec, const Eigen::VectorXd& x);

Eigen::VectorXd mms_exact_batch(const MmsSpec& spec, const Eigen::MatrixXd& pts);
Eigen::VectorXd mms_source_batch(const MmsSpec& spec, const Eigen::MatrixXd& pts);

struct StaticProblem {
    Eigen::MatrixXd interior;  // N_c x d, |x| < 1
    Eigen::MatrixXd boundary;  // N_b x d, |x| = 1
    MmsSpec mms;
};

// Interior points uniform in the ball (radius U^{1/d}), boundary points
// uniform on the sphere (normalized Gaussian directions).
StaticProblem make_static_problem(const MmsSpec& spec, int n_interior, int n_boundary,
                                  RngHandle& rng);

struct StaticSolveConfig {
    int neurons = 256;
    double svd_eps = 1e-10;
    double boundary_weight = 10.0;  // lambda_b relative to interior rows
    int subset_size = 0;            // 0 or >= d: exact Laplacian rows
    int picard_cap = 100;
    double picard_tol = 1e-12;
    int test_factor = 10;           // test set size = test_factor * N_c
};

struct StaticReport {
    ErrorReport errors;
    int picard_iters = 0;
    int rank = 0;
    double final_residual = 0.0;  // interior residual 2-norm at the last iterate
    double setup_seconds = 0.0;   // sampling + features + SVD
    double solve_seconds = 0.0;   // Picard loop
    double eval_seconds = 0.0;    // test-set error evaluation
    Eigen::VectorXd coeffs;
};

// Picard iteration with frozen nonlinearity: at iterate k the density
// nu_k = |psi_k|^2 is fixed and the linear least-squares system stacking
// interior residual rows and weighted boundary rows is solved; damping 0.5
// engages when the interior residual grows. Boundary rows enforce
// psi = psi_exact on the sphere (the manufactured Dirichlet data).
StaticReport solve_static(const StaticProblem& problem, const StaticSolveConfig& config,
                          RngHandle& rng);

} // namespace sdfsnn

#endif
