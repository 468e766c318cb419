#ifndef SDFSNN_FEATURES_HPP
#define SDFSNN_FEATURES_HPP

#include <Eigen/Dense>
#include <vector>

#include "sdfsnn/sampling.hpp"

namespace sdfsnn {

// DeEnveloped: features are plain tanh ridges; all envelope effects enter
// through the correction fields of EnvelopeCorrections. This is the canonical
// mode. NoDecay (rho == 1) exists only for the "without decay" ablation.
enum class EnvelopeMode { DeEnveloped, NoDecay };

struct EnvelopeSpec {
    double alpha = 0.5;
    EnvelopeMode mode = EnvelopeMode::DeEnveloped;
};

// Frozen feature values and activation-derivative tables on a collocation
// batch. psi is augmented with a constant row: psi = [tanh(WX^T + b); 1].
// First/second per-dimension derivative tables are recomputed on demand from
// the cached sigma'/sigma'' tables so that memory stays independent of d.
struct FeatureTables {
    Eigen::MatrixXd psi;  // (M+1) x N_c, last row all ones
    Eigen::MatrixXd z;    // M x N_c pre-activations
    Eigen::MatrixXd s1;   // M x N_c, sigma'(z)  = 1 - tanh^2
    Eigen::MatrixXd s2;   // M x N_c, sigma''(z) = -2 tanh (1 - tanh^2)

    Eigen::Index neurons() const { return z.rows(); }
    Eigen::Index size() const { return z.cols(); }
};

// Gaussian envelope fields on a collocation batch:
//   a(j, n)   = (d_j rho / rho)(x_n)      = -2 alpha x_{n,j}
//   b_corr[n] = (lap rho / rho)(x_n)      = 4 alpha^2 |x_n|^2 - 2 alpha d
struct EnvelopeCorrections {
    Eigen::MatrixXd a;       // d x N_c
    Eigen::VectorXd b_corr;  // N_c
    Eigen::VectorXd rho;     // N_c
    Eigen::VectorXd rho_sq;  // N_c
};

FeatureTables eval_features(const FeatureBank& bank, const CollocationSet& x);

// Evaluate augmented features at arbitrary query points (no derivative
// tables); used for reconstruction on test grids.
Eigen::MatrixXd eval_features_at(const FeatureBank& bank, const Eigen::MatrixXd& pts);

// First partial along dimension j: rows w_{m,j} * sigma'(z), bias row zero.
Eigen::MatrixXd eval_dim_first(const FeatureBank& bank, const FeatureTables& t, int j);

// Full per-dimension stack of first derivatives (small-d use only).
std::vector<Eigen::MatrixXd> eval_first_derivatives(const FeatureBank& bank,
                                                    const FeatureTables& t);

// Second partial along dimension j: rows w_{m,j}^2 * sigma''(z), bias row zero.
Eigen::MatrixXd eval_dim_second(const FeatureBank& bank, const FeatureTables& t, int j);

Eigen::MatrixXd eval_laplacian_full(const FeatureBank& bank, const FeatureTables& t);

// Stochastic-dimension Laplacian estimate. Uniform scheme:
// (d/m) * sum_{j in J} second partials; Horvitz-Thompson:
// (1/m) * sum_l second partials / p_{j_l}. Only sampled columns of W are
// touched, so the cost is O(M*|J|) + O(M*N_c) regardless of d.
Eigen::MatrixXd eval_laplacian_stochastic(const FeatureBank& bank, const FeatureTables& t,
                                          const DimensionSubset& subset);

// Per-neuron Laplacian scale factors: full mode s_m = sum_j w_{m,j}^2, the
// stochastic estimate replaces the sum with its subset version. Exposed so
// the dynamics assembly can apply the Laplacian without forming the table.
Eigen::VectorXd laplacian_scales_full(const FeatureBank& bank);
Eigen::VectorXd laplacian_scales_subset(const FeatureBank& bank, const DimensionSubset& subset);

EnvelopeCorrections eval_envelope_corrections(const EnvelopeSpec& spec,
                                              const Eigen::MatrixXd& pts);

} // namespace sdfsnn

#endif
