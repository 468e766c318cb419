#ifndef SDFSNN_SAMPLING_HPP
#define SDFSNN_SAMPLING_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "sdfsnn/rng.hpp"

namespace sdfsnn {

// Collocation points with importance weights for whole-space quadrature.
// Points are drawn from the envelope-induced density p ~ exp(-q*alpha*|x|^2)
// (a Gaussian with per-coordinate variance 1/(2*q*alpha)), or uniformly on a
// box when q = 0. quad_weights[n] = 1/(N_c * p(x_n)) so that
// sum_n quad_weights[n] * f(x_n) estimates the whole-space integral of f.
struct CollocationSet {
    Eigen::MatrixXd points;            // N_c x d
    Eigen::VectorXd quad_weights;      // N_c, strictly positive
    Eigen::VectorXd log_quad_weights;  // exact even when exp() would overflow
    double density_exponent = 2.0;     // q

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

// Frozen hidden-layer weights and biases plus the envelope decay rate.
// Immutable after construction.
struct FeatureBank {
    Eigen::MatrixXd W;  // M x d
    Eigen::VectorXd b;  // M
    double alpha = 0.5;

    Eigen::Index neurons() const { return W.rows(); }
    Eigen::Index dim() const { return W.cols(); }
};

enum class SubsetScheme { UniformWithoutReplacement, HorvitzThompson };

// Random set of coordinate directions for the stochastic Laplacian.
// Uniform scheme: m distinct indices. Horvitz-Thompson: m i.i.d. draws from
// the probability vector p (duplicates kept with multiplicity).
struct DimensionSubset {
    std::vector<int> indices;   // sorted for uniform; draw order for HT
    SubsetScheme scheme = SubsetScheme::UniformWithoutReplacement;
    std::vector<double> probs;  // per-draw selection probabilities (HT only)
    int ambient_dim = 0;

    int size() const { return static_cast<int>(indices.size()); }
};

// tanh pre-activation targets at the two generating points: -atanh(1/2) at
// x1 and +atanh(1/2) at x2.
inline constexpr double kDefaultS1 = 1.0986122886681098;   // 2*atanh(0.5)
inline constexpr double kDefaultS2 = -0.5493061443340549;  // -atanh(0.5)

// Pairs closer than this are redrawn (same rule as exactly coincident pairs).
// |w| = s1/|x2-x1|, so the floor caps the weight magnitude and with it the
// spectral radius of the coefficient ODE.
inline constexpr double kMinPairSeparation = 0.03;

CollocationSet sample_collocation(int d, int n_points, double alpha, double q,
                                  RngHandle& rng,
                                  std::optional<double> box_extent = std::nullopt);

FeatureBank sample_weights_agnostic(const CollocationSet& points, int neurons,
                                    RngHandle& rng,
                                    double s1 = kDefaultS1, double s2 = kDefaultS2,
                                    double alpha = 0.5,
                                    double min_separation = kMinPairSeparation);

// Data-driven variant: candidate pairs are scored by
// |probe(x2)-probe(x1)| / |x2-x1| and selected with probability proportional
// to the score over a pool of 50*M random pairs. A constant probe falls back
// to agnostic sampling.
FeatureBank sample_weights_driven(const CollocationSet& points, int neurons,
                                  const std::function<double(const Eigen::VectorXd&)>& probe,
                                  RngHandle& rng,
                                  double s1 = kDefaultS1, double s2 = kDefaultS2,
                                  double alpha = 0.5,
                                  double min_separation = kMinPairSeparation);

DimensionSubset sample_dimension_subset(int d, int m, SubsetScheme scheme,
                                        RngHandle& rng,
                                        const std::vector<double>& probs = {});

} // namespace sdfsnn

#endif
