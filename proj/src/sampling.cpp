#include "sdfsnn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "sdfsnn/errors.hpp"

namespace sdfsnn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Weight/bias for one neuron from a point pair, per the anchor construction:
// w = s1*(x2-x1)/|x2-x1|^2, b = -<w,x1> + s2.
void pair_to_neuron(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                    double s1, double s2,
                    Eigen::VectorXd& w_out, double& b_out) {
    const Eigen::VectorXd diff = x2 - x1;
    const double nrm2 = diff.squaredNorm();
    w_out = (s1 / nrm2) * diff;
    b_out = -w_out.dot(x1) + s2;
}

} // namespace

CollocationSet sample_collocation(int d, int n_points, double alpha, double q,
                                  RngHandle& rng,
                                  std::optional<double> box_extent) {
    if (d < 1) throw ConfigError("sample_collocation: dimension must be >= 1");
    if (n_points < 1) throw ConfigError("sample_collocation: need at least one point");
    if (alpha <= 0.0) throw ConfigError("sample_collocation: alpha must be positive");
    if (q < 0.0) throw ConfigError("sample_collocation: density exponent q must be >= 0");

    CollocationSet out;
    out.density_exponent = q;
    out.points.resize(n_points, d);
    out.quad_weights.resize(n_points);
    out.log_quad_weights.resize(n_points);

    if (q == 0.0) {
        if (!box_extent) {
            throw ConfigError("sample_collocation: q = 0 requires a configured box extent");
        }
        const double ext = *box_extent;
        for (int n = 0; n < n_points; ++n)
            for (int j = 0; j < d; ++j)
                out.points(n, j) = rng.uniform(-ext, ext);
        // p = (2*ext)^-d on the box.
        const double log_w = d * std::log(2.0 * ext) - std::log(double(n_points));
        out.log_quad_weights.setConstant(log_w);
        out.quad_weights.setConstant(std::exp(log_w));
        return out;
    }

    // Gaussian density ~ exp(-q*alpha*|x|^2): per-coordinate variance 1/(2qa).
    const double var = 1.0 / (2.0 * q * alpha);
    const double sigma = std::sqrt(var);
    const double log_norm = -0.5 * d * std::log(kTwoPi * var); // log of density prefactor
    for (int n = 0; n < n_points; ++n) {
        double sq = 0.0;
        for (int j = 0; j < d; ++j) {
            const double x = sigma * rng.normal();
            out.points(n, j) = x;
            sq += x * x;
        }
        const double log_p = log_norm - q * alpha * sq;
        out.log_quad_weights[n] = -log_p - std::log(double(n_points));
        out.quad_weights[n] = std::exp(out.log_quad_weights[n]);
    }
    return out;
}

FeatureBank sample_weights_agnostic(const CollocationSet& points, int neurons,
                                    RngHandle& rng, double s1, double s2,
                                    double alpha, double min_separation) {
    const auto n_pts = points.size();
    if (neurons < 1) throw ConfigError("sample_weights_agnostic: need at least one neuron");
    if (n_pts < 2) throw ConfigError("sample_weights_agnostic: need at least two collocation points");

    constexpr int kRetryCap = 16;
    FeatureBank bank;
    bank.alpha = alpha;
    bank.W.resize(neurons, points.dim());
    bank.b.resize(neurons);
    for (int k = 0; k < neurons; ++k) {
        int attempt = 0;
        for (;;) {
            const auto i = static_cast<Eigen::Index>(rng.index(n_pts));
            auto j = static_cast<Eigen::Index>(rng.index(n_pts - 1));
            if (j >= i) ++j; // uniform over ordered pairs with i != j
            const Eigen::VectorXd x1 = points.points.row(i);
            const Eigen::VectorXd x2 = points.points.row(j);
            if ((x2 - x1).norm() >= min_separation) {
                Eigen::VectorXd w;
                pair_to_neuron(x1, x2, s1, s2, w, bank.b[k]);
                bank.W.row(k) = w.transpose();
                break;
            }
            if (++attempt > kRetryCap) {
                throw NumericalError("sample_weights_agnostic: repeated coincident or "
                                     "near-coincident point pairs (degenerate collocation set)");
            }
        }
    }
    return bank;
}

FeatureBank sample_weights_driven(const CollocationSet& points, int neurons,
                                  const std::function<double(const Eigen::VectorXd&)>& probe,
                                  RngHandle& rng, double s1, double s2,
                                  double alpha, double min_separation) {
    const auto n_pts = points.size();
    if (neurons < 1) throw ConfigError("sample_weights_driven: need at least one neuron");
    if (n_pts < 2) throw ConfigError("sample_weights_driven: need at least two collocation points");

    // Candidate pool of 50*M random distinct pairs, scored by the probe's
    // difference quotient.
    const int pool_size = 50 * neurons;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pool;
    std::vector<double> score(pool_size);
    pool.reserve(pool_size);

    Eigen::VectorXd probe_vals(n_pts);
    for (Eigen::Index n = 0; n < n_pts; ++n) probe_vals[n] = probe(points.points.row(n));
    if (!probe_vals.allFinite())
        throw NumericalError("sample_weights_driven: probe returned a non-finite value");

    constexpr int kRetryCap = 16;
    for (int c = 0; c < pool_size; ++c) {
        int attempt = 0;
        for (;;) {
            const auto i = static_cast<Eigen::Index>(rng.index(n_pts));
            auto j = static_cast<Eigen::Index>(rng.index(n_pts - 1));
            if (j >= i) ++j;
            const double dist = (points.points.row(j) - points.points.row(i)).norm();
            if (dist >= min_separation) {
                pool.emplace_back(i, j);
                score[c] = std::abs(probe_vals[j] - probe_vals[i]) / dist;
                break;
            }
            if (++attempt > kRetryCap)
                throw NumericalError("sample_weights_driven: repeated coincident point pairs");
        }
    }

    const double total = std::accumulate(score.begin(), score.end(), 0.0);
    if (total <= 0.0) {
        std::cerr << "[sdfsnn] warning: constant probe, falling back to data-agnostic sampling\n";
        return sample_weights_agnostic(points, neurons, rng, s1, s2, alpha, min_separation);
    }

    // Cumulative table for score-proportional selection, independent draws
    // per neuron.
    std::vector<double> cum(pool_size);
    std::partial_sum(score.begin(), score.end(), cum.begin());

    FeatureBank bank;
    bank.alpha = alpha;
    bank.W.resize(neurons, points.dim());
    bank.b.resize(neurons);
    for (int k = 0; k < neurons; ++k) {
        const double u = rng.uniform01() * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const auto c = std::min<std::ptrdiff_t>(it - cum.begin(), pool_size - 1);
        const Eigen::VectorXd x1 = points.points.row(pool[c].first);
        const Eigen::VectorXd x2 = points.points.row(pool[c].second);
        Eigen::VectorXd w;
        pair_to_neuron(x1, x2, s1, s2, w, bank.b[k]);
        bank.W.row(k) = w.transpose();
    }
    return bank;
}

DimensionSubset sample_dimension_subset(int d, int m, SubsetScheme scheme,
                                        RngHandle& rng,
                                        const std::vector<double>& probs) {
    if (m < 1 || m > d)
        throw ConfigError("sample_dimension_subset: require 1 <= m <= d");

    DimensionSubset out;
    out.scheme = scheme;
    out.ambient_dim = d;

    if (scheme == SubsetScheme::UniformWithoutReplacement) {
        // Partial Fisher-Yates over index labels.
        std::vector<int> labels(d);
        std::iota(labels.begin(), labels.end(), 0);
        for (int k = 0; k < m; ++k) {
            const auto pick = k + static_cast<int>(rng.index(d - k));
            std::swap(labels[k], labels[pick]);
        }
        out.indices.assign(labels.begin(), labels.begin() + m);
        std::sort(out.indices.begin(), out.indices.end());
        return out;
    }

    if (static_cast<int>(probs.size()) != d)
        throw ConfigError("sample_dimension_subset: horvitz-thompson needs d probabilities");
    double total = 0.0;
    for (double p : probs) {
        if (p <= 0.0) throw ConfigError("sample_dimension_subset: probabilities must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("sample_dimension_subset: probabilities must sum to 1");

    std::vector<double> cum(d);
    std::partial_sum(probs.begin(), probs.end(), cum.begin());
    out.indices.resize(m);
    out.probs.resize(m);
    for (int k = 0; k < m; ++k) {
        const double u = rng.uniform01() * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const int j = std::min<int>(static_cast<int>(it - cum.begin()), d - 1);
        out.indices[k] = j;
        out.probs[k] = probs[j];
    }
    return out;
}

} // namespace sdfsnn
