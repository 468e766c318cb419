#include "sdfsnn/features.hpp"

#include <cmath>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/kernels.hpp"

namespace sdfsnn {

FeatureTables eval_features(const FeatureBank& bank, const CollocationSet& x) {
    if (bank.dim() != x.dim())
        throw ConfigError("eval_features: bank dimension does not match collocation set");

    FeatureTables t;
    t.z.noalias() = bank.W * x.points.transpose();
    t.z.colwise() += bank.b;

    Eigen::MatrixXd tanh_z;
    kernels::tanh_table(t.z, tanh_z);
    kernels::sigma_prime_table(tanh_z, t.s1);
    kernels::sigma_second_table(tanh_z, t.s2);

    t.psi.resize(bank.neurons() + 1, x.size());
    t.psi.topRows(bank.neurons()) = tanh_z;
    t.psi.row(bank.neurons()).setOnes();
    return t;
}

Eigen::MatrixXd eval_features_at(const FeatureBank& bank, const Eigen::MatrixXd& pts) {
    if (bank.dim() != pts.cols())
        throw ConfigError("eval_features_at: bank dimension does not match query points");
    Eigen::MatrixXd z = bank.W * pts.transpose();
    z.colwise() += bank.b;
    Eigen::MatrixXd tanh_z;
    kernels::tanh_table(z, tanh_z);
    Eigen::MatrixXd psi(bank.neurons() + 1, pts.rows());
    psi.topRows(bank.neurons()) = tanh_z;
    psi.row(bank.neurons()).setOnes();
    return psi;
}

Eigen::MatrixXd eval_dim_first(const FeatureBank& bank, const FeatureTables& t, int j) {
    if (j < 0 || j >= bank.dim())
        throw ConfigError("eval_dim_first: dimension index out of range");
    Eigen::MatrixXd out(bank.neurons() + 1, t.size());
    Eigen::MatrixXd top;
    kernels::row_scaled_table(bank.W.col(j), t.s1, top);
    out.topRows(bank.neurons()) = top;
    out.row(bank.neurons()).setZero();
    return out;
}

std::vector<Eigen::MatrixXd> eval_first_derivatives(const FeatureBank& bank,
                                                    const FeatureTables& t) {
    std::vector<Eigen::MatrixXd> stack;
    stack.reserve(bank.dim());
    for (int j = 0; j < bank.dim(); ++j) stack.push_back(eval_dim_first(bank, t, j));
    return stack;
}

Eigen::MatrixXd eval_dim_second(const FeatureBank& bank, const FeatureTables& t, int j) {
    if (j < 0 || j >= bank.dim())
        throw ConfigError("eval_dim_second: dimension index out of range");
    const Eigen::VectorXd w_sq = bank.W.col(j).array().square();
    Eigen::MatrixXd out(bank.neurons() + 1, t.size());
    Eigen::MatrixXd top;
    kernels::row_scaled_table(w_sq, t.s2, top);
    out.topRows(bank.neurons()) = top;
    out.row(bank.neurons()).setZero();
    return out;
}

Eigen::VectorXd laplacian_scales_full(const FeatureBank& bank) {
    // Scalar accumulation in index order; the subset version with J = {0..d-1}
    // takes the identical path so the two agree bitwise.
    const Eigen::Index neurons = bank.neurons();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(neurons);
    for (int j = 0; j < bank.dim(); ++j)
        for (Eigen::Index m = 0; m < neurons; ++m)
            s[m] += bank.W(m, j) * bank.W(m, j);
    return s;
}

Eigen::VectorXd laplacian_scales_subset(const FeatureBank& bank,
                                        const DimensionSubset& subset) {
    if (subset.size() == 0)
        throw ConfigError("laplacian_scales_subset: empty dimension subset");
    if (subset.ambient_dim != bank.dim())
        throw ConfigError("laplacian_scales_subset: subset built for a different dimension");

    const Eigen::Index neurons = bank.neurons();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(neurons);
    if (subset.scheme == SubsetScheme::UniformWithoutReplacement) {
        for (int j : subset.indices)
            for (Eigen::Index m = 0; m < neurons; ++m)
                s[m] += bank.W(m, j) * bank.W(m, j);
        const double factor = double(bank.dim()) / double(subset.size());
        s *= factor;
    } else {
        for (int k = 0; k < subset.size(); ++k) {
            const int j = subset.indices[k];
            const double inv_p = 1.0 / subset.probs[k];
            for (Eigen::Index m = 0; m < neurons; ++m)
                s[m] += inv_p * bank.W(m, j) * bank.W(m, j);
        }
        s /= double(subset.size());
    }
    return s;
}

namespace {

Eigen::MatrixXd laplacian_from_scales(const Eigen::VectorXd& scales,
                                      const FeatureTables& t) {
    Eigen::MatrixXd out(t.neurons() + 1, t.size());
    Eigen::MatrixXd top;
    kernels::row_scaled_table(scales, t.s2, top);
    out.topRows(t.neurons()) = top;
    out.row(t.neurons()).setZero();
    return out;
}

} // namespace

Eigen::MatrixXd eval_laplacian_full(const FeatureBank& bank, const FeatureTables& t) {
    return laplacian_from_scales(laplacian_scales_full(bank), t);
}

Eigen::MatrixXd eval_laplacian_stochastic(const FeatureBank& bank, const FeatureTables& t,
                                          const DimensionSubset& subset) {
    return laplacian_from_scales(laplacian_scales_subset(bank, subset), t);
}

EnvelopeCorrections eval_envelope_corrections(const EnvelopeSpec& spec,
                                              const Eigen::MatrixXd& pts) {
    if (spec.alpha <= 0.0)
        throw ConfigError("eval_envelope_corrections: alpha must be positive");

    const Eigen::Index n_pts = pts.rows();
    const Eigen::Index d = pts.cols();
    EnvelopeCorrections env;

    if (spec.mode == EnvelopeMode::NoDecay) {
        env.a = Eigen::MatrixXd::Zero(d, n_pts);
        env.b_corr = Eigen::VectorXd::Zero(n_pts);
        env.rho = Eigen::VectorXd::Ones(n_pts);
        env.rho_sq = Eigen::VectorXd::Ones(n_pts);
        return env;
    }

    const double alpha = spec.alpha;
    env.a = (-2.0 * alpha) * pts.transpose();
    env.b_corr.resize(n_pts);
    env.rho.resize(n_pts);
    env.rho_sq.resize(n_pts);
    for (Eigen::Index n = 0; n < n_pts; ++n) {
        const double sq = pts.row(n).squaredNorm();
        env.b_corr[n] = 4.0 * alpha * alpha * sq - 2.0 * alpha * double(d);
        env.rho[n] = std::exp(-alpha * sq);
        env.rho_sq[n] = env.rho[n] * env.rho[n];
    }
    return env;
}

} // namespace sdfsnn
