#include "sdfsnn/reduction.hpp"

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "sdfsnn/errors.hpp"

namespace sdfsnn {

ReducedBasis build_reduced_basis(const FeatureTables& tables, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw ConfigError("build_reduced_basis: svd threshold must lie in (0, 1)");
    if (!tables.psi.allFinite())
        throw NumericalError("build_reduced_basis: feature matrix contains non-finite entries");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(tables.psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = eps * sv[0];

    Eigen::Index r = 0;
    while (r < sv.size() && sv[r] >= cutoff) ++r;
    if (r == 0)
        throw NumericalError("build_reduced_basis: all singular values below threshold");

    ReducedBasis basis;
    basis.svd_threshold = eps;
    basis.v_r = svd.matrixU().leftCols(r);
    basis.sing_vals = sv.head(r);
    basis.psi_r.noalias() = basis.v_r.transpose() * tables.psi;
    basis.pinv_psi_r = pseudo_inverse(basis.psi_r, basis.sing_vals);
    return basis;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& psi_r,
                               const Eigen::VectorXd& sing_vals) {
    if (sing_vals.size() == 0 || sing_vals[sing_vals.size() - 1] < 1e-300)
        throw NumericalError("pseudo_inverse: singular value below machine-safe floor");
    // psi_r psi_r^T = diag(s^2), so pinv = psi_r^T diag(1/s^2).
    Eigen::MatrixXd pinv = psi_r.transpose();
    for (Eigen::Index i = 0; i < sing_vals.size(); ++i)
        pinv.col(i) /= sing_vals[i] * sing_vals[i];
    return pinv;
}

GramMatrix build_gram(const ReducedBasis& basis, const CollocationSet& x,
                      const EnvelopeSpec& spec) {
    if ((x.quad_weights.array() <= 0.0).any())
        throw ConfigError("build_gram: quadrature weights must be strictly positive");

    const Eigen::Index n_pts = x.size();
    // Mass weights w_n rho(x_n)^2 assembled in log space: for the envelope
    // density with q = 2 the exponentials cancel exactly, and at large d the
    // direct product would overflow/underflow.
    Eigen::VectorXd mass_w(n_pts);
    for (Eigen::Index n = 0; n < n_pts; ++n) {
        double log_mw = x.log_quad_weights[n];
        if (spec.mode == EnvelopeMode::DeEnveloped)
            log_mw -= 2.0 * spec.alpha * x.points.row(n).squaredNorm();
        mass_w[n] = std::exp(log_mw);
    }

    GramMatrix gram;
    gram.g.noalias() = basis.psi_r * mass_w.asDiagonal() * basis.psi_r.transpose();
    gram.g = 0.5 * (gram.g + gram.g.transpose()).eval();

    // Definiteness is certified on the sigma-scaled form S = Vh diag(mw) Vh^T
    // with orthonormal rows Vh = diag(1/sigma) psi_r. G = diag(sigma) S
    // diag(sigma), so lambda_min(G) >= sigma_r^2 lambda_min(S); equality holds
    // when the mass weights are constant (the q = 2 envelope case, where
    // S = const * I). The direct eigenvalues of G fall below double-precision
    // resolution whenever (sigma_r/sigma_1)^2 < machine epsilon, while S stays
    // well conditioned.
    Eigen::MatrixXd scaled = basis.psi_r;
    for (Eigen::Index i = 0; i < basis.rank(); ++i) scaled.row(i) /= basis.sing_vals[i];
    Eigen::MatrixXd s_mat = scaled * mass_w.asDiagonal() * scaled.transpose();
    s_mat = 0.5 * (s_mat + s_mat.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s_mat, Eigen::EigenvaluesOnly);
    const double s_min = eig.eigenvalues().minCoeff();
    if (!(s_min > 0.0))
        throw NumericalError("build_gram: Gram matrix is not positive definite "
                             "(bad quadrature or rank deficiency)");
    const double sigma_r = basis.sing_vals[basis.rank() - 1];
    gram.min_eig = sigma_r * sigma_r * s_min;
    return gram;
}

} // namespace sdfsnn
