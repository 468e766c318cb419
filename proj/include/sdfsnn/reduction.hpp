#ifndef SDFSNN_REDUCTION_HPP
#define SDFSNN_REDUCTION_HPP

#include <Eigen/Dense>

#include "sdfsnn/features.hpp"

namespace sdfsnn {

// SVD-orthogonalized basis. With psi = V_r S_r U_r^T (truncated at
// sing_vals[i] >= eps * sing_vals[0], ties kept), the reduced feature matrix
// is psi_r = V_r^T psi, whose rows are orthogonal on the collocation set and
// whose condition number is bounded by 1/eps. Any augmented derivative table
// reduces by the same left factor: reduce(T) = V_r^T T.
struct ReducedBasis {
    Eigen::MatrixXd v_r;         // (M+1) x r, left singular vectors
    Eigen::MatrixXd psi_r;       // r x N_c
    Eigen::VectorXd sing_vals;   // r, descending
    Eigen::MatrixXd pinv_psi_r;  // N_c x r
    double svd_threshold = 1e-10;

    Eigen::Index rank() const { return sing_vals.size(); }

    Eigen::MatrixXd reduce(const Eigen::MatrixXd& augmented_table) const {
        return v_r.transpose() * augmented_table;
    }

    // Reduced features at arbitrary points (columns of a raw augmented
    // feature matrix produced by eval_features_at).
    Eigen::MatrixXd reduce_features(const Eigen::MatrixXd& psi_at) const {
        return v_r.transpose() * psi_at;
    }
};

// Quadrature Gram matrix of the physical (envelope-weighted) reduced basis:
// g_{kj} = sum_n w_n rho(x_n)^2 psi_r(k, n) psi_r(j, n). Symmetric positive
// definite; fixed for the whole evolution and defining the discrete mass
// C G C^*.
struct GramMatrix {
    Eigen::MatrixXd g;
    double min_eig = 0.0;
};

ReducedBasis build_reduced_basis(const FeatureTables& tables, double eps);

// Moore-Penrose pseudo-inverse of psi_r from the diagonal structure,
// pinv = psi_r^T (psi_r psi_r^T)^{-1}. Called by build_reduced_basis; exposed
// for the conditioning error path and direct tests.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& psi_r,
                               const Eigen::VectorXd& sing_vals);

GramMatrix build_gram(const ReducedBasis& basis, const CollocationSet& x,
                      const EnvelopeSpec& spec);

} // namespace sdfsnn

#endif
