#ifndef SDFSNN_KERNELS_HPP
#define SDFSNN_KERNELS_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

// Hot elementwise/batched loops, OpenMP-parallel in the `kernels` namespace
// with serial reference twins under `kernels::serial`. The parallel versions
// partition output elements statically and never reduce across threads, so
// results are bitwise identical to the serial ones at any thread count.
// Reductions (sums over points) are done by filling a per-point buffer in
// parallel and summing it serially in index order.

namespace sdfsnn::kernels {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using VectorXcd = Eigen::VectorXcd;

namespace serial {

// psi = tanh(Z), entrywise. Z is M x N.
void tanh_table(const MatrixXd& z, MatrixXd& out);

// S1 = 1 - tanh(z)^2 from a precomputed tanh table.
void sigma_prime_table(const MatrixXd& tanh_z, MatrixXd& out);

// S2 = -2*tanh(z)*(1 - tanh(z)^2) from a precomputed tanh table.
void sigma_second_table(const MatrixXd& tanh_z, MatrixXd& out);

// out[m][n] = scale[m] * table[m][n] (per-neuron scaling of an M x N table).
void row_scaled_table(const VectorXd& scale, const MatrixXd& table, MatrixXd& out);

// action[n] = sum_m coeff[m]*scale[m]*table[m][n]; complex coefficients split
// into real/imaginary parts.
void scaled_action(const VectorXd& coeff_re, const VectorXd& coeff_im,
                   const VectorXd& scale, const MatrixXd& table,
                   VectorXcd& out);

// psi[n] *= exp(-i*(pot[n] + beta*|psi[n]|^2)*dt): the exact
// potential+nonlinear flow of the splitting scheme.
void phase_multiply(VectorXcd& psi, const VectorXd& pot, double beta, double dt);

} // namespace serial

void tanh_table(const MatrixXd& z, MatrixXd& out);
void sigma_prime_table(const MatrixXd& tanh_z, MatrixXd& out);
void sigma_second_table(const MatrixXd& tanh_z, MatrixXd& out);
void row_scaled_table(const VectorXd& scale, const MatrixXd& table, MatrixXd& out);
void scaled_action(const VectorXd& coeff_re, const VectorXd& coeff_im,
                   const VectorXd& scale, const MatrixXd& table,
                   VectorXcd& out);
void phase_multiply(VectorXcd& psi, const VectorXd& pot, double beta, double dt);

// Deterministic sum of a buffer in index order (used after parallel fills).
double ordered_sum(const VectorXd& buf);

} // namespace sdfsnn::kernels

#endif
