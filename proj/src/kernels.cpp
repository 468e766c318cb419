#include "sdfsnn/kernels.hpp"

#include <cmath>

namespace sdfsnn::kernels {

namespace serial {

void tanh_table(const MatrixXd& z, MatrixXd& out) {
    out.resize(z.rows(), z.cols());
    for (Eigen::Index n = 0; n < z.cols(); ++n)
        for (Eigen::Index m = 0; m < z.rows(); ++m)
            out(m, n) = std::tanh(z(m, n));
}

void sigma_prime_table(const MatrixXd& tanh_z, MatrixXd& out) {
    out.resize(tanh_z.rows(), tanh_z.cols());
    for (Eigen::Index n = 0; n < tanh_z.cols(); ++n)
        for (Eigen::Index m = 0; m < tanh_z.rows(); ++m) {
            const double t = tanh_z(m, n);
            out(m, n) = 1.0 - t * t;
        }
}

void sigma_second_table(const MatrixXd& tanh_z, MatrixXd& out) {
    out.resize(tanh_z.rows(), tanh_z.cols());
    for (Eigen::Index n = 0; n < tanh_z.cols(); ++n)
        for (Eigen::Index m = 0; m < tanh_z.rows(); ++m) {
            const double t = tanh_z(m, n);
            out(m, n) = -2.0 * t * (1.0 - t * t);
        }
}

void row_scaled_table(const VectorXd& scale, const MatrixXd& table, MatrixXd& out) {
    out.resize(table.rows(), table.cols());
    for (Eigen::Index n = 0; n < table.cols(); ++n)
        for (Eigen::Index m = 0; m < table.rows(); ++m)
            out(m, n) = scale[m] * table(m, n);
}

void scaled_action(const VectorXd& coeff_re, const VectorXd& coeff_im,
                   const VectorXd& scale, const MatrixXd& table,
                   VectorXcd& out) {
    const Eigen::Index rows = table.rows(), cols = table.cols();
    out.resize(cols);
    for (Eigen::Index n = 0; n < cols; ++n) {
        double re = 0.0, im = 0.0;
        for (Eigen::Index m = 0; m < rows; ++m) {
            const double v = scale[m] * table(m, n);
            re += coeff_re[m] * v;
            im += coeff_im[m] * v;
        }
        out[n] = std::complex<double>(re, im);
    }
}

void phase_multiply(VectorXcd& psi, const VectorXd& pot, double beta, double dt) {
    for (Eigen::Index n = 0; n < psi.size(); ++n) {
        const double phase = -(pot[n] + beta * std::norm(psi[n])) * dt;
        psi[n] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
}

} // namespace serial

void tanh_table(const MatrixXd& z, MatrixXd& out) {
    out.resize(z.rows(), z.cols());
    const Eigen::Index rows = z.rows(), cols = z.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < cols; ++n)
        for (Eigen::Index m = 0; m < rows; ++m)
            out(m, n) = std::tanh(z(m, n));
}

void sigma_prime_table(const MatrixXd& tanh_z, MatrixXd& out) {
    out.resize(tanh_z.rows(), tanh_z.cols());
    const Eigen::Index rows = tanh_z.rows(), cols = tanh_z.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < cols; ++n)
        for (Eigen::Index m = 0; m < rows; ++m) {
            const double t = tanh_z(m, n);
            out(m, n) = 1.0 - t * t;
        }
}

void sigma_second_table(const MatrixXd& tanh_z, MatrixXd& out) {
    out.resize(tanh_z.rows(), tanh_z.cols());
    const Eigen::Index rows = tanh_z.rows(), cols = tanh_z.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < cols; ++n)
        for (Eigen::Index m = 0; m < rows; ++m) {
            const double t = tanh_z(m, n);
            out(m, n) = -2.0 * t * (1.0 - t * t);
        }
}

void row_scaled_table(const VectorXd& scale, const MatrixXd& table, MatrixXd& out) {
    out.resize(table.rows(), table.cols());
    const Eigen::Index rows = table.rows(), cols = table.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < cols; ++n)
        for (Eigen::Index m = 0; m < rows; ++m)
            out(m, n) = scale[m] * table(m, n);
}

void scaled_action(const VectorXd& coeff_re, const VectorXd& coeff_im,
                   const VectorXd& scale, const MatrixXd& table,
                   VectorXcd& out) {
    const Eigen::Index rows = table.rows(), cols = table.cols();
    out.resize(cols);
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < cols; ++n) {
        double re = 0.0, im = 0.0;
        for (Eigen::Index m = 0; m < rows; ++m) {
            const double v = scale[m] * table(m, n);
            re += coeff_re[m] * v;
            im += coeff_im[m] * v;
        }
        out[n] = std::complex<double>(re, im);
    }
}

void phase_multiply(VectorXcd& psi, const VectorXd& pot, double beta, double dt) {
    const Eigen::Index n_pts = psi.size();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < n_pts; ++n) {
        const double phase = -(pot[n] + beta * std::norm(psi[n])) * dt;
        psi[n] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
}

double ordered_sum(const VectorXd& buf) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < buf.size(); ++n) acc += buf[n];
    return acc;
}

} // namespace sdfsnn::kernels
