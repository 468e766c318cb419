#ifndef SDFSNN_REFERENCE_HPP
#define SDFSNN_REFERENCE_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "sdfsnn/dynamics.hpp"

namespace sdfsnn {

// Harmonic-oscillator ground state under the beta = 0 GPE:
//   psi(x, t) = prod_j (gamma_j/pi)^{1/4} exp(-gamma_j x_j^2 / 2) exp(-i E0 t),
//   E0 = sum_j gamma_j / 2.
std::complex<double> analytic_ground_state(const Eigen::VectorXd& gammas,
                                           const Eigen::VectorXd& x, double t);

// Truncated periodic grid [-L, L)^d for the time-splitting spectral reference.
struct TsspGrid {
    double extent = 8.0;  // half-width L
    int n_per_axis = 256; // power of two
    double dt = 1e-3;
    int d_ref = 1;        // 1, 2 or 3

    long total() const {
        long v = 1;
        for (int k = 0; k < d_ref; ++k) v *= n_per_axis;
        return v;
    }
    double dx() const { return 2.0 * extent / n_per_axis; }
};

// Flat-index grid coordinates, axis 0 fastest.
Eigen::VectorXd tssp_axis_coords(const TsspGrid& grid);
Eigen::VectorXd tssp_potential(const TsspGrid& grid, const GpeProblem& problem);
Eigen::VectorXcd tssp_initial_field(const TsspGrid& grid, const GpeProblem& problem);

struct TsspResult {
    std::vector<double> snapshot_times;
    std::vector<Eigen::VectorXcd> snapshots;
    double mass_drift_max = 0.0;
};

// Second-order Strang splitting: exact kinetic half-steps in Fourier space
// around an exact potential+nonlinear step in physical space. Both substeps
// are pointwise unitary, so grid mass is conserved to rounding.
TsspResult tssp_evolve(const TsspGrid& grid, const GpeProblem& problem,
                       const Eigen::VectorXcd& psi0, double t_final,
                       const std::vector<double>& snapshot_times);

// Wall time of a TSSP run (plan warmup excluded). Throws on the memory cap.
double time_tssp_run(const TsspGrid& grid, const GpeProblem& problem, double t_final);

struct BenchRow {
    std::string method;
    int d = 0;
    double seconds = 0.0;
    std::string note;
};

// Timing table comparing TSSP (tensor-product grid, d <= 3 desk cap) against
// SD-FSNN across dimensions; the SD-FSNN timer is supplied by the caller.
std::vector<BenchRow> runtime_scaling_bench(const std::vector<int>& tssp_dims,
                                            const std::vector<int>& sdfsnn_dims,
                                            const TsspGrid& base_grid, double t_final,
                                            const std::function<GpeProblem(int)>& problem_for_dim,
                                            const std::function<double(int)>& sdfsnn_timer);

} // namespace sdfsnn

#endif
