#include "sdfsnn/reference.hpp"

#include <chrono>
#include <cmath>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/fft.hpp"
#include "sdfsnn/kernels.hpp"

namespace sdfsnn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr long kGridCellCap = 16777216;  // 256^3

double grid_mass(const Eigen::VectorXcd& field, double cell_volume) {
    Eigen::VectorXd buf(field.size());
    const Eigen::Index n = field.size();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) buf[i] = std::norm(field[i]);
    return kernels::ordered_sum(buf) * cell_volume;
}

// Largest |psi| over the boundary faces of the grid.
double boundary_max(const Eigen::VectorXcd& field, int n, int ndim) {
    double mx = 0.0;
    const long total = field.size();
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        bool on_boundary = false;
        for (int a = 0; a < ndim; ++a) {
            const int coord = static_cast<int>(rem % n);
            rem /= n;
            if (coord == 0 || coord == n - 1) {
                on_boundary = true;
                break;
            }
        }
        if (on_boundary) mx = std::max(mx, std::abs(field[idx]));
    }
    return mx;
}

// Multiply by the exact kinetic-flow phase exp(-i k^2 tau / 2) in Fourier
// space, separable across axes.
void kinetic_phase(Eigen::VectorXcd& field_hat, const TsspGrid& grid, double tau) {
    const int n = grid.n_per_axis;
    Eigen::VectorXd ksq(n);
    for (int i = 0; i < n; ++i) {
        const int f = (i < n / 2) ? i : i - n;
        const double k = kPi * f / grid.extent;
        ksq[i] = k * k;
    }
    const long total = field_hat.size();
    const int ndim = grid.d_ref;
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        double k2 = 0.0;
        for (int a = 0; a < ndim; ++a) {
            k2 += ksq[static_cast<int>(rem % n)];
            rem /= n;
        }
        const double phase = -0.5 * k2 * tau;
        field_hat[idx] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

} // namespace

std::complex<double> analytic_ground_state(const Eigen::VectorXd& gammas,
                                           const Eigen::VectorXd& x, double t) {
    double amp_log = 0.0, quad = 0.0, e0 = 0.0;
    for (Eigen::Index j = 0; j < gammas.size(); ++j) {
        if (!(gammas[j] > 0.0))
            throw ConfigError("analytic_ground_state: trap frequencies must be positive");
        amp_log += 0.25 * std::log(gammas[j] / kPi);
        quad += 0.5 * gammas[j] * x[j] * x[j];
        e0 += 0.5 * gammas[j];
    }
    const double amp = std::exp(amp_log - quad);
    const double phase = -e0 * t;
    return amp * std::complex<double>(std::cos(phase), std::sin(phase));
}

Eigen::VectorXd tssp_axis_coords(const TsspGrid& grid) {
    Eigen::VectorXd x(grid.n_per_axis);
    for (int i = 0; i < grid.n_per_axis; ++i) x[i] = -grid.extent + i * grid.dx();
    return x;
}

Eigen::VectorXd tssp_potential(const TsspGrid& grid, const GpeProblem& problem) {
    const Eigen::VectorXd ax = tssp_axis_coords(grid);
    const int n = grid.n_per_axis;
    const long total = grid.total();
    Eigen::VectorXd pot(total);
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        double v = 0.0;
        for (int a = 0; a < grid.d_ref; ++a) {
            const double x = ax[static_cast<int>(rem % n)];
            rem /= n;
            const double g = problem.gammas[a];
            v += 0.5 * g * g * x * x;
        }
        pot[idx] = v;
    }
    return pot;
}

Eigen::VectorXcd tssp_initial_field(const TsspGrid& grid, const GpeProblem& problem) {
    if (!problem.initial_psi0)
        throw ConfigError("tssp_initial_field: problem has no initial data");
    const Eigen::VectorXd ax = tssp_axis_coords(grid);
    const int n = grid.n_per_axis;
    const long total = grid.total();
    Eigen::VectorXcd field(total);
    Eigen::VectorXd x(grid.d_ref);
#pragma omp parallel for schedule(static) firstprivate(x)
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int a = 0; a < grid.d_ref; ++a) {
            x[a] = ax[static_cast<int>(rem % n)];
            rem /= n;
        }
        field[idx] = problem.initial_psi0(x);
    }
    return field;
}

TsspResult tssp_evolve(const TsspGrid& grid, const GpeProblem& problem,
                       const Eigen::VectorXcd& psi0, double t_final,
                       const std::vector<double>& snapshot_times) {
    if (!is_power_of_two(grid.n_per_axis))
        throw ConfigError("tssp_evolve: points per axis must be a power of two");
    if (grid.d_ref < 1 || grid.d_ref > 3)
        throw ConfigError("tssp_evolve: reference dimension must be 1, 2 or 3");
    if (grid.total() > kGridCellCap)
        throw ConfigError("tssp_evolve: grid exceeds the desk memory cap (256^3 cells)");
    if (psi0.size() != grid.total())
        throw ConfigError("tssp_evolve: initial field does not match the grid");
    if (problem.dim() < grid.d_ref)
        throw ConfigError("tssp_evolve: problem dimension smaller than the grid dimension");

    const double boundary0 = boundary_max(psi0, grid.n_per_axis, grid.d_ref);
    if (boundary0 > 1e-12)
        throw NumericalError("tssp_evolve: initial data does not vanish at the domain "
                             "boundary; enlarge the extent L");

    // Resolution check: spectral tail of psi0 must be negligible.
    {
        Eigen::VectorXcd hat = psi0;
        fft_all_axes(hat, grid.n_per_axis, grid.d_ref, false);
        const double peak = hat.cwiseAbs().maxCoeff();
        double tail = 0.0;
        const int n = grid.n_per_axis;
        for (long idx = 0; idx < grid.total(); ++idx) {
            long rem = idx;
            bool high = false;
            for (int a = 0; a < grid.d_ref; ++a) {
                const int i = static_cast<int>(rem % n);
                rem /= n;
                const int f = std::abs((i < n / 2) ? i : i - n);
                if (f >= (3 * n) / 8) high = true;  // top quarter of the band
            }
            if (high) tail = std::max(tail, std::abs(hat[idx]));
        }
        if (tail > 1e-10 * peak)
            throw NumericalError("tssp_evolve: grid does not resolve the initial data "
                                 "(spectral tail above 1e-10)");
    }

    const double cell = std::pow(grid.dx(), grid.d_ref);
    const Eigen::VectorXd pot = tssp_potential(grid, problem);

    TsspResult result;
    Eigen::VectorXcd field = psi0;
    const double mass0 = grid_mass(field, cell);

    std::vector<double> targets = snapshot_times;
    std::sort(targets.begin(), targets.end());
    if (targets.empty() || std::abs(targets.back() - t_final) > 1e-12)
        targets.push_back(t_final);

    auto record = [&](double ts) {
        result.snapshot_times.push_back(ts);
        result.snapshots.push_back(field);
        result.mass_drift_max =
            std::max(result.mass_drift_max, std::abs(grid_mass(field, cell) - mass0));
        if (boundary_max(field, grid.n_per_axis, grid.d_ref) > 1e-8)
            throw NumericalError("tssp_evolve: boundary leakage detected; enlarge L");
    };

    record(0.0);
    if (t_final <= 0.0) return result;

    double t = 0.0;
    for (double target : targets) {
        const double seg = target - t;
        if (seg <= 1e-13) {
            if (target > 0.0) record(target);
            continue;
        }
        const long n_steps = std::max<long>(1, std::lround(seg / grid.dt));
        const double dt = seg / double(n_steps);
        for (long s = 0; s < n_steps; ++s) {
            fft_all_axes(field, grid.n_per_axis, grid.d_ref, false);
            kinetic_phase(field, grid, 0.5 * dt);
            fft_all_axes(field, grid.n_per_axis, grid.d_ref, true);
            kernels::phase_multiply(field, pot, problem.beta_d, dt);
            fft_all_axes(field, grid.n_per_axis, grid.d_ref, false);
            kinetic_phase(field, grid, 0.5 * dt);
            fft_all_axes(field, grid.n_per_axis, grid.d_ref, true);
        }
        t = target;
        record(target);
    }
    return result;
}

double time_tssp_run(const TsspGrid& grid, const GpeProblem& problem, double t_final) {
    Eigen::VectorXcd psi0 = tssp_initial_field(grid, problem);
    // Warm the transform plans so setup cost is not measured.
    Eigen::VectorXcd warm = psi0;
    fft_all_axes(warm, grid.n_per_axis, grid.d_ref, false);
    fft_all_axes(warm, grid.n_per_axis, grid.d_ref, true);

    const auto start = std::chrono::steady_clock::now();
    (void)tssp_evolve(grid, problem, psi0, t_final, {});
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

std::vector<BenchRow> runtime_scaling_bench(const std::vector<int>& tssp_dims,
                                            const std::vector<int>& sdfsnn_dims,
                                            const TsspGrid& base_grid, double t_final,
                                            const std::function<GpeProblem(int)>& problem_for_dim,
                                            const std::function<double(int)>& sdfsnn_timer) {
    std::vector<BenchRow> rows;
    for (int d : tssp_dims) {
        BenchRow row{"tssp", d, 0.0, ""};
        if (d > 3) {
            row.note = "skipped: tssp desk cap is d <= 3";
        } else {
            TsspGrid grid = base_grid;
            grid.d_ref = d;
            if (grid.total() > kGridCellCap) {
                row.note = "skipped: memory cap exceeded";
            } else {
                row.seconds = time_tssp_run(grid, problem_for_dim(d), t_final);
            }
        }
        rows.push_back(row);
    }
    for (int d : sdfsnn_dims)
        rows.push_back({"sdfsnn", d, sdfsnn_timer(d), ""});
    return rows;
}

} // namespace sdfsnn
