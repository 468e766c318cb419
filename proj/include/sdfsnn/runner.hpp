#ifndef SDFSNN_RUNNER_HPP
#define SDFSNN_RUNNER_HPP

#include <string>
#include <vector>

#include "sdfsnn/config.hpp"
#include "sdfsnn/dynamics.hpp"
#include "sdfsnn/metrics.hpp"
#include "sdfsnn/reference.hpp"

namespace sdfsnn {

// Everything the dynamic solver needs, built once per run from the config:
// collocation sampling, frozen bank, feature tables, SVD reduction, envelope
// fields and the Gram matrix.
struct Pipeline {
    GpeProblem problem;
    CollocationSet x;
    FeatureBank bank;
    EnvelopeSpec spec;
    FeatureTables tables;
    ReducedBasis basis;
    EnvelopeCorrections env;
    GramMatrix gram;
};

std::function<std::complex<double>(const Eigen::VectorXd&)>
make_initial_data(const std::string& name, const Eigen::VectorXd& gammas);

GpeProblem make_problem(const RunConfig& config);

Pipeline build_pipeline(const RunConfig& config, RngHandle& rng);

IntegratorConfig integrator_from_config(const RunConfig& config);

// Snapshot grid: multiples of the interval plus any explicitly requested
// times, clipped to (0, t_final].
std::vector<double> snapshot_grid(double t_final, double interval,
                                  const std::vector<double>& extra);

EvolveResult run_evolution(const Pipeline& pipeline, const RunConfig& config, RngHandle& rng);

// Uniform tensor evaluation grid for low-d field output (d = 1 line, d = 2
// square); higher d falls back to envelope-density sample points.
Eigen::MatrixXd evaluation_grid(const RunConfig& config, RngHandle& rng);

// Full CLI pipeline: executes the configured mode and writes artifacts into
// config.out_dir. Throws ConfigError / NumericalError / IoError.
void run(const RunConfig& config);

} // namespace sdfsnn

#endif
