#ifndef SDFSNN_METRICS_HPP
#define SDFSNN_METRICS_HPP

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "sdfsnn/dynamics.hpp"
#include "sdfsnn/reference.hpp"

namespace sdfsnn {

// Error metrics over an evaluation set, complex moduli throughout:
//   rmae  = sqrt( sum|pred-truth| / sum|truth| )   (as printed, note the root)
//   rrmse = sqrt( sum|pred-truth|^2 / sum|truth|^2 )
//   rel_l2 = rrmse, rel_l1 = sum|pred-truth| / sum|truth|
struct ErrorReport {
    double rmae = 0.0;
    double rrmse = 0.0;
    double rel_l2 = 0.0;
    double rel_l1 = 0.0;
    long n_eval = 0;
    std::string eval_grid;
};

ErrorReport compute_errors(const Eigen::VectorXcd& pred, const Eigen::VectorXcd& truth,
                           const std::string& eval_grid = "");

struct CoefficientTrace {
    int index = 0;
    std::vector<double> t;
    std::vector<double> re;
    std::vector<double> im;
    std::vector<double> abs;
};

std::vector<CoefficientTrace> coefficient_traces(const EvolveResult& trajectory,
                                                 const std::vector<int>& indices);

// Slope of the least-squares line through (t, v) pairs.
double linear_fit_slope(const std::vector<double>& t, const std::vector<double>& v);

struct PhaseTiming {
    std::string phase;
    double seconds = 0.0;
};

// CSV emitters. All floating-point fields use "%.17g" so that seeded reruns
// are byte-identical.
void write_errors_csv(const std::string& path, const std::vector<std::pair<std::string, double>>& metrics);
void write_conservation_csv(const std::string& path, const ConservationLedger& ledger);
void write_traces_csv(const std::string& path, const std::vector<CoefficientTrace>& traces);
void write_timings_csv(const std::string& path, const std::vector<PhaseTiming>& timings);
void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

// Snapshot rows (t, x_1..x_d, Re psi, Im psi, |psi|^2) for external plotting.
void write_field_csv(const std::string& path, const std::vector<double>& times,
                     const Eigen::MatrixXd& points,
                     const std::vector<Eigen::VectorXcd>& fields);

// Versioned JSON run summary: config echo, seeds, drift maxima, error
// metrics, per-phase wall times. Missing pieces are emitted as null.
void emit_run_summary(const std::string& path, const std::string& config_json,
                      const ConservationLedger* ledger,
                      const std::vector<std::pair<std::string, ErrorReport>>& reports,
                      const std::vector<PhaseTiming>& timings);

} // namespace sdfsnn

#endif
