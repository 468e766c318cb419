#include "sdfsnn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sdfsnn/errors.hpp"

namespace sdfsnn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

} // namespace

ErrorReport compute_errors(const Eigen::VectorXcd& pred, const Eigen::VectorXcd& truth,
                           const std::string& eval_grid) {
    if (pred.size() != truth.size() || pred.size() < 1)
        throw ConfigError("compute_errors: prediction/truth size mismatch or empty");

    double sum_abs_diff = 0.0, sum_abs_truth = 0.0;
    double sum_sq_diff = 0.0, sum_sq_truth = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const double ad = std::abs(pred[i] - truth[i]);
        const double at = std::abs(truth[i]);
        sum_abs_diff += ad;
        sum_abs_truth += at;
        sum_sq_diff += ad * ad;
        sum_sq_truth += at * at;
    }
    if (sum_abs_truth == 0.0)
        throw NumericalError("compute_errors: zero truth, relative metrics undefined");

    ErrorReport rep;
    rep.rmae = std::sqrt(sum_abs_diff / sum_abs_truth);
    rep.rrmse = std::sqrt(sum_sq_diff / sum_sq_truth);
    rep.rel_l2 = rep.rrmse;
    rep.rel_l1 = sum_abs_diff / sum_abs_truth;
    rep.n_eval = pred.size();
    rep.eval_grid = eval_grid;
    return rep;
}

std::vector<CoefficientTrace> coefficient_traces(const EvolveResult& trajectory,
                                                 const std::vector<int>& indices) {
    std::vector<CoefficientTrace> traces;
    if (trajectory.snapshots.empty()) return traces;
    const Eigen::Index r = trajectory.snapshots.front().rank();
    for (int idx : indices) {
        if (idx < 0 || idx >= r)
            throw ConfigError("coefficient_traces: index out of range for rank " +
                              std::to_string(r));
        CoefficientTrace tr;
        tr.index = idx;
        for (std::size_t k = 0; k < trajectory.snapshots.size(); ++k) {
            const auto& s = trajectory.snapshots[k];
            tr.t.push_back(trajectory.snapshot_times[k]);
            tr.re.push_back(s.c_re[idx]);
            tr.im.push_back(s.c_im[idx]);
            tr.abs.push_back(std::hypot(s.c_re[idx], s.c_im[idx]));
        }
        traces.push_back(std::move(tr));
    }
    return traces;
}

double linear_fit_slope(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.size() < 2)
        throw ConfigError("linear_fit_slope: need at least two samples");
    const double n = double(t.size());
    double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sv += v[i];
        stt += t[i] * t[i];
        stv += t[i] * v[i];
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw NumericalError("linear_fit_slope: degenerate abscissae");
    return (n * stv - st * sv) / denom;
}

void write_errors_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& metrics) {
    auto out = open_out(path);
    out << "metric,value\n";
    for (const auto& [name, value] : metrics) out << name << "," << fmt(value) << "\n";
}

void write_conservation_csv(const std::string& path, const ConservationLedger& ledger) {
    auto out = open_out(path);
    out << "t,N,E,E_kin,E_pot,E_int\n";
    for (std::size_t k = 0; k < ledger.mass_history.size(); ++k) {
        const auto& [t, mass] = ledger.mass_history[k];
        out << fmt(t) << "," << fmt(mass);
        if (k < ledger.energy_history.size()) {
            const auto& e = ledger.energy_history[k].second;
            out << "," << fmt(e.total) << "," << fmt(e.kinetic) << "," << fmt(e.potential)
                << "," << fmt(e.interaction);
        } else {
            out << ",,,,";
        }
        out << "\n";
    }
}

void write_traces_csv(const std::string& path, const std::vector<CoefficientTrace>& traces) {
    auto out = open_out(path);
    out << "t,index,re,im,abs\n";
    for (const auto& tr : traces)
        for (std::size_t k = 0; k < tr.t.size(); ++k)
            out << fmt(tr.t[k]) << "," << tr.index << "," << fmt(tr.re[k]) << ","
                << fmt(tr.im[k]) << "," << fmt(tr.abs[k]) << "\n";
}

void write_timings_csv(const std::string& path, const std::vector<PhaseTiming>& timings) {
    auto out = open_out(path);
    out << "phase,seconds\n";
    for (const auto& pt : timings) out << pt.phase << "," << fmt(pt.seconds) << "\n";
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    auto out = open_out(path);
    out << "method,d,seconds,note\n";
    for (const auto& r : rows)
        out << r.method << "," << r.d << "," << fmt(r.seconds) << "," << r.note << "\n";
}

void write_field_csv(const std::string& path, const std::vector<double>& times,
                     const Eigen::MatrixXd& points,
                     const std::vector<Eigen::VectorXcd>& fields) {
    if (times.size() != fields.size())
        throw ConfigError("write_field_csv: snapshot count mismatch");
    auto out = open_out(path);
    out << "t";
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << ",x" << (j + 1);
    out << ",re,im,abs2\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (fields[k].size() != points.rows())
            throw ConfigError("write_field_csv: field/point count mismatch");
        for (Eigen::Index n = 0; n < points.rows(); ++n) {
            out << fmt(times[k]);
            for (Eigen::Index j = 0; j < points.cols(); ++j) out << "," << fmt(points(n, j));
            const auto v = fields[k][n];
            out << "," << fmt(v.real()) << "," << fmt(v.imag()) << "," << fmt(std::norm(v))
                << "\n";
        }
    }
}

void emit_run_summary(const std::string& path, const std::string& config_json,
                      const ConservationLedger* ledger,
                      const std::vector<std::pair<std::string, ErrorReport>>& reports,
                      const std::vector<PhaseTiming>& timings) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    try {
        doc["config"] = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error&) {
        doc["config"] = config_json;
    }
    if (ledger) {
        doc["conservation"] = {
            {"drift_max_mass", ledger->drift_max_mass},
            {"drift_max_mass_raw", ledger->drift_max_mass_raw},
            {"drift_max_energy", ledger->drift_max_energy},
            {"max_cnorm_ratio", ledger->max_cnorm_ratio},
        };
    } else {
        doc["conservation"] = nullptr;
    }
    doc["errors"] = nlohmann::json::object();
    for (const auto& [name, rep] : reports) {
        doc["errors"][name] = {{"rmae", rep.rmae},   {"rrmse", rep.rrmse},
                               {"rel_l2", rep.rel_l2}, {"rel_l1", rep.rel_l1},
                               {"n_eval", rep.n_eval}, {"eval_grid", rep.eval_grid}};
    }
    doc["timings"] = nlohmann::json::object();
    for (const auto& pt : timings) doc["timings"][pt.phase] = pt.seconds;

    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

} // namespace sdfsnn
