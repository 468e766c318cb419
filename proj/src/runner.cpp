#include "sdfsnn/runner.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sdfsnn/errors.hpp"
#include "sdfsnn/static_solver.hpp"

namespace sdfsnn {

namespace {

namespace fs = std::filesystem;

constexpr double kPi = 3.141592653589793238462643383279;

class PhaseClock {
public:
    void start() { t0_ = std::chrono::steady_clock::now(); }
    void stop(const std::string& phase) {
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        timings_.push_back({phase, s});
    }
    const std::vector<PhaseTiming>& timings() const { return timings_; }

private:
    std::chrono::steady_clock::time_point t0_;
    std::vector<PhaseTiming> timings_;
};

std::string out_path(const RunConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
}

void dump_basis_snapshot(const std::string& path, const CollocationSet& x,
                         const FeatureBank& bank) {
    nlohmann::json doc;
    doc["alpha"] = bank.alpha;
    doc["points"] = std::vector<std::vector<double>>();
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        std::vector<double> row(x.dim());
        for (Eigen::Index j = 0; j < x.dim(); ++j) row[j] = x.points(n, j);
        doc["points"].push_back(row);
    }
    doc["quad_weights"] = std::vector<double>(x.quad_weights.data(),
                                              x.quad_weights.data() + x.size());
    doc["W"] = std::vector<std::vector<double>>();
    for (Eigen::Index m = 0; m < bank.neurons(); ++m) {
        std::vector<double> row(bank.dim());
        for (Eigen::Index j = 0; j < bank.dim(); ++j) row[j] = bank.W(m, j);
        doc["W"].push_back(row);
    }
    doc["b"] = std::vector<double>(bank.b.data(), bank.b.data() + bank.neurons());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write basis dump: " + path);
    out << doc.dump(2) << "\n";
}

void dump_spectrum(const std::string& path, const ReducedBasis& basis) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write spectrum dump: " + path);
    out << "index,sigma\n";
    for (Eigen::Index i = 0; i < basis.rank(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", basis.sing_vals[i]);
        out << i << "," << buf << "\n";
    }
}

// Per-snapshot error series against a reference field set.
struct ErrorSeries {
    std::vector<double> t;
    std::vector<double> rel_l2;
    ErrorReport aggregate;
};

ErrorSeries compare_fields(const std::vector<double>& times,
                           const std::vector<Eigen::VectorXcd>& pred,
                           const std::vector<Eigen::VectorXcd>& truth,
                           const std::string& grid_desc) {
    if (pred.size() != truth.size() || pred.empty())
        throw ConfigError("compare_fields: snapshot count mismatch");
    ErrorSeries series;
    const Eigen::Index n = pred.front().size();
    Eigen::VectorXcd all_pred(n * Eigen::Index(pred.size()));
    Eigen::VectorXcd all_truth(n * Eigen::Index(pred.size()));
    for (std::size_t k = 0; k < pred.size(); ++k) {
        series.t.push_back(times[k]);
        series.rel_l2.push_back(compute_errors(pred[k], truth[k], grid_desc).rel_l2);
        all_pred.segment(Eigen::Index(k) * n, n) = pred[k];
        all_truth.segment(Eigen::Index(k) * n, n) = truth[k];
    }
    series.aggregate = compute_errors(all_pred, all_truth, grid_desc);
    return series;
}

void write_error_series_csv(const std::string& path, const ErrorSeries& series) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t,rel_l2\n";
    char buf[40];
    for (std::size_t k = 0; k < series.t.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.t[k]);
        out << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", series.rel_l2[k]);
        out << buf << "\n";
    }
}

} // namespace

std::function<std::complex<double>(const Eigen::VectorXd&)>
make_initial_data(const std::string& name, const Eigen::VectorXd& gammas) {
    if (name == "ground_state") {
        Eigen::VectorXd g = gammas;
        return [g](const Eigen::VectorXd& x) {
            double log_amp = 0.0, quad = 0.0;
            for (Eigen::Index j = 0; j < g.size(); ++j) {
                log_amp += 0.25 * std::log(g[j] / kPi);
                quad += 0.5 * g[j] * x[j] * x[j];
            }
            return std::complex<double>(std::exp(log_amp - quad), 0.0);
        };
    }
    throw ConfigError("unknown initial data: " + name);
}

GpeProblem make_problem(const RunConfig& config) {
    GpeProblem problem;
    problem.gammas = Eigen::Map<const Eigen::VectorXd>(config.gammas.data(),
                                                       Eigen::Index(config.gammas.size()));
    problem.beta_d = config.resolved_beta_d();
    problem.beta = config.beta.value_or(problem.beta_d);
    problem.n_orig = config.n_orig.value_or(config.d);
    problem.initial_psi0 = make_initial_data(config.psi0, problem.gammas);
    return problem;
}

Pipeline build_pipeline(const RunConfig& config, RngHandle& rng) {
    Pipeline p;
    p.problem = make_problem(config);
    RngHandle rng_points = rng.fork(1);
    RngHandle rng_bank = rng.fork(2);
    p.x = sample_collocation(config.d, config.collocation, config.alpha, config.q, rng_points,
                             config.box_extent);
    p.bank = sample_weights_agnostic(p.x, config.neurons, rng_bank, kDefaultS1, kDefaultS2,
                                     config.alpha);
    p.spec.alpha = config.alpha;
    p.spec.mode = config.decay_envelope ? EnvelopeMode::DeEnveloped : EnvelopeMode::NoDecay;
    p.tables = eval_features(p.bank, p.x);
    p.basis = build_reduced_basis(p.tables, config.svd_eps);
    p.env = eval_envelope_corrections(p.spec, p.x.points);
    p.gram = build_gram(p.basis, p.x, p.spec);
    return p;
}

IntegratorConfig integrator_from_config(const RunConfig& config) {
    IntegratorConfig ic;
    ic.scheme = (config.scheme == "midpoint") ? OdeScheme::ImplicitMidpoint
                                              : OdeScheme::AdaptiveRk45;
    ic.rtol = config.rtol;
    ic.atol = config.atol;
    ic.dt_init = config.dt_init;
    ic.dt_max = config.dt_max;
    ic.dt = config.dt;
    ic.newton_tol = config.newton_tol;
    ic.newton_cap = config.newton_cap;
    if (config.subset_policy == "per-stage")
        ic.subset_policy = SubsetPolicy::ResamplePerStage;
    else if (config.subset_policy == "fixed")
        ic.subset_policy = SubsetPolicy::Fixed;
    else
        ic.subset_policy = SubsetPolicy::ResamplePerStep;
    ic.subset_size = config.subset_size;
    ic.project_mass = config.project_mass;
    return ic;
}

std::vector<double> snapshot_grid(double t_final, double interval,
                                  const std::vector<double>& extra) {
    std::vector<double> times;
    if (t_final > 0.0 && interval > 0.0) {
        for (double t = interval; t < t_final + 1e-12; t += interval)
            times.push_back(std::min(t, t_final));
    }
    for (double t : extra)
        if (t > 0.0 && t <= t_final + 1e-12) times.push_back(std::min(t, t_final));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                times.end());
    return times;
}

EvolveResult run_evolution(const Pipeline& pipeline, const RunConfig& config, RngHandle& rng) {
    const IntegratorConfig ic = integrator_from_config(config);
    const std::vector<double> snaps =
        snapshot_grid(config.t_final, config.snapshot_interval, config.field_times);
    RngHandle rng_evolve = rng.fork(3);
    return evolve(pipeline.problem, pipeline.bank, pipeline.x, pipeline.tables, pipeline.basis,
                  pipeline.env, pipeline.spec, pipeline.gram, ic, config.t_final, snaps,
                  rng_evolve);
}

Eigen::MatrixXd evaluation_grid(const RunConfig& config, RngHandle& rng) {
    const int d = config.d;
    if (d == 1) {
        const int n = config.field_grid_points;
        Eigen::MatrixXd pts(n, 1);
        const double l = config.field_grid_extent;
        for (int i = 0; i < n; ++i) pts(i, 0) = -l + 2.0 * l * i / (n - 1);
        return pts;
    }
    if (d == 2) {
        const int n = std::min(config.field_grid_points, 128);
        Eigen::MatrixXd pts(n * n, 2);
        const double l = config.field_grid_extent;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                pts(i * n + j, 0) = -l + 2.0 * l * i / (n - 1);
                pts(i * n + j, 1) = -l + 2.0 * l * j / (n - 1);
            }
        return pts;
    }
    // d >= 3: envelope-density sample points.
    RngHandle grid_rng = rng.fork(0xE7A1);
    const CollocationSet s = sample_collocation(d, 10000, config.alpha,
                                                std::max(config.q, 1.0), grid_rng);
    return s.points;
}

namespace {

void run_evolve_mode(const RunConfig& config) {
    PhaseClock clock;
    RngHandle rng(config.seed);

    clock.start();
    Pipeline pipeline = build_pipeline(config, rng);
    clock.stop("setup");

    if (config.dump_basis) dump_basis_snapshot(*config.dump_basis, pipeline.x, pipeline.bank);
    if (config.dump_spectrum) dump_spectrum(*config.dump_spectrum, pipeline.basis);

    clock.start();
    EvolveResult result = run_evolution(pipeline, config, rng);
    clock.stop("evolve");

    clock.start();
    write_conservation_csv(out_path(config, "conservation.csv"), result.ledger);
    if (!config.trace_indices.empty()) {
        write_traces_csv(out_path(config, "traces.csv"),
                         coefficient_traces(result, config.trace_indices));
    }

    // Field snapshots and reference comparison on the evaluation grid.
    RngHandle grid_rng(config.seed, 0x9B1D);
    const Eigen::MatrixXd grid = evaluation_grid(config, grid_rng);
    std::vector<Eigen::VectorXcd> fields;
    for (const auto& state : result.snapshots)
        fields.push_back(reconstruct(state, pipeline.bank, pipeline.basis, pipeline.spec, grid));
    if (!config.field_times.empty() || config.d <= 2) {
        std::vector<double> sel_times;
        std::vector<Eigen::VectorXcd> sel_fields;
        const std::vector<double>& want =
            config.field_times.empty() ? result.snapshot_times : config.field_times;
        for (std::size_t k = 0; k < result.snapshot_times.size(); ++k) {
            for (double w : want)
                if (std::abs(result.snapshot_times[k] - w) < 1e-9) {
                    sel_times.push_back(result.snapshot_times[k]);
                    sel_fields.push_back(fields[k]);
                    break;
                }
        }
        if (!sel_times.empty())
            write_field_csv(out_path(config, "field.csv"), sel_times, grid, sel_fields);
    }

    std::vector<std::pair<std::string, ErrorReport>> reports;
    std::vector<std::pair<std::string, double>> error_rows;
    const double beta_d = pipeline.problem.beta_d;
    if (beta_d == 0.0) {
        // Analytic harmonic-oscillator oracle.
        std::vector<Eigen::VectorXcd> truth;
        for (double t : result.snapshot_times) {
            Eigen::VectorXcd v(grid.rows());
            for (Eigen::Index n = 0; n < grid.rows(); ++n)
                v[n] = analytic_ground_state(pipeline.problem.gammas, grid.row(n), t);
            truth.push_back(v);
        }
        const ErrorSeries series =
            compare_fields(result.snapshot_times, fields, truth, "uniform grid vs analytic");
        write_error_series_csv(out_path(config, "error_series.csv"), series);
        reports.emplace_back("vs_analytic", series.aggregate);
    } else if (config.d <= 2) {
        TsspGrid grid_ref;
        grid_ref.extent = config.ref_extent;
        grid_ref.n_per_axis = config.ref_points;
        grid_ref.dt = config.ref_dt;
        grid_ref.d_ref = config.d;
        const Eigen::VectorXcd psi0 = tssp_initial_field(grid_ref, pipeline.problem);
        const TsspResult ref = tssp_evolve(grid_ref, pipeline.problem, psi0, config.t_final,
                                           result.snapshot_times);
        // Evaluate the network on the reference grid.
        Eigen::MatrixXd ref_pts(grid_ref.total(), config.d);
        const Eigen::VectorXd ax = tssp_axis_coords(grid_ref);
        for (long idx = 0; idx < grid_ref.total(); ++idx) {
            long rem = idx;
            for (int a = 0; a < config.d; ++a) {
                ref_pts(idx, a) = ax[static_cast<int>(rem % grid_ref.n_per_axis)];
                rem /= grid_ref.n_per_axis;
            }
        }
        std::vector<Eigen::VectorXcd> pred;
        for (const auto& state : result.snapshots)
            pred.push_back(
                reconstruct(state, pipeline.bank, pipeline.basis, pipeline.spec, ref_pts));
        const ErrorSeries series =
            compare_fields(ref.snapshot_times, pred, ref.snapshots, "tssp grid");
        write_error_series_csv(out_path(config, "error_series.csv"), series);
        reports.emplace_back("vs_tssp", series.aggregate);
    }

    for (const auto& [name, rep] : reports) {
        error_rows.emplace_back(name + "_rmae", rep.rmae);
        error_rows.emplace_back(name + "_rrmse", rep.rrmse);
        error_rows.emplace_back(name + "_rel_l2", rep.rel_l2);
        error_rows.emplace_back(name + "_rel_l1", rep.rel_l1);
    }
    error_rows.emplace_back("drift_max_mass", result.ledger.drift_max_mass);
    error_rows.emplace_back("drift_max_energy", result.ledger.drift_max_energy);
    error_rows.emplace_back("max_cnorm_ratio", result.ledger.max_cnorm_ratio);
    write_errors_csv(out_path(config, "errors.csv"), error_rows);
    clock.stop("metrics");

    write_timings_csv(out_path(config, "timings.csv"), clock.timings());
    emit_run_summary(out_path(config, "summary.json"), canonical_json(config), &result.ledger,
                     reports, clock.timings());
}

void run_static_mode(const RunConfig& config) {
    PhaseClock clock;
    RngHandle rng(config.seed);

    clock.start();
    Eigen::VectorXd gammas = Eigen::Map<const Eigen::VectorXd>(
        config.gammas.data(), Eigen::Index(config.gammas.size()));
    const MmsSpec spec = make_mms_spec(config.d, gammas, config.resolved_beta_d(),
                                       config.epsilon, config.seed);
    RngHandle rng_pts = rng.fork(1);
    const StaticProblem problem =
        make_static_problem(spec, config.collocation, config.collocation, rng_pts);
    clock.stop("setup");

    StaticSolveConfig sc;
    sc.neurons = config.neurons;
    sc.svd_eps = config.svd_eps;
    sc.boundary_weight = config.boundary_weight;
    sc.subset_size = config.subset_size;
    sc.test_factor = config.test_factor;

    clock.start();
    RngHandle rng_solve = rng.fork(2);
    const StaticReport report = solve_static(problem, sc, rng_solve);
    clock.stop("solve");

    // One-row CSV matching the published table columns.
    {
        std::ofstream out(out_path(config, "static_table.csv"));
        if (!out) throw IoError("cannot write static_table.csv");
        char l2[40], l1[40], tm[40];
        std::snprintf(l2, sizeof(l2), "%.17g", report.errors.rel_l2);
        std::snprintf(l1, sizeof(l1), "%.17g", report.errors.rel_l1);
        std::snprintf(tm, sizeof(tm), "%.6g",
                      report.setup_seconds + report.solve_seconds);
        out << "Dim,N_c,L2,L1,time_s\n";
        out << config.d << "," << config.collocation << "," << l2 << "," << l1 << "," << tm
            << "\n";
    }
    write_errors_csv(out_path(config, "errors.csv"),
                     {{"rel_l2", report.errors.rel_l2},
                      {"rel_l1", report.errors.rel_l1},
                      {"rmae", report.errors.rmae},
                      {"rrmse", report.errors.rrmse},
                      {"picard_iters", double(report.picard_iters)},
                      {"rank", double(report.rank)}});
    std::vector<PhaseTiming> timings = clock.timings();
    timings.push_back({"static_setup", report.setup_seconds});
    timings.push_back({"static_solve", report.solve_seconds});
    timings.push_back({"static_eval", report.eval_seconds});
    write_timings_csv(out_path(config, "timings.csv"), timings);
    emit_run_summary(out_path(config, "summary.json"), canonical_json(config), nullptr,
                     {{"static_mms", report.errors}}, timings);
}

void run_reference_mode(const RunConfig& config) {
    PhaseClock clock;
    clock.start();
    const GpeProblem problem = make_problem(config);
    TsspGrid grid;
    grid.extent = config.ref_extent;
    grid.n_per_axis = config.ref_points;
    grid.dt = config.ref_dt;
    grid.d_ref = config.d;
    if (config.d > 3) throw ConfigError("reference mode: TSSP desk cap is d <= 3");
    const Eigen::VectorXcd psi0 = tssp_initial_field(grid, problem);
    const std::vector<double> snaps =
        snapshot_grid(config.t_final, config.snapshot_interval, config.field_times);
    const TsspResult result = tssp_evolve(grid, problem, psi0, config.t_final, snaps);
    clock.stop("reference");

    Eigen::MatrixXd pts(grid.total(), config.d);
    const Eigen::VectorXd ax = tssp_axis_coords(grid);
    for (long idx = 0; idx < grid.total(); ++idx) {
        long rem = idx;
        for (int a = 0; a < config.d; ++a) {
            pts(idx, a) = ax[static_cast<int>(rem % grid.n_per_axis)];
            rem /= grid.n_per_axis;
        }
    }
    write_field_csv(out_path(config, "field.csv"), result.snapshot_times, pts,
                    result.snapshots);
    write_errors_csv(out_path(config, "errors.csv"),
                     {{"grid_mass_drift", result.mass_drift_max}});
    write_timings_csv(out_path(config, "timings.csv"), clock.timings());
    emit_run_summary(out_path(config, "summary.json"), canonical_json(config), nullptr, {},
                     clock.timings());
}

void run_bench_mode(const RunConfig& config) {
    PhaseClock clock;
    clock.start();
    TsspGrid base;
    base.extent = 8.0;
    base.n_per_axis = config.bench_points;
    base.dt = 0.01;

    auto problem_for_dim = [&](int d) {
        RunConfig c = config;
        c.d = d;
        c.gammas.assign(d, 1.0);
        c.beta_d = 1.0;
        return make_problem(c);
    };

    auto sdfsnn_timer = [&](int d) {
        RunConfig c = config;
        c.mode = "evolve";
        c.d = d;
        c.gammas.assign(d, 1.0);
        c.beta_d = 1.0;
        c.t_final = config.bench_t_final;
        c.neurons = 64;
        c.collocation = 256;
        c.alpha = 0.5;
        c.q = 2.0;
        c.subset_size = 1;  // fixed subset size across all dimensions
        c.rtol = c.atol = 1e-8;
        c.snapshot_interval = 0.0;
        const auto start = std::chrono::steady_clock::now();
        RngHandle rng(config.seed ^ (0xBE11C0DEULL + d));
        Pipeline p = build_pipeline(c, rng);
        (void)run_evolution(p, c, rng);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const std::vector<BenchRow> rows =
        runtime_scaling_bench(config.bench_tssp_dims, config.bench_sdfsnn_dims, base,
                              config.bench_t_final, problem_for_dim, sdfsnn_timer);
    clock.stop("bench");
    write_bench_csv(out_path(config, "bench.csv"), rows);
    write_timings_csv(out_path(config, "timings.csv"), clock.timings());
    emit_run_summary(out_path(config, "summary.json"), canonical_json(config), nullptr, {},
                     clock.timings());
}

void run_ablation_mode(const RunConfig& config) {
    PhaseClock clock;
    clock.start();
    if (config.which == "conservation") {
        // Projected symplectic versus unprojected adaptive on one problem.
        RunConfig with_cfg = config;
        with_cfg.mode = "evolve";
        with_cfg.scheme = "midpoint";
        with_cfg.project_mass = true;
        RngHandle rng_a(config.seed);
        Pipeline p_a = build_pipeline(with_cfg, rng_a);
        const EvolveResult with_proj = run_evolution(p_a, with_cfg, rng_a);
        write_conservation_csv(out_path(config, "conservation_with_projection.csv"),
                               with_proj.ledger);

        RunConfig without_cfg = config;
        without_cfg.mode = "evolve";
        without_cfg.scheme = "rk45";
        without_cfg.project_mass = false;
        RngHandle rng_b(config.seed);
        Pipeline p_b = build_pipeline(without_cfg, rng_b);
        const EvolveResult without_proj = run_evolution(p_b, without_cfg, rng_b);
        write_conservation_csv(out_path(config, "conservation_without_projection.csv"),
                               without_proj.ledger);
        clock.stop("ablation");
        write_timings_csv(out_path(config, "timings.csv"), clock.timings());
        emit_run_summary(out_path(config, "summary.json"), canonical_json(config),
                         &with_proj.ledger, {}, clock.timings());
        return;
    }

    if (config.which == "decay") {
        // With/without the decay envelope across basis sizes, against a shared
        // TSSP reference.
        const std::vector<int> sizes = {32, 64, 128};
        RunConfig base = config;
        base.mode = "evolve";
        base.t_final = std::min(config.t_final, 0.5);

        TsspGrid grid;
        grid.extent = 8.0;
        grid.n_per_axis = 256;
        grid.dt = 1e-4;
        grid.d_ref = 1;
        const GpeProblem problem = make_problem(base);
        const Eigen::VectorXcd psi0 = tssp_initial_field(grid, problem);
        const TsspResult ref = tssp_evolve(grid, problem, psi0, base.t_final, {base.t_final});
        Eigen::MatrixXd pts(grid.total(), 1);
        pts.col(0) = tssp_axis_coords(grid);

        std::ofstream out(out_path(config, "ablation_decay.csv"));
        if (!out) throw IoError("cannot write ablation_decay.csv");
        out << "neurons,mode,rel_l2,note\n";
        for (int m : sizes) {
            for (bool decay : {true, false}) {
                RunConfig c = base;
                c.neurons = m;
                c.decay_envelope = decay;
                if (!decay) {
                    c.q = 0.0;          // uniform box sampling without an envelope
                    c.box_extent = 4.0;
                }
                std::string note;
                double rel_l2 = std::numeric_limits<double>::infinity();
                try {
                    RngHandle rng(config.seed);
                    Pipeline p = build_pipeline(c, rng);
                    const EvolveResult r = run_evolution(p, c, rng);
                    const Eigen::VectorXcd pred = reconstruct(
                        r.snapshots.back(), p.bank, p.basis, p.spec, pts);
                    rel_l2 = compute_errors(pred, ref.snapshots.back(), "tssp grid").rel_l2;
                } catch (const NumericalError& e) {
                    note = std::string("failed: ") + e.what();
                }
                out << m << "," << (decay ? "decay" : "no-decay") << ",";
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", rel_l2);
                out << buf << "," << note << "\n";
            }
        }
        clock.stop("ablation");
        write_timings_csv(out_path(config, "timings.csv"), clock.timings());
        emit_run_summary(out_path(config, "summary.json"), canonical_json(config), nullptr, {},
                         clock.timings());
        return;
    }

    if (config.which == "subset") {
        // Static accuracy and setup/solve cost across d and subset size.
        const std::vector<int> dims = {50, 100, 500, 1000};
        const std::vector<int> subsets = {16, 64, 0};
        std::ofstream out(out_path(config, "ablation_subset.csv"));
        if (!out) throw IoError("cannot write ablation_subset.csv");
        out << "d,subset_size,rel_l2,setup_s,solve_s\n";
        for (int d : dims) {
            for (int m : subsets) {
                RngHandle rng(config.seed ^ (d * 1000003ULL + m));
                Eigen::VectorXd gammas = Eigen::VectorXd::Ones(d);
                const MmsSpec spec =
                    make_mms_spec(d, gammas, 1.0, config.epsilon, config.seed);
                RngHandle rng_pts = rng.fork(1);
                const StaticProblem problem =
                    make_static_problem(spec, config.collocation, config.collocation, rng_pts);
                StaticSolveConfig sc;
                sc.neurons = config.neurons;
                sc.svd_eps = config.svd_eps;
                sc.boundary_weight = config.boundary_weight;
                sc.subset_size = m;
                sc.test_factor = 5;
                RngHandle rng_solve = rng.fork(2);
                const StaticReport rep = solve_static(problem, sc, rng_solve);
                char l2[40], su[40], so[40];
                std::snprintf(l2, sizeof(l2), "%.17g", rep.errors.rel_l2);
                std::snprintf(su, sizeof(su), "%.6g", rep.setup_seconds);
                std::snprintf(so, sizeof(so), "%.6g", rep.solve_seconds);
                out << d << "," << m << "," << l2 << "," << su << "," << so << "\n";
            }
        }
        clock.stop("ablation");
        write_timings_csv(out_path(config, "timings.csv"), clock.timings());
        emit_run_summary(out_path(config, "summary.json"), canonical_json(config), nullptr, {},
                         clock.timings());
        return;
    }

    throw ConfigError("ablation mode: unknown variant " + config.which);
}

} // namespace

void run(const RunConfig& config) {
    if (config.threads > 0) omp_set_num_threads(config.threads);
    fs::create_directories(config.out_dir);

    // Record the producing config next to the artifacts.
    {
        std::ofstream out(out_path(config, "config.json"));
        if (!out) throw IoError("cannot write config echo");
        nlohmann::json doc = config_to_json(config);
        doc["config_hash"] = config_hash(config);
        out << doc.dump(2) << "\n";
    }

    if (config.mode == "evolve")
        run_evolve_mode(config);
    else if (config.mode == "static")
        run_static_mode(config);
    else if (config.mode == "reference")
        run_reference_mode(config);
    else if (config.mode == "bench")
        run_bench_mode(config);
    else if (config.mode == "ablation")
        run_ablation_mode(config);
    else
        throw ConfigError("unknown mode: " + config.mode);
}

} // namespace sdfsnn
