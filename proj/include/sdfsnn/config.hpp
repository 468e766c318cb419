#ifndef SDFSNN_CONFIG_HPP
#define SDFSNN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdfsnn {

// Fully-resolved run configuration. JSON is the canonical form (hashing and
// summary echo); a flat TOML subset is accepted and converted. Unknown keys
// are rejected and validation reports every offending field at once.
struct RunConfig {
    std::string mode = "evolve";  // evolve | static | reference | bench | ablation
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int threads = 0;  // 0 keeps the OpenMP default

    // problem
    int d = 1;
    std::vector<double> gammas;  // broadcast to length d
    std::optional<double> beta;
    std::optional<int> n_orig;
    std::optional<double> beta_d;  // direct value wins; else derived from (beta, n_orig)
    double t_final = 1.0;
    std::string psi0 = "ground_state";

    // discretization
    int neurons = 128;
    int collocation = 600;
    double alpha = 0.5;
    double q = 2.0;
    std::optional<double> box_extent;
    double svd_eps = 1e-10;
    int subset_size = 0;  // 0 = full Laplacian
    std::string subset_scheme = "uniform";
    bool decay_envelope = true;

    // integrator
    std::string scheme = "rk45";  // rk45 | midpoint
    double rtol = 1e-10;
    double atol = 1e-10;
    double dt_init = 1e-3;
    double dt_max = 0.1;
    double dt = 1e-2;
    double newton_tol = 1e-12;
    int newton_cap = 50;
    std::string subset_policy = "per-step";  // per-step | per-stage | fixed
    bool project_mass = true;  // disabled only by the conservation ablation

    // output
    double snapshot_interval = 0.1;
    std::vector<int> trace_indices;
    std::vector<double> field_times;
    int field_grid_points = 256;
    double field_grid_extent = 8.0;
    std::optional<std::string> dump_basis;
    std::optional<std::string> dump_spectrum;

    // static mode
    double epsilon = 0.01;
    double boundary_weight = 10.0;
    int test_factor = 10;

    // reference mode
    double ref_extent = 8.0;
    int ref_points = 256;
    double ref_dt = 1e-3;

    // bench mode
    std::vector<int> bench_tssp_dims = {1, 2, 3};
    std::vector<int> bench_sdfsnn_dims = {1, 2, 3, 4, 5, 6, 7, 8};
    int bench_points = 64;
    double bench_t_final = 1.0;

    // ablation mode
    std::string which = "conservation";  // decay | subset | conservation

    double resolved_beta_d() const;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& doc);

// Reads JSON or the flat TOML subset (by extension: .toml vs anything else).
nlohmann::json load_config_file(const std::string& path);

// Known preset names, audited against the published experiment parameters.
std::vector<std::string> preset_names();
nlohmann::json preset_json(const std::string& name);

// Canonical (sorted-key) dump and its FNV-1a hash; artifact files carry the
// hash so reruns are attributable.
std::string canonical_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// Merge b into a (b wins), recursively for objects.
nlohmann::json merge_json(nlohmann::json a, const nlohmann::json& b);

} // namespace sdfsnn

#endif
