// Command-line driver: evolve | static | reference | bench | ablation.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "sdfsnn/config.hpp"
#include "sdfsnn/errors.hpp"
#include "sdfsnn/runner.hpp"

namespace {

struct CliState {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string preset;
    std::string config_path;
    int threads = 0;
    std::string mode_flag;

    // overridable run parameters
    int dim = 0;
    int collocation = 0;
    int neurons = 0;
    double beta_d = 0.0;
    double beta = 0.0;
    double epsilon = 0.0;
    int subset_size = -1;
    double t_final = -1.0;
    double alpha = 0.0;
    double q = -1.0;
    std::string scheme;
    std::string dump_basis;
    std::string dump_spectrum;
};

void add_common_flags(CLI::App* cmd, CliState& s) {
    cmd->add_option("--seed", s.seed, "RNG seed (u64)");
    cmd->add_option("--out", s.out_dir, "output directory");
    cmd->add_option("--preset", s.preset, "named experiment preset");
    cmd->add_option("--config", s.config_path, "config file (JSON or flat TOML)");
    cmd->add_option("--threads", s.threads, "OpenMP thread count (0 = default)");
    cmd->add_option("--dim", s.dim, "spatial dimension d");
    cmd->add_option("--collocation", s.collocation, "number of collocation points");
    cmd->add_option("--neurons", s.neurons, "number of hidden neurons M");
    cmd->add_option("--beta-d", s.beta_d, "effective interaction beta_d");
    cmd->add_option("--beta", s.beta, "original-dimension interaction beta");
    cmd->add_option("--epsilon", s.epsilon, "MMS perturbation amplitude");
    cmd->add_option("--subset-size", s.subset_size, "stochastic dimension subset size m");
    cmd->add_option("--t-final", s.t_final, "final time");
    cmd->add_option("--alpha", s.alpha, "Gaussian envelope decay rate");
    cmd->add_option("--q", s.q, "collocation density exponent");
    cmd->add_option("--scheme", s.scheme, "integrator: rk45 | midpoint");
    cmd->add_option("--dump-basis", s.dump_basis, "dump sampled basis snapshot (JSON)");
    cmd->add_option("--dump-spectrum", s.dump_spectrum, "dump singular values (CSV)");
}

nlohmann::json overrides_from(const CLI::App* cmd, const CliState& s) {
    nlohmann::json j = nlohmann::json::object();
    auto set = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (set("--seed")) j["seed"] = s.seed;
    if (set("--out")) j["out"] = s.out_dir;
    if (set("--threads")) j["threads"] = s.threads;
    if (set("--dim")) j["problem"]["d"] = s.dim;
    if (set("--beta-d")) j["problem"]["beta_d"] = s.beta_d;
    if (set("--beta")) j["problem"]["beta"] = s.beta;
    if (set("--t-final")) j["problem"]["t_final"] = s.t_final;
    if (set("--collocation")) j["discretization"]["collocation"] = s.collocation;
    if (set("--neurons")) j["discretization"]["neurons"] = s.neurons;
    if (set("--subset-size")) j["discretization"]["subset_size"] = s.subset_size;
    if (set("--alpha")) j["discretization"]["alpha"] = s.alpha;
    if (set("--q")) j["discretization"]["q"] = s.q;
    if (set("--scheme")) j["integrator"]["scheme"] = s.scheme;
    if (set("--epsilon")) j["static"]["epsilon"] = s.epsilon;
    if (set("--dump-basis")) j["output"]["dump_basis"] = s.dump_basis;
    if (set("--dump-spectrum")) j["output"]["dump_spectrum"] = s.dump_spectrum;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SD-FSNN solver and benchmark CLI for Gross-Pitaevskii equations"};
    app.require_subcommand(0, 1);

    CliState s;
    add_common_flags(&app, s);
    app.add_option("--mode", s.mode_flag, "run mode (alternative to a subcommand)");

    CLI::App* sub_evolve = app.add_subcommand("evolve", "time-evolve a GPE");
    CLI::App* sub_static = app.add_subcommand("static", "solve the static MMS GPE");
    CLI::App* sub_reference = app.add_subcommand("reference", "TSSP reference run");
    CLI::App* sub_bench = app.add_subcommand("bench", "runtime scaling benchmark");
    CLI::App* sub_ablation = app.add_subcommand("ablation", "ablation studies");
    std::string which;
    sub_ablation->add_option("--which", which, "decay | subset | conservation");
    for (CLI::App* cmd : {sub_evolve, sub_static, sub_reference, sub_bench, sub_ablation})
        add_common_flags(cmd, s);

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json doc = sdfsnn::config_to_json(sdfsnn::RunConfig{});

        std::string mode = s.mode_flag;
        const CLI::App* active = &app;
        for (CLI::App* cmd : {sub_evolve, sub_static, sub_reference, sub_bench, sub_ablation}) {
            if (cmd->parsed()) {
                mode = cmd->get_name();
                active = cmd;
            }
        }

        if (!s.preset.empty()) doc = sdfsnn::merge_json(doc, sdfsnn::preset_json(s.preset));
        if (!s.config_path.empty())
            doc = sdfsnn::merge_json(doc, sdfsnn::load_config_file(s.config_path));
        doc = sdfsnn::merge_json(doc, overrides_from(&app, s));
        if (active != &app) doc = sdfsnn::merge_json(doc, overrides_from(active, s));
        if (!mode.empty()) doc["mode"] = mode;
        if (sub_ablation->parsed() && sub_ablation->count("--which") > 0)
            doc["ablation"]["which"] = which;

        const sdfsnn::RunConfig config = sdfsnn::config_from_json(doc);
        sdfsnn::run(config);
        return 0;
    } catch (const sdfsnn::ConfigError& e) {
        std::cerr << "[config] " << e.what() << "\n";
        return 2;
    } catch (const sdfsnn::NumericalError& e) {
        std::cerr << "[numerical] " << e.what() << "\n";
        return 3;
    } catch (const sdfsnn::IoError& e) {
        std::cerr << "[io] " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "[error] " << e.what() << "\n";
        return 3;
    }
}
