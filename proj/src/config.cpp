#include "sdfsnn/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sdfsnn/dynamics.hpp"
#include "sdfsnn/errors.hpp"

namespace sdfsnn {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& known,
                  const std::string& section, std::vector<std::string>& problems) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key()))
            problems.push_back(section + "." + it.key() + ": unknown key");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

template <typename T>
void read_opt(const json& obj, const char* key, std::optional<T>& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

// --- flat TOML subset -------------------------------------------------------
// Supports [section] headers, key = value with strings, numbers, booleans and
// one-level arrays. Enough for run configs; JSON remains canonical.

json toml_value(const std::string& raw) {
    std::string s = raw;
    const auto trim = [](std::string& v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
    };
    trim(s);
    if (s.empty()) throw ConfigError("toml: empty value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') throw ConfigError("toml: unterminated string");
        return s.substr(1, s.size() - 2);
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("toml: unterminated array");
        json arr = json::array();
        std::string body = s.substr(1, s.size() - 2);
        std::string item;
        std::istringstream is(body);
        while (std::getline(is, item, ',')) {
            trim(item);
            if (!item.empty()) arr.push_back(toml_value(item));
        }
        return arr;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        if (s.find_first_of(".eE") == std::string::npos)
            return std::stoll(s);
        return std::stod(s);
    } catch (const std::exception&) {
        throw ConfigError("toml: cannot parse value '" + s + "'");
    }
}

json parse_toml_subset(std::istream& in) {
    json doc = json::object();
    json* section = &doc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        std::string t = line;
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("toml line " + std::to_string(lineno) + ": bad section header");
            const std::string name = t.substr(1, t.size() - 2);
            doc[name] = json::object();
            section = &doc[name];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("toml line " + std::to_string(lineno) + ": expected key = value");
        std::string key = t.substr(0, eq);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        (*section)[key] = toml_value(t.substr(eq + 1));
    }
    return doc;
}

} // namespace

double RunConfig::resolved_beta_d() const {
    if (beta_d) return *beta_d;
    if (beta && n_orig) return derive_beta_d(*beta, *n_orig, d);
    return 0.0;
}

nlohmann::json config_to_json(const RunConfig& c) {
    json doc;
    doc["mode"] = c.mode;
    doc["seed"] = c.seed;
    doc["out"] = c.out_dir;
    doc["threads"] = c.threads;

    json problem;
    problem["d"] = c.d;
    problem["gamma"] = c.gammas;
    problem["beta"] = c.beta ? json(*c.beta) : json(nullptr);
    problem["n_orig"] = c.n_orig ? json(*c.n_orig) : json(nullptr);
    problem["beta_d"] = c.beta_d ? json(*c.beta_d) : json(nullptr);
    problem["t_final"] = c.t_final;
    problem["psi0"] = c.psi0;
    doc["problem"] = problem;

    json disc;
    disc["neurons"] = c.neurons;
    disc["collocation"] = c.collocation;
    disc["alpha"] = c.alpha;
    disc["q"] = c.q;
    disc["box_extent"] = c.box_extent ? json(*c.box_extent) : json(nullptr);
    disc["svd_eps"] = c.svd_eps;
    disc["subset_size"] = c.subset_size;
    disc["subset_scheme"] = c.subset_scheme;
    disc["decay_envelope"] = c.decay_envelope;
    doc["discretization"] = disc;

    json integ;
    integ["scheme"] = c.scheme;
    integ["rtol"] = c.rtol;
    integ["atol"] = c.atol;
    integ["dt_init"] = c.dt_init;
    integ["dt_max"] = c.dt_max;
    integ["dt"] = c.dt;
    integ["newton_tol"] = c.newton_tol;
    integ["newton_cap"] = c.newton_cap;
    integ["subset_policy"] = c.subset_policy;
    integ["project_mass"] = c.project_mass;
    doc["integrator"] = integ;

    json out;
    out["snapshot_interval"] = c.snapshot_interval;
    out["trace_indices"] = c.trace_indices;
    out["field_times"] = c.field_times;
    out["field_grid_points"] = c.field_grid_points;
    out["field_grid_extent"] = c.field_grid_extent;
    out["dump_basis"] = c.dump_basis ? json(*c.dump_basis) : json(nullptr);
    out["dump_spectrum"] = c.dump_spectrum ? json(*c.dump_spectrum) : json(nullptr);
    doc["output"] = out;

    json stat;
    stat["epsilon"] = c.epsilon;
    stat["boundary_weight"] = c.boundary_weight;
    stat["test_factor"] = c.test_factor;
    doc["static"] = stat;

    json ref;
    ref["extent"] = c.ref_extent;
    ref["points"] = c.ref_points;
    ref["dt"] = c.ref_dt;
    doc["reference"] = ref;

    json bench;
    bench["tssp_dims"] = c.bench_tssp_dims;
    bench["sdfsnn_dims"] = c.bench_sdfsnn_dims;
    bench["points"] = c.bench_points;
    bench["t_final"] = c.bench_t_final;
    doc["bench"] = bench;

    json abl;
    abl["which"] = c.which;
    doc["ablation"] = abl;
    return doc;
}

RunConfig config_from_json(const nlohmann::json& doc) {
    std::vector<std::string> problems;
    require_keys(doc,
                 {"mode", "seed", "out", "threads", "problem", "discretization", "integrator",
                  "output", "static", "reference", "bench", "ablation"},
                 "config", problems);

    RunConfig c;
    read(doc, "mode", c.mode);
    read(doc, "seed", c.seed);
    read(doc, "out", c.out_dir);
    read(doc, "threads", c.threads);

    if (doc.contains("problem")) {
        const json& p = doc["problem"];
        require_keys(p, {"d", "gamma", "beta", "n_orig", "beta_d", "t_final", "psi0"},
                     "problem", problems);
        read(p, "d", c.d);
        if (p.contains("gamma") && !p["gamma"].is_null()) {
            if (p["gamma"].is_number())
                c.gammas = {p["gamma"].get<double>()};
            else
                c.gammas = p["gamma"].get<std::vector<double>>();
        }
        read_opt(p, "beta", c.beta);
        read_opt(p, "n_orig", c.n_orig);
        read_opt(p, "beta_d", c.beta_d);
        read(p, "t_final", c.t_final);
        read(p, "psi0", c.psi0);
    }

    if (doc.contains("discretization")) {
        const json& p = doc["discretization"];
        require_keys(p,
                     {"neurons", "collocation", "alpha", "q", "box_extent", "svd_eps",
                      "subset_size", "subset_scheme", "decay_envelope"},
                     "discretization", problems);
        read(p, "neurons", c.neurons);
        read(p, "collocation", c.collocation);
        read(p, "alpha", c.alpha);
        read(p, "q", c.q);
        read_opt(p, "box_extent", c.box_extent);
        read(p, "svd_eps", c.svd_eps);
        read(p, "subset_size", c.subset_size);
        read(p, "subset_scheme", c.subset_scheme);
        read(p, "decay_envelope", c.decay_envelope);
    }

    if (doc.contains("integrator")) {
        const json& p = doc["integrator"];
        require_keys(p,
                     {"scheme", "rtol", "atol", "dt_init", "dt_max", "dt", "newton_tol",
                      "newton_cap", "subset_policy", "project_mass"},
                     "integrator", problems);
        read(p, "scheme", c.scheme);
        read(p, "rtol", c.rtol);
        read(p, "atol", c.atol);
        read(p, "dt_init", c.dt_init);
        read(p, "dt_max", c.dt_max);
        read(p, "dt", c.dt);
        read(p, "newton_tol", c.newton_tol);
        read(p, "newton_cap", c.newton_cap);
        read(p, "subset_policy", c.subset_policy);
        read(p, "project_mass", c.project_mass);
    }

    if (doc.contains("output")) {
        const json& p = doc["output"];
        require_keys(p,
                     {"snapshot_interval", "trace_indices", "field_times", "field_grid_points",
                      "field_grid_extent", "dump_basis", "dump_spectrum"},
                     "output", problems);
        read(p, "snapshot_interval", c.snapshot_interval);
        read(p, "trace_indices", c.trace_indices);
        read(p, "field_times", c.field_times);
        read(p, "field_grid_points", c.field_grid_points);
        read(p, "field_grid_extent", c.field_grid_extent);
        read_opt(p, "dump_basis", c.dump_basis);
        read_opt(p, "dump_spectrum", c.dump_spectrum);
    }

    if (doc.contains("static")) {
        const json& p = doc["static"];
        require_keys(p, {"epsilon", "boundary_weight", "test_factor"}, "static", problems);
        read(p, "epsilon", c.epsilon);
        read(p, "boundary_weight", c.boundary_weight);
        read(p, "test_factor", c.test_factor);
    }

    if (doc.contains("reference")) {
        const json& p = doc["reference"];
        require_keys(p, {"extent", "points", "dt"}, "reference", problems);
        read(p, "extent", c.ref_extent);
        read(p, "points", c.ref_points);
        read(p, "dt", c.ref_dt);
    }

    if (doc.contains("bench")) {
        const json& p = doc["bench"];
        require_keys(p, {"tssp_dims", "sdfsnn_dims", "points", "t_final"}, "bench", problems);
        read(p, "tssp_dims", c.bench_tssp_dims);
        read(p, "sdfsnn_dims", c.bench_sdfsnn_dims);
        read(p, "points", c.bench_points);
        read(p, "t_final", c.bench_t_final);
    }

    if (doc.contains("ablation")) {
        const json& p = doc["ablation"];
        require_keys(p, {"which"}, "ablation", problems);
        read(p, "which", c.which);
    }

    // Broadcast gamma and validate cross-field constraints.
    if (c.gammas.empty()) c.gammas.assign(c.d, 1.0);
    if (static_cast<int>(c.gammas.size()) == 1 && c.d > 1)
        c.gammas.assign(c.d, c.gammas[0]);

    static const std::set<std::string> kModes = {"evolve", "static", "reference", "bench",
                                                 "ablation"};
    if (!kModes.count(c.mode)) problems.push_back("mode: must be one of evolve|static|reference|bench|ablation");
    if (c.d < 1) problems.push_back("problem.d: must be >= 1");
    if (static_cast<int>(c.gammas.size()) != c.d)
        problems.push_back("problem.gamma: length must be 1 or d");
    for (double g : c.gammas)
        if (!(g > 0.0)) {
            problems.push_back("problem.gamma: all entries must be positive");
            break;
        }
    if (!c.beta_d && c.beta && !c.n_orig)
        problems.push_back("problem.n_orig: required to derive beta_d from beta");
    if (c.n_orig && *c.n_orig < c.d) problems.push_back("problem.n_orig: must be >= d");
    if (c.t_final < 0.0) problems.push_back("problem.t_final: must be >= 0");
    if (c.neurons < 1) problems.push_back("discretization.neurons: must be >= 1");
    if (c.collocation < 2) problems.push_back("discretization.collocation: must be >= 2");
    if (!(c.alpha > 0.0)) problems.push_back("discretization.alpha: must be positive");
    if (c.q < 0.0) problems.push_back("discretization.q: must be >= 0");
    if (c.q == 0.0 && !c.box_extent)
        problems.push_back("discretization.box_extent: required when q = 0");
    if (!(c.svd_eps > 0.0 && c.svd_eps < 1.0))
        problems.push_back("discretization.svd_eps: must lie in (0, 1)");
    if (c.subset_size < 0 || c.subset_size > c.d)
        problems.push_back("discretization.subset_size: must satisfy 0 <= m <= d");
    if (c.subset_scheme != "uniform" && c.subset_scheme != "horvitz-thompson")
        problems.push_back("discretization.subset_scheme: uniform|horvitz-thompson");
    if (c.scheme != "rk45" && c.scheme != "midpoint")
        problems.push_back("integrator.scheme: rk45|midpoint");
    if (!(c.rtol > 0.0) || !(c.atol > 0.0))
        problems.push_back("integrator.rtol/atol: must be positive");
    if (!(c.dt > 0.0)) problems.push_back("integrator.dt: must be positive");
    if (c.subset_policy != "per-step" && c.subset_policy != "per-stage" &&
        c.subset_policy != "fixed")
        problems.push_back("integrator.subset_policy: per-step|per-stage|fixed");
    if (c.mode == "ablation" && c.which != "decay" && c.which != "subset" &&
        c.which != "conservation")
        problems.push_back("ablation.which: decay|subset|conservation");

    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "configuration invalid (" << problems.size() << " problem(s)):";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
    return c;
}

nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml")
        return parse_toml_subset(in);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    return doc;
}

nlohmann::json merge_json(nlohmann::json a, const nlohmann::json& b) {
    if (!a.is_object() || !b.is_object()) return b;
    for (auto it = b.begin(); it != b.end(); ++it) {
        if (a.contains(it.key()))
            a[it.key()] = merge_json(a[it.key()], it.value());
        else
            a[it.key()] = it.value();
    }
    return a;
}

std::string canonical_json(const RunConfig& config) {
    return config_to_json(config).dump();  // nlohmann objects are key-sorted
}

std::string config_hash(const RunConfig& config) {
    const std::string s = canonical_json(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

json evolve_preset(int d, double beta_d, int neurons, int collocation, double q,
                   double t_final) {
    json j;
    j["mode"] = "evolve";
    j["problem"] = {{"d", d}, {"beta_d", beta_d}, {"t_final", t_final}};
    j["discretization"] = {{"neurons", neurons}, {"collocation", collocation}, {"q", q}};
    return j;
}

json static_preset(int d, int collocation, int neurons, int subset) {
    json j;
    j["mode"] = "static";
    j["problem"] = {{"d", d}, {"beta_d", 1.0}};
    j["discretization"] = {{"neurons", neurons}, {"collocation", collocation},
                           {"subset_size", subset}};
    return j;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"gpe1d-beta0",  "gpe1d-beta0.1", "gpe1d-beta1",   "gpe1d-beta10",
            "gpe1d-beta50", "gpe1d-beta100", "gpe1d-T100",    "gpe2d-beta10",
            "traces-beta1", "traces-beta10", "traces-beta50", "traces-beta100",
            "energy-sym-beta10", "static-d10", "static-d50",  "static-d100",
            "static-d200",  "static-d500",   "static-d1000",  "ablation-decay",
            "ablation-subset", "ablation-conservation", "runtime-bench",
            "reference-1d-beta10"};
}

nlohmann::json preset_json(const std::string& name) {
    // 1D runs use the decay rate alpha = 0.5 (the reported optimum) and wider
    // collocation sampling (q = 1) for strong interactions.
    if (name == "gpe1d-beta0") return evolve_preset(1, 0.0, 64, 400, 2.0, 1.0);
    if (name == "gpe1d-beta0.1") return evolve_preset(1, 0.1, 96, 600, 1.0, 1.0);
    if (name == "gpe1d-beta1") return evolve_preset(1, 1.0, 96, 600, 1.0, 1.0);
    if (name == "gpe1d-beta10") return evolve_preset(1, 10.0, 160, 800, 1.0, 1.0);
    if (name == "gpe1d-beta50") return evolve_preset(1, 50.0, 200, 1000, 1.0, 1.0);
    if (name == "gpe1d-beta100") return evolve_preset(1, 100.0, 240, 1200, 1.0, 1.0);
    if (name == "gpe1d-T100") {
        json j = evolve_preset(1, 10.0, 160, 800, 1.0, 100.0);
        j["output"] = {{"snapshot_interval", 1.0}};
        return j;
    }
    if (name == "gpe2d-beta10") {
        json j = evolve_preset(2, 10.0, 300, 1600, 1.0, 1.0);
        j["problem"]["gamma"] = std::vector<double>{1.0, 2.0};
        j["output"] = {{"field_times", std::vector<double>{0.0, 0.3, 0.6, 1.0}}};
        return j;
    }
    // Coefficient traces use the published 1D basis count n = 80 (bias
    // included) and plot indices 3..8.
    if (name.rfind("traces-beta", 0) == 0) {
        const double beta = std::stod(name.substr(11));
        json j = evolve_preset(1, beta, 79, 600, 1.0, 1.0);
        j["output"] = {{"trace_indices", std::vector<int>{3, 4, 5, 6, 7, 8}},
                       {"snapshot_interval", 0.01}};
        return j;
    }
    if (name == "energy-sym-beta10") {
        json j = evolve_preset(1, 10.0, 160, 800, 1.0, 10.0);
        j["integrator"] = {{"scheme", "midpoint"}, {"dt", 1e-3}};
        j["output"] = {{"snapshot_interval", 0.05}};
        return j;
    }
    // Static table rows: collocation counts follow the published table; the
    // stochastic Laplacian engages above d = 200.
    if (name == "static-d10") return static_preset(10, 128, 120, 0);
    if (name == "static-d50") return static_preset(50, 128, 120, 0);
    if (name == "static-d100") return static_preset(100, 196, 180, 0);
    if (name == "static-d200") return static_preset(200, 256, 240, 0);
    if (name == "static-d500") return static_preset(500, 324, 300, 256);
    if (name == "static-d1000") return static_preset(1000, 428, 400, 256);
    if (name == "ablation-decay") {
        json j = evolve_preset(1, 10.0, 128, 800, 1.0, 0.5);
        j["mode"] = "ablation";
        j["ablation"] = {{"which", "decay"}};
        return j;
    }
    if (name == "ablation-subset") {
        json j;
        j["mode"] = "ablation";
        j["ablation"] = {{"which", "subset"}};
        j["problem"] = {{"d", 50}, {"beta_d", 1.0}};
        j["discretization"] = {{"neurons", 256}, {"collocation", 256}, {"subset_size", 16}};
        return j;
    }
    if (name == "ablation-conservation") {
        json j = evolve_preset(1, 10.0, 160, 800, 1.0, 10.0);
        j["mode"] = "ablation";
        j["ablation"] = {{"which", "conservation"}};
        j["integrator"] = {{"scheme", "midpoint"}, {"dt", 1e-3}};
        j["output"] = {{"snapshot_interval", 0.05}};
        return j;
    }
    if (name == "runtime-bench") {
        json j;
        j["mode"] = "bench";
        return j;
    }
    if (name == "reference-1d-beta10") {
        json j;
        j["mode"] = "reference";
        j["problem"] = {{"d", 1}, {"beta_d", 10.0}, {"t_final", 1.0}};
        j["reference"] = {{"extent", 8.0}, {"points", 256}, {"dt", 1e-4}};
        return j;
    }
    throw ConfigError("unknown preset: " + name);
}

} // namespace sdfsnn
