// diraclab command-line driver.
//
//   diraclab <command> [--config file.json] [--set key.path=value ...] [--threads N]
//
// Commands: moments, beta, transfer-scan, critical, bernoulli, admissibility.
// Exit codes: 0 ok, 2 tolerance violation, 3 invalid config, 4 numerical guard.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diraclab/diraclab.hpp"

namespace dl = diraclab;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kTolerance = 2, kConfig = 3, kGuard = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
    return json::parse(R"({
      "model": {
        "m": 0.0, "c": 1.0, "seed": 1,
        "potential": {"family": "bernoulli", "a": 0.0, "b": 1.0, "p": 0.5}
      },
      "task": {},
      "output": {},
      "tolerances": {"rel_diff": 0.02}
    })");
}

void merge(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

void apply_set(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    std::string pointer;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
        pointer += "/" + part;
    }
    cfg[json::json_pointer(pointer)] = value;
}

json load_config(const std::string& path, const std::vector<std::string>& sets) {
    json cfg = default_config();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config " + path + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config root must be an object");
        merge(cfg, file);
    }
    for (const auto& s : sets) apply_set(cfg, s);
    return cfg;
}

const json& section(const json& cfg, const char* name) {
    if (!cfg.contains(name) || !cfg[name].is_object()) throw ConfigError(std::string("config: missing section '") + name + "'");
    return cfg[name];
}

template <class T>
T get(const json& obj, const std::string& key, std::optional<T> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing key '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: key '" + key + "' has the wrong type");
    }
}

double num(const json& o, const std::string& k, std::optional<double> d = std::nullopt) { return get<double>(o, k, d); }

std::vector<double> num_list(const json& o, const std::string& k) {
    const auto v = get<std::vector<double>>(o, k);
    if (v.empty()) throw ConfigError("config: '" + k + "' must be a nonempty list");
    return v;
}

std::vector<std::size_t> size_list(const json& o, const std::string& k) {
    std::vector<std::size_t> out;
    for (double x : num_list(o, k)) {
        if (!(x >= 1) || x != std::floor(x)) throw ConfigError("config: '" + k + "' must hold positive integers");
        out.push_back(std::size_t(x));
    }
    return out;
}

std::size_t count(const json& o, const std::string& k, std::optional<std::size_t> d = std::nullopt) {
    if (!o.contains(k) && d) return *d;
    const double x = num(o, k);
    if (!(x >= 1) || x != std::floor(x)) throw ConfigError("config: '" + k + "' must be a positive integer");
    return std::size_t(x);
}

dl::DiracParams params_of(const json& cfg) {
    const auto& m = section(cfg, "model");
    try {
        return dl::DiracParams(num(m, "m"), num(m, "c"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::uint64_t seed_of(const json& cfg) {
    const auto& m = section(cfg, "model");
    const auto& s = m.contains("seed") ? m["seed"] : json(1);
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw ConfigError("config: model.seed must be a nonnegative integer");
    return s.get<std::uint64_t>();
}

dl::PotentialSeq potential_of(const json& cfg, std::size_t L) {
    const auto& m = section(cfg, "model");
    if (!m.contains("potential") || !m["potential"].is_object()) throw ConfigError("config: missing model.potential");
    const auto& p = m["potential"];
    const std::string family = get<std::string>(p, "family");
    const std::uint64_t seed = seed_of(cfg);
    try {
        if (family == "bernoulli")
            return dl::bernoulli_potential(num(p, "a", 0.0), num(p, "b", 1.0), num(p, "p", 0.5), seed, L);
        if (family == "two_valued") {
            const std::string pattern = get<std::string>(p, "pattern");
            if (pattern.empty()) throw ConfigError("config: two_valued pattern must be nonempty");
            std::vector<std::uint8_t> bits(L);
            for (std::size_t i = 0; i < L; ++i) {
                const char ch = pattern[i % pattern.size()];
                if (ch != '0' && ch != '1') throw ConfigError("config: two_valued pattern must be a 0/1 string");
                bits[i] = std::uint8_t(ch - '0');
            }
            return dl::two_valued(num(p, "a", 0.0), num(p, "b", 1.0), bits);
        }
        if (family == "constant") return dl::constant_potential(num(p, "value", 0.0), L);
        if (family == "thue_morse") return dl::thue_morse(num(p, "a", 0.0), num(p, "b", 1.0), L);
        if (family == "sturmian")
            return dl::sturmian(num(p, "lambda", 1.0), num(p, "rho", dl::golden_mean_rotation()), num(p, "theta", 0.0), L);
        if (family == "file") {
            auto V = dl::load_potential(get<std::string>(p, "path"));
            if (V.size() < L) throw ConfigError("potential file has " + std::to_string(V.size()) + " sites, need " + std::to_string(L));
            return V.truncated(L);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("config: unknown potential family '" + family + "'");
}

dl::BoundaryPolicy policy_of(const json& task) {
    const std::string s = get<std::string>(task, "boundary", std::string("abort"));
    if (s == "abort") return dl::BoundaryPolicy::abort;
    if (s == "warn") return dl::BoundaryPolicy::warn;
    if (s == "ignore") return dl::BoundaryPolicy::ignore;
    throw ConfigError("config: task.boundary must be abort, warn or ignore");
}

// ---------------------------------------------------------------------------
// Output

class Output {
public:
    explicit Output(const json& cfg) {
        const auto& o = cfg.contains("output") ? cfg["output"] : json::object();
        csv_path_ = get<std::string>(o, "csv", std::string());
        json_path_ = get<std::string>(o, "json", std::string());
    }

    void csv(const std::string& text) const { write(csv_path_, text); }
    void json_doc(const json& doc) const { write(json_path_, doc.dump(2) + "\n"); }
    /// Secondary JSON: only written when a path is configured.
    void json_side(const json& doc) const {
        if (!json_path_.empty()) write(json_path_, doc.dump(2) + "\n");
    }

private:
    static void write(const std::string& path, const std::string& text) {
        if (path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write output file: " + path);
        out << text;
    }

    std::string csv_path_, json_path_;
};

json complex_json(dl::cplx z) { return json::array({z.real(), z.imag()}); }

std::vector<double> t_grid(const json& task) {
    if (task.contains("T")) return num_list(task, "T");
    return dl::geometric_grid(num(task, "T0", 10.0), num(task, "ratio", 2.0), count(task, "count", 5));
}

// ---------------------------------------------------------------------------
// Commands

struct MomentRun {
    std::vector<double> T, q, direct, green, rel;
    std::vector<bool> boundary_ok;
};

MomentRun run_moments(const json& cfg, unsigned threads) {
    const auto& task = section(cfg, "task");
    const auto p = params_of(cfg);
    const auto Ts = t_grid(task);
    const std::vector<double> qs = task.contains("q") ? num_list(task, "q") : std::vector<double>{0.0, 1.0, 2.0};
    double Tmax = 0;
    for (double T : Ts) Tmax = std::max(Tmax, T);
    const std::size_t L = count(task, "L", dl::SpectralMoments::recommended_size(p, Tmax));
    const auto V = potential_of(cfg, L);
    const auto op = dl::build_operator(p, V, L);
    const auto policy = policy_of(task);
    const bool with_green = get<bool>(task, "green", true);
    dl::SpectralMoments sm(op, dl::SpinorLattice::delta_plus(L), threads);
    MomentRun run;
    for (double T : Ts)
        for (double q : qs) {
            const auto d = sm.moment(T, q, policy);
            const double g = with_green ? dl::abel_moment_green(op, T, q, {threads}).value : d.value;
            run.T.push_back(T);
            run.q.push_back(q);
            run.direct.push_back(d.value);
            run.green.push_back(g);
            run.rel.push_back(std::abs(g - d.value) / std::abs(d.value));
            run.boundary_ok.push_back(d.boundary_ok);
            if (!d.boundary_ok)
                std::cerr << "warning: boundary mass " << d.tail_mass << " at T=" << T << " (L=" << L << ")\n";
        }
    return run;
}

int cmd_moments(const json& cfg, unsigned threads) {
    const auto run = run_moments(cfg, threads);
    const double tol = num(section(cfg, "tolerances"), "rel_diff", 0.02);
    std::ostringstream os;
    dl::CsvWriter w(os, {"T", "q", "A_direct", "A_green", "rel_diff"});
    bool ok = true;
    for (std::size_t i = 0; i < run.T.size(); ++i) {
        w.row({run.T[i], run.q[i], run.direct[i], run.green[i], run.rel[i]});
        ok = ok && run.rel[i] <= tol;
    }
    Output out(cfg);
    out.csv(os.str());
    json side = {{"rel_diff_tolerance", tol}, {"within_tolerance", ok}};
    side["boundary_ok"] = std::all_of(run.boundary_ok.begin(), run.boundary_ok.end(), [](bool b) { return b; });
    out.json_side(side);
    if (!ok) {
        std::cerr << "moments: rel_diff exceeds tolerance " << tol << "\n";
        return kTolerance;
    }
    return kOk;
}

int cmd_beta(const json& cfg, unsigned threads) {
    const auto& task = section(cfg, "task");
    std::map<double, dl::MomentCurve> curves;
    if (task.contains("input")) {
        const auto table = [&] {
            try {
                return dl::load_csv(get<std::string>(task, "input"));
            } catch (const std::runtime_error& e) {
                throw ConfigError(e.what());
            }
        }();
        const std::string acol = table.has("A_direct") ? "A_direct" : "A";
        const auto& T = table.column("T");
        const auto& A = table.column(acol);
        const std::vector<double> q = table.has("q") ? table.column("q") : std::vector<double>(T.size(), num(task, "q", 2.0));
        for (std::size_t i = 0; i < T.size(); ++i) {
            auto& c = curves[q[i]];
            c.q = q[i];
            c.T.push_back(T[i]);
            c.A.push_back(A[i]);
        }
    } else {
        const auto run = run_moments(cfg, threads);
        for (std::size_t i = 0; i < run.T.size(); ++i) {
            auto& c = curves[run.q[i]];
            c.q = run.q[i];
            c.T.push_back(run.T[i]);
            c.A.push_back(run.direct[i]);
        }
    }
    const auto window = count(task, "window", 4);
    json doc = json::object();
    for (auto& [q, c] : curves) {
        if (q == 0.0 && curves.size() > 1) continue;
        try {
            const auto b = dl::beta_estimate(c, window);
            doc[dl::format_real(q)] = {{"beta_hat", b.beta_hat},
                                       {"residual", b.residual},
                                       {"window_start_T", c.T[b.window_start]},
                                       {"label", dl::BetaEstimate::kLabel}};
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("beta: ") + e.what());
        }
    }
    Output(cfg).json_doc(doc);
    return kOk;
}

std::vector<double> energy_grid(const json& task) {
    if (task.contains("E")) return num_list(task, "E");
    return dl::linear_grid(num(task, "E_min"), num(task, "E_max"), num(task, "E_step"));
}

int cmd_transfer_scan(const json& cfg, unsigned threads) {
    const auto& task = section(cfg, "task");
    const auto p = params_of(cfg);
    const auto Es = energy_grid(task);
    const auto Ns = task.contains("N") ? size_list(task, "N") : dl::geometric_sizes(count(task, "N_min", 64), count(task, "N_max", 1024));
    if (Ns.size() < 4) throw ConfigError("transfer-scan: need at least 4 window sizes");
    const auto V = potential_of(cfg, *std::max_element(Ns.begin(), Ns.end()));
    const auto scan = dl::bounded_energy_scan(p, V, Es, Ns, threads);
    std::ostringstream os;
    dl::CsvWriter w(os, {"E", "N", "L", "log_L", "alpha_hat", "class"});
    json summary = {{"bounded", json::array()}, {"power_law", json::array()}, {"exponential", json::array()}};
    for (const auto& row : scan.rows) {
        for (std::size_t i = 0; i < row.table.size(); ++i)
            w.row({dl::format_real(row.E), std::to_string(row.table.N[i]), dl::format_real(row.table.norm(i)),
                   dl::format_real(row.table.log_norm[i]), dl::format_real(row.fit.alpha), dl::to_string(row.fit.kind)});
        summary[dl::to_string(row.fit.kind)].push_back(row.E);
    }
    Output out(cfg);
    out.csv(os.str());
    out.json_side(summary);
    return kOk;
}

json record_json(const dl::CriticalEnergyRecord& r) {
    return {{"E0", r.E0},
            {"class0", std::string(dl::to_string(r.class0))},
            {"class1", std::string(dl::to_string(r.class1))},
            {"eta0", r.eta0},
            {"eta1", r.eta1},
            {"commutator_norm", r.commutator_norm},
            {"eta_gap_ok", r.eta_gap_ok},
            {"identity_cell", r.identity_cell}};
}

json report_json(const dl::AdmissibilityReport& r) {
    return {{"energy", r.energy},
            {"case", dl::to_string(r.case_tag)},
            {"pairing_w", complex_json(r.pairing_w)},
            {"pairing_v", complex_json(r.pairing_v)},
            {"pairing_n", complex_json(r.pairing_n)},
            {"pairing_d", complex_json(r.pairing_d)},
            {"threshold", r.threshold},
            {"admissible", r.admissible}};
}

/// States built from the n = 1 fundamental solutions at E = sqrt(m^2c^4 + pi^2 c^2).
std::vector<std::pair<std::string, dl::CompactState>> spot_states(const dl::DiracParams& p, double E, double h) {
    constexpr double pi = std::numbers::pi;
    const dl::cplx ratio = (p.rest_energy() - E) / (dl::cplx(0, 1) * pi * p.light_speed);
    return {
        {"plus_cos", dl::CompactState::sample(1.0, h, [](double x) { return dl::cplx(std::cos(pi * x)); }, nullptr)},
        {"minus_cos", dl::CompactState::sample(1.0, h, nullptr, [](double x) { return dl::cplx(std::cos(pi * x)); })},
        {"interference",
         dl::CompactState::sample(1.0, h, [&](double x) { return ratio * std::sin(pi * x); },
                                  [](double x) { return dl::cplx(-std::cos(pi * x)); })},
    };
}

int cmd_critical(const json& cfg, unsigned threads) {
    const auto& task = section(cfg, "task");
    const auto p = params_of(cfg);
    const double coupling = num(task, "coupling", 1.0);
    const auto grid = dl::linear_grid(num(task, "E_min", -5.0), num(task, "E_max", 5.0), num(task, "E_step", 1e-3));
    dl::CriticalScanResult scan;
    try {
        dl::CriticalScanOptions opt;
        opt.threads = threads;
        scan = dl::critical_scan(p, coupling, grid, opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    json doc;
    doc["m"] = p.mass;
    doc["c"] = p.light_speed;
    doc["coupling"] = coupling;
    doc["commuting_fraction"] = scan.commuting_fraction;
    doc["records"] = json::array();
    for (const auto& r : scan.records) doc["records"].push_back(record_json(r));
    doc["lambda_windows"] = json::array();
    const int nmax = int(count(task, "n_max", 3));
    for (int n = 1; n <= nmax; ++n) {
        const auto w = dl::lambda_window(p, n);
        doc["lambda_windows"].push_back({{"n", n},
                                         {"lower", json::array({w.lower.lo, w.lower.hi})},
                                         {"upper", json::array({w.upper.lo, nullptr})},
                                         {"coupling_inside", w.contains(coupling)}});
    }
    const double E1 = std::sqrt(p.rest_energy() * p.rest_energy() + std::numbers::pi * std::numbers::pi * p.light_speed * p.light_speed);
    bool spot_ok = true;
    doc["admissibility"] = json::array();
    for (const auto& [name, st] : spot_states(p, E1, num(task, "grid_step", dl::CompactState::kDefaultStep))) {
        const auto r = dl::admissibility(p, E1, st);
        auto j = report_json(r);
        j["state"] = name;
        const bool expected = name != "interference";
        j["expected_admissible"] = expected;
        spot_ok = spot_ok && r.admissible == expected;
        doc["admissibility"].push_back(j);
    }
    Output(cfg).json_doc(doc);
    if (!spot_ok) {
        std::cerr << "critical: admissibility spot checks disagree with the expected verdicts\n";
        return kTolerance;
    }
    return kOk;
}

int cmd_bernoulli(const json& cfg, unsigned threads) {
    const auto& task = section(cfg, "task");
    const auto p = params_of(cfg);
    const double coupling = num(task, "coupling", 1.0);
    double E0;
    if (task.contains("E0")) {
        E0 = num(task, "E0");
    } else {
        const double n = double(count(task, "critical_n", 1));
        E0 = std::sqrt(p.rest_energy() * p.rest_energy() + n * n * std::numbers::pi * std::numbers::pi * p.light_speed * p.light_speed);
    }
    E0 += num(task, "offset", 0.0);
    dl::BernoulliOptions opt;
    opt.p = num(task, "p", 0.5);
    opt.energy_points = count(task, "energy_points", 5);
    opt.threads = threads;
    std::optional<double> C;
    if (task.contains("C_test")) C = num(task, "C_test");
    const auto Ns = task.contains("N") ? size_list(task, "N") : std::vector<std::size_t>{32, 64, 128, 256};
    dl::BernoulliExperiment ex;
    try {
        ex = dl::bernoulli_bound_experiment(p, coupling, E0, num(task, "s", 0.25), Ns, count(task, "trials", 500),
                                            seed_of(cfg), C, opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::ostringstream os;
    dl::CsvWriter w(os, {"N", "failure_fraction", "ci_low", "ci_high"});
    for (const auto& r : ex.rows)
        w.row({std::to_string(r.N), dl::format_real(r.failure_fraction), dl::format_real(r.ci_low), dl::format_real(r.ci_high)});
    Output out(cfg);
    out.csv(os.str());
    json side = {{"E0", E0}, {"C_test", ex.C_test}, {"calibrated", ex.calibrated}, {"trend_ok", ex.trend_ok}};
    side["violations"] = json::array();
    for (const auto& v : ex.violations) side["violations"].push_back({{"N_earlier", v.N_earlier}, {"N_later", v.N_later}, {"z", v.z}});
    out.json_side(side);
    if (!ex.trend_ok && get<bool>(task, "require_trend", true)) {
        std::cerr << "bernoulli: failure fractions increase significantly with N\n";
        return kTolerance;
    }
    return kOk;
}

int cmd_admissibility(const json& cfg, unsigned) {
    const auto& task = section(cfg, "task");
    const auto p = params_of(cfg);
    const double E = num(task, "E", std::numbers::pi);
    dl::CompactState st;
    if (task.contains("state")) {
        try {
            st = dl::load_compact_state(get<std::string>(task, "state"));
        } catch (const std::runtime_error& e) {
            throw ConfigError(e.what());
        }
    } else {
        const std::string name = get<std::string>(task, "builtin", std::string("interference"));
        bool found = false;
        for (auto& [n, s] : spot_states(p, E, num(task, "grid_step", dl::CompactState::kDefaultStep)))
            if (n == name) {
                st = s;
                found = true;
            }
        if (!found) throw ConfigError("admissibility: unknown builtin state '" + name + "'");
    }
    dl::AdmissibilityOptions opt;
    opt.rel_tol = num(task, "rel_tol", 1e-9);
    opt.level = num(task, "level", 0.0);
    try {
        Output(cfg).json_doc(report_json(dl::admissibility(p, E, st, opt)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diraclab: transfer matrices, resolvents and transport moments of 1D Dirac operators"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> sets;
    unsigned threads = 0;

    using Handler = int (*)(const json&, unsigned);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"moments", "Abel moments by eigenbasis and Green's-function routes", cmd_moments},
        {"beta", "Transport exponent from a moment curve", cmd_beta},
        {"transfer-scan", "Window norms and growth classes over an energy grid", cmd_transfer_scan},
        {"critical", "Critical energies of the two-cell continuum model", cmd_critical},
        {"bernoulli", "Large-norm frequencies of Bernoulli words near a critical energy", cmd_bernoulli},
        {"admissibility", "Pairing test of a compactly supported state", cmd_admissibility},
    };
    Handler chosen = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", sets, "Override a config value: key.path=value (value parsed as JSON)");
        sub->add_option("--threads", threads, "Worker threads (default: DIRACLAB_THREADS or all cores)");
        sub->callback([&chosen, fn = fn] { chosen = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    if (threads == 0) threads = dl::default_thread_count();
    try {
        const json cfg = load_config(config_path, sets);
        return chosen(cfg, threads);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const dl::NumericalGuardError& e) {
        std::cerr << "numerical guard: " << e.what() << "\n";
        return kGuard;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
