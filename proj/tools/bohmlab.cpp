// bohmlab: list the builtin solution families, generate field tables,
// verify the defining identities, propagate numerically against the closed
// forms, and sweep parameters for derived scalars.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 numeric-domain error.

#include "bohmlab/families.hpp"
#include "bohmlab/io.hpp"
#include "bohmlab/propagate.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bohmlab;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string family, f_expr, mu_expr = "0", config_file, grid_spec;
    std::vector<std::string> sets;  // inline "key=value" parameter overrides
    double hbar = 1.0, mass = 1.0;
    double tol = 1e-6;
    std::string out_dir;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_source) {
    if (with_source) {
        cmd->add_option("--family", o.family, "builtin family id");
        cmd->add_option("--f-expr", o.f_expr, "generating function f(x, t)");
        cmd->add_option("--mu-expr", o.mu_expr, "phase offset mu(t)")->capture_default_str();
        cmd->add_option("--config", o.config_file, "family config JSON file");
        cmd->add_option("--set", o.sets, "parameter override key=value (repeatable)");
    }
    cmd->add_option("--grid", o.grid_spec, "xmin,xmax,nx,tmin,tmax,nt");
    cmd->add_option("--hbar", o.hbar, "reduced Planck constant")->capture_default_str();
    cmd->add_option("--mass", o.mass, "particle mass")->capture_default_str();
    cmd->add_option("--tol", o.tol, "pass/fail tolerance")->capture_default_str();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--format", o.format, "csv or json")->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
}

Grid parse_grid(const std::string& spec) {
    Grid g;
    char c1, c2, c3, c4, c5;
    std::istringstream is(spec);
    if (!(is >> g.x_min >> c1 >> g.x_max >> c2 >> g.nx >> c3 >> g.t_min >> c4 >>
          g.t_max >> c5 >> g.nt) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',')
        throw UsageError("--grid expects xmin,xmax,nx,tmin,tmax,nt");
    std::string rest;
    if (is >> rest) throw UsageError("--grid expects exactly six fields");
    g.validate();
    return g;
}

json parse_set_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);  // expression strings (e.g. zeta) pass through
    }
}

FamilyConfig config_of(const CommonOpts& o) {
    FamilyConfig cfg;
    if (!o.config_file.empty()) {
        std::ifstream in(o.config_file);
        if (!in) throw UsageError("cannot open config file: " + o.config_file);
        json j;
        in >> j;
        cfg = FamilyConfig::from_json(j);
        if (!o.family.empty() && o.family != cfg.family)
            throw UsageError("--family disagrees with --config");
    } else {
        cfg.family = o.family;
    }
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--set expects key=value, got: " + kv);
        cfg.params[kv.substr(0, eq)] = parse_set_value(kv.substr(eq + 1));
    }
    return cfg;
}

struct BundleSource {
    SolutionBundle bundle;
    json meta;
};

BundleSource make_bundle(const CommonOpts& o) {
    const bool have_family = !o.family.empty() || !o.config_file.empty();
    const bool have_fexpr = !o.f_expr.empty();
    if (have_family == have_fexpr)
        throw UsageError("supply exactly one of --family/--config or --f-expr");

    PhysicalConstants consts{o.hbar, o.mass};
    consts.validate();
    std::optional<Grid> grid;
    if (!o.grid_spec.empty()) grid = parse_grid(o.grid_spec);

    BundleSource src;
    if (have_family) {
        const FamilyConfig cfg = config_of(o);
        src.bundle = build(cfg, consts, grid);
        src.meta["config"] = cfg.to_json();
    } else {
        Expr f = parse_expr(o.f_expr);
        Expr mu = parse_expr(o.mu_expr);
        for (const auto& [name, value] :
             Bindings{{"hbar", consts.hbar}, {"m", consts.mass}}) {
            f = f.substituted(name, Expr(value));
            mu = mu.substituted(name, Expr(value));
        }
        for (const std::string& v : mu.free_vars())
            if (v != "t" && v != "pi")
                throw UsageError("--mu-expr must depend on t only");
        src.bundle = bundle_from_f(f, mu, consts, grid ? *grid : Grid{});
        src.meta["f"] = o.f_expr;
        src.meta["mu"] = o.mu_expr;
    }
    src.meta["hbar"] = consts.hbar;
    src.meta["mass"] = consts.mass;
    src.meta["grid"] = to_json(src.bundle.default_grid);
    src.meta["vanishing_bohm"] = src.bundle.vanishing_bohm;
    return src;
}

fs::path out_dir_of(const CommonOpts& o) {
    const fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------- list

int cmd_list(bool as_json, const std::string& section) {
    json rows = json::array();
    for (const FamilyDescriptor& d : list_families()) {
        if (!section.empty()) {
            const std::string root = d.section.substr(0, d.section.find('.'));
            if (section != d.section && section != root) continue;
        }
        json params = json::array();
        for (const ParamSpec& p : d.parameters)
            params.push_back({{"name", p.name}, {"default", p.default_value},
                              {"doc", p.doc}});
        rows.push_back({{"id", d.id}, {"section", d.section},
                        {"vanishing_bohm", d.vanishing_bohm},
                        {"parameters", params}, {"summary", d.summary}});
    }
    if (as_json) {
        std::cout << rows.dump(2) << "\n";
        return 0;
    }
    for (const json& r : rows) {
        std::ostringstream ps;
        for (const json& p : r["parameters"])
            ps << p["name"].get<std::string>() << "=" << p["default"].get<std::string>()
               << " ";
        std::printf("%-28s %-6s %-3s %s\n", r["id"].get<std::string>().c_str(),
                    r["section"].get<std::string>().c_str(),
                    r["vanishing_bohm"].get<bool>() ? "yes" : "no", ps.str().c_str());
    }
    return 0;
}

// ------------------------------------------------------------ generate

Field sample_field(const SolutionBundle& b, const Fn2& fn, const Grid& g) {
    Field out(g);
    for (int it = 0; it < g.nt; ++it)
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x(ix), t = g.t(it);
            if (b.is_excluded(x, t)) {
                out.exclude(it, ix);
                continue;
            }
            try {
                out.at(it, ix) = fn(x, t);
            } catch (const DomainError&) {
                out.exclude(it, ix);
            }
        }
    return out;
}

int cmd_generate(const CommonOpts& o) {
    const BundleSource src = make_bundle(o);
    const SolutionBundle& b = src.bundle;
    const Grid g = b.default_grid;

    const Fn2 psi_re = [&b](double x, double t) {
        double re = 0, im = 0;
        b.psi(x, t, re, im);
        return re;
    };
    const Fn2 psi_im = [&b](double x, double t) {
        double re = 0, im = 0;
        b.psi(x, t, re, im);
        return im;
    };
    const std::vector<std::pair<std::string, Fn2>> fields = {
        {"A", b.A}, {"S", b.S}, {"V", b.V}, {"VB", b.VB},
        {"psi_re", psi_re}, {"psi_im", psi_im}};

    const fs::path dir = out_dir_of(o);
    if (o.format == "json") {
        json out = {{"meta", src.meta}};
        for (const auto& [name, fn] : fields)
            out["fields"][name] = to_json(sample_field(b, fn, g));
        write_text(dir / "generate.json", out.dump(2) + "\n");
        std::cout << "wrote " << (dir / "generate.json").string() << "\n";
    } else {
        for (const auto& [name, fn] : fields) {
            std::ofstream out(dir / (name + ".csv"));
            write_csv(out, sample_field(b, fn, g));
        }
        write_text(dir / "metadata.json", src.meta.dump(2) + "\n");
        std::cout << "wrote " << fields.size() << " field tables to " << dir.string()
                  << "\n";
    }
    return 0;
}

// -------------------------------------------------------------- verify

Expr oscillator_two_point_action(double mass, double omega) {
    const Expr xf = Expr::var("x_f"), xi = Expr::var("x_i"), t = Expr::var("t");
    const Expr wt = Expr(omega) * t;
    return Expr(mass * omega) * ((pow(xf, 2.0) + pow(xi, 2.0)) * cos(wt) -
                                 2.0 * xf * xi) /
           (2.0 * sin(wt));
}

int cmd_verify(const CommonOpts& o, bool with_vvm) {
    const BundleSource src = make_bundle(o);
    const SolutionBundle& b = src.bundle;
    const Grid g = b.default_grid;

    struct Row {
        std::string name;
        ResidualReport rep;
        bool pass;
    };
    std::vector<Row> rows;
    const auto add = [&](const std::string& name, const ResidualReport& r) {
        rows.push_back({name, r, r.linf <= o.tol});
    };
    add("continuity", continuity_residual(b, g));
    add("qhje", qhje_residual(b, g));
    add("schrodinger", schrodinger_residual(b, g));
    add("bohm_consistency", bohm_consistency_residual(b, g));

    json out = {{"meta", src.meta}, {"tol", o.tol}};
    bool all_pass = true;
    for (const Row& r : rows) {
        all_pass = all_pass && r.pass;
        std::printf("%-18s linf=%.3e l2=%.3e order=%.2f excluded=%.3f %s\n",
                    r.name.c_str(), r.rep.linf, r.rep.l2, r.rep.order,
                    r.rep.excluded_fraction, r.pass ? "pass" : "FAIL");
        json jr = to_json(r.rep);
        jr["pass"] = r.pass;
        out["checks"][r.name] = jr;
    }

    if (with_vvm) {
        static const std::set<std::string> kOscillators = {
            "oscillator_vvm", "oscillator_cos_amplitude",
            "oscillator_linear_amplitude"};
        if (!kOscillators.count(b.family_id))
            throw UsageError("--vvm applies to the oscillator families only");
        const FamilyConfig cfg = config_of(o);
        const double omega = cfg.params.value("omega", 1.0);
        const double x_i = cfg.params.value("x_i", 1.0);
        const VvmReport v = vvm_check(oscillator_two_point_action(o.mass, omega),
                                      b.A, b.consts, g, x_i, b.exclusion);
        all_pass = all_pass && v.matches;
        std::printf("%-18s matches=%s ratio=%.6g rel_variation=%.3e %s\n", "vvm",
                    v.matches ? "true" : "false", v.ratio, v.rel_variation,
                    v.matches ? "pass" : "FAIL");
        out["checks"]["vvm"] = {{"matches", v.matches}, {"ratio", v.ratio},
                                {"rel_variation", v.rel_variation}};
    }

    out["pass"] = all_pass;
    if (!o.out_dir.empty())
        write_text(out_dir_of(o) / "verify.json", out.dump(2) + "\n");
    return all_pass ? 0 : 1;
}

// ----------------------------------------------------------- propagate

int cmd_propagate(const CommonOpts& o, double dt, int absorb, int n_snapshots,
                  const std::string& metric_name, double window, bool gated) {
    const BundleSource src = make_bundle(o);
    const SolutionBundle& b = src.bundle;

    PropagationSetup setup;
    setup.grid = b.default_grid;
    setup.dt = dt;
    setup.absorb_cells = absorb;
    setup.consts = b.consts;

    CompareMetric metric = CompareMetric::Abs;
    if (metric_name == "density") metric = CompareMetric::Density;
    else if (metric_name == "phase") metric = CompareMetric::PhaseGauged;
    else if (metric_name != "abs") throw UsageError("--metric expects abs|density|phase");

    const double t0 = setup.grid.t_min, t1 = setup.grid.t_max;
    const auto psi0 = sample_bundle(b, setup, t0);
    const PropagationResult r = split_step(psi0, b.V, setup, t0, t1, n_snapshots);
    const ResidualReport rep = compare_evolution(b, r, setup, metric, window);

    std::printf("propagate %s: linf=%.3e l2=%.3e norm_drift=%.3e%s\n",
                b.family_id.empty() ? "f-expr" : b.family_id.c_str(), rep.linf,
                rep.l2, r.norm_drift, r.dt_warning ? " (dt warning)" : "");

    if (!o.out_dir.empty()) {
        const fs::path dir = out_dir_of(o);
        json report = to_json(rep);
        report["meta"] = src.meta;
        report["metric"] = metric_name;
        report["window"] = window;
        write_text(dir / "report.json", report.dump(2) + "\n");
        if (o.format == "json") {
            write_text(dir / "snapshots.json", to_json(r, setup).dump(2) + "\n");
        } else {
            std::ofstream out(dir / "snapshots.csv");
            write_csv(out, r, setup);
        }
    }
    return (gated && rep.l2 > o.tol) ? 1 : 0;
}

// --------------------------------------------------------------- sweep

int worker_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("BOHMLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<std::size_t>(n, jobs));
}

int cmd_sweep(const CommonOpts& o, const std::string& param,
              const std::vector<double>& values, double x0) {
    if (o.family.empty() && o.config_file.empty())
        throw UsageError("sweep needs --family or --config");
    if (values.empty()) throw UsageError("sweep needs at least one --values entry");
    const FamilyConfig base = config_of(o);
    const PhysicalConstants consts{o.hbar, o.mass};
    std::optional<Grid> grid;
    if (!o.grid_spec.empty()) grid = parse_grid(o.grid_spec);

    struct RowResult {
        double acceleration = 0.0, fit_rms = 0.0;
        std::string error;
    };
    std::vector<RowResult> results(values.size());
    std::atomic<std::size_t> next{0};
    const auto run_one = [&](std::size_t i) {
        FamilyConfig cfg = base;
        cfg.params[param] = values[i];
        const SolutionBundle b = build(cfg, consts, grid);
        const Grid g = b.default_grid;
        const Trajectory traj =
            bohmian_trajectory(b.Sx, x0, g.t_min, g.t_max, consts.mass);
        results[i].acceleration = fit_acceleration(traj, &results[i].fit_rms);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < worker_count(values.size()); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < values.size(); i = next++) {
                try {
                    run_one(i);
                } catch (const std::exception& e) {
                    results[i].error = e.what();
                }
            }
        });
    for (std::thread& t : pool) t.join();

    for (const RowResult& r : results)
        if (!r.error.empty()) throw NumericsError("sweep point failed: " + r.error);

    std::ostringstream csv;
    csv << param << ",acceleration,fit_rms\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        char line[96];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.3e\n", values[i],
                      results[i].acceleration, results[i].fit_rms);
        csv << line;
    }
    std::cout << csv.str();
    if (!o.out_dir.empty()) write_text(out_dir_of(o) / "sweep.csv", csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"manufactured-solution laboratory for the 1D Schrodinger equation"};
    app.require_subcommand(1);

    bool list_json = false;
    std::string list_section;
    CLI::App* list = app.add_subcommand("list", "catalog of builtin families");
    list->add_flag("--json", list_json, "machine-readable output");
    list->add_option("--section", list_section, "filter by catalog section");

    CommonOpts gen_o, ver_o, prop_o, sweep_o;
    CLI::App* gen = app.add_subcommand("generate", "export A, S, psi, V, V_B tables");
    add_common(gen, gen_o, true);

    bool with_vvm = false;
    CLI::App* ver = app.add_subcommand("verify", "check the defining identities");
    add_common(ver, ver_o, true);
    ver->add_flag("--vvm", with_vvm, "also check the Van Vleck-Morette amplitude");

    double dt = 1e-3, window = 0.0;
    int absorb = 0, n_snapshots = 4;
    std::string metric = "abs";
    CLI::App* prop = app.add_subcommand("propagate", "split-step vs closed form");
    add_common(prop, prop_o, true);
    prop->add_option("--dt", dt, "time step")->capture_default_str();
    prop->add_option("--absorb", absorb, "absorber width per edge, in cells")->capture_default_str();
    prop->add_option("--snapshots", n_snapshots, "comparison snapshots")->capture_default_str();
    prop->add_option("--metric", metric, "abs, density or phase")->capture_default_str();
    prop->add_option("--window", window, "edge exclusion fraction")->capture_default_str();

    std::string sweep_param;
    std::vector<double> sweep_values;
    double sweep_x0 = 0.0;
    CLI::App* sweep = app.add_subcommand("sweep", "derived scalars over a parameter");
    add_common(sweep, sweep_o, true);
    sweep->add_option("--param", sweep_param, "parameter to sweep")->required();
    sweep->add_option("--values", sweep_values, "parameter values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--x0", sweep_x0, "trajectory launch point")->capture_default_str();

    try {
        app.parse(argc, argv);
        if (list->parsed()) return cmd_list(list_json, list_section);
        if (gen->parsed()) return cmd_generate(gen_o);
        if (ver->parsed()) return cmd_verify(ver_o, with_vvm);
        if (prop->parsed())
            return cmd_propagate(prop_o, dt, absorb, n_snapshots, metric, window,
                                 prop->count("--tol") > 0);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_param, sweep_values, sweep_x0);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FamilyError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
}
