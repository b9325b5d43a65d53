// Command-line front end.
//
//   dynkin solve|symmetric|voi|path|mc|deviations|sweep [flags]
//
// Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 verification
// failure. Flags may also come from a flat key=value file (--config);
// command-line values win.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include <dynkin/equilibrium.hpp>
#include <dynkin/model.hpp>
#include <dynkin/report.hpp>
#include <dynkin/simulator.hpp>
#include <dynkin/sweep.hpp>
#include <dynkin/symmetric.hpp>
#include <dynkin/verifier.hpp>
#include <dynkin/version.hpp>

namespace {

using namespace dynkin;

enum Exit { kOk = 0, kInvalid = 2, kNumerical = 3, kVerification = 4 };

struct Options {
    ModelParams model = base_case();
    std::optional<double> pi, phi;
    std::uint64_t seed = 1;
    std::size_t paths = 100000;
    double dt = 1e-4;
    double horizon = 50.0;
    unsigned threads = 0;
    std::string format;  // empty = command default
    std::string out;
    std::string manifest;
    int grid = 99;
    int curve = 0;
    std::string param = "mu1";
    std::optional<double> from, to;
    int points = kDefaultSweepPoints;
    bool full = false;
    std::string measure = "physical";
    std::uint64_t path_index = 0;
};

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct VerificationFailed {};

Measure parse_measure(const std::string& s) {
    if (s == "tilted0")
        return Measure::tilted0;
    if (s == "tilted1")
        return Measure::tilted1;
    if (s == "physical")
        return Measure::physical;
    throw InvalidInput("unknown measure '" + s + "' (tilted0, tilted1, physical)");
}

class Runner {
public:
    Runner(std::string command, Options opt) : cmd_(std::move(command)), o_(std::move(opt)) {
        if (o_.pi && o_.phi)
            throw InvalidInput("give exactly one of --pi and --phi");
        if (o_.phi)
            o_.model.prior = ratio_to_belief_checked(*o_.phi);
        else if (o_.pi)
            o_.model.prior = *o_.pi;
        else if (cmd_ == "path")
            o_.model.prior = 0.35;
        validate(o_.model);
        if (!o_.format.empty() && o_.format != "json" && o_.format != "csv")
            throw InvalidInput("--format must be json or csv");
    }

    int run() {
        if (cmd_ == "solve")
            return solve();
        if (cmd_ == "symmetric")
            return symmetric();
        if (cmd_ == "voi")
            return voi();
        if (cmd_ == "path")
            return path();
        if (cmd_ == "mc")
            return mc();
        if (cmd_ == "deviations")
            return deviations();
        if (cmd_ == "sweep")
            return sweep();
        throw InvalidInput("unknown command");
    }

private:
    static double ratio_to_belief_checked(double phi) {
        if (!(phi > 0.0))
            throw InvalidInput("--phi must be positive");
        return ratio_to_belief(phi);
    }

    bool csv(const char* dflt) const { return (o_.format.empty() ? std::string(dflt) : o_.format) == "csv"; }

    double phi() const { return o_.phi ? *o_.phi : belief_to_ratio(o_.model.prior); }

    SimConfig sim() const {
        SimConfig c;
        c.dt = o_.dt;
        c.horizon = o_.horizon;
        c.n_paths = o_.paths;
        c.seed = o_.seed;
        c.threads = o_.threads;
        try {
            c.barrier = 1.0;
            validate(c);
        } catch (const std::invalid_argument& e) {
            throw InvalidInput(e.what());
        }
        return c;
    }

    json meta() const {
        json m = {{"version", kVersion}, {"command", cmd_}, {"params", to_json(o_.model)}};
        m["params"]["phi"] = phi();
        m["simulation"] = {{"seed", o_.seed}, {"paths", o_.paths}, {"dt", o_.dt}, {"horizon", o_.horizon}};
        return m;
    }

    std::string meta_csv() const {
        std::ostringstream s;
        const auto& p = o_.model;
        s << "# dynkin " << kVersion << " command=" << cmd_ << '\n'
          << "# mu0=" << fmt17(p.mu0) << " mu1=" << fmt17(p.mu1) << " sigma=" << fmt17(p.sigma)
          << " eps=" << fmt17(p.eps) << " x=" << fmt17(p.x0) << " pi=" << fmt17(p.prior)
          << " phi=" << fmt17(phi()) << '\n'
          << "# seed=" << o_.seed << " paths=" << o_.paths << " dt=" << fmt17(o_.dt)
          << " horizon=" << fmt17(o_.horizon) << '\n';
        return s.str();
    }

    void emit(const std::string& text) const {
        if (o_.out.empty()) {
            std::cout << text;
            std::cout.flush();
            return;
        }
        std::ofstream f(o_.out, std::ios::binary);
        if (!f)
            throw InvalidInput("cannot open output file " + o_.out);
        f << text;
    }

    void emit_manifest(const json& m) const {
        if (o_.manifest.empty())
            return;
        std::ofstream f(o_.manifest, std::ios::binary);
        if (!f)
            throw InvalidInput("cannot open manifest file " + o_.manifest);
        f << m.dump(2) << '\n';
    }

    std::string data_file() const { return o_.out.empty() ? "-" : o_.out; }

    int solve() {
        const auto sol = build_solution(o_.model);
        const auto qvi = check_qvi(sol);
        if (o_.curve > 0) {
            const auto rows = value_curves(sol, open_unit_grid(o_.curve));
            std::ostringstream s;
            s << meta_csv();
            write_values_csv(s, rows);
            emit(s.str());
            emit_manifest(plot_manifest("Value functions", "pi", "value per unit x",
                                        {{"uninformed", data_file(), "pi", "value_uninformed"},
                                         {"V0", data_file(), "pi", "V0"},
                                         {"V1", data_file(), "pi", "V1"}},
                                        {{"x", sol.a(), "a"}, {"x", sol.b(), "b"}}));
        } else if (csv("json")) {
            std::ostringstream s;
            s << meta_csv() << "A,B,a,b,beta1,beta2,delta,C1,C2,D1,D2,qvi_pass\n";
            for (double v : {sol.A, sol.B, sol.a(), sol.b(), sol.exps.beta1, sol.exps.beta2, sol.delta, sol.C1,
                             sol.C2, sol.D1, sol.D2})
                s << fmt17(v) << ',';
            s << (qvi.all_pass() ? "true" : "false") << '\n';
            emit(s.str());
        } else {
            json j = meta();
            j["solution"] = to_json(sol);
            const double x = o_.model.x0, ph = phi();
            j["values_at_phi"] = {{"phi", ph}, {"u", x * sol.V(ph)}, {"u0", x * sol.V0(ph)},
                                  {"u1", x * sol.V1(ph)}, {"uninformed", x * sol.uninformed_value(ph)}};
            j["qvi"] = to_json(qvi);
            emit(j.dump(2) + "\n");
        }
        return qvi.all_pass() ? kOk : kVerification;
    }

    int symmetric() {
        const auto sym = solve_symmetric(o_.model);
        if (csv("json")) {
            std::ostringstream s;
            s << meta_csv() << "As,Bs,a,b,Dh1,Dh2\n";
            s << fmt17(sym.As) << ',' << fmt17(sym.Bs) << ',' << fmt17(sym.a()) << ',' << fmt17(sym.b()) << ','
              << fmt17(sym.Dh1) << ',' << fmt17(sym.Dh2) << '\n';
            emit(s.str());
        } else {
            json j = meta();
            j["symmetric"] = to_json(sym);
            emit(j.dump(2) + "\n");
        }
        return kOk;
    }

    int voi() {
        if (o_.grid < 1)
            throw InvalidInput("--grid must be at least 1");
        const auto asym = build_solution(o_.model);
        const auto sym = solve_symmetric(o_.model);
        const auto curve = value_of_information(asym, sym, open_unit_grid(o_.grid));
        if (csv("csv")) {
            std::ostringstream s;
            s << meta_csv() << "pi,U_sym,U_asym,diff\n";
            for (const auto& r : curve.rows)
                s << fmt17(r.pi) << ',' << fmt17(r.u_sym) << ',' << fmt17(r.u_asym) << ',' << fmt17(r.diff) << '\n';
            emit(s.str());
        } else {
            json j = meta();
            j["orientation"] = "diff = U_sym - U_asym";
            json rows = json::array();
            for (const auto& r : curve.rows)
                rows.push_back({{"pi", r.pi}, {"U_sym", r.u_sym}, {"U_asym", r.u_asym}, {"diff", r.diff}});
            j["rows"] = rows;
            emit(j.dump(2) + "\n");
        }
        emit_manifest(plot_manifest("Value of information", "pi", "U/x",
                                    {{"symmetric", data_file(), "pi", "U_sym"},
                                     {"asymmetric", data_file(), "pi", "U_asym"},
                                     {"U_sym - U_asym", data_file(), "pi", "diff"}},
                                    {{"x", sym.a(), "a (symmetric)"}, {"x", sym.b(), "b (symmetric)"}}));
        return kOk;
    }

    int path() {
        if (!o_.format.empty() && o_.format != "csv")
            throw InvalidInput("path output is CSV only");
        const auto sol = build_solution(o_.model);
        SimConfig c = sim();
        c.n_paths = 1;
        std::ostringstream s;
        s << meta_csv();
        if (o_.full) {
            c.measure = parse_measure(o_.measure);
            c.barrier = sol.B;
            auto tr = simulate_phi(c, o_.model, o_.path_index);
            reflect(tr, sol.B);
            write_trajectory_csv(s, tr);
        } else {
            const auto fig = sample_path_figure(sol, c, o_.path_index);
            write_figure_path_csv(s, fig);
        }
        emit(s.str());
        emit_manifest(plot_manifest("Adjusted belief and stopping intensity", "t", "PiStar / Gamma",
                                    {{"PiStar", data_file(), "t", "PiStar"}, {"Gamma", data_file(), "t", "Gamma"}},
                                    {{"y", sol.a(), "a"}, {"y", sol.b(), "b"}}));
        return kOk;
    }

    int mc() {
        const auto sol = build_solution(o_.model);
        const auto rows = mc_oracle_checks(sol, phi(), sim());
        bool ok = true;
        for (const auto& r : rows)
            ok = ok && r.pass;
        if (csv("json")) {
            std::ostringstream s;
            s << meta_csv() << "check,phi,estimate,stderr,oracle,tolerance,bias_bound,censored_fraction,pass\n";
            for (const auto& r : rows)
                s << r.check << ',' << fmt17(r.phi) << ',' << fmt17(r.estimate) << ',' << fmt17(r.std_error) << ','
                  << fmt17(r.oracle) << ',' << fmt17(r.tolerance) << ',' << fmt17(r.bias_bound) << ','
                  << fmt17(r.censored_fraction) << ',' << (r.pass ? "true" : "false") << '\n';
            emit(s.str());
        } else {
            json j = meta();
            json arr = json::array();
            for (const auto& r : rows)
                arr.push_back(to_json(r, o_.model));
            j["checks"] = arr;
            j["all_pass"] = ok;
            emit(j.dump(2) + "\n");
        }
        return ok ? kOk : kVerification;
    }

    int deviations() {
        const auto sol = build_solution(o_.model);
        auto report = deviations_player1(sol, default_aprime_grid(sol), default_phi_grid(sol));
        const double ph = (o_.phi || o_.pi) ? phi() : 0.6;
        const auto p2 = deviations_player2(sol, default_bprime_grid(sol), ph, sim());
        report.rows.insert(report.rows.end(), p2.rows.begin(), p2.rows.end());
        if (csv("json")) {
            std::ostringstream s;
            s << meta_csv()
              << "player,strategy,parameter,phi,equilibrium,deviation,improvement,raw_improvement,stderr,"
                 "raw_stderr,tolerance,method,pass\n";
            for (const auto& r : report.rows)
                s << r.player << ',' << r.strategy << ',' << fmt17(r.parameter) << ',' << fmt17(r.phi) << ','
                  << fmt17(r.equilibrium) << ',' << fmt17(r.deviation) << ',' << fmt17(r.improvement) << ','
                  << fmt17(r.raw_improvement) << ',' << fmt17(r.std_error) << ',' << fmt17(r.raw_std_error) << ','
                  << fmt17(r.tolerance) << ','
                  << r.method << ',' << (r.pass ? "true" : "false") << '\n';
            emit(s.str());
        } else {
            json j = meta();
            json arr = json::array();
            for (const auto& r : report.rows)
                arr.push_back(to_json(r));
            j["deviations"] = arr;
            j["all_pass"] = report.all_pass();
            j["limitation"] = "sampled strategy classes can refute but not prove optimality";
            emit(j.dump(2) + "\n");
        }
        return report.all_pass() ? kOk : kVerification;
    }

    int sweep() {
        SweepParam which;
        try {
            which = parse_sweep_param(o_.param);
        } catch (const std::invalid_argument& e) {
            throw InvalidInput(e.what());
        }
        if (o_.points < 1)
            throw InvalidInput("--points must be at least 1");
        const auto range = default_range(which);
        const double lo = o_.from.value_or(range.lo), hi = o_.to.value_or(range.hi);
        if (log_spaced(which) && !(lo > 0.0 && hi > 0.0))
            throw InvalidInput("sigma and eps sweeps need positive end points");
        SweepSpec spec{which, sweep_grid(which, lo, hi, o_.points), o_.model, o_.threads};
        const auto res = run_sweep(spec);
        if (csv("csv")) {
            std::ostringstream s;
            s << meta_csv();
            write_sweep_csv(s, res);
            emit(s.str());
        } else {
            json j = meta();
            json rows = json::array();
            for (const auto& r : res.rows)
                rows.push_back({{"param", to_string(which)}, {"value", r.value}, {"A", r.A}, {"B", r.B},
                                {"a", r.a}, {"b", r.b}, {"status", r.status}});
            j["rows"] = rows;
            emit(j.dump(2) + "\n");
        }
        double base = 0.0;
        switch (which) {
        case SweepParam::mu0: base = o_.model.mu0; break;
        case SweepParam::mu1: base = o_.model.mu1; break;
        case SweepParam::sigma: base = o_.model.sigma; break;
        case SweepParam::eps: base = o_.model.eps; break;
        }
        emit_manifest(plot_manifest(std::string("Optimal boundaries vs ") + to_string(which), to_string(which),
                                    "boundary", {{"a", data_file(), "value", "a"}, {"b", data_file(), "value", "b"}},
                                    {{"x", base, "base case"}}));
        return kOk;
    }

    std::string cmd_;
    Options o_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver and simulator for the linear-payoff Dynkin game with asymmetric drift information"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "Flat key=value file with the same keys as the flags");
    app.require_subcommand(1, 1);
    app.fallthrough();

    Options o;
    app.add_option("--mu0", o.model.mu0, "Low drift (< 0)")->capture_default_str();
    app.add_option("--mu1", o.model.mu1, "High drift (> 0)")->capture_default_str();
    app.add_option("--sigma", o.model.sigma, "Volatility (> 0)")->capture_default_str();
    app.add_option("--eps", o.model.eps, "Payoff premium of the informed player (> 0)")->capture_default_str();
    app.add_option("--x", o.model.x0, "Initial asset level (> 0)")->capture_default_str();
    auto* pi_opt = app.add_option("--pi", o.pi, "Prior probability of the high drift");
    auto* phi_opt = app.add_option("--phi", o.phi, "Initial likelihood ratio pi/(1-pi)");
    pi_opt->excludes(phi_opt);
    app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
    app.add_option("--paths", o.paths, "Monte Carlo paths")->capture_default_str();
    app.add_option("--dt", o.dt, "Time step")->capture_default_str();
    app.add_option("--horizon", o.horizon, "Censoring horizon")->capture_default_str();
    app.add_option("--threads", o.threads, "Worker threads (0 = all cores); results do not depend on it");
    app.add_option("--format", o.format, "json or csv");
    app.add_option("--out", o.out, "Output file (default stdout)");
    app.add_option("--manifest", o.manifest, "Write a plot manifest (JSON) here");
    app.add_option("--grid", o.grid, "voi: number of interior pi points")->capture_default_str();
    app.add_option("--curve", o.curve, "solve: emit value curves on this many pi points");
    app.add_option("--param", o.param, "sweep: mu0, mu1, sigma or eps")->capture_default_str();
    app.add_option("--from", o.from, "sweep: first value");
    app.add_option("--to", o.to, "sweep: last value");
    app.add_option("--points", o.points, "sweep: number of values")->capture_default_str();
    app.add_flag("--full", o.full, "path: export t,X,Phi,PhiB,PiStar,Gamma,L over the whole horizon");
    app.add_option("--measure", o.measure, "path --full: tilted0, tilted1 or physical")->capture_default_str();
    app.add_option("--path-index", o.path_index, "path: index of the simulated path")->capture_default_str();

    const std::pair<const char*, const char*> commands[] = {
        {"solve", "Equilibrium thresholds, coefficients and QVI check"},
        {"symmetric", "Thresholds of the full-information benchmark"},
        {"voi", "Value of information over a pi grid"},
        {"path", "Simulated adjusted-belief path until the lower threshold"},
        {"mc", "Monte Carlo estimates against the closed-form values"},
        {"deviations", "Unilateral deviation checks for both players"},
        {"sweep", "Thresholds over a grid of one parameter"},
    };
    for (const auto& [name, desc] : commands)
        app.add_subcommand(name, desc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }

    try {
        Runner r(app.get_subcommands().front()->get_name(), o);
        return r.run();
    } catch (const invalid_parameters& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
}
