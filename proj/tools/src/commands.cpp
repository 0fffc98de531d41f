#include "nslab/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nslab/analysis.hpp"
#include "nslab/cli/output.hpp"
#include "nslab/cli/scenario.hpp"
#include "nslab/regions.hpp"
#include "nslab/regularizers.hpp"
#include "nslab/resolvers.hpp"

namespace nslab::cli {

using nlohmann::json;

namespace {

struct CommonFlags {
    std::string scenario;
    std::string out;
    std::string format;
    long long seed = 0;  // reserved
    unsigned threads = 0;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    std::optional<double> T;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--scenario", f.scenario, "Scenario file")->required();
    sub->add_option("--out", f.out, "Output path (default: output.path, else stdout)");
    sub->add_option("--format", f.format, "csv or json (default: output.format)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", f.seed, "Reserved; runs are deterministic");
    sub->add_option("--threads", f.threads, "Worker threads for converge (0: hardware)");
    sub->add_option("--alpha", f.alpha, "Override run.alpha");
    sub->add_option("--epsilon", f.epsilon, "Override run.epsilon");
    sub->add_option("--T", f.T, "Override run.T");
}

Scenario load(const CommonFlags& f) {
    json doc = read_scenario_document(f.scenario);
    if (f.alpha || f.epsilon || f.T) {
        json& run = doc["run"];
        if (run.is_null()) run = json::object();
        if (!run.is_object()) throw ValidationError("run", "expected a table");
        if (f.alpha) run["alpha"] = *f.alpha;
        if (f.epsilon) {
            run.erase("kappa");
            run["epsilon"] = *f.epsilon;
        }
        if (f.T) run["T"] = *f.T;
    }
    return validate_scenario(doc);
}

std::string format_of(const CommonFlags& f, const Scenario& sc) {
    return f.format.empty() ? sc.output.format : f.format;
}

void emit(const CommonFlags& f, const Scenario& sc, const std::string& content, std::ostream& out) {
    const std::string path = f.out.empty() ? sc.output.path : f.out;
    if (path.empty() || path == "-") {
        out << content;
    } else {
        write_atomic(path, content);
    }
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string vec_text(const Vec& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + short_num(v[i]);
    return s + "]";
}

std::string_view stop_name(SlideStop s) {
    switch (s) {
        case SlideStop::Completed: return "completed";
        case SlideStop::DomainExit: return "domain-exit";
        case SlideStop::SlidingExit: return "sliding-exit";
    }
    return "unknown";
}

json run_params(const Scenario& sc) {
    const RunBlock& r = sc.run;
    json p{{"method", std::string(to_string(r.method))}, {"T", r.T}, {"x0", r.x0}, {"y0", r.y0},
           {"f", sc.system.f_text}, {"g", sc.system.g_text}, {"M", sc.system.M}};
    if (r.method != RunMethod::Filippov && r.method != RunMethod::Utkin) p["alpha"] = r.alpha;
    if (r.method == RunMethod::Hysteresis) p["mode0"] = r.mode0;
    if (r.method == RunMethod::Embedding) {
        p["epsilon"] = r.epsilon;
        p["kappa"] = r.kappa;
        p["u0"] = r.u0;
    }
    return p;
}

int cmd_run(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    const SwitchedSystem sys = sc.make_system();
    const RunBlock& r = sc.run;
    json params = run_params(sc);
    Trajectory traj;
    bool flagged = false;
    std::string stop;
    double stop_time = r.T;

    if (r.method == RunMethod::Filippov || r.method == RunMethod::Utkin) {
        const SlidingKind kind = r.method == RunMethod::Filippov ? SlidingKind::Filippov : SlidingKind::Utkin;
        SlideResult res = slide(sys, kind, r.x0, r.T, sc.integrator);
        traj = std::move(res.trajectory);
        flagged = res.stop != SlideStop::Completed;
        stop = stop_name(res.stop);
        stop_time = res.stop_time;
    } else {
        RegularizationRun run;
        switch (r.method) {
            case RunMethod::Hysteresis:
                run = run_hysteresis(sys, r.x0, r.y0, r.mode0, r.alpha, r.T, sc.integrator);
                break;
            case RunMethod::Smoothing:
                run = run_smoothed(sys, r.x0, r.y0, r.alpha, sigmoid_cubic(), r.T, sc.integrator);
                break;
            default:
                run = run_embedded(sys, r.x0, r.y0, r.u0, r.alpha, r.epsilon, r.T, sc.integrator);
                break;
        }
        traj = std::move(run.trajectory);
        flagged = run.flagged();
        stop = to_string(run.stop);
        stop_time = run.stop_time;
        params["cycles"] = run.cycles.size();
    }
    params["stop"] = stop;
    params["stop_time"] = stop_time;

    const std::string fmt = format_of(f, sc);
    const std::string content = fmt == "json" ? trajectory_json(traj, params).dump(2) + "\n" : trajectory_csv(traj);
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) {
        const Vec xf = traj.eval_x(traj.back_time());
        out << "run " << to_string(r.method) << ": stop=" << stop << " t=" << short_num(stop_time)
            << " x=" << vec_text(xf) << " nodes=" << traj.size() << "\n";
    }
    return flagged ? kExitFlagged : kExitOk;
}

int cmd_compare(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    const SwitchedSystem sys = sc.make_system();
    const Vec& x0 = sc.run.x0;
    json report{{"x0", x0}, {"T", sc.run.T}, {"f", sc.system.f_text}, {"g", sc.system.g_text}};
    bool flagged = false;
    std::ostringstream text;
    std::vector<std::vector<std::string>> rows;
    std::vector<Vec> xdots;
    for (SlidingKind kind : {SlidingKind::Filippov, SlidingKind::Utkin}) {
        const std::string name(to_string(kind));
        const double aux = sliding_auxiliary(sys, kind, x0);
        const Vec xdot = kind == SlidingKind::Filippov ? filippov_field(sys, x0) : utkin_field(sys, x0);
        xdots.push_back(xdot);
        SlideResult res = slide(sys, kind, x0, sc.run.T, sc.integrator);
        flagged = flagged || res.stop != SlideStop::Completed;
        const Vec xf = res.trajectory.back_state();
        json entry{{kind == SlidingKind::Filippov ? "lambda" : "u_eq", aux},
                   {"xdot", xdot},
                   {"x_final", xf},
                   {"stop", std::string(stop_name(res.stop))},
                   {"stop_time", res.stop_time},
                   {"trajectory", {{"times", res.trajectory.times()}, {"states", res.trajectory.states()}}}};
        report[name] = entry;
        text << name << " xdot = " << (xdot.size() == 1 ? short_num(xdot[0]) : vec_text(xdot))
             << "  (" << (kind == SlidingKind::Filippov ? "lambda" : "u_eq") << " = " << short_num(aux)
             << ", x(T) = " << vec_text(xf) << ")\n";
        std::vector<std::string> row{name, format_double(aux)};
        for (double v : xdot) row.push_back(format_double(v));
        for (double v : xf) row.push_back(format_double(v));
        rows.push_back(row);
    }
    const Vec& vf = xdots[0];
    const Vec& vu = xdots[1];
    bool opposite = false;
    for (std::size_t i = 0; i < vf.size(); ++i) opposite = opposite || vf[i] * vu[i] < 0.0;
    report["opposite_directions"] = opposite;

    std::string content;
    if (format_of(f, sc) == "json") {
        content = report.dump(2) + "\n";
    } else {
        std::vector<std::string> header{"kind", "auxiliary"};
        for (std::size_t i = 1; i <= sys.dim; ++i) header.push_back("xdot" + std::to_string(i));
        for (std::size_t i = 1; i <= sys.dim; ++i) header.push_back("x_final" + std::to_string(i));
        content = csv_row(header);
        for (const auto& row : rows) content += csv_row(row);
    }
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) out << text.str();
    return flagged ? kExitFlagged : kExitOk;
}

int cmd_converge(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    if (!sc.converge) throw ValidationError("converge", "required table");
    const ConvergeBlock& c = *sc.converge;
    const SwitchedSystem sys = sc.make_system();
    ConvergenceSetup setup;
    setup.coupling = c.coupling;
    setup.x0 = sc.run.x0;
    setup.T = sc.run.T;
    setup.alphas = c.alphas;
    setup.kappa = c.kappa;
    setup.correction = c.correction;
    setup.threads = f.threads ? f.threads : std::max(1u, std::thread::hardware_concurrency());
    setup.run_opts = sc.integrator;
    setup.reference = c.reference;
    const ConvergenceReport rep = convergence_study(sys, setup);

    json report{{"method", std::string(to_string(rep.method))},
                {"coupling", std::string(to_string(rep.coupling))},
                {"reference", std::string(to_string(rep.reference))},
                {"correction", rep.correction == Correction::LogFactor ? "log" : "none"},
                {"alphas", rep.alphas},
                {"errors", rep.errors},
                {"epsilons", rep.epsilons},
                {"y_excursions", rep.y_excursions},
                {"fitted_order", rep.fit.order},
                {"fitted_constant", rep.fit.constant},
                {"r_squared", rep.fit.r_squared},
                {"flagged", rep.flagged},
                {"failures", rep.failures}};
    std::string content;
    if (format_of(f, sc) == "json") {
        content = report.dump(2) + "\n";
    } else {
        content = csv_row({"alpha", "epsilon", "error", "y_excursion"});
        for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
            content += csv_row({format_double(rep.alphas[i]), format_double(rep.epsilons[i]),
                                format_double(rep.errors[i]), format_double(rep.y_excursions[i])});
        }
    }
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) {
        out << "converge " << to_string(rep.coupling) << " vs " << to_string(rep.reference)
            << ": order=" << short_num(rep.fit.order) << " constant=" << short_num(rep.fit.constant)
            << " r2=" << short_num(rep.fit.r_squared) << "\n";
    }
    return rep.flagged ? kExitFlagged : kExitOk;
}

const GridBlock& require_grid(const Scenario& sc) {
    if (!sc.grid) throw ValidationError("grid", "required table");
    return *sc.grid;
}

int cmd_isochrone(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    const GridBlock& grid = require_grid(sc);
    if (!(sc.run.alpha > 0.0)) throw ValidationError("run.alpha", "must be positive for the isochrone");
    const SwitchedSystem sys = sc.make_system();
    const auto pts = isochrone(sys, sc.run.alpha, grid.x, grid.tol, sc.integrator);
    bool flagged = false;
    std::string content;
    if (format_of(f, sc) == "json") {
        json xs = json::array(), yp = json::array(), lead = json::array(), res = json::array(), fl = json::array();
        for (const auto& p : pts) {
            xs.push_back(p.x);
            yp.push_back(p.y_p);
            lead.push_back(isochrone_leading_order(sys, p.x, sc.run.alpha));
            res.push_back(p.residual);
            fl.push_back(p.flagged);
            flagged = flagged || p.flagged;
        }
        content = json{{"alpha", sc.run.alpha}, {"x", xs}, {"y_p", yp}, {"leading_order", lead},
                       {"residual", res}, {"flagged", fl}}.dump(2) + "\n";
    } else {
        std::vector<std::string> header;
        for (std::size_t i = 1; i <= sys.dim; ++i) header.push_back("x" + std::to_string(i));
        for (const char* h : {"y_p", "leading_order", "residual", "flagged"}) header.push_back(h);
        content = csv_row(header);
        for (const auto& p : pts) {
            std::vector<std::string> row;
            for (double v : p.x) row.push_back(format_double(v));
            row.push_back(format_double(p.y_p));
            row.push_back(format_double(isochrone_leading_order(sys, p.x, sc.run.alpha)));
            row.push_back(format_double(p.residual));
            row.push_back(p.flagged ? "1" : "0");
            flagged = flagged || p.flagged;
            content += csv_row(row);
        }
    }
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) {
        out << "isochrone: " << pts.size() << " points" << (flagged ? ", some flagged" : "") << "\n";
    }
    return flagged ? kExitFlagged : kExitOk;
}

int cmd_qcurve(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    const GridBlock& grid = require_grid(sc);
    if (sc.run.alpha == 0.0) throw ValidationError("run.alpha", "required for the slow curve");
    if (!(sc.run.epsilon > 0.0)) throw ValidationError("run.epsilon", "a positive epsilon is required");
    const SwitchedSystem sys = sc.make_system();
    const auto pts = slow_curve_Q(sys, sc.run.alpha, sc.run.epsilon, grid.x);
    bool flagged = false;
    std::string content;
    if (format_of(f, sc) == "json") {
        json xs = json::array(), us = json::array(), ys = json::array(), fl = json::array();
        for (const auto& p : pts) {
            xs.push_back(p.x);
            us.push_back(p.u);
            ys.push_back(p.y);
            fl.push_back(p.flagged);
            flagged = flagged || p.flagged;
        }
        content = json{{"alpha", sc.run.alpha}, {"epsilon", sc.run.epsilon}, {"x", xs}, {"u", us},
                       {"y", ys}, {"flagged", fl}}.dump(2) + "\n";
    } else {
        std::vector<std::string> header;
        for (std::size_t i = 1; i <= sys.dim; ++i) header.push_back("x" + std::to_string(i));
        for (const char* h : {"u", "y", "flagged"}) header.push_back(h);
        content = csv_row(header);
        for (const auto& p : pts) {
            std::vector<std::string> row;
            for (double v : p.x) row.push_back(format_double(v));
            row.push_back(format_double(p.u));
            row.push_back(format_double(p.y));
            row.push_back(p.flagged ? "1" : "0");
            flagged = flagged || p.flagged;
            content += csv_row(row);
        }
    }
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) {
        out << "qcurve: " << pts.size() << " points" << (flagged ? ", some flagged" : "") << "\n";
    }
    return flagged ? kExitFlagged : kExitOk;
}

int cmd_region(const CommonFlags& f, std::ostream& out) {
    const Scenario sc = load(f);
    if (!sc.region) throw ValidationError("region", "required table");
    const RegionBlock& r = *sc.region;
    const SwitchedSystem sys = sc.make_system();
    const RegionSpec spec = r.kind == RegionKind::Annulus
                                ? make_annulus(sys, r.alpha, *r.kappa, r.delta0)
                                : make_block(sys, r.alpha, r.kappa, r.delta, r.v_bound);
    const RegionCheck chk = region_check(sys, spec, r.samples);

    json faces = json::array();
    for (std::size_t i = 0; i < spec.faces.size(); ++i) {
        std::size_t bad = 0;
        for (const auto& v : chk.violations) bad += v.face == spec.faces[i].name;
        faces.push_back({{"name", spec.faces[i].name},
                         {"flow_surface", spec.faces[i].flow_surface},
                         {"samples", chk.per_face[i]},
                         {"violations", bad}});
    }
    json viol = json::array();
    for (const auto& v : chk.violations) viol.push_back({{"face", v.face}, {"point", v.point}, {"rate", v.rate}});
    json report{{"kind", std::string(to_string(spec.kind))},
                {"alpha", spec.alpha},
                {"kappa", spec.kappa},
                {"epsilon", spec.epsilon},
                {"samples", chk.samples},
                {"faces", faces},
                {"violations", viol},
                {"notes", spec.notes}};
    if (spec.kind == RegionKind::Annulus) {
        report["delta0"] = spec.delta0;
        report["C"] = spec.C;
        report["K"] = spec.K;
    } else {
        report["delta"] = spec.delta;
        report["u_star"] = spec.u_star;
        report["G"] = spec.G;
        report["sigma"] = spec.sigma;
        report["v_bound"] = spec.v_bound;
    }

    std::string content;
    if (format_of(f, sc) == "json") {
        content = report.dump(2) + "\n";
    } else {
        content = csv_row({"face", "samples", "violations"});
        for (const auto& fc : faces) {
            content += csv_row({fc["name"].get<std::string>(), std::to_string(fc["samples"].get<std::size_t>()),
                                std::to_string(fc["violations"].get<std::size_t>())});
        }
    }
    emit(f, sc, content, out);
    if (!f.out.empty() || !sc.output.path.empty()) {
        out << "region-check " << to_string(spec.kind) << ": " << chk.violations.size() << " violations over "
            << chk.samples << " samples\n";
        for (const auto& n : spec.notes) out << "note: " << n << "\n";
    }
    return chk.violations.empty() ? kExitOk : kExitFlagged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Regularizations of switched systems: sliding resolvers, relay, smoothing and embedding"};
    app.require_subcommand(1);
    CommonFlags flags;
    struct Entry {
        const char* name;
        const char* help;
        int (*fn)(const CommonFlags&, std::ostream&);
    };
    const Entry entries[] = {
        {"run", "Execute the scenario's run method and write the trajectory", cmd_run},
        {"compare", "Filippov and Utkin sliding velocities and trajectories at run.x0", cmd_compare},
        {"converge", "Convergence study over converge.alphas", cmd_converge},
        {"isochrone", "Isochrone of the relay planes on the grid", cmd_isochrone},
        {"qcurve", "Slow curve of the embedding on the grid", cmd_qcurve},
        {"region-check", "Sampled inward-flow check of the region's faces", cmd_region},
    };
    std::vector<std::pair<CLI::App*, const Entry*>> subs;
    for (const auto& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, flags);
        subs.emplace_back(sub, &e);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    for (const auto& [sub, entry] : subs) {
        if (!sub->parsed()) continue;
        try {
            return entry->fn(flags, out);
        } catch (const ValidationError& e) {
            err << "validation error: " << e.what() << "\n";
            return kExitValidation;
        } catch (const std::invalid_argument& e) {
            err << "validation error: " << e.what() << "\n";
            return kExitValidation;
        } catch (const std::exception& e) {
            err << "runtime error: " << e.what() << "\n";
            return kExitRuntime;
        }
    }
    return kExitValidation;
}

}  // namespace nslab::cli
