#include "kahlerflow/io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kahlerflow/closed_form.hpp"
#include "kahlerflow/flow.hpp"
#include "kahlerflow/log.hpp"
#include "kahlerflow/magnetic.hpp"
#include "kahlerflow/manifold.hpp"
#include "kahlerflow/observables.hpp"
#include "kahlerflow/spectral.hpp"

namespace kahlerflow::io {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- formatting

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ------------------------------------------------------------- json helpers

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(ctx + " must be a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + ctx);
    }
}

const json& get_field(const json& obj, const std::string& ctx, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(ctx + " is missing required key '" + key + "'");
    return *it;
}

double get_num(const json& obj, const std::string& ctx, const char* key) {
    const json& v = get_field(obj, ctx, key);
    if (!v.is_number()) throw ConfigError(ctx + "." + key + " must be a number");
    return v.get<double>();
}

double get_num_or(const json& obj, const std::string& ctx, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    return get_num(obj, ctx, key);
}

long long get_int(const json& obj, const std::string& ctx, const char* key) {
    const json& v = get_field(obj, ctx, key);
    if (!v.is_number_integer()) throw ConfigError(ctx + "." + key + " must be an integer");
    return v.get<long long>();
}

std::string get_str(const json& obj, const std::string& ctx, const char* key) {
    const json& v = get_field(obj, ctx, key);
    if (!v.is_string()) throw ConfigError(ctx + "." + key + " must be a string");
    return v.get<std::string>();
}

bool get_bool_or(const json& obj, const std::string& ctx, const char* key, bool dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(ctx + "." + key + " must be a boolean");
    return v.get<bool>();
}

// Complex vector: array whose entries are numbers (real) or [re, im] pairs.
CVector get_cvec(const json& obj, const std::string& ctx, const char* key) {
    const json& v = get_field(obj, ctx, key);
    if (!v.is_array() || v.empty())
        throw ConfigError(ctx + "." + key + " must be a nonempty array");
    CVector out(static_cast<int>(v.size()));
    int i = 0;
    for (const json& e : v) {
        if (e.is_number()) {
            out(i++) = Complex(e.get<double>(), 0.0);
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
            out(i++) = Complex(e[0].get<double>(), e[1].get<double>());
        } else {
            throw ConfigError(ctx + "." + key + " entries must be numbers or [re, im] pairs");
        }
    }
    return out;
}

std::vector<double> get_num_list(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.empty()) throw ConfigError(ctx + " must be a nonempty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) throw ConfigError(ctx + " entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

json complex_to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

// ------------------------------------------------------------ block parsers

ManifoldSpec parse_manifold(const json& blk) {
    const std::string ctx = "manifold";
    const std::string kind = get_str(blk, ctx, "kind");
    if (kind == "cp") {
        check_keys(blk, ctx, {"kind", "dim", "radius"});
        return ManifoldSpec::projective(static_cast<int>(get_int(blk, ctx, "dim")),
                                        get_num(blk, ctx, "radius"));
    }
    if (kind == "ch") {
        check_keys(blk, ctx, {"kind", "dim", "radius"});
        return ManifoldSpec::hyperbolic(static_cast<int>(get_int(blk, ctx, "dim")),
                                        get_num(blk, ctx, "radius"));
    }
    if (kind == "flat") {
        check_keys(blk, ctx, {"kind", "dim"});
        return ManifoldSpec::flat(static_cast<int>(get_int(blk, ctx, "dim")));
    }
    if (kind == "product2d") {
        check_keys(blk, ctx, {"kind", "lambdas"});
        return ManifoldSpec::product2d(
            get_num_list(get_field(blk, ctx, "lambdas"), ctx + ".lambdas"));
    }
    throw ConfigError("manifold.kind must be one of cp | ch | flat | product2d");
}

MagneticSpec parse_magnetic(const json& blk, const ManifoldSpec& spec) {
    const std::string ctx = "magnetic";
    check_keys(blk, ctx, {"kappa", "lambda", "q"});
    MagneticSpec mag;
    mag.kappa = get_num_or(blk, ctx, "kappa", 0.0);
    mag.q = get_num(blk, ctx, "q");
    const json& lam = get_field(blk, ctx, "lambda");
    if (lam.is_number())
        mag.lambda = {lam.get<double>()};
    else
        mag.lambda = get_num_list(lam, ctx + ".lambda");
    mag.validate(spec);
    return mag;
}

CurvatureSign parse_curvature(const std::string& s, const std::string& ctx) {
    if (s == "positive") return CurvatureSign::Positive;
    if (s == "negative") return CurvatureSign::Negative;
    if (s == "flat") return CurvatureSign::Flat;
    throw ConfigError(ctx + " must be one of positive | negative | flat");
}

ModeParams parse_mode(const json& blk) {
    const std::string ctx = "mode";
    check_keys(blk, ctx, {"curvature", "radius", "q", "H", "xi"});
    ModeParams p;
    p.sign = parse_curvature(get_str(blk, ctx, "curvature"), ctx + ".curvature");
    p.radius = p.sign == CurvatureSign::Flat ? get_num_or(blk, ctx, "radius", 1.0)
                                             : get_num(blk, ctx, "radius");
    p.q = get_num(blk, ctx, "q");
    p.H = get_num(blk, ctx, "H");
    p.xi = get_cvec(blk, ctx, "xi");
    return p;
}

SpectralInput parse_spectral(const json& blk) {
    const std::string ctx = "spectral";
    check_keys(blk, ctx, {"eigenvalues", "xi", "hbar", "mass_m", "mass_M", "radii_override"});
    SpectralInput in;
    const std::vector<double> eig =
        get_num_list(get_field(blk, ctx, "eigenvalues"), ctx + ".eigenvalues");
    in.eigenvalues = Eigen::Map<const RVector>(eig.data(), static_cast<int>(eig.size()));
    in.xi = get_cvec(blk, ctx, "xi");
    in.hbar = get_num_or(blk, ctx, "hbar", 1.0);
    in.mass_m = get_num(blk, ctx, "mass_m");
    in.mass_M = get_num(blk, ctx, "mass_M");
    if (blk.contains("radii_override")) {
        const json& arr = blk.at("radii_override");
        if (!arr.is_array()) throw ConfigError(ctx + ".radii_override must be an array");
        RVector b(static_cast<int>(arr.size()));
        int i = 0;
        for (const json& e : arr) {
            if (e.is_number())
                b(i++) = e.get<double>();
            else if (e.is_string() && e.get<std::string>() == "inf")
                b(i++) = std::numeric_limits<double>::infinity();
            else
                throw ConfigError(ctx + ".radii_override entries must be numbers or \"inf\"");
        }
        in.radii_override = b;
    }
    return in;
}

struct TimeGrid {
    double t_end = 0.0;
    int samples = 0;
    double at(int i) const { return t_end * static_cast<double>(i) / (samples - 1); }
};

TimeGrid parse_time(const json& blk) {
    const std::string ctx = "time";
    check_keys(blk, ctx, {"t_end", "samples"});
    TimeGrid g;
    g.t_end = get_num(blk, ctx, "t_end");
    g.samples = static_cast<int>(get_int(blk, ctx, "samples"));
    if (!(g.t_end > 0.0)) throw ConfigError("time.t_end must be positive");
    if (g.samples < 2) throw ConfigError("time.samples must be at least 2");
    return g;
}

// ---------------------------------------------------------------- outputs

struct OutputPlan {
    std::string path;
    bool is_json = false;
    int stride = 1;
    bool emit_gnuplot = false;
};

OutputPlan parse_output(const json& cfg, const RunOptions& opts) {
    OutputPlan plan;
    if (cfg.contains("output")) {
        const json& blk = cfg.at("output");
        check_keys(blk, "output", {"format", "path", "sample_stride", "emit_gnuplot"});
        if (blk.contains("format")) {
            const std::string f = get_str(blk, "output", "format");
            if (f == "json")
                plan.is_json = true;
            else if (f != "csv")
                throw ConfigError("output.format must be csv or json");
        }
        if (blk.contains("path")) plan.path = get_str(blk, "output", "path");
        if (blk.contains("sample_stride")) {
            plan.stride = static_cast<int>(get_int(blk, "output", "sample_stride"));
            if (plan.stride < 1) throw ConfigError("output.sample_stride must be >= 1");
        }
        plan.emit_gnuplot = get_bool_or(blk, "output", "emit_gnuplot", false);
    }
    if (!opts.out_override.empty()) plan.path = opts.out_override;
    if (plan.path.empty())
        throw ConfigError("no output path: set output.path or pass --out");
    return plan;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << content;
    if (!out) throw Error("failed writing output file: " + path);
}

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

void maybe_emit_gnuplot(const OutputPlan& plan, const std::string& xcol,
                        const std::string& ycol, const std::string& title) {
    if (!plan.emit_gnuplot || plan.is_json) return;
    std::ostringstream os;
    os << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set grid\n"
       << "plot '" << std::filesystem::path(plan.path).filename().string() << "' using "
       << xcol << ":" << ycol << " with lines title '" << title << "'\n";
    write_text_file(plan.path + ".gp", os.str());
}

// ------------------------------------------------------------ worker pool

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ------------------------------------------------------------- the commands

void require_version_and_command(const json& cfg, const std::string& command) {
    if (!cfg.contains("version") || !cfg.at("version").is_number_integer() ||
        cfg.at("version").get<int>() != 1)
        throw ConfigError("config must declare \"version\": 1");
    if (get_str(cfg, "config", "command") != command)
        throw ConfigError("config command '" + cfg.at("command").get<std::string>() +
                          "' does not match CLI command '" + command + "'");
}

int cmd_geodesic(const json& cfg, const RunOptions& opts) {
    check_keys(cfg, "config", {"version", "command", "manifold", "initial", "time", "output"});
    const ManifoldSpec spec = parse_manifold(get_field(cfg, "config", "manifold"));
    const json& init = get_field(cfg, "config", "initial");
    check_keys(init, "initial", {"u"});
    const CVector u = get_cvec(init, "initial", "u");
    if (u.size() != spec.dim) throw ConfigError("initial.u dimension mismatch");
    const TimeGrid grid = parse_time(get_field(cfg, "config", "time"));
    const OutputPlan plan = parse_output(cfg, opts);

    std::vector<double> ts;
    std::vector<CVector> zs, vs;
    std::vector<double> speeds;
    Termination term = Termination::Completed;
    for (int i = 0; i < grid.samples; ++i) {
        const double t = grid.at(i);
        CVector z, v;
        try {
            z = geodesic(spec, u, t);
            v = geodesic_velocity(spec, u, t);
        } catch (const PoleOfChartError&) {
            term = Termination::PoleOfChart;
            break;
        }
        const MetricAtPoint mp = metric(spec, z);
        ts.push_back(t);
        zs.push_back(z);
        vs.push_back(v);
        speeds.push_back(std::real((v.transpose() * mp.g * v.conjugate())(0, 0)));
    }

    json status;
    status["termination"] = to_string(term);
    status["samples_written"] = ts.size();

    if (plan.is_json) {
        json outj;
        outj["status"] = status;
        outj["t"] = ts;
        json zarr = json::array();
        json sarr = json::array();
        for (size_t i = 0; i < ts.size(); ++i) {
            json row = json::array();
            for (int mu = 0; mu < spec.dim; ++mu) row.push_back(complex_to_json(zs[i](mu)));
            zarr.push_back(row);
            sarr.push_back(speeds[i]);
        }
        outj["z"] = zarr;
        outj["speed_invariant"] = sarr;
        write_text_file(plan.path, outj.dump(2) + "\n");
    } else {
        std::vector<std::string> header{"t"};
        for (int mu = 0; mu < spec.dim; ++mu) {
            header.push_back("re_z" + std::to_string(mu + 1));
            header.push_back("im_z" + std::to_string(mu + 1));
        }
        header.push_back("speed_invariant");
        std::vector<std::vector<std::string>> rows;
        for (size_t i = 0; i < ts.size(); ++i) {
            if (i % static_cast<size_t>(plan.stride) != 0 && i + 1 != ts.size()) continue;
            std::vector<std::string> row{fmt(ts[i])};
            for (int mu = 0; mu < spec.dim; ++mu) {
                row.push_back(fmt(zs[i](mu).real()));
                row.push_back(fmt(zs[i](mu).imag()));
            }
            row.push_back(fmt(speeds[i]));
            rows.push_back(std::move(row));
        }
        write_text_file(plan.path, csv_text(header, rows));
        write_text_file(plan.path + ".status.json", status.dump(2) + "\n");
        maybe_emit_gnuplot(plan, "2", "3", "geodesic z1");
    }
    return term == Termination::Completed ? exit_ok : exit_runtime;
}

int cmd_flow(const json& cfg, const RunOptions& opts) {
    check_keys(cfg, "config",
               {"version", "command", "manifold", "magnetic", "initial", "integration",
                "output"});
    FlowParams params;
    params.spec = parse_manifold(get_field(cfg, "config", "manifold"));
    params.mag = parse_magnetic(get_field(cfg, "config", "magnetic"), params.spec);
    const json& init = get_field(cfg, "config", "initial");
    check_keys(init, "initial", {"xi", "z0"});
    params.xi = get_cvec(init, "initial", "xi");
    if (init.contains("z0")) params.z0 = get_cvec(init, "initial", "z0");
    const json& integ = get_field(cfg, "config", "integration");
    check_keys(integ, "integration", {"dt", "t_end", "method", "stop_radius"});
    params.dt = get_num(integ, "integration", "dt");
    params.t_end = get_num(integ, "integration", "t_end");
    if (integ.contains("method")) {
        const std::string m = get_str(integ, "integration", "method");
        if (m == "rk4_richardson")
            params.method = IntegrationMethod::RK4Richardson;
        else if (m != "rk4")
            throw ConfigError("integration.method must be rk4 or rk4_richardson");
    }
    params.stop_radius = get_num_or(integ, "integration", "stop_radius", 0.999);
    const OutputPlan plan = parse_output(cfg, opts);

    const Trajectory traj = integrate(params);

    double energy_drift = 0.0, norm_drift = 0.0;
    const double e0 = traj.energy.front();
    const double n0 = 2.0 * e0;
    for (double e : traj.energy) {
        if (std::isnan(e)) continue;
        energy_drift = std::max(energy_drift, std::abs(e - e0) / std::max(std::abs(e0), 1e-300));
        norm_drift =
            std::max(norm_drift, std::abs(2.0 * e - n0) / std::max(std::abs(n0), 1e-300));
    }

    json status;
    status["termination"] = to_string(traj.termination);
    status["steps"] = traj.size() - 1;
    status["energy_drift"] = energy_drift;
    status["norm_drift"] = norm_drift;
    if (params.method == IntegrationMethod::RK4Richardson)
        status["richardson_max_step_error"] = traj.max_step_error;

    const int m = params.spec.dim;
    if (plan.is_json) {
        json outj;
        outj["status"] = status;
        outj["t"] = traj.t;
        json zarr = json::array(), parr = json::array();
        for (size_t i = 0; i < traj.size(); ++i) {
            json zrow = json::array(), prow = json::array();
            for (int mu = 0; mu < m; ++mu) {
                zrow.push_back(complex_to_json(traj.z[i](mu)));
                prow.push_back(complex_to_json(traj.psi[i](mu)));
            }
            zarr.push_back(zrow);
            parr.push_back(prow);
        }
        outj["z"] = zarr;
        outj["psi"] = parr;
        outj["energy"] = traj.energy;
        write_text_file(plan.path, outj.dump(2) + "\n");
    } else {
        std::vector<std::string> header{"t"};
        for (int mu = 0; mu < m; ++mu) {
            header.push_back("re_z" + std::to_string(mu + 1));
            header.push_back("im_z" + std::to_string(mu + 1));
        }
        for (int mu = 0; mu < m; ++mu) {
            header.push_back("re_psi" + std::to_string(mu + 1));
            header.push_back("im_psi" + std::to_string(mu + 1));
        }
        header.push_back("energy");
        header.push_back("norm_sq");
        std::vector<std::vector<std::string>> rows;
        for (size_t i = 0; i < traj.size(); ++i) {
            if (i % static_cast<size_t>(plan.stride) != 0 && i + 1 != traj.size()) continue;
            std::vector<std::string> row{fmt(traj.t[i])};
            for (int mu = 0; mu < m; ++mu) {
                row.push_back(fmt(traj.z[i](mu).real()));
                row.push_back(fmt(traj.z[i](mu).imag()));
            }
            for (int mu = 0; mu < m; ++mu) {
                row.push_back(fmt(traj.psi[i](mu).real()));
                row.push_back(fmt(traj.psi[i](mu).imag()));
            }
            row.push_back(fmt(traj.energy[i]));
            row.push_back(fmt(2.0 * traj.energy[i]));
            rows.push_back(std::move(row));
        }
        write_text_file(plan.path, csv_text(header, rows));
        write_text_file(plan.path + ".status.json", status.dump(2) + "\n");
        maybe_emit_gnuplot(plan, "2", "3", "flow z1");
    }
    return traj.termination == Termination::Completed ? exit_ok : exit_runtime;
}

int cmd_closed_form(const json& cfg, const RunOptions& opts) {
    check_keys(cfg, "config", {"version", "command", "mode", "time", "output"});
    const ModeParams params = parse_mode(get_field(cfg, "config", "mode"));
    const TimeGrid grid = parse_time(get_field(cfg, "config", "time"));
    const OutputPlan plan = parse_output(cfg, opts);

    const RegimeReport rep = classify(params);
    json meta;
    meta["regime"] = to_string(rep.regime);
    meta["k"] = std::isinf(rep.k) ? json() : json(rep.k);
    meta["omega_or_mu"] = rep.omega_or_mu;
    meta["period"] = rep.period ? json(*rep.period) : json();
    meta["orbit_length"] = rep.orbit_length ? json(*rep.orbit_length) : json();
    meta["blowup_time"] = rep.blowup_time ? json(*rep.blowup_time) : json();

    // Sampling throws (exit 4) inside the critical band or at a chart pole.
    std::vector<ModeState> states;
    states.reserve(static_cast<size_t>(grid.samples));
    for (int i = 0; i < grid.samples; ++i) states.push_back(solve(params, grid.at(i)));

    const int m = static_cast<int>(params.xi.size());
    if (plan.is_json) {
        json outj;
        outj["meta"] = meta;
        json tarr = json::array(), zarr = json::array(), parr = json::array();
        for (int i = 0; i < grid.samples; ++i) {
            tarr.push_back(grid.at(i));
            json zrow = json::array(), prow = json::array();
            for (int mu = 0; mu < m; ++mu) {
                zrow.push_back(complex_to_json(states[static_cast<size_t>(i)].z(mu)));
                prow.push_back(complex_to_json(states[static_cast<size_t>(i)].psi(mu)));
            }
            zarr.push_back(zrow);
            parr.push_back(prow);
        }
        outj["t"] = tarr;
        outj["z"] = zarr;
        outj["psi"] = parr;
        write_text_file(plan.path, outj.dump(2) + "\n");
    } else {
        std::vector<std::string> header{"t"};
        for (int mu = 0; mu < m; ++mu) {
            header.push_back("re_z" + std::to_string(mu + 1));
            header.push_back("im_z" + std::to_string(mu + 1));
        }
        for (int mu = 0; mu < m; ++mu) {
            header.push_back("re_psi" + std::to_string(mu + 1));
            header.push_back("im_psi" + std::to_string(mu + 1));
        }
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < grid.samples; ++i) {
            if (i % plan.stride != 0 && i + 1 != grid.samples) continue;
            const ModeState& st = states[static_cast<size_t>(i)];
            std::vector<std::string> row{fmt(grid.at(i))};
            for (int mu = 0; mu < m; ++mu) {
                row.push_back(fmt(st.z(mu).real()));
                row.push_back(fmt(st.z(mu).imag()));
            }
            for (int mu = 0; mu < m; ++mu) {
                row.push_back(fmt(st.psi(mu).real()));
                row.push_back(fmt(st.psi(mu).imag()));
            }
            rows.push_back(std::move(row));
        }
        write_text_file(plan.path, csv_text(header, rows));
        write_text_file(plan.path + ".meta.json", meta.dump(2) + "\n");
        maybe_emit_gnuplot(plan, "2", "3", "closed-form z1");
    }
    return exit_ok;
}

int cmd_sweep(const json& cfg, const RunOptions& opts) {
    check_keys(cfg, "config", {"version", "command", "sweep", "output"});
    const json& blk = get_field(cfg, "config", "sweep");
    check_keys(blk, "sweep",
               {"k_min", "k_max", "k_step", "q", "H", "radius", "curvature", "critical_band",
                "t_probe"});
    const double k_min = get_num(blk, "sweep", "k_min");
    const double k_max = get_num(blk, "sweep", "k_max");
    const double k_step = get_num(blk, "sweep", "k_step");
    if (!(k_step > 0.0) || !(k_max >= k_min)) throw ConfigError("bad sweep grid");
    const double q = get_num_or(blk, "sweep", "q", 1.0);
    const double H = get_num(blk, "sweep", "H");
    if (q * H == 0.0) throw ConfigError("sweep needs qH != 0");
    const double radius = get_num_or(blk, "sweep", "radius", 1.0);
    CurvatureSign sign = CurvatureSign::Negative;
    if (blk.contains("curvature"))
        sign = parse_curvature(get_str(blk, "sweep", "curvature"), "sweep.curvature");
    if (sign == CurvatureSign::Flat) throw ConfigError("sweep needs a curved mode");
    const double band = get_num_or(blk, "sweep", "critical_band", 1e-3);
    const double t_probe = get_num_or(blk, "sweep", "t_probe", 1.0);
    const OutputPlan plan = parse_output(cfg, opts);

    const int n = static_cast<int>(std::floor((k_max - k_min) / k_step + 1e-9)) + 1;
    struct Row {
        double k = 0.0;
        Regime regime = Regime::Quantum;
        double rate = 0.0;
        std::optional<double> period;
        std::optional<double> l2;
    };
    std::vector<Row> rows(static_cast<size_t>(n));
    parallel_for(n, opts.jobs, [&](int i) {
        const double k = k_min + k_step * i;
        ModeParams p;
        p.sign = sign;
        p.radius = radius;
        p.q = q;
        p.H = H;
        p.xi = CVector::Constant(1, Complex(k * std::abs(q * H) * radius / 4.0, 0.0));
        const RegimeReport rep = classify(p, band);
        Row& row = rows[static_cast<size_t>(i)];
        row.k = k;
        row.regime = rep.regime;
        row.rate = rep.omega_or_mu;
        row.period = rep.period;
        if (rep.regime != Regime::Critical)
            row.l2 = solve(p, t_probe).psi.squaredNorm();
    });

    if (plan.is_json) {
        json arr = json::array();
        for (const Row& r : rows) {
            json j;
            j["k"] = r.k;
            j["regime"] = to_string(r.regime);
            j["rate"] = r.rate;
            j["period"] = r.period ? json(*r.period) : json();
            j["l2_norm_at_t_probe"] = r.l2 ? json(*r.l2) : json();
            arr.push_back(j);
        }
        json outj;
        outj["t_probe"] = t_probe;
        outj["rows"] = arr;
        write_text_file(plan.path, outj.dump(2) + "\n");
    } else {
        std::vector<std::vector<std::string>> csv_rows;
        for (const Row& r : rows)
            csv_rows.push_back({fmt(r.k), to_string(r.regime), fmt(r.rate),
                                r.period ? fmt(*r.period) : "",
                                r.l2 ? fmt(*r.l2) : ""});
        write_text_file(plan.path,
                        csv_text({"k", "regime", "rate", "period", "l2_norm_at_t_probe"},
                                 csv_rows));
        maybe_emit_gnuplot(plan, "1", "3", "rate vs k");
    }
    return exit_ok;
}

int cmd_collapse(const json& cfg, const RunOptions& opts) {
    check_keys(cfg, "config", {"version", "command", "spectral", "time", "output"});
    const SpectralSystem sys = SpectralSystem::build(
        parse_spectral(get_field(cfg, "config", "spectral")));
    const TimeGrid grid = parse_time(get_field(cfg, "config", "time"));
    const OutputPlan plan = parse_output(cfg, opts);

    const CollapseReport rep = sys.collapse_report();
    json repj;
    repj["verdict"] = to_string(rep.verdict);
    repj["dominant_mode"] = rep.dominant_mode ? json(*rep.dominant_mode + 1) : json();
    repj["tau_c"] = rep.collapse_time ? json(*rep.collapse_time) : json();
    repj["threshold_consistent"] =
        rep.threshold_consistent ? json(*rep.threshold_consistent) : json();
    repj["geometric_norm_sq"] = sys.geometric_norm_sq();
    json per_mode = json::array();
    for (const ModeCensusEntry& e : rep.per_mode) {
        json j;
        j["j"] = e.index + 1;
        j["k"] = e.k;
        j["regime"] = to_string(e.regime);
        j["rate"] = e.rate;
        per_mode.push_back(j);
    }
    repj["per_mode"] = per_mode;

    // Trip the critical-band error (exit 4) before the parallel region.
    sys.evolve(0.0);
    const int nm = sys.n_modes();
    std::vector<std::vector<double>> abs_psi(static_cast<size_t>(grid.samples));
    parallel_for(grid.samples, opts.jobs, [&](int i) {
        const std::vector<ModeState> states = sys.evolve(grid.at(i));
        std::vector<double>& row = abs_psi[static_cast<size_t>(i)];
        row.resize(static_cast<size_t>(nm));
        for (int j = 0; j < nm; ++j) row[static_cast<size_t>(j)] = states[static_cast<size_t>(j)].psi.norm();
    });

    if (plan.is_json) {
        json outj;
        outj["report"] = repj;
        json tarr = json::array(), aarr = json::array();
        for (int i = 0; i < grid.samples; ++i) {
            tarr.push_back(grid.at(i));
            aarr.push_back(abs_psi[static_cast<size_t>(i)]);
        }
        outj["t"] = tarr;
        outj["abs_psi"] = aarr;
        write_text_file(plan.path, outj.dump(2) + "\n");
    } else {
        std::vector<std::string> header{"t"};
        for (int j = 0; j < nm; ++j) header.push_back("abs_psi" + std::to_string(j + 1));
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < grid.samples; ++i) {
            if (i % plan.stride != 0 && i + 1 != grid.samples) continue;
            std::vector<std::string> row{fmt(grid.at(i))};
            for (int j = 0; j < nm; ++j) row.push_back(fmt(abs_psi[static_cast<size_t>(i)][static_cast<size_t>(j)]));
            rows.push_back(std::move(row));
        }
        write_text_file(plan.path, csv_text(header, rows));
        write_text_file(plan.path + ".report.json", repj.dump(2) + "\n");
        maybe_emit_gnuplot(plan, "1", "2", "mode 1 amplitude");
    }
    return exit_ok;
}

}  // namespace

namespace {

// ------------------------------------------------------- validation suite

CVector random_chart_point(std::mt19937_64& rng, const ManifoldSpec& spec, double fill) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    CVector z(spec.dim);
    for (int mu = 0; mu < spec.dim; ++mu) {
        double edge = 1.5;  // unconfined directions just use a moderate scale
        if (spec.kind == ManifoldKind::Hyperbolic)
            edge = fill * spec.radius / std::sqrt(static_cast<double>(spec.dim));
        else if (spec.kind == ManifoldKind::Product2D && spec.lambdas[mu] < 0.0)
            edge = fill * 2.0 / std::sqrt(-spec.lambdas[mu]);
        const double r = edge * std::sqrt(unit(rng));
        const double th = ang(rng);
        z(mu) = Complex(r * std::cos(th), r * std::sin(th));
    }
    return z;
}

CVector random_cvector(std::mt19937_64& rng, int n, double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
    return v;
}

CMatrix random_hermitian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
    return CMatrix(0.5 * (a + a.adjoint()));
}

struct CheckOutcome {
    std::string name;
    bool ok = false;
    double worst = 0.0;
    double bound = 0.0;
};

std::vector<ManifoldSpec> reference_specs() {
    return {ManifoldSpec::projective(1, 1.0), ManifoldSpec::projective(3, 1.0),
            ManifoldSpec::hyperbolic(1, 1.0), ManifoldSpec::hyperbolic(3, 1.0),
            ManifoldSpec::product2d({1.0}),   ManifoldSpec::product2d({-1.0})};
}

}  // namespace

bool validate_suite(std::uint64_t seed, std::ostream& out) {
    std::mt19937_64 rng(seed);
    std::vector<CheckOutcome> results;
    auto push = [&](const std::string& name, double worst, double bound) {
        results.push_back(CheckOutcome{name, worst <= bound, worst, bound});
    };

    // Geometry identities against finite differences.
    {
        double worst_metric = 0.0, worst_gamma = 0.0, worst_ricci = 0.0, worst_inverse = 0.0;
        for (const ManifoldSpec& spec : reference_specs()) {
            for (int i = 0; i < 20; ++i) {
                const CVector z = random_chart_point(rng, spec, 0.7);
                const IdentityReport rep = verify_kahler_identities(spec, z, 1e-4);
                worst_metric = std::max(worst_metric, rep.metric_residual);
                worst_gamma = std::max(worst_gamma, rep.christoffel_residual);
                worst_ricci = std::max(worst_ricci, rep.ricci_residual);
                const MetricAtPoint mp = metric(spec, z);
                worst_inverse = std::max(
                    worst_inverse,
                    (mp.g * mp.g_inv - CMatrix::Identity(spec.dim, spec.dim))
                        .cwiseAbs()
                        .maxCoeff());
            }
        }
        push("metric matches dd(potential) by FD", worst_metric, 1e-6);
        push("christoffel matches g^-1 dg by FD", worst_gamma, 1e-6);
        push("FD Ricci proportional to metric", worst_ricci, 1e-5);
        push("metric inverse exact", worst_inverse, 1e-12);
    }

    // Geodesic speed invariant.
    {
        double worst = 0.0;
        std::uniform_real_distribution<double> tdist(0.0, 1.0);
        for (const ManifoldSpec& spec : reference_specs()) {
            for (int i = 0; i < 10; ++i) {
                const CVector u = random_cvector(rng, spec.dim, 0.5);
                const double t = tdist(rng);
                CVector z, v;
                try {
                    z = geodesic(spec, u, t);
                    v = geodesic_velocity(spec, u, t);
                } catch (const PoleOfChartError&) {
                    continue;
                }
                const MetricAtPoint mp = metric(spec, z);
                const double speed = std::real((v.transpose() * mp.g * v.conjugate())(0, 0));
                const double speed0 = 0.5 * u.squaredNorm();
                worst = std::max(worst, std::abs(speed - speed0) / speed0);
            }
        }
        push("geodesic speed invariant", worst, 1e-9);
    }

    // Energy conservation along RK4 orbits.
    {
        double worst = 0.0;
        FlowParams p;
        p.spec = ManifoldSpec::projective(1, 1.0);
        p.mag = MagneticSpec::uniform(2.0, 1.0);
        p.xi = CVector::Constant(1, Complex(0.5, 0.0));
        p.dt = 1e-4;
        p.t_end = 0.5;
        for (int variant = 0; variant < 2; ++variant) {
            if (variant == 1) {
                p.spec = ManifoldSpec::hyperbolic(1, 1.0);
                p.mag = MagneticSpec::uniform(4.0, 1.0);  // k = 0.5
            }
            const Trajectory traj = integrate(p);
            const double e0 = traj.energy.front();
            for (double e : traj.energy)
                worst = std::max(worst, std::abs(e - e0) / e0);
        }
        push("RK4 energy conservation", worst, 1e-10);
    }

    // Numeric orbit against the exact ones.
    {
        FlowParams p;
        p.spec = ManifoldSpec::projective(1, 1.0);
        p.mag = MagneticSpec::uniform(2.0, 1.0);
        p.xi = CVector::Constant(1, Complex(0.5, 0.0));
        p.dt = 1e-4;
        p.t_end = 0.5;
        ModeParams mp;
        mp.sign = CurvatureSign::Positive;
        mp.radius = 1.0;
        mp.q = 1.0;
        mp.H = 2.0;
        mp.xi = p.xi;
        const Trajectory traj = integrate(p);
        double worst = 0.0;
        for (size_t i = 0; i < traj.size(); ++i) {
            const ModeState st = cp_solution(mp, traj.t[i]);
            worst = std::max(worst, (st.z - traj.z[i]).cwiseAbs().maxCoeff());
            worst = std::max(worst, (st.psi - traj.psi[i]).cwiseAbs().maxCoeff());
        }
        push("RK4 matches positive-curvature closed form", worst, 1e-6);

        p.spec = ManifoldSpec::hyperbolic(1, 1.0);
        p.mag = MagneticSpec::uniform(4.0, 1.0);
        mp.sign = CurvatureSign::Negative;
        mp.H = 4.0;  // k = 0.5
        const Trajectory traj2 = integrate(p);
        worst = 0.0;
        for (size_t i = 0; i < traj2.size(); ++i) {
            const ModeState st = ch_solution(mp, traj2.t[i]);
            worst = std::max(worst, (st.z - traj2.z[i]).cwiseAbs().maxCoeff());
            worst = std::max(worst, (st.psi - traj2.psi[i]).cwiseAbs().maxCoeff());
        }
        push("RK4 matches negative-curvature closed form (k<1)", worst, 1e-6);

        p.mag = MagneticSpec::uniform(1.0, 1.0);  // k = 2 runaway
        mp.H = 1.0;
        const Trajectory traj3 = integrate(p);
        worst = 0.0;
        for (size_t i = 0; i < traj3.size(); ++i) {
            const ModeState st = ch_solution(mp, traj3.t[i]);
            worst = std::max(worst, (st.z - traj3.z[i]).cwiseAbs().maxCoeff());
        }
        push("RK4 matches negative-curvature closed form (k>1)", worst, 1e-5);
    }

    // Limit forms.
    {
        ModeParams mp;
        mp.sign = CurvatureSign::Positive;
        mp.radius = 1.0;
        mp.q = 1.0;
        mp.H = 2.0;
        mp.xi = CVector::Constant(1, Complex(5e-5, 0.0));  // k = 1e-4
        double worst = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double t = M_PI * i / 100.0;
            const ModeState a = cp_solution(mp, t);
            const ModeState b = limit_schrodinger(mp, t);
            worst = std::max(worst, (a.z - b.z).cwiseAbs().maxCoeff());
            worst = std::max(worst,
                             (a.psi - b.psi).cwiseAbs().maxCoeff() / mp.xi.norm());
        }
        push("small-k orbit matches flat cyclotron", worst, 1e-6);

        mp.sign = CurvatureSign::Negative;
        mp.xi = CVector::Constant(1, Complex(1.0, 0.0));
        mp.H = 4.0 / 1000.0;  // k = 1e3
        const double k = 1000.0, root = std::sqrt(k * k - 1.0);
        const double mu = 0.5 * mp.q * mp.H * root;
        worst = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double t = i / 100.0;
            const ModeState a = ch_solution(mp, t);
            const double th = std::tanh(mu * t), ch = std::cosh(mu * t);
            const Complex zref = (1.0 + I_UNIT * th / k) * th;
            const Complex pref = (1.0 - 2.0 * I_UNIT * th / k) * ch * ch;
            worst = std::max(worst, std::abs(a.z(0) - zref));
            worst = std::max(worst, std::abs(a.psi(0) - pref * mp.xi(0)));
        }
        push("large-k orbit matches corrected geodesic form", worst, 1e-4);
    }

    // Regime threshold identity on random systems.
    {
        std::uniform_int_distribution<int> ndist(2, 8);
        std::uniform_real_distribution<double> mass(0.2, 3.0);
        std::uniform_real_distribution<double> hdist(0.5, 5.0);
        int disagreements = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const int n = ndist(rng);
            SpectralInput in;
            in.eigenvalues.resize(n);
            double h = hdist(rng);
            for (int j = 0; j < n; ++j) in.eigenvalues(j) = (h += hdist(rng));
            in.xi = random_cvector(rng, n, 1.0);
            in.mass_M = mass(rng);
            in.mass_m = in.mass_M + mass(rng);
            const SpectralSystem sys = SpectralSystem::build(in);
            for (int j = 0; j < n; ++j)
                if ((sys.k(j) > 1.0) !=
                    amplitude_above_threshold(in.xi, j, in.mass_m, in.mass_M))
                    ++disagreements;
        }
        push("k>1 agrees with amplitude threshold", disagreements, 0.0);
    }

    // Born rule.
    {
        double worst_sum = 0.0, worst_mean = 0.0;
        const ManifoldSpec flat4 = ManifoldSpec::flat(4);
        for (int trial = 0; trial < 20; ++trial) {
            const CMatrix a = random_hermitian(rng, 4);
            const CVector psi = random_cvector(rng, 4, 1.0);
            const std::vector<BornOutcome> outcomes = born_probabilities(a, psi);
            double sum = 0.0, mean = 0.0;
            for (const BornOutcome& o : outcomes) {
                sum += o.probability;
                mean += o.probability * o.eigenvalue;
            }
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            const double expect =
                expectation(flat4, PhaseState{CVector::Zero(4), psi}, a);
            worst_mean = std::max(worst_mean, std::abs(mean - expect));
        }
        push("Born probabilities sum to one", worst_sum, 1e-12);
        push("Born mean equals expectation", worst_mean, 1e-12);
    }

    // Transport keeps metric self-adjointness.
    {
        FlowParams p;
        p.spec = ManifoldSpec::product2d({-1.0, -0.5});
        p.mag = MagneticSpec::uniform(4.0, 1.0);
        p.xi = random_cvector(rng, 2, 0.3);
        p.dt = 1e-4;  // trapezoid quadrature error is O(dt^2); 1e-4 lands ~1e-9
        p.t_end = 1.0;
        const Trajectory traj = integrate(p);
        const CMatrix a0 = random_hermitian(rng, 2);
        const CMatrix at = transport(p.spec, traj, a0);
        push("transported observable stays self-adjoint",
             self_adjointness_residual(p.spec, traj.z.back(), at), 1e-8);
    }

    // Gauge shift leaves the orbit alone.
    {
        FlowParams p;
        p.spec = ManifoldSpec::projective(1, 1.0);
        p.mag = MagneticSpec::uniform(2.0, 1.0);
        p.xi = CVector::Constant(1, Complex(0.4, 0.1));
        p.dt = 1e-3;
        p.t_end = 0.5;
        const double dev = gauge_shift_test(p, [](const CVector& z) {
            return 0.3 * z(0).real() + 0.2 * z(0).imag() * z(0).real();
        });
        push("gauge shift leaves trajectory invariant", dev, 1e-6);
    }

    bool all_ok = true;
    for (const CheckOutcome& c : results) {
        char line[160];
        std::snprintf(line, sizeof line, "%-52s %-4s  (worst %.3e, bound %.1e)",
                      c.name.c_str(), c.ok ? "ok" : "FAIL", c.worst, c.bound);
        out << line << "\n";
        all_ok = all_ok && c.ok;
    }
    out << (all_ok ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
    return all_ok;
}

int run_from_file(const std::string& command, const std::string& config_path,
                  const RunOptions& opts) {
    try {
        if (command == "validate") {
            const bool ok = validate_suite(opts.seed, std::cout);
            return ok ? exit_ok : exit_runtime;
        }
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file: " + config_path);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        require_version_and_command(cfg, command);

        if (command == "geodesic") return cmd_geodesic(cfg, opts);
        if (command == "flow") return cmd_flow(cfg, opts);
        if (command == "closed-form") return cmd_closed_form(cfg, opts);
        if (command == "sweep") return cmd_sweep(cfg, opts);
        if (command == "collapse") return cmd_collapse(cfg, opts);
        throw ConfigError("unknown command: " + command);
    } catch (const ConfigError& e) {
        log::error(e.what());
        return exit_config;
    } catch (const ChartDomainError& e) {
        log::error(e.what());
        return exit_config;
    } catch (const WrongKindError& e) {
        log::error(e.what());
        return exit_config;
    } catch (const CriticalRegimeError& e) {
        log::error(e.what());
        return exit_analytic;
    } catch (const PoleOfChartError& e) {
        log::error(e.what());
        return exit_analytic;
    } catch (const DegenerateError& e) {
        log::error(e.what());
        return exit_analytic;
    } catch (const Error& e) {
        log::error(e.what());
        return exit_runtime;
    } catch (const std::exception& e) {
        log::error(std::string("internal error: ") + e.what());
        return 1;
    }
}

}  // namespace kahlerflow::io
