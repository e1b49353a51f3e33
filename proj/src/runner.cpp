#include "sbfr/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sbfr/bridge.hpp"
#include "sbfr/parallel.hpp"

namespace sbfr {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::int64_t elapsed_ms(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string write_potential(const LatticeFunction& f) {
    std::ostringstream out;
    out << "SBFR-POTENTIAL v1\n";
    out << "dim " << f.dim() << '\n';
    for (int a = 0; a < f.dim(); ++a)
        out << "box " << fmt17(f.support().lo[a]) << ' ' << fmt17(f.support().hi[a]) << ' '
            << f.nodes_per_axis()[static_cast<std::size_t>(a)] << '\n';
    for (std::size_t k = 0; k < f.node_count(); ++k) out << fmt17(f.value_at(k)) << '\n';
    return out.str();
}

LatticeFunction read_potential(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "SBFR-POTENTIAL v1") throw std::runtime_error("potential dump: bad header");
    int dim = 0;
    {
        std::string tag;
        std::getline(in, line);
        std::istringstream ls(line);
        if (!(ls >> tag >> dim) || tag != "dim" || dim < 1) throw std::runtime_error("potential dump: bad dim line");
    }
    Vec lo(dim), hi(dim);
    std::vector<int> nodes(static_cast<std::size_t>(dim));
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) {
        std::string tag;
        std::getline(in, line);
        std::istringstream ls(line);
        if (!(ls >> tag >> lo[a] >> hi[a] >> nodes[static_cast<std::size_t>(a)]) || tag != "box")
            throw std::runtime_error("potential dump: bad box line");
        total *= static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]);
    }
    std::vector<double> values;
    values.reserve(total);
    while (std::getline(in, line)) {
        const std::string t = line;
        if (t.empty()) continue;
        values.push_back(std::stod(t));
    }
    if (values.size() != total) throw std::runtime_error("potential dump: value count mismatch");
    return LatticeFunction(Box(lo, hi), nodes, std::move(values));
}

void write_potential_file(const LatticeFunction& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << write_potential(f);
}

LatticeFunction read_potential_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("referenced file does not exist: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_potential(buf.str());
}

namespace {

void csv_row(std::ostringstream& out, const std::string& tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ',' << fmt17(x);
    out << '\n';
}

std::vector<double> csv_values(const std::string& line, const std::string& tag) {
    std::vector<double> out;
    std::size_t pos = tag.size();
    while (pos < line.size() && line[pos] == ',') {
        std::size_t next = line.find(',', pos + 1);
        if (next == std::string::npos) next = line.size();
        out.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
        pos = next;
    }
    return out;
}

}  // namespace

std::string write_grid_problem(const GridProblem& p) {
    std::ostringstream out;
    out << "sbfr-grid,v1," << p.n0() << ',' << p.nT() << '\n';
    csv_row(out, "rho0", p.rho0);
    csv_row(out, "w0", p.w0);
    csv_row(out, "rhoT", p.rhoT);
    csv_row(out, "wT", p.wT);
    if (p.box0 && p.boxT) {
        std::vector<double> b0, bT;
        for (int a = 0; a < p.box0->dim(); ++a) {
            b0.push_back(p.box0->lo[a]);
            b0.push_back(p.box0->hi[a]);
        }
        for (int a = 0; a < p.boxT->dim(); ++a) {
            bT.push_back(p.boxT->lo[a]);
            bT.push_back(p.boxT->hi[a]);
        }
        csv_row(out, "box0", b0);
        csv_row(out, "boxT", bT);
        std::vector<double> n0(p.nodes0.begin(), p.nodes0.end()), nT(p.nodesT.begin(), p.nodesT.end());
        csv_row(out, "nodes0", n0);
        csv_row(out, "nodesT", nT);
    }
    for (std::size_t i = 0; i < p.n0(); ++i) {
        std::vector<double> row(p.kernel.begin() + static_cast<std::ptrdiff_t>(i * p.nT()),
                                p.kernel.begin() + static_cast<std::ptrdiff_t>((i + 1) * p.nT()));
        csv_row(out, "q", row);
    }
    return out.str();
}

GridProblem read_grid_problem(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("sbfr-grid,v1,", 0) != 0) throw std::runtime_error("grid problem: bad header");
    GridProblem p;
    std::vector<double> box0, boxT, nodes0, nodesT;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        const std::string tag = line.substr(0, comma);
        if (tag == "rho0")
            p.rho0 = csv_values(line, tag);
        else if (tag == "w0")
            p.w0 = csv_values(line, tag);
        else if (tag == "rhoT")
            p.rhoT = csv_values(line, tag);
        else if (tag == "wT")
            p.wT = csv_values(line, tag);
        else if (tag == "box0")
            box0 = csv_values(line, tag);
        else if (tag == "boxT")
            boxT = csv_values(line, tag);
        else if (tag == "nodes0")
            nodes0 = csv_values(line, tag);
        else if (tag == "nodesT")
            nodesT = csv_values(line, tag);
        else if (tag == "q") {
            const std::vector<double> row = csv_values(line, tag);
            p.kernel.insert(p.kernel.end(), row.begin(), row.end());
        } else
            throw std::runtime_error("grid problem: unknown row tag '" + tag + "'");
    }
    if (!box0.empty()) {
        const int d = static_cast<int>(box0.size() / 2);
        Vec lo(d), hi(d), loT(d), hiT(d);
        for (int a = 0; a < d; ++a) {
            lo[a] = box0[static_cast<std::size_t>(2 * a)];
            hi[a] = box0[static_cast<std::size_t>(2 * a + 1)];
            loT[a] = boxT[static_cast<std::size_t>(2 * a)];
            hiT[a] = boxT[static_cast<std::size_t>(2 * a + 1)];
        }
        p.box0 = Box(lo, hi);
        p.boxT = Box(loT, hiT);
        for (double n : nodes0) p.nodes0.push_back(static_cast<int>(n));
        for (double n : nodesT) p.nodesT.push_back(static_cast<int>(n));
    }
    p.validate();
    return p;
}

DiffusionModel model_from_config(const ModelBlock& block) {
    const ModelKind kind = block.kind == "ou" ? ModelKind::ou : ModelKind::brownian;
    return closed_form_model(kind, block.dim, block.sigma, block.theta, block.horizon);
}

namespace {

Box box_from_flat(const std::vector<double>& flat) {
    const int d = static_cast<int>(flat.size() / 2);
    Vec lo(d), hi(d);
    for (int a = 0; a < d; ++a) {
        lo[a] = flat[static_cast<std::size_t>(2 * a)];
        hi[a] = flat[static_cast<std::size_t>(2 * a + 1)];
    }
    return Box(lo, hi);
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/') return rel;
    return (std::filesystem::path(base) / rel).string();
}

}  // namespace

Marginal marginal_from_config(const MarginalBlock& block, int dim, const std::string& base_dir) {
    Marginal m;
    switch (block.kind) {
        case DensityKind::uniform: {
            m.support = box_from_flat(block.box);
            const double density = 1.0 / m.support.volume();
            m.pdf = [density](const Vec&) { return density; };
            m.min_value = m.max_value = density;
            break;
        }
        case DensityKind::polynomial: {
            m.support = box_from_flat(block.box);
            const std::vector<double> c = block.coeffs;
            auto poly = [c](double u) {
                double p = 0.0, upow = 1.0;
                for (double ci : c) {
                    p += ci * upow;
                    upow *= u;
                }
                return p;
            };
            double mass = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) mass += c[i] / static_cast<double>(i + 1);
            if (!(mass > 0.0)) throw ConfigError("polynomial marginal: coefficients integrate to a nonpositive mass");
            // Per-axis extrema by dense scan; the density factorizes.
            double pmin = 1e300, pmax = 0.0;
            const int scan = 4096;
            for (int k = 0; k <= scan; ++k) {
                const double v = poly(static_cast<double>(k) / scan);
                pmin = std::min(pmin, v);
                pmax = std::max(pmax, v);
            }
            if (!(pmin > 0.0)) throw ConfigError("polynomial marginal: density is not strictly positive on its box");
            const Box box = m.support;
            m.pdf = [box, poly, mass](const Vec& x) {
                double dens = 1.0;
                for (int a = 0; a < box.dim(); ++a) {
                    const double u = (x[a] - box.lo[a]) / box.width(a);
                    dens *= poly(u) / (mass * box.width(a));
                }
                return dens;
            };
            m.min_value = std::pow(pmin / mass, dim) / m.support.volume();
            m.max_value = std::pow(pmax / mass, dim) / m.support.volume();
            break;
        }
        case DensityKind::lattice_file: {
            const LatticeFunction f = l1_normalize(read_potential_file(join_path(base_dir, block.file))).first;
            if (f.dim() != dim) throw ConfigError("lattice-file marginal has dimension " + std::to_string(f.dim()));
            m.support = f.support();
            m.pdf = [f](const Vec& x) { return f.eval(x); };
            m.min_value = f.min_value();
            m.max_value = f.max_value();
            break;
        }
    }
    (void)dim;
    return m;
}

SolverConfig solver_from_config(const RunConfig& config, const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT) {
    const SolverBlock& s = config.solver;
    SolverConfig out;
    out.cloud_size = s.cloud_size;
    out.sde_steps = s.sde_steps;
    out.alpha = s.alpha;
    if (s.bandwidth > 0.0) out.bandwidth = s.bandwidth;
    out.max_iterations = s.k_max;
    out.stop_tol = s.stop_tol;
    out.master_seed = config.master_seed;
    out.resample_per_iteration = s.resample_per_iteration;
    out.lattice_nodes = s.lattice_nodes;
    out.residual_mc = s.residual_mc;
    out.mode = s.mode == "direct" ? OperatorMode::direct : OperatorMode::self_normalized;
    if (s.q_min > 0.0) {
        out.bounds = BoundsConfig{s.q_min, s.q_max, s.Q_min, s.Q_max, s.rho_min, s.rho_max};
        out.bounds.validate();
    } else if (model.has_density()) {
        out.bounds = bounds_from_model(model, rho0, rhoT);
    } else {
        throw ConfigError("solver bounds must be supplied for models without a closed-form density");
    }
    return out;
}

std::vector<StudyRow> run_study(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT,
                                const SolverConfig& base, const std::vector<std::uint64_t>& n_values, int seeds,
                                int oracle_nodes) {
    const GridProblem grid = GridProblem::from_model(model, rho0, rhoT, oracle_nodes);
    const GridSolution oracle = grid_fixed_point(grid, 1e-12, 5000);
    const LatticeFunction g_star = lattice_on_T(grid, oracle.g_star);

    std::vector<StudyRow> rows;
    for (std::uint64_t n : n_values) {
        for (int s = 0; s < seeds; ++s) {
            const auto start = std::chrono::steady_clock::now();
            SolverConfig cfg = base;
            cfg.cloud_size = n;
            cfg.lattice_nodes = oracle_nodes;
            cfg.master_seed = base.master_seed + static_cast<std::uint64_t>(s);
            const SchrodingerSolution sol = picard_solve(model, rho0, rhoT, cfg);

            StudyRow row;
            row.n = n;
            row.seed = cfg.master_seed;
            row.iterations = sol.trace.iterations;
            row.dH_to_oracle = hilbert_distance(sol.g_hat, g_star);
            double sup = 0.0;
            for (std::size_t k = 0; k < g_star.node_count(); ++k)
                sup = std::max(sup, std::abs(sol.g_hat.value_at(k) - g_star.value_at(k)));
            row.sup_error = sup;
            row.kappa_hat = sol.trace.kappa_hat;
            row.bandwidth = sol.clouds->bandwidth();
            row.runtime_ms = elapsed_ms(start);
            row.increments = sol.trace.increments;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

std::string study_csv_impl(const std::vector<StudyRow>& rows, bool with_runtime) {
    std::ostringstream out;
    out << "N,seed,iterations,dH_to_oracle,sup_error,kappa_hat,bandwidth,runtime_ms\n";
    for (const StudyRow& r : rows) {
        out << r.n << ',' << r.seed << ',' << r.iterations << ',' << fmt17(r.dH_to_oracle) << ',' << fmt17(r.sup_error) << ','
            << fmt17(r.kappa_hat) << ',' << fmt17(r.bandwidth) << ',';
        if (with_runtime) out << r.runtime_ms;
        out << '\n';
    }
    return out.str();
}

}  // namespace

std::string study_csv(const std::vector<StudyRow>& rows) { return study_csv_impl(rows, true); }
std::string study_csv_stable(const std::vector<StudyRow>& rows) { return study_csv_impl(rows, false); }

namespace {

using nlohmann::json;

void append_log(const std::string& path, const json& record) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write log " + path);
    out << record.dump() << '\n';
}

struct OutputPaths {
    std::string dir;
    std::string csv;
    std::string log;
    std::string prefix;
};

OutputPaths resolve_outputs(const RunConfig& c) {
    OutputPaths p;
    p.dir = c.output.directory.empty() ? "." : c.output.directory;
    std::filesystem::create_directories(p.dir);
    auto join = [&](const std::string& name) { return name.empty() ? std::string() : (std::filesystem::path(p.dir) / name).string(); };
    p.csv = join(c.output.csv);
    p.log = join(c.output.log);
    p.prefix = (std::filesystem::path(p.dir) / c.output.prefix).string();
    return p;
}

json base_record(const RunConfig& c, const char* command) {
    json rec;
    rec["event"] = "run";
    rec["command"] = command;
    rec["seed"] = c.master_seed;
    rec["version"] = kVersion;
    rec["threads"] = thread_cap();
    return rec;
}

int execute_solve(const RunConfig& c, const std::string& base_dir) {
    const auto start = std::chrono::steady_clock::now();
    const DiffusionModel model = model_from_config(c.model);
    const Marginal rho0 = marginal_from_config(c.rho0, model.dim, base_dir);
    const Marginal rhoT = marginal_from_config(c.rhoT, model.dim, base_dir);
    const SolverConfig cfg = solver_from_config(c, model, rho0, rhoT);
    const SchrodingerSolution sol = picard_solve(model, rho0, rhoT, cfg);
    const OutputPaths out = resolve_outputs(c);

    write_potential_file(sol.g_hat, out.prefix + "g_hat.pot");
    write_potential_file(sol.nu_0, out.prefix + "nu0.pot");
    write_potential_file(sol.nu_T, out.prefix + "nuT.pot");

    json rec = base_record(c, "solve");
    rec["iterations"] = sol.trace.iterations;
    rec["converged"] = sol.trace.converged;
    rec["kappa_hat"] = sol.trace.kappa_hat;
    rec["bandwidth"] = sol.clouds->bandwidth();
    rec["clamp_saturated"] = sol.trace.clamp_saturated;
    rec["outputs"] = {out.prefix + "g_hat.pot", out.prefix + "nu0.pot", out.prefix + "nuT.pot"};

    std::cout << "solve: iterations=" << sol.trace.iterations << " converged=" << (sol.trace.converged ? "yes" : "no")
              << " kappa_hat=" << sol.trace.kappa_hat << "\n";
    if (cfg.residual_mc > 0) {
        const ResidualReport rep = marginal_residuals(model, sol, cfg.residual_mc, c.master_seed + 0x5eedu);
        rec["residual_sup0"] = rep.sup0;
        rec["residual_supT"] = rep.supT;
        rec["residual_mean0"] = rep.mean0;
        rec["residual_meanT"] = rep.meanT;
        std::cout << "residuals: sup0=" << rep.sup0 << " supT=" << rep.supT << " mean0=" << rep.mean0
                  << " meanT=" << rep.meanT << "\n";
    }
    rec["runtime_ms"] = elapsed_ms(start);
    append_log(out.log, rec);
    if (!sol.trace.converged) {
        std::cerr << "solve: iteration cap hit with last increment " << sol.trace.increments.back() << " above stop_tol\n";
        return 1;
    }
    return 0;
}

PotentialSampler sampler_from_spec(const std::string& spec, int dim, const std::string& base_dir) {
    std::istringstream in(spec);
    std::string kind;
    in >> kind;
    if (kind == "atom") {
        Vec x(dim);
        for (int a = 0; a < dim; ++a)
            if (!(in >> x[a])) throw ConfigError("atom spec needs " + std::to_string(dim) + " coordinates: '" + spec + "'");
        return PotentialSampler::point_mass(x);
    }
    if (kind == "file") {
        std::string path;
        in >> path;
        if (path.empty()) throw ConfigError("file spec needs a path: '" + spec + "'");
        return PotentialSampler::from_density(read_potential_file(join_path(base_dir, path)));
    }
    throw ConfigError("boundary sampler spec must start with 'atom' or 'file': '" + spec + "'");
}

PathFunctional functional_from_config(const FddBlock& f, const TimePartition& part, int dim) {
    const std::vector<double> times = part.tuple_times();
    if (f.functional == "one") return [](std::span<const Vec>) { return 1.0; };

    std::size_t slot = times.size();
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - f.functional_time) <= 1e-9 * std::max(1.0, part.horizon())) slot = k;
    if (slot == times.size()) throw ConfigError("fdd.functional_time must be one of the partition times");
    const int axis = f.functional_axis;
    if (axis < 0 || axis >= dim) throw ConfigError("fdd.functional_axis out of range");

    if (f.functional == "mean") return [slot, axis](std::span<const Vec> s) { return s[slot][axis]; };
    if (f.functional == "second_moment")
        return [slot, axis](std::span<const Vec> s) { return s[slot][axis] * s[slot][axis]; };
    const Box box = box_from_flat(f.functional_box);
    return [slot, box](std::span<const Vec> s) { return box.contains(s[slot]) ? 1.0 : 0.0; };
}

int execute_fdd(const RunConfig& c, const std::string& base_dir) {
    const auto start = std::chrono::steady_clock::now();
    const DiffusionModel model = model_from_config(c.model);
    const double t_star = c.fdd.t_star > 0.0 ? c.fdd.t_star : 0.5 * model.horizon;

    FddQuery query;
    query.partition = TimePartition::make(model.horizon, t_star, c.fdd.forward_times, c.fdd.reverse_times);
    query.epsilon = c.fdd.epsilon;
    query.replications = c.fdd.replications;
    query.cloud_size = c.fdd.cloud_size;
    query.sde_steps = c.fdd.sde_steps;
    query.g = functional_from_config(c.fdd, query.partition, model.dim);

    const PotentialSampler nu0 = sampler_from_spec(c.fdd.nu0, model.dim, base_dir);
    const PotentialSampler nuT = sampler_from_spec(c.fdd.nuT, model.dim, base_dir);
    const FddResult res = fdd_schrodinger_estimate(model, nu0, nuT, query, c.master_seed);
    const OutputPaths out = resolve_outputs(c);

    if (!out.csv.empty()) {
        const bool fresh = !std::filesystem::exists(out.csv);
        std::ofstream csv(out.csv, std::ios::app | std::ios::binary);
        if (fresh) csv << "R,N,epsilon,t_star,functional,value,std_error,c0T,nonzero_fraction\n";
        csv << c.fdd.replications << ',' << c.fdd.cloud_size << ',' << fmt17(query.epsilon) << ',' << fmt17(t_star) << ','
            << c.fdd.functional << ',' << fmt17(res.value) << ',' << fmt17(res.std_error) << ',' << fmt17(res.c0T) << ','
            << fmt17(res.nonzero_fraction) << '\n';
    }
    json rec = base_record(c, "fdd");
    rec["value"] = res.value;
    rec["std_error"] = res.std_error;
    rec["se_degenerate"] = res.se_degenerate;
    rec["c0T"] = res.c0T;
    rec["runtime_ms"] = elapsed_ms(start);
    append_log(out.log, rec);
    std::cout << "fdd: value=" << fmt17(res.value) << " std_error=" << fmt17(res.std_error)
              << (res.se_degenerate ? " (degenerate: R = 1)" : "") << "\n";
    return 0;
}

int execute_study(const RunConfig& c, const std::string& base_dir) {
    const auto start = std::chrono::steady_clock::now();
    const DiffusionModel model = model_from_config(c.model);
    const Marginal rho0 = marginal_from_config(c.rho0, model.dim, base_dir);
    const Marginal rhoT = marginal_from_config(c.rhoT, model.dim, base_dir);
    const SolverConfig base = solver_from_config(c, model, rho0, rhoT);
    const int nodes = base.lattice_nodes > 0 ? base.lattice_nodes : default_lattice_nodes(model.dim);

    const std::vector<StudyRow> rows = run_study(model, rho0, rhoT, base, c.study.n_values, c.study.seeds, nodes);
    const OutputPaths out = resolve_outputs(c);
    const std::string csv = study_csv(rows);
    if (!out.csv.empty()) {
        std::ofstream f(out.csv, std::ios::binary);
        f << csv;
    }
    std::cout << csv;
    json rec = base_record(c, "study");
    rec["rows"] = rows.size();
    rec["runtime_ms"] = elapsed_ms(start);
    rec["outputs"] = {out.csv};
    append_log(out.log, rec);
    return 0;
}

int execute_oracle(const RunConfig& c, const std::string& base_dir) {
    const auto start = std::chrono::steady_clock::now();
    const DiffusionModel model = model_from_config(c.model);
    const Marginal rho0 = marginal_from_config(c.rho0, model.dim, base_dir);
    const Marginal rhoT = marginal_from_config(c.rhoT, model.dim, base_dir);
    const GridProblem grid = GridProblem::from_model(model, rho0, rhoT, c.oracle.nodes);
    const GridSolution sol = grid_fixed_point(grid, c.oracle.tol, c.oracle.max_iter);
    const OutputPaths out = resolve_outputs(c);

    write_potential_file(lattice_on_T(grid, sol.g_star), out.prefix + "oracle_g_star.pot");
    write_potential_file(lattice_on_T(grid, sol.nuT), out.prefix + "oracle_nuT.pot");
    if (grid.box0) {
        write_potential_file(LatticeFunction(*grid.box0, grid.nodes0, sol.nu0), out.prefix + "oracle_nu0.pot");
    }
    {
        std::ofstream f(out.prefix + "oracle_grid.csv", std::ios::binary);
        f << write_grid_problem(grid);
    }

    json rec = base_record(c, "oracle");
    rec["iterations"] = sol.iterations;
    rec["residual"] = sol.residual;
    std::cout << "oracle: iterations=" << sol.iterations << " residual=" << fmt17(sol.residual) << "\n";

    if (c.oracle.compare_solver) {
        const SolverConfig base = solver_from_config(c, model, rho0, rhoT);
        SolverConfig cfg = base;
        cfg.lattice_nodes = c.oracle.nodes;
        const SchrodingerSolution est = picard_solve(model, rho0, rhoT, cfg);
        const LatticeFunction g_star = lattice_on_T(grid, sol.g_star);
        const double dH = hilbert_distance(est.g_hat, g_star);
        double sup = 0.0;
        for (std::size_t k = 0; k < g_star.node_count(); ++k)
            sup = std::max(sup, std::abs(est.g_hat.value_at(k) - g_star.value_at(k)));
        rec["dH_to_oracle"] = dH;
        rec["sup_error"] = sup;
        std::cout << "solver-vs-oracle: dH=" << fmt17(dH) << " sup_error=" << fmt17(sup) << "\n";
    }
    rec["runtime_ms"] = elapsed_ms(start);
    append_log(out.log, rec);
    return 0;
}

}  // namespace

int execute(const RunConfig& config) {
    switch (config.command) {
        case Command::solve: return execute_solve(config, ".");
        case Command::fdd: return execute_fdd(config, ".");
        case Command::study: return execute_study(config, ".");
        case Command::oracle: return execute_oracle(config, ".");
    }
    return 2;
}

int execute_file(const std::string& config_path) {
    std::string text;
    {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::cerr << "config error: cannot open " << config_path << "\n";
            return 2;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    try {
        const RunConfig config = parse_config(text);
        const std::string base_dir = std::filesystem::path(config_path).parent_path().string();
        switch (config.command) {
            case Command::solve: return execute_solve(config, base_dir.empty() ? "." : base_dir);
            case Command::fdd: return execute_fdd(config, base_dir.empty() ? "." : base_dir);
            case Command::study: return execute_study(config, base_dir.empty() ? "." : base_dir);
            case Command::oracle: return execute_oracle(config, base_dir.empty() ? "." : base_dir);
        }
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InsufficientOverlapError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const SimulationError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sbfr
