#include "sbfr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace sbfr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& message) {
    throw ConfigError("line " + std::to_string(line) + ": " + message);
}

struct RawEntry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, RawEntry>;

double parse_double(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) fail(line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail(line, "expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& v, int line) {
    const double d = parse_double(v, line);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) fail(line, "expected an integer, got '" + v + "'");
    return i;
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size()) fail(line, "trailing characters in integer '" + v + "'");
        return static_cast<std::uint64_t>(u);
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail(line, "expected a nonnegative integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_doubles(const std::string& v, int line) {
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok, line));
    return out;
}

std::vector<std::uint64_t> parse_u64s(const std::string& v, int line) {
    std::vector<std::uint64_t> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(parse_u64(tok, line));
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"", {"command", "master_seed"}},
        {"model", {"kind", "dim", "sigma", "theta", "horizon"}},
        {"marginals",
         {"rho0_kind", "rho0_box", "rho0_coeffs", "rho0_file", "rhoT_kind", "rhoT_box", "rhoT_coeffs", "rhoT_file"}},
        {"solver",
         {"cloud_size", "sde_steps", "alpha", "bandwidth", "k_max", "stop_tol", "lattice_nodes", "resample_per_iteration",
          "residual_mc", "mode", "q_min", "q_max", "Q_min", "Q_max", "rho_min", "rho_max"}},
        {"fdd",
         {"t_star", "forward_times", "reverse_times", "epsilon", "replications", "cloud_size", "sde_steps", "functional",
          "functional_time", "functional_axis", "functional_box", "nu0", "nuT"}},
        {"study", {"n_values", "seeds"}},
        {"oracle", {"nodes", "tol", "max_iter", "compare_solver"}},
        {"output", {"directory", "csv", "log", "prefix"}},
    };
    return keys;
}

DensityKind parse_density_kind(const std::string& v, int line) {
    if (v == "uniform") return DensityKind::uniform;
    if (v == "polynomial") return DensityKind::polynomial;
    if (v == "lattice-file") return DensityKind::lattice_file;
    fail(line, "unknown density kind '" + v + "' (uniform | polynomial | lattice-file)");
}

// Pulls a value out of the section map, marking it consumed.
class Reader {
  public:
    Reader(std::map<std::string, Section>& sections) : sections_(sections) {}

    const RawEntry* find(const std::string& section, const std::string& key) {
        auto sit = sections_.find(section);
        if (sit == sections_.end()) return nullptr;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end()) return nullptr;
        return &kit->second;
    }

    template <class T, class Fn>
    void get(const std::string& section, const std::string& key, T& out, Fn&& parse) {
        if (const RawEntry* e = find(section, key)) out = parse(e->value, e->line);
    }

  private:
    std::map<std::string, Section>& sections_;
};

void read_marginal(Reader& r, const std::string& prefix, MarginalBlock& m) {
    r.get("marginals", prefix + "_kind", m.kind, parse_density_kind);
    r.get("marginals", prefix + "_box", m.box, parse_doubles);
    r.get("marginals", prefix + "_coeffs", m.coeffs, parse_doubles);
    r.get("marginals", prefix + "_file", m.file, [](const std::string& v, int) { return v; });
}

void validate(const RunConfig& c) {
    auto err = [](const std::string& m) { throw ConfigError(m); };
    if (c.model.kind != "brownian" && c.model.kind != "ou") err("model.kind must be brownian or ou");
    if (c.model.dim < 1 || c.model.dim > 8) err("model.dim must be in [1, 8]");
    if (!(c.model.sigma > 0.0)) err("model.sigma must be positive");
    if (!(c.model.horizon > 0.0)) err("model.horizon must be positive");
    // The fdd command takes its boundary laws from the [fdd] section.
    if (c.command != Command::fdd) {
        for (const MarginalBlock* m : {&c.rho0, &c.rhoT}) {
            if (m->kind != DensityKind::lattice_file) {
                if (m->box.size() != 2 * static_cast<std::size_t>(c.model.dim)) err("marginal box needs 2*dim entries");
                for (std::size_t k = 0; k + 1 < m->box.size(); k += 2)
                    if (!(m->box[k] < m->box[k + 1])) err("marginal box needs lo < hi per axis");
            } else if (m->file.empty()) {
                err("lattice-file marginal needs a file");
            }
            if (m->kind == DensityKind::polynomial && m->coeffs.empty()) err("polynomial marginal needs coefficients");
        }
    }
    if (c.solver.mode != "self_normalized" && c.solver.mode != "direct") err("solver.mode must be self_normalized or direct");
    if (c.solver.bandwidth < 0.0 || c.solver.bandwidth >= 1.0) err("solver.bandwidth must lie in [0, 1)");
    if (!(c.solver.alpha > 0.0) || c.solver.alpha > 1.0) err("solver.alpha must lie in (0, 1]");
    if (c.solver.k_max < 0) err("solver.k_max must be >= 0");
    if (!(c.solver.stop_tol > 0.0)) err("solver.stop_tol must be positive");
    const bool any_bound = c.solver.q_min != 0.0 || c.solver.q_max != 0.0 || c.solver.Q_min != 0.0 || c.solver.Q_max != 0.0 ||
                           c.solver.rho_min != 0.0 || c.solver.rho_max != 0.0;
    const bool all_bounds = c.solver.q_min > 0.0 && c.solver.q_max > 0.0 && c.solver.Q_min > 0.0 && c.solver.Q_max > 0.0 &&
                            c.solver.rho_min > 0.0 && c.solver.rho_max > 0.0;
    if (any_bound && !all_bounds) err("solver bounds must be given all together (or all omitted)");
    if (c.fdd.t_star < 0.0 || c.fdd.t_star >= c.model.horizon) err("fdd.t_star must lie in [0, horizon)");
    if (c.fdd.replications < 1) err("fdd.replications must be >= 1");
    if (c.fdd.cloud_size < 1) err("fdd.cloud_size must be >= 1");
    if (c.fdd.functional != "one" && c.fdd.functional != "mean" && c.fdd.functional != "second_moment" &&
        c.fdd.functional != "indicator_box")
        err("fdd.functional must be one | mean | second_moment | indicator_box");
    if (c.fdd.functional == "indicator_box" && c.fdd.functional_box.size() != 2 * static_cast<std::size_t>(c.model.dim))
        err("fdd.functional_box needs 2*dim entries");
    if (c.command == Command::study && c.study.n_values.empty()) err("study.n_values must not be empty");
    if (c.study.seeds < 1) err("study.seeds must be >= 1");
    if (c.oracle.nodes < 2) err("oracle.nodes must be >= 2");
    if (!(c.oracle.tol > 0.0)) err("oracle.tol must be positive");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    std::map<std::string, Section> sections;
    std::string current;
    int line_no = 0;
    std::istringstream in(text);
    std::string raw;
    bool saw_command = false;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (known_keys().find(current) == known_keys().end()) fail(line_no, "unknown section [" + current + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& allowed = known_keys().at(current);
        if (allowed.find(key) == allowed.end())
            fail(line_no, "unknown key '" + key + "' in section [" + current + "]");
        auto [it, inserted] = sections[current].emplace(key, RawEntry{value, line_no});
        if (!inserted)
            fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
        if (current.empty() && key == "command") saw_command = true;
    }
    if (!saw_command) throw ConfigError("missing command");

    RunConfig c;
    Reader r(sections);
    {
        const RawEntry* e = r.find("", "command");
        const std::string& v = e->value;
        if (v == "solve")
            c.command = Command::solve;
        else if (v == "fdd")
            c.command = Command::fdd;
        else if (v == "study")
            c.command = Command::study;
        else if (v == "oracle")
            c.command = Command::oracle;
        else
            fail(e->line, "unknown command '" + v + "'");
    }
    r.get("", "master_seed", c.master_seed, parse_u64);

    r.get("model", "kind", c.model.kind, [](const std::string& v, int) { return v; });
    r.get("model", "dim", c.model.dim, parse_int);
    r.get("model", "sigma", c.model.sigma, parse_double);
    r.get("model", "theta", c.model.theta, parse_double);
    r.get("model", "horizon", c.model.horizon, parse_double);

    read_marginal(r, "rho0", c.rho0);
    read_marginal(r, "rhoT", c.rhoT);

    r.get("solver", "cloud_size", c.solver.cloud_size, parse_u64);
    r.get("solver", "sde_steps", c.solver.sde_steps, parse_int);
    r.get("solver", "alpha", c.solver.alpha, parse_double);
    r.get("solver", "bandwidth", c.solver.bandwidth, parse_double);
    r.get("solver", "k_max", c.solver.k_max, parse_int);
    r.get("solver", "stop_tol", c.solver.stop_tol, parse_double);
    r.get("solver", "lattice_nodes", c.solver.lattice_nodes, parse_int);
    r.get("solver", "resample_per_iteration", c.solver.resample_per_iteration, parse_bool);
    r.get("solver", "residual_mc", c.solver.residual_mc, parse_int);
    r.get("solver", "mode", c.solver.mode, [](const std::string& v, int) { return v; });
    r.get("solver", "q_min", c.solver.q_min, parse_double);
    r.get("solver", "q_max", c.solver.q_max, parse_double);
    r.get("solver", "Q_min", c.solver.Q_min, parse_double);
    r.get("solver", "Q_max", c.solver.Q_max, parse_double);
    r.get("solver", "rho_min", c.solver.rho_min, parse_double);
    r.get("solver", "rho_max", c.solver.rho_max, parse_double);

    r.get("fdd", "t_star", c.fdd.t_star, parse_double);
    r.get("fdd", "forward_times", c.fdd.forward_times, parse_doubles);
    r.get("fdd", "reverse_times", c.fdd.reverse_times, parse_doubles);
    r.get("fdd", "epsilon", c.fdd.epsilon, parse_double);
    r.get("fdd", "replications", c.fdd.replications, parse_u64);
    r.get("fdd", "cloud_size", c.fdd.cloud_size, parse_u64);
    r.get("fdd", "sde_steps", c.fdd.sde_steps, parse_int);
    r.get("fdd", "functional", c.fdd.functional, [](const std::string& v, int) { return v; });
    r.get("fdd", "functional_time", c.fdd.functional_time, parse_double);
    r.get("fdd", "functional_axis", c.fdd.functional_axis, parse_int);
    r.get("fdd", "functional_box", c.fdd.functional_box, parse_doubles);
    r.get("fdd", "nu0", c.fdd.nu0, [](const std::string& v, int) { return v; });
    r.get("fdd", "nuT", c.fdd.nuT, [](const std::string& v, int) { return v; });

    r.get("study", "n_values", c.study.n_values, parse_u64s);
    r.get("study", "seeds", c.study.seeds, parse_int);

    r.get("oracle", "nodes", c.oracle.nodes, parse_int);
    r.get("oracle", "tol", c.oracle.tol, parse_double);
    r.get("oracle", "max_iter", c.oracle.max_iter, parse_int);
    r.get("oracle", "compare_solver", c.oracle.compare_solver, parse_bool);

    r.get("output", "directory", c.output.directory, [](const std::string& v, int) { return v; });
    r.get("output", "csv", c.output.csv, [](const std::string& v, int) { return v; });
    r.get("output", "log", c.output.log, [](const std::string& v, int) { return v; });
    r.get("output", "prefix", c.output.prefix, [](const std::string& v, int) { return v; });

    validate(c);
    return c;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v[i]);
    }
    return out;
}

std::string fmt(const std::vector<std::uint64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(v[i]);
    }
    return out;
}

const char* density_kind_name(DensityKind k) {
    switch (k) {
        case DensityKind::uniform: return "uniform";
        case DensityKind::polynomial: return "polynomial";
        case DensityKind::lattice_file: return "lattice-file";
    }
    return "uniform";
}

void emit_marginal(std::ostringstream& out, const std::string& prefix, const MarginalBlock& m) {
    out << prefix << "_kind = " << density_kind_name(m.kind) << '\n';
    if (!m.box.empty()) out << prefix << "_box = " << fmt(m.box) << '\n';
    if (!m.coeffs.empty()) out << prefix << "_coeffs = " << fmt(m.coeffs) << '\n';
    if (!m.file.empty()) out << prefix << "_file = " << m.file << '\n';
}

}  // namespace

std::string emit_config(const RunConfig& c) {
    std::ostringstream out;
    const char* command = c.command == Command::solve   ? "solve"
                          : c.command == Command::fdd   ? "fdd"
                          : c.command == Command::study ? "study"
                                                        : "oracle";
    out << "command = " << command << '\n';
    out << "master_seed = " << c.master_seed << '\n';

    out << "\n[model]\n";
    out << "kind = " << c.model.kind << '\n';
    out << "dim = " << c.model.dim << '\n';
    out << "sigma = " << fmt(c.model.sigma) << '\n';
    out << "theta = " << fmt(c.model.theta) << '\n';
    out << "horizon = " << fmt(c.model.horizon) << '\n';

    out << "\n[marginals]\n";
    emit_marginal(out, "rho0", c.rho0);
    emit_marginal(out, "rhoT", c.rhoT);

    out << "\n[solver]\n";
    out << "cloud_size = " << c.solver.cloud_size << '\n';
    out << "sde_steps = " << c.solver.sde_steps << '\n';
    out << "alpha = " << fmt(c.solver.alpha) << '\n';
    out << "bandwidth = " << fmt(c.solver.bandwidth) << '\n';
    out << "k_max = " << c.solver.k_max << '\n';
    out << "stop_tol = " << fmt(c.solver.stop_tol) << '\n';
    out << "lattice_nodes = " << c.solver.lattice_nodes << '\n';
    out << "resample_per_iteration = " << (c.solver.resample_per_iteration ? "true" : "false") << '\n';
    out << "residual_mc = " << c.solver.residual_mc << '\n';
    out << "mode = " << c.solver.mode << '\n';
    out << "q_min = " << fmt(c.solver.q_min) << '\n';
    out << "q_max = " << fmt(c.solver.q_max) << '\n';
    out << "Q_min = " << fmt(c.solver.Q_min) << '\n';
    out << "Q_max = " << fmt(c.solver.Q_max) << '\n';
    out << "rho_min = " << fmt(c.solver.rho_min) << '\n';
    out << "rho_max = " << fmt(c.solver.rho_max) << '\n';

    out << "\n[fdd]\n";
    out << "t_star = " << fmt(c.fdd.t_star) << '\n';
    if (!c.fdd.forward_times.empty()) out << "forward_times = " << fmt(c.fdd.forward_times) << '\n';
    if (!c.fdd.reverse_times.empty()) out << "reverse_times = " << fmt(c.fdd.reverse_times) << '\n';
    out << "epsilon = " << fmt(c.fdd.epsilon) << '\n';
    out << "replications = " << c.fdd.replications << '\n';
    out << "cloud_size = " << c.fdd.cloud_size << '\n';
    out << "sde_steps = " << c.fdd.sde_steps << '\n';
    out << "functional = " << c.fdd.functional << '\n';
    out << "functional_time = " << fmt(c.fdd.functional_time) << '\n';
    out << "functional_axis = " << c.fdd.functional_axis << '\n';
    if (!c.fdd.functional_box.empty()) out << "functional_box = " << fmt(c.fdd.functional_box) << '\n';
    out << "nu0 = " << c.fdd.nu0 << '\n';
    out << "nuT = " << c.fdd.nuT << '\n';

    out << "\n[study]\n";
    if (!c.study.n_values.empty()) out << "n_values = " << fmt(c.study.n_values) << '\n';
    out << "seeds = " << c.study.seeds << '\n';

    out << "\n[oracle]\n";
    out << "nodes = " << c.oracle.nodes << '\n';
    out << "tol = " << fmt(c.oracle.tol) << '\n';
    out << "max_iter = " << c.oracle.max_iter << '\n';
    out << "compare_solver = " << (c.oracle.compare_solver ? "true" : "false") << '\n';

    out << "\n[output]\n";
    out << "directory = " << c.output.directory << '\n';
    if (!c.output.csv.empty()) out << "csv = " << c.output.csv << '\n';
    if (!c.output.log.empty()) out << "log = " << c.output.log << '\n';
    if (!c.output.prefix.empty()) out << "prefix = " << c.output.prefix << '\n';
    return out.str();
}

}  // namespace sbfr
