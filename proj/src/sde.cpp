#include "sbfr/sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbfr/parallel.hpp"

namespace sbfr {

std::vector<double> uniform_grid(double horizon, int steps) {
    if (steps < 1) throw std::invalid_argument("uniform_grid: steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("uniform_grid: horizon must be positive");
    std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) grid[static_cast<std::size_t>(k)] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    grid.back() = horizon;
    return grid;
}

std::vector<double> grid_containing(double horizon, int steps, const std::vector<double>& mandatory) {
    std::vector<double> grid = uniform_grid(horizon, steps);
    for (double t : mandatory) {
        if (t < 0.0 || t > horizon) throw std::invalid_argument("grid_containing: mandatory time outside [0, horizon]");
        grid.push_back(t);
    }
    std::sort(grid.begin(), grid.end());
    const double tol = 1e-12 * std::max(1.0, horizon);
    grid.erase(std::unique(grid.begin(), grid.end(), [tol](double a, double b) { return std::abs(a - b) <= tol; }), grid.end());
    return grid;
}

int Path::index_of_time(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(times.back()));
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= tol) return static_cast<int>(k);
    throw std::invalid_argument("Path::index_of_time: time is not a grid node");
}

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.size() < 2 || grid.front() != 0.0) throw std::invalid_argument("simulate: grid must start at 0 with at least one step");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("simulate: grid must be strictly increasing");
}

void store_state(Path& path, const Vec& x) {
    for (int i = 0; i < x.size(); ++i) path.states.push_back(x[i]);
}

[[noreturn]] void explosion(const char* which, std::size_t step) {
    throw SimulationError(std::string(which) + ": non-finite state at step " + std::to_string(step));
}

}  // namespace

Path simulate_forward(const DiffusionModel& model, const Vec& x0, const std::vector<double>& grid, RandomStream& noise) {
    model.validate();
    check_grid(grid);
    if (x0.size() != model.dim || !x0.finite()) throw std::invalid_argument("simulate_forward: x0 must be finite with the model dimension");

    Path path;
    path.dim = model.dim;
    path.times = grid;
    path.states.reserve(grid.size() * static_cast<std::size_t>(model.dim));

    Vec x = x0;
    store_state(path, x);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double t = grid[k];
        const double dt = grid[k + 1] - grid[k];
        const Vec a = model.drift(t, x);
        const Mat sig = model.diffusion(t, x);
        const Vec xi = noise.normal_vec(model.noise_dim);
        const double sqdt = std::sqrt(dt);
        Vec next = x;
        for (int i = 0; i < model.dim; ++i) {
            double diff = 0.0;
            for (int j = 0; j < model.noise_dim; ++j) diff += sig(i, j) * xi[j];
            next[i] += a[i] * dt + sqdt * diff;
        }
        if (!next.finite()) explosion("simulate_forward", k + 1);
        x = next;
        store_state(path, x);
    }
    return path;
}

Path simulate_forward(const DiffusionModel& model, const Vec& x0, int steps, RandomStream& noise) {
    return simulate_forward(model, x0, uniform_grid(model.horizon, steps), noise);
}

namespace {

// Central-difference step per coordinate.
inline double fd_step(double coord) { return 1e-5 * (1.0 + std::abs(coord)); }

Vec fd_b_row_div(const DiffusionModel& model, double t, const Vec& x) {
    Vec out(model.dim);
    for (int j = 0; j < model.dim; ++j) {
        const double h = fd_step(x[j]);
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Mat bp = model.diffusion(t, xp).gram();
        const Mat bm = model.diffusion(t, xm).gram();
        for (int i = 0; i < model.dim; ++i) out[i] += (bp(i, j) - bm(i, j)) / (2.0 * h);
    }
    return out;
}

double fd_b_lap(const DiffusionModel& model, double t, const Vec& x) {
    double total = 0.0;
    const Mat b0 = model.diffusion(t, x).gram();
    for (int i = 0; i < model.dim; ++i) {
        const double hi = fd_step(x[i]);
        {  // diagonal term d^2 b^{ii} / dx_i^2
            Vec xp = x, xm = x;
            xp[i] += hi;
            xm[i] -= hi;
            const Mat bp = model.diffusion(t, xp).gram();
            const Mat bm = model.diffusion(t, xm).gram();
            total += (bp(i, i) - 2.0 * b0(i, i) + bm(i, i)) / (hi * hi);
        }
        for (int j = 0; j < model.dim; ++j) {
            if (j == i) continue;
            const double hj = fd_step(x[j]);
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += hi; xpp[j] += hj;
            xpm[i] += hi; xpm[j] -= hj;
            xmp[i] -= hi; xmp[j] += hj;
            xmm[i] -= hi; xmm[j] -= hj;
            const double d2 = (model.diffusion(t, xpp).gram()(i, j) - model.diffusion(t, xpm).gram()(i, j) -
                               model.diffusion(t, xmp).gram()(i, j) + model.diffusion(t, xmm).gram()(i, j)) /
                              (4.0 * hi * hj);
            total += d2;
        }
    }
    return total;
}

double fd_a_div(const DiffusionModel& model, double t, const Vec& x) {
    double div = 0.0;
    for (int i = 0; i < model.dim; ++i) {
        const double h = fd_step(x[i]);
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        div += (model.drift(t, xp)[i] - model.drift(t, xm)[i]) / (2.0 * h);
    }
    return div;
}

}  // namespace

ReverseModel derive_reverse_model(const DiffusionModel& model) {
    model.validate();
    const DiffusionModel m = model;  // captured by value below
    const double T = model.horizon;

    ReverseModel rev;
    rev.dim = model.dim;
    rev.noise_dim = model.noise_dim;
    rev.horizon = T;
    rev.sigma_tilde = [m, T](double s, const Vec& y) { return m.diffusion(T - s, y); };
    rev.alpha = [m, T](double s, const Vec& y) {
        const double t = T - s;
        Vec row_div = m.b_row_div ? m.b_row_div(t, y) : fd_b_row_div(m, t, y);
        const Vec a = m.drift(t, y);
        for (int i = 0; i < m.dim; ++i) row_div[i] -= a[i];
        return row_div;
    };
    rev.potential = [m, T](double s, const Vec& y) {
        const double t = T - s;
        const double lap = m.b_lap ? m.b_lap(t, y) : fd_b_lap(m, t, y);
        const double div = m.a_div ? m.a_div(t, y) : fd_a_div(m, t, y);
        return 0.5 * lap - div;
    };
    return rev;
}

Path simulate_reverse(const ReverseModel& rmodel, const Vec& y0, const std::vector<double>& grid, RandomStream& noise) {
    check_grid(grid);
    if (y0.size() != rmodel.dim || !y0.finite()) throw std::invalid_argument("simulate_reverse: y0 must be finite with the model dimension");

    Path path;
    path.dim = rmodel.dim;
    path.times = grid;
    path.states.reserve(grid.size() * static_cast<std::size_t>(rmodel.dim));
    path.weights.reserve(grid.size());

    Vec y = y0;
    store_state(path, y);
    path.weights.push_back(1.0);
    double log_weight = 0.0;
    double c_prev = rmodel.potential(grid[0], y);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double s = grid[k];
        const double ds = grid[k + 1] - grid[k];
        const Vec al = rmodel.alpha(s, y);
        const Mat sig = rmodel.sigma_tilde(s, y);
        const Vec xi = noise.normal_vec(rmodel.noise_dim);
        const double sqds = std::sqrt(ds);
        Vec next = y;
        for (int i = 0; i < rmodel.dim; ++i) {
            double diff = 0.0;
            for (int j = 0; j < rmodel.noise_dim; ++j) diff += sig(i, j) * xi[j];
            next[i] += al[i] * ds + sqds * diff;
        }
        if (!next.finite()) explosion("simulate_reverse", k + 1);
        y = next;
        const double c_next = rmodel.potential(grid[k + 1], y);
        log_weight += 0.5 * ds * (c_prev + c_next);
        c_prev = c_next;
        const double w = std::exp(log_weight);
        if (!std::isfinite(w) || w <= 0.0)
            throw WeightOverflowError("simulate_reverse: weight overflow at step " + std::to_string(k + 1));
        store_state(path, y);
        path.weights.push_back(w);
    }
    return path;
}

Path simulate_reverse(const ReverseModel& rmodel, const Vec& y0, int steps, RandomStream& noise) {
    return simulate_reverse(rmodel, y0, uniform_grid(rmodel.horizon, steps), noise);
}

SamplerDensity SamplerDensity::uniform(const Box& box) {
    SamplerDensity s;
    s.box = box;
    const double density = 1.0 / box.volume();
    s.pdf = [box, density](const Vec& x) { return box.contains(x) ? density : 0.0; };
    s.draw = [box](RandomStream& rng) { return rng.uniform_in(box); };
    return s;
}

Vec PathCloud::start(std::size_t i) const {
    Vec x(dim);
    for (int k = 0; k < dim; ++k) x[k] = starts[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)];
    return x;
}

Vec PathCloud::end(std::size_t i) const {
    Vec x(dim);
    for (int k = 0; k < dim; ++k) x[k] = ends[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)];
    return x;
}

PathCloud sample_cloud(const DiffusionModel& model, const SamplerDensity& sampler, std::size_t count, int steps,
                       CloudDirection direction, std::uint64_t master_seed) {
    model.validate();
    if (sampler.box.dim() != model.dim) throw std::invalid_argument("sample_cloud: sampler box dimension mismatch");

    PathCloud cloud;
    cloud.dim = model.dim;
    cloud.direction = direction;
    const std::size_t d = static_cast<std::size_t>(model.dim);
    cloud.starts.resize(count * d);
    cloud.ends.resize(count * d);
    const bool reverse = direction == CloudDirection::reverse;
    if (reverse) cloud.weights.resize(count);

    const ReverseModel rev = reverse ? derive_reverse_model(model) : ReverseModel{};
    const std::vector<double> grid = uniform_grid(model.horizon, steps);
    const StreamDomain start_domain = reverse ? StreamDomain::start_sample_reverse : StreamDomain::start_sample_forward;
    const StreamDomain path_domain = reverse ? StreamDomain::reverse_path : StreamDomain::forward_path;

    const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t begin = blk * kReductionBlock;
        const std::size_t end_i = std::min(count, begin + kReductionBlock);
        for (std::size_t i = begin; i < end_i; ++i) {
            RandomStream start_rng(master_seed, start_domain, i);
            RandomStream path_rng(master_seed, path_domain, i);
            const Vec x0 = sampler.draw(start_rng);
            try {
                const Path path = reverse ? simulate_reverse(rev, x0, grid, path_rng) : simulate_forward(model, x0, grid, path_rng);
                const Vec xT = path.terminal();
                for (std::size_t k = 0; k < d; ++k) {
                    cloud.starts[i * d + k] = x0[static_cast<int>(k)];
                    cloud.ends[i * d + k] = xT[static_cast<int>(k)];
                }
                if (reverse) cloud.weights[i] = path.terminal_weight();
            } catch (const SimulationError& err) {
                throw SimulationError("sample_cloud: index " + std::to_string(i) + ": " + err.what());
            }
        }
    });
    return cloud;
}

}  // namespace sbfr
