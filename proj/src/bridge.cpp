#include "sbfr/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sbfr/clouds.hpp"
#include "sbfr/parallel.hpp"
#include "sbfr/sde.hpp"

namespace sbfr {

void TimePartition::validate() const {
    if (forward_times.size() < 2 || reverse_times.size() < 2)
        throw std::invalid_argument("TimePartition: needs 0..t* and t*..T legs");
    if (forward_times.front() != 0.0) throw std::invalid_argument("TimePartition: forward leg must start at 0");
    for (std::size_t k = 1; k < forward_times.size(); ++k)
        if (!(forward_times[k] > forward_times[k - 1])) throw std::invalid_argument("TimePartition: forward times must increase");
    for (std::size_t k = 1; k < reverse_times.size(); ++k)
        if (!(reverse_times[k] > reverse_times[k - 1])) throw std::invalid_argument("TimePartition: reverse times must increase");
    if (reverse_times.front() != forward_times.back())
        throw std::invalid_argument("TimePartition: legs must meet at t*");
    const double T = horizon();
    if (!(t_star() > 0.0) || !(t_star() < T)) throw std::invalid_argument("TimePartition: t* must lie in (0, T)");
}

std::vector<double> TimePartition::reversed_clocks() const {
    const double T = horizon();
    const std::size_t L = reverse_times.size() - 1;
    std::vector<double> clocks(L);
    for (std::size_t i = 1; i <= L; ++i) clocks[i - 1] = T - reverse_times[L - i];
    return clocks;
}

std::vector<double> TimePartition::tuple_times() const {
    std::vector<double> times = forward_times;
    times.insert(times.end(), reverse_times.begin() + 1, reverse_times.end());
    return times;
}

TimePartition TimePartition::simple(double horizon, double t_star) {
    return make(horizon, t_star, {}, {});
}

TimePartition TimePartition::make(double horizon, double t_star, std::vector<double> forward_interior,
                                  std::vector<double> reverse_interior) {
    TimePartition p;
    p.forward_times.push_back(0.0);
    std::sort(forward_interior.begin(), forward_interior.end());
    for (double s : forward_interior) p.forward_times.push_back(s);
    p.forward_times.push_back(t_star);
    p.reverse_times.push_back(t_star);
    std::sort(reverse_interior.begin(), reverse_interior.end());
    for (double t : reverse_interior) p.reverse_times.push_back(t);
    p.reverse_times.push_back(horizon);
    p.validate();
    return p;
}

double fr_bandwidth_rule(int dim, std::size_t n) {
    if (n < 2) throw std::invalid_argument("fr_bandwidth_rule: requires N >= 2");
    if (dim < 1) throw std::invalid_argument("fr_bandwidth_rule: dim must be positive");
    double exponent;
    if (dim <= 4)
        exponent = std::max(0.25, std::min(1.0 / static_cast<double>(dim), 1.0 / 3.0));
    else
        exponent = 2.0 / (4.0 + static_cast<double>(dim));
    return std::pow(static_cast<double>(n), -exponent);
}

namespace {

// States a forward draw contributes to the tuple: interiors s_1..s_{K-1}
// followed by the matching state X_{t*}.
struct ForwardDraw {
    std::vector<Vec> states;
};

// States a reverse draw contributes: slots at forward times t_1..t_{L-1}
// (ascending) plus the matching state and weight at reverse clock T - t*.
struct ReverseDraw {
    std::vector<Vec> states;
    Vec match;
    double weight = 1.0;
};

int leg_steps(double leg, double horizon, int steps_total) {
    return std::max(1, static_cast<int>(std::lround(static_cast<double>(steps_total) * leg / horizon)));
}

std::vector<ForwardDraw> draw_forward(const DiffusionModel& model, const Vec& x, const TimePartition& part,
                                      std::size_t count, int sde_steps, std::uint64_t seed, StreamDomain domain,
                                      const std::vector<Vec>* starts) {
    const double t_star = part.t_star();
    std::vector<double> interior(part.forward_times.begin() + 1, part.forward_times.end() - 1);
    const std::vector<double> grid = grid_containing(t_star, leg_steps(t_star, part.horizon(), sde_steps), interior);
    std::vector<ForwardDraw> draws(count);
    const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t begin = blk * kReductionBlock;
        const std::size_t end_i = std::min(count, begin + kReductionBlock);
        for (std::size_t i = begin; i < end_i; ++i) {
            RandomStream rng(seed, domain, 2 * i + 1);
            const Vec x0 = starts ? (*starts)[i] : x;
            const Path path = simulate_forward(model, x0, grid, rng);
            ForwardDraw d;
            d.states.reserve(interior.size() + 1);
            for (double s : interior) d.states.push_back(path.state(path.index_of_time(s)));
            d.states.push_back(path.terminal());
            draws[i] = std::move(d);
        }
    });
    return draws;
}

std::vector<ReverseDraw> draw_reverse(const DiffusionModel& model, const Vec& y, const TimePartition& part,
                                      std::size_t count, int sde_steps, std::uint64_t seed, StreamDomain domain,
                                      const std::vector<Vec>* starts) {
    const double T = part.horizon();
    const double rev_horizon = T - part.t_star();
    // Reverse clocks of the interior reverse-side times, ascending.
    std::vector<double> clocks;
    for (std::size_t j = 1; j + 1 < part.reverse_times.size(); ++j) clocks.push_back(T - part.reverse_times[j]);
    std::sort(clocks.begin(), clocks.end());
    const std::vector<double> grid = grid_containing(rev_horizon, leg_steps(rev_horizon, T, sde_steps), clocks);

    const ReverseModel rmodel = derive_reverse_model(model);
    std::vector<ReverseDraw> draws(count);
    const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t begin = blk * kReductionBlock;
        const std::size_t end_i = std::min(count, begin + kReductionBlock);
        for (std::size_t i = begin; i < end_i; ++i) {
            RandomStream rng(seed, domain, 2 * i + 1);
            const Vec y0 = starts ? (*starts)[i] : y;
            const Path path = simulate_reverse(rmodel, y0, grid, rng);
            ReverseDraw d;
            // Slot at forward time t_j is the state at reverse clock T - t_j;
            // iterate interior times in ascending forward order.
            d.states.reserve(part.reverse_times.size() - 2);
            for (std::size_t j = 1; j + 1 < part.reverse_times.size(); ++j) {
                const int k = path.index_of_time(T - part.reverse_times[j]);
                d.states.push_back(path.state(k));
            }
            d.match = path.terminal();
            d.weight = path.terminal_weight();
            draws[i] = std::move(d);
        }
    });
    return draws;
}

std::vector<double> flatten_matches(const std::vector<ForwardDraw>& draws, int dim) {
    std::vector<double> flat;
    flat.reserve(draws.size() * static_cast<std::size_t>(dim));
    for (const ForwardDraw& d : draws) {
        const Vec& m = d.states.back();
        for (int k = 0; k < dim; ++k) flat.push_back(m[k]);
    }
    return flat;
}

struct PairSums {
    double total_g = 0.0;
    double total_1 = 0.0;
    std::vector<double> row_g, row_1;  // per forward index
    std::vector<double> col_g, col_1;  // per reverse index
    std::vector<double> diag_g;        // zeta(r, r), square case only
    std::size_t nonzero = 0;
};

// The mollified double sum over all (forward, reverse) pairs. Reverse draws
// are processed in fixed blocks; per-block partial rows are merged in block
// order, so results are identical for any worker count.
PairSums mollified_pair_sums(const DiffusionModel& model, const PathFunctional* g, const Vec& x_slot, const Vec& y_slot,
                             const std::vector<Vec>* fwd_starts, const std::vector<Vec>* rev_starts,
                             const std::vector<ForwardDraw>& fwd, const std::vector<ReverseDraw>& rev, double epsilon,
                             bool want_diag) {
    const int dim = model.dim;
    const Kernel kernel(dim);
    const std::vector<double> flat = flatten_matches(fwd, dim);
    const SpatialBins bins(flat, dim, epsilon);

    const std::size_t n_fwd = fwd.size(), n_rev = rev.size();
    const std::size_t tuple_len = 2 + (fwd.empty() ? 0 : fwd[0].states.size()) + (rev.empty() ? 0 : rev[0].states.size());
    const std::size_t n_blocks = (n_rev + kReductionBlock - 1) / kReductionBlock;

    PairSums sums;
    sums.row_g.assign(n_fwd, 0.0);
    sums.row_1.assign(n_fwd, 0.0);
    sums.col_g.assign(n_rev, 0.0);
    sums.col_1.assign(n_rev, 0.0);
    if (want_diag) sums.diag_g.assign(n_rev, 0.0);

    struct BlockOut {
        double total_g = 0.0, total_1 = 0.0;
        std::vector<double> row_g, row_1;
        std::size_t nonzero = 0;
    };
    std::vector<BlockOut> blocks(n_blocks);

    parallel_blocks(n_blocks, [&](std::size_t blk) {
        BlockOut out;
        out.row_g.assign(n_fwd, 0.0);
        out.row_1.assign(n_fwd, 0.0);
        std::vector<Vec> tuple(tuple_len);
        for (std::size_t m = blk * kReductionBlock; m < std::min(n_rev, (blk + 1) * kReductionBlock); ++m) {
            const ReverseDraw& rd = rev[m];
            tuple.back() = rev_starts ? (*rev_starts)[m] : y_slot;
            const std::size_t rev_offset = tuple_len - 1 - rd.states.size();
            for (std::size_t j = 0; j < rd.states.size(); ++j) tuple[rev_offset + j] = rd.states[j];
            double col_g = 0.0, col_1 = 0.0;
            bins.for_each_candidate(rd.match, 0.5 * epsilon, [&](std::uint32_t n) {
                Vec u = rd.match;
                u -= fwd[n].states.back();
                const double kval = kernel.scaled(u, epsilon);
                if (kval <= 0.0) return;
                const double base = kval * rd.weight;
                double zg = base;
                if (g) {
                    tuple[0] = fwd_starts ? (*fwd_starts)[n] : x_slot;
                    for (std::size_t j = 0; j < fwd[n].states.size(); ++j) tuple[1 + j] = fwd[n].states[j];
                    zg = base * (*g)(std::span<const Vec>(tuple.data(), tuple.size()));
                }
                out.row_g[n] += zg;
                out.row_1[n] += base;
                col_g += zg;
                col_1 += base;
                ++out.nonzero;
                if (want_diag && n == m) sums.diag_g[m] += zg;
            });
            sums.col_g[m] = col_g;
            sums.col_1[m] = col_1;
            out.total_g += col_g;
            out.total_1 += col_1;
        }
        blocks[blk] = std::move(out);
    });

    for (const BlockOut& out : blocks) {
        sums.total_g += out.total_g;
        sums.total_1 += out.total_1;
        sums.nonzero += out.nonzero;
        for (std::size_t n = 0; n < n_fwd; ++n) {
            sums.row_g[n] += out.row_g[n];
            sums.row_1[n] += out.row_1[n];
        }
    }
    return sums;
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double t : v) mean += t;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double t : v) var += (t - mean) * (t - mean);
    return var / static_cast<double>(v.size() - 1);
}

}  // namespace

FrEstimate fr_joint_estimate(const DiffusionModel& model, const PathFunctional& g, const Vec& x, const Vec& y,
                             const TimePartition& partition, std::size_t n_forward, std::size_t m_reverse, double epsilon,
                             std::uint64_t master_seed, int sde_steps) {
    model.validate();
    partition.validate();
    if (n_forward < 1 || m_reverse < 1) throw std::invalid_argument("fr_joint_estimate: N, M must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("fr_joint_estimate: epsilon must be positive");

    const auto fwd = draw_forward(model, x, partition, n_forward, sde_steps, master_seed, StreamDomain::fdd_forward, nullptr);
    const auto rev = draw_reverse(model, y, partition, m_reverse, sde_steps, master_seed, StreamDomain::fdd_reverse, nullptr);
    const PairSums sums = mollified_pair_sums(model, &g, x, y, nullptr, nullptr, fwd, rev, epsilon, false);

    const double nm = static_cast<double>(n_forward) * static_cast<double>(m_reverse);
    FrEstimate est;
    est.value = sums.total_g / nm;
    std::vector<double> a(n_forward), b(m_reverse);
    for (std::size_t n = 0; n < n_forward; ++n) a[n] = sums.row_g[n] / static_cast<double>(m_reverse);
    for (std::size_t m = 0; m < m_reverse; ++m) b[m] = sums.col_g[m] / static_cast<double>(n_forward);
    est.std_error = std::sqrt(sample_variance(a) / static_cast<double>(n_forward) +
                              sample_variance(b) / static_cast<double>(m_reverse));
    est.nonzero_fraction = static_cast<double>(sums.nonzero) / nm;
    return est;
}

FrEstimate fr_conditional_estimate(const DiffusionModel& model, const PathFunctional& g, const Vec& x, const Vec& y,
                                   const TimePartition& partition, std::size_t n_paths, double epsilon,
                                   std::uint64_t master_seed, int sde_steps) {
    model.validate();
    partition.validate();
    if (n_paths < 1) throw std::invalid_argument("fr_conditional_estimate: N must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("fr_conditional_estimate: epsilon must be positive");

    const auto fwd = draw_forward(model, x, partition, n_paths, sde_steps, master_seed, StreamDomain::fdd_forward, nullptr);
    const auto rev = draw_reverse(model, y, partition, n_paths, sde_steps, master_seed, StreamDomain::fdd_reverse, nullptr);
    const PairSums sums = mollified_pair_sums(model, &g, x, y, nullptr, nullptr, fwd, rev, epsilon, false);

    if (!(sums.total_1 > 0.0))
        throw InsufficientOverlapError("fr_conditional_estimate: no mollifier overlap; increase epsilon or N");

    const double nm = static_cast<double>(n_paths) * static_cast<double>(n_paths);
    const double ratio = sums.total_g / sums.total_1;
    const double b_bar = sums.total_1 / nm;

    // Delta-method standard error from row/column residuals.
    std::vector<double> u(n_paths), v(n_paths);
    for (std::size_t n = 0; n < n_paths; ++n) u[n] = (sums.row_g[n] - ratio * sums.row_1[n]) / static_cast<double>(n_paths);
    for (std::size_t m = 0; m < n_paths; ++m) v[m] = (sums.col_g[m] - ratio * sums.col_1[m]) / static_cast<double>(n_paths);
    const double var = (sample_variance(u) + sample_variance(v)) / static_cast<double>(n_paths);

    FrEstimate est;
    est.value = ratio;
    est.std_error = std::sqrt(var) / b_bar;
    est.nonzero_fraction = static_cast<double>(sums.nonzero) / nm;
    return est;
}

PotentialSampler PotentialSampler::from_density(const LatticeFunction& density) {
    PotentialSampler p;
    p.density_ = l1_normalize(density).first;
    p.envelope_ = p.density_->max_value();
    p.box_ = density.support();
    return p;
}

PotentialSampler PotentialSampler::point_mass(const Vec& atom) {
    PotentialSampler p;
    p.atom_ = atom;
    return p;
}

const Box& PotentialSampler::box() const {
    if (!density_) throw std::logic_error("PotentialSampler: point masses carry no box");
    return box_;
}

double PotentialSampler::density_at(const Vec& x) const {
    if (!density_) throw std::logic_error("PotentialSampler: density_at is undefined for a point mass");
    return density_->eval_or_zero(x);
}

Vec PotentialSampler::draw(RandomStream& rng) const {
    std::size_t attempts = 0;
    return draw_tracked(rng, attempts);
}

Vec PotentialSampler::draw_tracked(RandomStream& rng, std::size_t& attempts) const {
    if (atom_) return *atom_;
    while (true) {
        ++attempts;
        const Vec u = rng.uniform_in(box_);
        const double accept = density_->eval(u) / envelope_;
        if (rng.uniform01() <= accept) return u;
        if (attempts >= 1000000) throw std::runtime_error("PotentialSampler: acceptance rate below 1e-4; envelope is pathological");
    }
}

std::vector<Vec> sample_from_potential(const PotentialSampler& p, std::size_t count, RandomStream& rng) {
    std::vector<Vec> out(count);
    std::size_t attempts = 0;
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = p.draw_tracked(rng, attempts);
        if (attempts >= 100000 && static_cast<double>(i + 1) < 1e-4 * static_cast<double>(attempts))
            throw std::runtime_error("sample_from_potential: acceptance rate below 1e-4; envelope is pathological");
    }
    return out;
}

void FddQuery::validate() const {
    partition.validate();
    if (replications < 1) throw std::invalid_argument("FddQuery: replications must be >= 1");
    if (cloud_size < 1) throw std::invalid_argument("FddQuery: cloud_size must be >= 1");
    if (epsilon < 0.0) throw std::invalid_argument("FddQuery: epsilon must be >= 0 (0 selects the bandwidth rule)");
    if (sde_steps < 1) throw std::invalid_argument("FddQuery: sde_steps must be >= 1");
    if (!g) throw std::invalid_argument("FddQuery: test functional required");
}

namespace {

// c0T^{-1} by the auxiliary Monte Carlo batch (or 1/q for two atoms).
double estimate_c0T(const DiffusionModel& model, const PotentialSampler& nu0, const PotentialSampler& nuT,
                    const FddQuery& query, std::uint64_t master_seed) {
    if (nu0.is_atom() && nuT.is_atom()) {
        if (!model.has_density())
            throw std::invalid_argument("fdd_schrodinger_estimate: two point masses need a closed-form density");
        return 1.0 / model.trans_density(0.0, nu0.atom(), model.horizon, nuT.atom());
    }
    const std::size_t n = query.cloud_size;
    std::vector<double> terms(n);
    if (!nuT.is_atom()) {
        // c^{-1} = E[ nuT(X_T^{0,U}) ], U ~ nu0.
        const std::vector<double> grid = uniform_grid(model.horizon, query.sde_steps);
        const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
        parallel_blocks(blocks, [&](std::size_t blk) {
            for (std::size_t i = blk * kReductionBlock; i < std::min(n, (blk + 1) * kReductionBlock); ++i) {
                RandomStream draw_rng(master_seed, StreamDomain::fdd_aux, 2 * i);
                RandomStream path_rng(master_seed, StreamDomain::fdd_aux, 2 * i + 1);
                const Vec u = nu0.is_atom() ? nu0.atom() : nu0.draw(draw_rng);
                terms[i] = nuT.density_at(simulate_forward(model, u, grid, path_rng).terminal());
            }
        });
    } else {
        // Mirrored through the reverse process: c^{-1} = E[ nu0(Y_T^{z0}) W_T ].
        const ReverseModel rmodel = derive_reverse_model(model);
        const std::vector<double> grid = uniform_grid(model.horizon, query.sde_steps);
        const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
        parallel_blocks(blocks, [&](std::size_t blk) {
            for (std::size_t i = blk * kReductionBlock; i < std::min(n, (blk + 1) * kReductionBlock); ++i) {
                RandomStream path_rng(master_seed, StreamDomain::fdd_aux, 2 * i + 1);
                const Path p = simulate_reverse(rmodel, nuT.atom(), grid, path_rng);
                terms[i] = nu0.density_at(p.terminal()) * p.terminal_weight();
            }
        });
    }
    KahanSum acc;
    for (double t : terms) acc.add(t);
    const double inv = acc.value() / static_cast<double>(n);
    if (!(inv > 0.0)) throw InsufficientOverlapError("fdd_schrodinger_estimate: normalizer batch saw zero mass");
    return 1.0 / inv;
}

}  // namespace

FddResult fdd_schrodinger_estimate(const DiffusionModel& model, const PotentialSampler& nu0, const PotentialSampler& nuT,
                                   const FddQuery& query, std::uint64_t master_seed) {
    model.validate();
    query.validate();
    const std::size_t R = query.replications;
    const double eps = query.epsilon > 0.0 ? query.epsilon : fr_bandwidth_rule(model.dim, std::max<std::size_t>(R, 2));

    // Boundary draws U^{(r)}, Z^{(r)}.
    std::vector<Vec> starts0(R), startsT(R);
    for (std::size_t r = 0; r < R; ++r) {
        RandomStream rng0(master_seed, StreamDomain::fdd_draw_start, r);
        RandomStream rngT(master_seed, StreamDomain::fdd_draw_end, r);
        starts0[r] = nu0.is_atom() ? nu0.atom() : nu0.draw(rng0);
        startsT[r] = nuT.is_atom() ? nuT.atom() : nuT.draw(rngT);
    }

    const auto fwd = draw_forward(model, Vec(model.dim), query.partition, R, query.sde_steps, master_seed,
                                  StreamDomain::fdd_forward, &starts0);
    const auto rev = draw_reverse(model, Vec(model.dim), query.partition, R, query.sde_steps, master_seed,
                                  StreamDomain::fdd_reverse, &startsT);
    const PairSums sums =
        mollified_pair_sums(model, &query.g, Vec(model.dim), Vec(model.dim), &starts0, &startsT, fwd, rev, eps, true);

    if (sums.nonzero == 0)
        throw InsufficientOverlapError("fdd_schrodinger_estimate: all mollifier terms vanish; increase epsilon or R");

    FddResult res;
    res.c0T = estimate_c0T(model, nu0, nuT, query, master_seed);
    const double r2 = static_cast<double>(R) * static_cast<double>(R);
    res.value = res.c0T * sums.total_g / r2;
    res.nonzero_fraction = static_cast<double>(sums.nonzero) / r2;

    if (R == 1) {
        res.std_error = 0.0;
        res.se_degenerate = true;
        return res;
    }
    // Delete-one jackknife over the outer index r (removing the r-th forward
    // and reverse draw together).
    std::vector<double> loo(R);
    const double rm1sq = static_cast<double>(R - 1) * static_cast<double>(R - 1);
    for (std::size_t j = 0; j < R; ++j)
        loo[j] = res.c0T * (sums.total_g - sums.row_g[j] - sums.col_g[j] + sums.diag_g[j]) / rm1sq;
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(R);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    res.std_error = std::sqrt(ss * static_cast<double>(R - 1) / static_cast<double>(R));
    return res;
}

std::vector<Path> h_transform_simulate(const DiffusionModel& model, const LatticeFunction& nuT, const PotentialSampler& rho0,
                                       int steps, std::size_t count, double delta_cap, std::uint64_t master_seed,
                                       const std::vector<double>& mandatory_times) {
    model.validate();
    if (!model.has_density() || !model.grad_log_density_x)
        throw std::invalid_argument("h_transform_simulate: model must expose q and grad log q");
    if (!(delta_cap > 0.0)) throw std::invalid_argument("h_transform_simulate: delta_cap must be positive");
    const double T = model.horizon;
    const double horizon = T - delta_cap;
    if (!(horizon > 0.0)) throw std::invalid_argument("h_transform_simulate: delta_cap leaves no simulation horizon");
    for (double t : mandatory_times)
        if (t > horizon) throw std::invalid_argument("h_transform_simulate: requested time beyond T - delta_cap");

    // Quadrature weights of the terminal potential.
    const std::size_t nodes = nuT.node_count();
    std::vector<Vec> y(nodes);
    std::vector<double> wnu(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        y[j] = nuT.node_point(j);
        wnu[j] = nuT.quadrature_weight(j) * nuT.value_at(j);
    }

    DiffusionModel driven = model;
    driven.drift = [model, y, wnu, T](double t, const Vec& w) {
        double den = 0.0;
        Vec num(model.dim);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double q = model.trans_density(t, w, T, y[j]);
            if (q <= 0.0) continue;
            const double c = wnu[j] * q;
            den += c;
            const Vec grad = model.grad_log_density_x(t, w, T, y[j]);
            for (int i = 0; i < model.dim; ++i) num[i] += c * grad[i];
        }
        if (!(den > 1e-300)) throw SimulationError("h_transform_simulate: terminal weight vanished along the path");
        const Mat b = model.diffusion(t, w).gram();
        Vec drift = model.drift(t, w);
        for (int i = 0; i < model.dim; ++i) {
            double corr = 0.0;
            for (int k = 0; k < model.dim; ++k) corr += b(i, k) * num[k] / den;
            drift[i] += corr;
        }
        return drift;
    };
    driven.horizon = horizon;

    const std::vector<double> grid = grid_containing(horizon, steps, mandatory_times);
    std::vector<Path> paths(count);
    const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        for (std::size_t i = blk * kReductionBlock; i < std::min(count, (blk + 1) * kReductionBlock); ++i) {
            RandomStream draw_rng(master_seed, StreamDomain::h_transform, 2 * i);
            RandomStream path_rng(master_seed, StreamDomain::h_transform, 2 * i + 1);
            const Vec x0 = rho0.is_atom() ? rho0.atom() : rho0.draw(draw_rng);
            paths[i] = simulate_forward(driven, x0, grid, path_rng);
        }
    });
    return paths;
}

}  // namespace sbfr
