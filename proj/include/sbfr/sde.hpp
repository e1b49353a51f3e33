// sde.hpp — Euler–Maruyama simulation of the forward diffusion, construction
// and simulation of the reverse process (Y, weight), and batched endpoint
// clouds with per-index seed substreams.
#pragma once

#include <cstdint>
#include <vector>

#include "sbfr/model.hpp"
#include "sbfr/rng.hpp"

namespace sbfr {

// Uniform grid 0 = t_0 < ... < t_steps = horizon.
std::vector<double> uniform_grid(double horizon, int steps);
// Uniform grid refined so that every mandatory time is a grid node.
std::vector<double> grid_containing(double horizon, int steps, const std::vector<double>& mandatory);

// Euler–Maruyama path of the forward model on the given grid. Throws
// SimulationError naming the step index if the state leaves the finite range.
Path simulate_forward(const DiffusionModel& model, const Vec& x0, const std::vector<double>& grid, RandomStream& noise);
Path simulate_forward(const DiffusionModel& model, const Vec& x0, int steps, RandomStream& noise);

// Reverse coefficients from Appendix-style formulas:
//   alpha^i(s,y) = sum_j d/dy_j b^{ij}(T-s,y) - a^i(T-s,y),
//   sigma~(s,y)  = sigma(T-s,y),
//   c(s,y)       = 1/2 sum_{ij} d^2/dy_i dy_j b^{ij}(T-s,y) - sum_i d/dy_i a^i(T-s,y).
// Missing analytic derivatives are filled by central differences with step
// 1e-5 * (1 + |y_j|) per coordinate.
ReverseModel derive_reverse_model(const DiffusionModel& model);

// Euler–Maruyama for Y with the weight accumulated as exp of the trapezoidal
// quadrature of c along the discrete path. Weight overflow is reported as
// WeightOverflowError, state explosion as SimulationError.
Path simulate_reverse(const ReverseModel& rmodel, const Vec& y0, const std::vector<double>& grid, RandomStream& noise);
Path simulate_reverse(const ReverseModel& rmodel, const Vec& y0, int steps, RandomStream& noise);

// Start-point sampler: a bounding box plus an exact sampler and a density.
struct SamplerDensity {
    Box box;
    std::function<double(const Vec&)> pdf;
    std::function<Vec(RandomStream&)> draw;

    static SamplerDensity uniform(const Box& box);
};

enum class CloudDirection { forward, reverse };

// Batched endpoints: starts[i] -> ends[i] (+ weight for reverse clouds).
struct PathCloud {
    int dim = 1;
    CloudDirection direction = CloudDirection::forward;
    std::vector<double> starts;   // N * dim
    std::vector<double> ends;     // N * dim
    std::vector<double> weights;  // N (reverse only)

    std::size_t size() const { return starts.size() / static_cast<std::size_t>(dim); }
    Vec start(std::size_t i) const;
    Vec end(std::size_t i) const;
};

// N independent (start, endpoint[, weight]) draws. Start points come from the
// sampler, endpoints from Euler–Maruyama with `steps` steps. Each index uses
// its own seed substream, so the cloud is independent of execution order and
// of the worker count. Simulation failures are rethrown with the offending
// index prepended.
PathCloud sample_cloud(const DiffusionModel& model, const SamplerDensity& sampler, std::size_t count, int steps,
                       CloudDirection direction, std::uint64_t master_seed);

}  // namespace sbfr
