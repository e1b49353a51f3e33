// clouds.hpp — paired forward/reverse sample clouds with spatial hashing,
// the kernel sums S_N / S~_N and the operator estimators they induce.
//
// Forward sum:  S_N[g](x)  = (1/N) sum_i K((x - x^i)/delta) g(X_T^i)
// Reverse sum:  S~_N[g](z) = (1/N) sum_i K((z - z^i)/delta) g(Y_T^i) W_i
//
// The forward operator estimate of E_T[f](x) = E[rho_T(X_T^x) f(X_T^x)] is
//   self-normalized: Q_T(x) S_N[rho_T f](x) / S_N[1_{S_T}](x)
//   direct:          S_N[rho_T f](x) / (delta^d phi_0(x))
// with the positivity-preserving fallback Q_min rho_min f_min whenever the
// local neighborhood is empty; the reverse operator mirrors it with rho_0,
// phi_T, Q_0 and the weights included in both sums.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sbfr/geometry.hpp"
#include "sbfr/kernel.hpp"
#include "sbfr/lattice.hpp"
#include "sbfr/sde.hpp"

namespace sbfr {

// Prior bounds on the transition density, its box masses and the marginals.
struct BoundsConfig {
    double q_min = 0.0;
    double q_max = 0.0;
    double Q_min = 0.0;
    double Q_max = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;

    double gstar_min() const { return q_min / Q_max; }
    double gstar_max() const { return q_max / Q_min; }
    // tanh^2( log(q_max/q_min) / 2 ), the contraction ceiling of the composed
    // fixed-point operator.
    double contraction_ceiling() const;
    void validate() const;
};

// Strictly positive density on a compact box, extended by zero outside.
struct Marginal {
    Box support;
    std::function<double(const Vec&)> pdf;
    double min_value = 0.0;  // inf over the support
    double max_value = 0.0;  // sup over the support

    double operator()(const Vec& x) const { return support.contains(x) ? pdf(x) : 0.0; }
};

// Prop-style default bandwidth N^{-2/(2(1+alpha)+d)}, clamped into (0, 1).
// alpha is the assumed Holder smoothness and must lie in (0, 1].
double default_bandwidth(std::size_t n, int dim, double alpha);

enum class OperatorMode { self_normalized, direct };

// Uniform spatial hash over start points with cell size delta. Exact for the
// kernel support delta/2 in max-norm: a query visits at most 2^d cells.
class SpatialBins {
  public:
    SpatialBins() = default;
    SpatialBins(const std::vector<double>& points, int dim, double cell_size);

    // Calls fn(index) for every point in the cells overlapping the max-norm
    // ball of radius `radius` around x, in (cell, index) order.
    template <class Fn>
    void for_each_candidate(const Vec& x, double radius, Fn&& fn) const {
        if (count_ == 0) return;
        int lo[kMaxDim], hi[kMaxDim];
        for (int a = 0; a < dim_; ++a) {
            lo[a] = std::max(cell_coord(x[a] - radius, a), cell_lo_[static_cast<std::size_t>(a)]);
            hi[a] = std::min(cell_coord(x[a] + radius, a), cell_hi_[static_cast<std::size_t>(a)]);
            if (lo[a] > hi[a]) return;
        }
        int cur[kMaxDim];
        for (int a = 0; a < dim_; ++a) cur[a] = lo[a];
        while (true) {
            const std::uint64_t key = pack(cur);
            const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
            if (it != keys_.end() && *it == key) {
                const std::size_t b = static_cast<std::size_t>(it - keys_.begin());
                for (std::size_t k = offsets_[b]; k < offsets_[b + 1]; ++k) fn(members_[k]);
            }
            int a = dim_ - 1;
            while (a >= 0) {
                if (++cur[a] <= hi[a]) break;
                cur[a] = lo[a];
                --a;
            }
            if (a < 0) break;
        }
    }

    std::size_t cell_count() const { return keys_.size(); }

  private:
    int cell_coord(double coord, int axis) const;
    std::uint64_t pack(const int* cell) const;

    int dim_ = 0;
    double cell_size_ = 1.0;
    std::size_t count_ = 0;
    Vec origin_;
    std::array<int, kMaxDim> cell_lo_{};   // occupied cell range per axis
    std::array<int, kMaxDim> cell_hi_{};
    std::vector<std::uint64_t> keys_;      // sorted occupied cells
    std::vector<std::size_t> offsets_;     // CSR offsets into members_
    std::vector<std::uint32_t> members_;   // point indices, ascending per cell
};

class SampleClouds {
  public:
    SampleClouds(PathCloud forward, PathCloud reverse, double bandwidth, Marginal rho0, Marginal rhoT,
                 SamplerDensity phi0, SamplerDensity phiT, BoundsConfig bounds,
                 std::function<double(const Vec&)> exact_QT = {}, std::function<double(const Vec&)> exact_Q0 = {});

    int dim() const { return forward_.dim; }
    std::size_t size() const { return forward_.size(); }
    double bandwidth() const { return bandwidth_; }
    const Kernel& kernel() const { return kernel_; }
    const BoundsConfig& bounds() const { return bounds_; }
    const Marginal& rho0() const { return rho0_; }
    const Marginal& rhoT() const { return rhoT_; }
    const Box& support0() const { return rho0_.support; }
    const Box& supportT() const { return rhoT_.support; }
    const PathCloud& forward_cloud() const { return forward_; }
    const PathCloud& reverse_cloud() const { return reverse_; }
    bool has_exact_masses() const { return static_cast<bool>(exact_QT_); }
    double exact_QT(const Vec& x) const { return exact_QT_(x); }
    double exact_Q0(const Vec& z) const { return exact_Q0_(z); }
    double phi0_density(const Vec& x) const { return phi0_.pdf(x); }
    double phiT_density(const Vec& z) const { return phiT_.pdf(z); }

    // (1/N) sum_i K((x - x^i)/delta) g(X_T^i), over spatial-bin neighbors.
    template <class G>
    double forward_sum(const Vec& x, G&& g) const {
        double acc = 0.0;
        forward_bins_.for_each_candidate(x, 0.5 * bandwidth_, [&](std::uint32_t i) {
            const double w = kernel_.scaled(diff(forward_.starts, i, x), bandwidth_);
            if (w > 0.0) acc += w * g(forward_.end(i));
        });
        return acc / static_cast<double>(size());
    }

    // (1/N) sum_i K((z - z^i)/delta) g(Y_T^i) W_i.
    template <class G>
    double reverse_sum(const Vec& z, G&& g) const {
        double acc = 0.0;
        reverse_bins_.for_each_candidate(z, 0.5 * bandwidth_, [&](std::uint32_t i) {
            const double w = kernel_.scaled(diff(reverse_.starts, i, z), bandwidth_);
            if (w > 0.0) acc += w * reverse_.weights[i] * g(reverse_.end(i));
        });
        return acc / static_cast<double>(size());
    }

    struct OperatorSums {
        double numer = 0.0;      // S_N[rho f]
        double indicator = 0.0;  // S_N[1_S]
    };

    // Both kernel sums of the forward operator in one bin sweep; f_at is
    // called as f_at(sample_index, endpoint) only for endpoints inside S_T.
    template <class F>
    OperatorSums forward_operator_sums(const Vec& x, F&& f_at) const {
        OperatorSums s;
        forward_bins_.for_each_candidate(x, 0.5 * bandwidth_, [&](std::uint32_t i) {
            const double w = kernel_.scaled(diff(forward_.starts, i, x), bandwidth_);
            if (w <= 0.0) return;
            const Vec end = forward_.end(i);
            const double rho = rhoT_(end);
            if (rho > 0.0) {
                s.numer += w * rho * f_at(i, end);
                s.indicator += w;
            }
        });
        const double n = static_cast<double>(size());
        s.numer /= n;
        s.indicator /= n;
        return s;
    }

    template <class F>
    OperatorSums reverse_operator_sums(const Vec& z, F&& f_at) const {
        OperatorSums s;
        reverse_bins_.for_each_candidate(z, 0.5 * bandwidth_, [&](std::uint32_t i) {
            const double w = kernel_.scaled(diff(reverse_.starts, i, z), bandwidth_);
            if (w <= 0.0) return;
            const Vec end = reverse_.end(i);
            const double rho = rho0_(end);
            if (rho > 0.0) {
                const double ww = w * reverse_.weights[i];
                s.numer += ww * rho * f_at(i, end);
                s.indicator += ww;
            }
        });
        const double n = static_cast<double>(size());
        s.numer /= n;
        s.indicator /= n;
        return s;
    }

    // Operator estimates for a generic integrand with values at endpoints;
    // f_min is the infimum of f over its lattice representation.
    template <class F>
    double forward_operator_eval(F&& f_at, double f_min, const Vec& x, OperatorMode mode) const {
        const OperatorSums s = forward_operator_sums(x, f_at);
        if (s.indicator <= 0.0) return bounds_.Q_min * bounds_.rho_min * f_min;
        if (mode == OperatorMode::self_normalized && exact_QT_) return exact_QT_(x) * s.numer / s.indicator;
        return s.numer / (bandwidth_power() * phi0_.pdf(x));
    }

    template <class F>
    double reverse_operator_eval(F&& f_at, double f_min, const Vec& z, OperatorMode mode) const {
        const OperatorSums s = reverse_operator_sums(z, f_at);
        if (s.indicator <= 0.0) return bounds_.Q_min * bounds_.rho_min * f_min;
        if (mode == OperatorMode::self_normalized && exact_Q0_) return exact_Q0_(z) * s.numer / s.indicator;
        return s.numer / (bandwidth_power() * phiT_.pdf(z));
    }

    double bandwidth_power() const;  // delta^d

  private:
    Vec diff(const std::vector<double>& flat, std::uint32_t i, const Vec& x) const {
        const int d = dim();
        Vec u(d);
        const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
        for (int k = 0; k < d; ++k) u[k] = x[k] - flat[base + static_cast<std::size_t>(k)];
        return u;
    }

    PathCloud forward_;
    PathCloud reverse_;
    Kernel kernel_;
    double bandwidth_;
    Marginal rho0_;
    Marginal rhoT_;
    SamplerDensity phi0_;
    SamplerDensity phiT_;
    BoundsConfig bounds_;
    std::function<double(const Vec&)> exact_QT_;
    std::function<double(const Vec&)> exact_Q0_;
    SpatialBins forward_bins_;
    SpatialBins reverse_bins_;
};

// Spec-level kernel sum with an arbitrary endpoint functional.
double nw_sum(const SampleClouds& clouds, const std::function<double(const Vec&)>& g, const Vec& x, CloudDirection direction);

// Operator estimates for a generic positive integrand evaluated at endpoints;
// f_min is the infimum of f over its lattice representation (fallback value).
double forward_operator(const SampleClouds& clouds, const std::function<double(const Vec&)>& f, double f_min, const Vec& x,
                        OperatorMode mode);
double reverse_operator(const SampleClouds& clouds, const std::function<double(const Vec&)>& f, double f_min, const Vec& z,
                        OperatorMode mode);

// Lattice-function forms (f strictly positive on its lattice by construction;
// a nonpositive lattice is rejected when the LatticeFunction is built).
double apply_forward_operator(const SampleClouds& clouds, const LatticeFunction& f, const Vec& x, OperatorMode mode);
double apply_reverse_operator(const SampleClouds& clouds, const LatticeFunction& f, const Vec& z, OperatorMode mode);

}  // namespace sbfr
