#include "sbfr/clouds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sbfr {

double BoundsConfig::contraction_ceiling() const {
    const double t = std::tanh(0.5 * std::log(q_max / q_min));
    return t * t;
}

void BoundsConfig::validate() const {
    if (!(q_min > 0.0) || !(q_min <= q_max)) throw std::invalid_argument("BoundsConfig: requires 0 < q_min <= q_max");
    if (!(Q_min > 0.0) || !(Q_min <= Q_max)) throw std::invalid_argument("BoundsConfig: requires 0 < Q_min <= Q_max");
    if (!(rho_min > 0.0) || !(rho_min <= rho_max)) throw std::invalid_argument("BoundsConfig: requires 0 < rho_min <= rho_max");
}

double default_bandwidth(std::size_t n, int dim, double alpha) {
    if (n < 2) throw std::invalid_argument("default_bandwidth: requires N >= 2");
    if (!(alpha > 0.0) || alpha > 1.0) throw std::domain_error("default_bandwidth: alpha must lie in (0, 1]");
    const double exponent = 2.0 / (2.0 * (1.0 + alpha) + static_cast<double>(dim));
    const double delta = std::pow(static_cast<double>(n), -exponent);
    return std::clamp(delta, 1e-12, 1.0 - 1e-12);
}

SpatialBins::SpatialBins(const std::vector<double>& points, int dim, double cell_size) : dim_(dim), cell_size_(cell_size) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("SpatialBins: cell size must be positive");
    count_ = points.size() / static_cast<std::size_t>(dim);
    origin_ = Vec(dim, 0.0);
    if (count_ == 0) return;
    for (int a = 0; a < dim; ++a) {
        double lo = points[static_cast<std::size_t>(a)];
        for (std::size_t i = 1; i < count_; ++i) lo = std::min(lo, points[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)]);
        origin_[a] = lo;
    }

    cell_lo_.fill(0);
    cell_hi_.fill(0);
    std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged(count_);
    for (std::size_t i = 0; i < count_; ++i) {
        int cell[kMaxDim];
        for (int a = 0; a < dim; ++a) {
            cell[a] = cell_coord(points[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)], a);
            cell_hi_[static_cast<std::size_t>(a)] = std::max(cell_hi_[static_cast<std::size_t>(a)], cell[a]);
        }
        tagged[i] = {pack(cell), static_cast<std::uint32_t>(i)};
    }
    std::stable_sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    members_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) {
        if (i == 0 || tagged[i].first != tagged[i - 1].first) {
            keys_.push_back(tagged[i].first);
            offsets_.push_back(i);
        }
        members_[i] = tagged[i].second;
    }
    offsets_.push_back(count_);
}

int SpatialBins::cell_coord(double coord, int axis) const {
    return static_cast<int>(std::floor((coord - origin_[axis]) / cell_size_));
}

std::uint64_t SpatialBins::pack(const int* cell) const {
    // 16 bits per axis with a half-range offset; enough for 65k cells per
    // axis, which bounds the usable bandwidth from below at desk scale.
    std::uint64_t key = 0;
    for (int a = 0; a < dim_; ++a) {
        const long shifted = static_cast<long>(cell[a]) + 32768L;
        if (shifted < 0 || shifted > 65535L) throw std::invalid_argument("SpatialBins: cell index out of range (bandwidth too small)");
        key = (key << 16) | static_cast<std::uint64_t>(shifted);
    }
    return key;
}

SampleClouds::SampleClouds(PathCloud forward, PathCloud reverse, double bandwidth, Marginal rho0, Marginal rhoT,
                           SamplerDensity phi0, SamplerDensity phiT, BoundsConfig bounds,
                           std::function<double(const Vec&)> exact_QT, std::function<double(const Vec&)> exact_Q0)
    : forward_(std::move(forward)),
      reverse_(std::move(reverse)),
      kernel_(forward_.dim),
      bandwidth_(bandwidth),
      rho0_(std::move(rho0)),
      rhoT_(std::move(rhoT)),
      phi0_(std::move(phi0)),
      phiT_(std::move(phiT)),
      bounds_(bounds),
      exact_QT_(std::move(exact_QT)),
      exact_Q0_(std::move(exact_Q0)) {
    if (forward_.direction != CloudDirection::forward || reverse_.direction != CloudDirection::reverse)
        throw std::invalid_argument("SampleClouds: cloud directions are swapped");
    if (forward_.dim != reverse_.dim) throw std::invalid_argument("SampleClouds: cloud dimensions differ");
    if (forward_.size() != reverse_.size()) throw std::invalid_argument("SampleClouds: clouds must have equal size");
    if (!(bandwidth_ > 0.0) || !(bandwidth_ < 1.0)) throw std::invalid_argument("SampleClouds: bandwidth must lie in (0, 1)");
    for (double w : reverse_.weights)
        if (!(w > 0.0)) throw std::invalid_argument("SampleClouds: reverse weights must be strictly positive");
    if (static_cast<bool>(exact_QT_) != static_cast<bool>(exact_Q0_))
        throw std::invalid_argument("SampleClouds: exact mass evaluators must be provided for both directions or neither");
    bounds_.validate();
    forward_bins_ = SpatialBins(forward_.starts, forward_.dim, bandwidth_);
    reverse_bins_ = SpatialBins(reverse_.starts, reverse_.dim, bandwidth_);
}

double nw_sum(const SampleClouds& clouds, const std::function<double(const Vec&)>& g, const Vec& x, CloudDirection direction) {
    return direction == CloudDirection::forward ? clouds.forward_sum(x, g) : clouds.reverse_sum(x, g);
}

double SampleClouds::bandwidth_power() const {
    double p = 1.0;
    for (int i = 0; i < dim(); ++i) p *= bandwidth_;
    return p;
}

double forward_operator(const SampleClouds& clouds, const std::function<double(const Vec&)>& f, double f_min, const Vec& x,
                        OperatorMode mode) {
    return clouds.forward_operator_eval([&](std::uint32_t, const Vec& end) { return f(end); }, f_min, x, mode);
}

double reverse_operator(const SampleClouds& clouds, const std::function<double(const Vec&)>& f, double f_min, const Vec& z,
                        OperatorMode mode) {
    return clouds.reverse_operator_eval([&](std::uint32_t, const Vec& end) { return f(end); }, f_min, z, mode);
}

double apply_forward_operator(const SampleClouds& clouds, const LatticeFunction& f, const Vec& x, OperatorMode mode) {
    if (!(f.min_value() > 0.0)) throw std::domain_error("apply_forward_operator: f must be strictly positive on its lattice");
    return forward_operator(clouds, [&](const Vec& end) { return f.eval(end); }, f.min_value(), x, mode);
}

double apply_reverse_operator(const SampleClouds& clouds, const LatticeFunction& f, const Vec& z, OperatorMode mode) {
    if (!(f.min_value() > 0.0)) throw std::domain_error("apply_reverse_operator: f must be strictly positive on its lattice");
    return reverse_operator(clouds, [&](const Vec& end) { return f.eval(end); }, f.min_value(), z, mode);
}

}  // namespace sbfr
