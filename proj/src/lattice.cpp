#include "sbfr/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbfr {

int default_lattice_nodes(int dim) { return dim <= 2 ? 64 : 16; }

LatticeFunction::LatticeFunction(Box support, int nodes_per_axis, std::vector<double> values)
    : LatticeFunction(support, std::vector<int>(static_cast<std::size_t>(support.dim()), nodes_per_axis), std::move(values)) {}

LatticeFunction::LatticeFunction(Box support, std::vector<int> nodes_per_axis, std::vector<double> values)
    : support_(std::move(support)), nodes_(std::move(nodes_per_axis)), values_(std::move(values)) {
    validate();
}

void LatticeFunction::validate() const {
    if (static_cast<int>(nodes_.size()) != support_.dim()) throw std::invalid_argument("LatticeFunction: node counts do not match box dimension");
    std::size_t expected = 1;
    for (int n : nodes_) {
        if (n < 2) throw std::invalid_argument("LatticeFunction: needs at least 2 nodes per axis");
        expected *= static_cast<std::size_t>(n);
    }
    if (values_.size() != expected) throw std::invalid_argument("LatticeFunction: value count does not match lattice size");
    for (double v : values_)
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("LatticeFunction: values must be strictly positive and finite");
}

LatticeFunction LatticeFunction::constant(const Box& support, int nodes_per_axis, double value) {
    std::size_t total = 1;
    for (int i = 0; i < support.dim(); ++i) total *= static_cast<std::size_t>(nodes_per_axis);
    return LatticeFunction(support, nodes_per_axis, std::vector<double>(total, value));
}

LatticeFunction LatticeFunction::tabulate(const Box& support, int nodes_per_axis, const std::function<double(const Vec&)>& f) {
    LatticeFunction out = constant(support, nodes_per_axis, 1.0);
    for (std::size_t k = 0; k < out.node_count(); ++k) out.values_[k] = f(out.node_point(k));
    out.validate();
    return out;
}

Vec LatticeFunction::node_point(std::size_t flat) const {
    const int d = dim();
    Vec x(d);
    for (int axis = d - 1; axis >= 0; --axis) {
        const std::size_t n = static_cast<std::size_t>(nodes_[static_cast<std::size_t>(axis)]);
        const std::size_t idx = flat % n;
        flat /= n;
        x[axis] = support_.lo[axis] + spacing(axis) * static_cast<double>(idx);
    }
    return x;
}

double LatticeFunction::eval(const Vec& x) const {
    const int d = dim();
    if (!support_.contains(x)) throw std::domain_error("LatticeFunction::eval: point outside support box");
    int cell[kMaxDim];
    double frac[kMaxDim];
    for (int axis = 0; axis < d; ++axis) {
        const int n = nodes_[static_cast<std::size_t>(axis)];
        const double u = (x[axis] - support_.lo[axis]) / spacing(axis);
        int c = static_cast<int>(std::floor(u));
        c = std::clamp(c, 0, n - 2);
        cell[axis] = c;
        frac[axis] = std::clamp(u - static_cast<double>(c), 0.0, 1.0);
    }
    // Accumulate the 2^d corner contributions.
    double total = 0.0;
    const int corners = 1 << d;
    for (int mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int axis = 0; axis < d; ++axis) {
            const int bit = (mask >> axis) & 1;
            w *= bit ? frac[axis] : (1.0 - frac[axis]);
            flat = flat * static_cast<std::size_t>(nodes_[static_cast<std::size_t>(axis)]) + static_cast<std::size_t>(cell[axis] + bit);
        }
        if (w != 0.0) total += w * values_[flat];
    }
    return total;
}

double LatticeFunction::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double LatticeFunction::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double LatticeFunction::quadrature_weight(std::size_t flat) const {
    double w = 1.0;
    for (int axis = dim() - 1; axis >= 0; --axis) {
        const std::size_t n = static_cast<std::size_t>(nodes_[static_cast<std::size_t>(axis)]);
        const std::size_t idx = flat % n;
        flat /= n;
        const double edge = (idx == 0 || idx + 1 == n) ? 0.5 : 1.0;
        w *= edge * spacing(static_cast<int>(axis));
    }
    return w;
}

double LatticeFunction::integral() const {
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        const double term = quadrature_weight(k) * values_[k];
        const double t = s + term;
        if (std::abs(s) >= std::abs(term))
            c += (s - t) + term;
        else
            c += (term - t) + s;
        s = t;
    }
    return s + c;
}

bool LatticeFunction::same_lattice(const LatticeFunction& other) const {
    return support_ == other.support_ && nodes_ == other.nodes_;
}

LatticeFunction LatticeFunction::map(const std::function<double(double)>& fn) const {
    LatticeFunction out = *this;
    for (double& v : out.values_) v = fn(v);
    out.validate();
    return out;
}

double hilbert_distance(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size() || f.empty()) throw std::invalid_argument("hilbert_distance: size mismatch");
    double max_fg = 0.0, max_gf = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] > 0.0) || !(g[i] > 0.0)) throw std::domain_error("hilbert_distance: values must be strictly positive");
        max_fg = std::max(max_fg, f[i] / g[i]);
        max_gf = std::max(max_gf, g[i] / f[i]);
    }
    return std::log(max_fg) + std::log(max_gf);
}

double hilbert_distance(const LatticeFunction& f, const LatticeFunction& g) {
    if (!f.same_lattice(g)) throw std::invalid_argument("hilbert_distance: lattices do not match");
    return hilbert_distance(f.values(), g.values());
}

LatticeFunction truncate_clamp(const LatticeFunction& f, double a, double b) {
    if (!(a > 0.0) || !(a < b)) throw std::invalid_argument("truncate_clamp: requires 0 < a < b");
    return f.map([a, b](double v) { return std::clamp(v, a, b); });
}

std::pair<LatticeFunction, double> l1_normalize(const LatticeFunction& f) {
    const double norm = f.integral();
    return {f.map([norm](double v) { return v / norm; }), norm};
}

}  // namespace sbfr
