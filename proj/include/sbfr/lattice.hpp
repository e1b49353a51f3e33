// lattice.hpp — strictly positive functions on tensor lattices, the Hilbert
// projective metric, the truncation (clamp) operator and L1 normalization.
//
// A LatticeFunction stores node values on a regular grid over a compact box
// and evaluates by multilinear interpolation. Because the interpolant of a
// multilinear function attains its extrema at nodes, sup/inf over nodes equal
// sup/inf over the box, and the Hilbert distance computed from node values is
// exact for the stored representation.
#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "sbfr/geometry.hpp"

namespace sbfr {

// Default per-axis node counts: 64 per axis up to d = 2, 16 for d = 3.
int default_lattice_nodes(int dim);

class LatticeFunction {
  public:
    LatticeFunction() = default;
    // Uniform node counts on every axis.
    LatticeFunction(Box support, int nodes_per_axis, std::vector<double> values);
    LatticeFunction(Box support, std::vector<int> nodes_per_axis, std::vector<double> values);

    static LatticeFunction constant(const Box& support, int nodes_per_axis, double value);
    static LatticeFunction tabulate(const Box& support, int nodes_per_axis, const std::function<double(const Vec&)>& f);

    const Box& support() const { return support_; }
    int dim() const { return support_.dim(); }
    const std::vector<int>& nodes_per_axis() const { return nodes_; }
    std::size_t node_count() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double value_at(std::size_t flat) const { return values_[flat]; }
    double& value_at(std::size_t flat) { return values_[flat]; }

    // Coordinates of the flat node index (row-major, last axis fastest).
    Vec node_point(std::size_t flat) const;
    double spacing(int axis) const { return support_.width(axis) / static_cast<double>(nodes_[static_cast<std::size_t>(axis)] - 1); }

    // Multilinear interpolation; x must lie in the support box.
    double eval(const Vec& x) const;
    // Zero-extension outside the support box (density convention).
    double eval_or_zero(const Vec& x) const { return support_.contains(x) ? eval(x) : 0.0; }

    double min_value() const;
    double max_value() const;

    // Trapezoidal quadrature weight of a node and the resulting integral.
    double quadrature_weight(std::size_t flat) const;
    double integral() const;

    bool same_lattice(const LatticeFunction& other) const;
    // Applies fn to every node value (must stay strictly positive).
    LatticeFunction map(const std::function<double(double)>& fn) const;

  private:
    void validate() const;

    Box support_;
    std::vector<int> nodes_;
    std::vector<double> values_;
};

// d_H(f, g) = log sup(f/g) + log sup(g/f), sup/inf over lattice nodes.
// Requires identical lattices and strictly positive values.
double hilbert_distance(const LatticeFunction& f, const LatticeFunction& g);
// Same metric on raw positive node vectors (used by the grid oracle).
double hilbert_distance(std::span<const double> f, std::span<const double> g);

// Nodewise clamp of values into [a, b]; requires 0 < a < b.
LatticeFunction truncate_clamp(const LatticeFunction& f, double a, double b);

// L1 norm by trapezoidal quadrature over the support box; returns the
// normalized function and the norm.
std::pair<LatticeFunction, double> l1_normalize(const LatticeFunction& f);

}  // namespace sbfr
