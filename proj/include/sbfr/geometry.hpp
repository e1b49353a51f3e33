// geometry.hpp — small fixed-capacity vectors, matrices and axis-aligned boxes.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace sbfr {

inline constexpr int kMaxDim = 8;

// Dense point in R^d, d <= kMaxDim. Value semantics, no heap.
class Vec {
  public:
    Vec() = default;
    explicit Vec(int n, double fill = 0.0) : n_(check_dim(n)) { v_.fill(0.0); std::fill_n(v_.begin(), n_, fill); }
    Vec(std::initializer_list<double> xs) : n_(check_dim(static_cast<int>(xs.size()))) {
        v_.fill(0.0);
        std::copy(xs.begin(), xs.end(), v_.begin());
    }

    int size() const { return n_; }
    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
    const double* data() const { return v_.data(); }
    double* data() { return v_.data(); }

    bool finite() const {
        for (int i = 0; i < n_; ++i)
            if (!std::isfinite(v_[static_cast<std::size_t>(i)])) return false;
        return true;
    }
    double inf_norm() const {
        double m = 0.0;
        for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(v_[static_cast<std::size_t>(i)]));
        return m;
    }
    double dot(const Vec& o) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i) s += v_[static_cast<std::size_t>(i)] * o[i];
        return s;
    }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < n_; ++i) v_[static_cast<std::size_t>(i)] += o[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < n_; ++i) v_[static_cast<std::size_t>(i)] -= o[i];
        return *this;
    }
    Vec& operator*=(double c) {
        for (int i = 0; i < n_; ++i) v_[static_cast<std::size_t>(i)] *= c;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double c, Vec a) { return a *= c; }
    friend bool operator==(const Vec& a, const Vec& b) {
        if (a.n_ != b.n_) return false;
        for (int i = 0; i < a.n_; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }

  private:
    static int check_dim(int n) {
        if (n < 0 || n > kMaxDim) throw std::invalid_argument("Vec: dimension must be in [0," + std::to_string(kMaxDim) + "]");
        return n;
    }
    std::array<double, kMaxDim> v_{};
    int n_ = 0;
};

// Row-major d x m matrix, both dims <= kMaxDim.
class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows < 0 || rows > kMaxDim || cols < 0 || cols > kMaxDim)
            throw std::invalid_argument("Mat: dimensions must be in [0," + std::to_string(kMaxDim) + "]");
        a_.fill(0.0);
        std::fill_n(a_.begin(), static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    }
    static Mat identity(int n, double scale = 1.0) {
        Mat m(n, n, 0.0);
        for (int i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

    Vec apply(const Vec& x) const {
        Vec y(rows_);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }
    // this * this^T, the diffusion square b = sigma sigma^T.
    Mat gram() const {
        Mat b(rows_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < rows_; ++j) {
                double s = 0.0;
                for (int k = 0; k < cols_; ++k) s += (*this)(i, k) * (*this)(j, k);
                b(i, j) = s;
            }
        return b;
    }

  private:
    std::array<double, kMaxDim * kMaxDim> a_{};
    int rows_ = 0;
    int cols_ = 0;
};

// Product of closed intervals [lo_i, hi_i].
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec l, Vec h) : lo(l), hi(h) {
        if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
        for (int i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw std::invalid_argument("Box: requires lo < hi on every axis");
    }
    static Box unit(int d) { return Box(Vec(d, 0.0), Vec(d, 1.0)); }

    int dim() const { return lo.size(); }
    double width(int i) const { return hi[i] - lo[i]; }
    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim(); ++i) v *= width(i);
        return v;
    }
    bool contains(const Vec& x) const {
        if (x.size() != dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
    Vec center() const {
        Vec c(dim());
        for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
        return c;
    }
    // Widen every axis by the given fraction of its width (half on each side).
    Box inflated(double fraction) const {
        Vec l = lo, h = hi;
        for (int i = 0; i < dim(); ++i) {
            const double pad = 0.5 * fraction * width(i);
            l[i] -= pad;
            h[i] += pad;
        }
        return Box(l, h);
    }
    friend bool operator==(const Box& a, const Box& b) { return a.lo == b.lo && a.hi == b.hi; }
};

}  // namespace sbfr
