#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <algorithm>
#include <limits>
#include <vector>

namespace lab {

/// Error raised by every module; the message names the violated condition.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Point = std::array<double, 3>;
using Index = std::array<int, 3>;

/// Uniform rectangular lattice. Periodic axes exclude the right endpoint.
/// A half-space grid restricts the last axis to x_n >= 0 with origin_n = 0.
class Grid {
public:
    Grid() = default;

    static Grid make(int n, Point origin, Point extent, double h, bool halfspace = false,
                     std::array<bool, 3> periodic = {false, false, false});

    int dim() const { return n_; }
    double h() const { return h_; }
    bool halfspace() const { return halfspace_; }
    bool periodic(int axis) const { return periodic_[axis]; }
    double origin(int axis) const { return origin_[axis]; }
    double extent(int axis) const { return extent_[axis]; }
    const Point& origins() const { return origin_; }
    const Point& extents() const { return extent_; }
    const std::array<bool, 3>& periodic_axes() const { return periodic_; }

    int nodes(int axis) const { return count_[axis]; }
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return stride_[axis]; }

    double coord(int axis, int i) const { return origin_[axis] + h_ * i; }
    Point position(std::size_t node) const;
    Index unravel(std::size_t node) const;
    std::size_t ravel(const Index& idx) const;

    /// Neighbour index along `axis` with offset `d`; wraps on periodic axes,
    /// returns -1 when the neighbour falls outside a bounded axis.
    long neighbor(std::size_t node, int axis, int d) const;

    /// True when the node lies on a face of a bounded (non-periodic) axis.
    bool on_box_face(std::size_t node) const;

    bool same_as(const Grid& other) const;

    /// Whole-space grid obtained by reflecting a half-space grid across x_n = 0.
    Grid mirrored() const;

private:
    int n_ = 0;
    Point origin_{};
    Point extent_{};
    double h_ = 0.0;
    bool halfspace_ = false;
    std::array<bool, 3> periodic_{};
    std::array<int, 3> count_{1, 1, 1};
    std::array<std::size_t, 3> stride_{0, 0, 0};
    std::size_t size_ = 0;
};

enum class Rank { Scalar, Vector, Tensor };

inline int component_count(Rank r, int n) {
    switch (r) {
    case Rank::Scalar: return 1;
    case Rank::Vector: return n;
    case Rank::Tensor: return n * n;
    }
    return 1;
}

/// Grid-sampled values with 1, n or n*n components per node, node-major.
template <Rank R>
class GridField {
public:
    static constexpr Rank rank = R;

    GridField() = default;
    explicit GridField(const Grid& g) : grid_(g), comps_(component_count(R, g.dim())), v_(g.size() * comps_, 0.0) {}
    GridField(const Grid& g, std::vector<double> values) : grid_(g), comps_(component_count(R, g.dim())), v_(std::move(values)) {
        if (v_.size() != g.size() * comps_) throw Error("component-count mismatch");
    }

    const Grid& grid() const { return grid_; }
    int components() const { return comps_; }
    std::size_t size() const { return grid_.size(); }

    double& operator()(std::size_t node, int c = 0) { return v_[node * comps_ + c]; }
    double operator()(std::size_t node, int c = 0) const { return v_[node * comps_ + c]; }
    double& at(std::size_t node, int i, int j) { return v_[node * comps_ + i * grid_.dim() + j]; }
    double at(std::size_t node, int i, int j) const { return v_[node * comps_ + i * grid_.dim() + j]; }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    template <class Fn>
    static GridField sample(const Grid& g, Fn&& fn) {
        GridField f(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            Point x = g.position(k);
            if constexpr (R == Rank::Scalar) {
                f(k) = fn(x);
            } else {
                for (int c = 0; c < f.comps_; ++c) f(k, c) = fn(x, c);
            }
        }
        return f;
    }

private:
    Grid grid_;
    int comps_ = 1;
    std::vector<double> v_;
};

using ScalarField = GridField<Rank::Scalar>;
using VectorField = GridField<Rank::Vector>;
using TensorField = GridField<Rank::Tensor>;

template <Rank R>
GridField<R> operator+(GridField<R> a, const GridField<R>& b) {
    for (std::size_t k = 0; k < a.values().size(); ++k) a.values()[k] += b.values()[k];
    return a;
}

template <Rank R>
GridField<R> operator-(GridField<R> a, const GridField<R>& b) {
    for (std::size_t k = 0; k < a.values().size(); ++k) a.values()[k] -= b.values()[k];
    return a;
}

template <Rank R>
GridField<R> operator*(double s, GridField<R> a) {
    for (double& x : a.values()) x *= s;
    return a;
}

enum class NodeKind { Uniform, Chebyshev, Graded };

/// Field snapshots at increasing time nodes.
template <class F>
struct TimeSeries {
    std::vector<double> times;
    std::vector<F> frames;
    NodeKind kind = NodeKind::Uniform;

    std::size_t size() const { return times.size(); }
    void push(double t, F f) {
        times.push_back(t);
        frames.push_back(std::move(f));
    }
};

using ScalarSeries = TimeSeries<ScalarField>;
using VectorSeries = TimeSeries<VectorField>;

/// Ellipticity constants of a coefficient tensor.
struct CoefficientAudit {
    double lambda_min = 0.0;
    double Lambda_max = 0.0;
};

CoefficientAudit audit_coefficients(const TensorField& a);

/// Q_r(t0, x0) = {|x - x0| < r, t in (t0 - r^2, t0)}.
struct Cylinder {
    double t0 = 0.0;
    Point x0{};
    double r = 1.0;
};

inline double binomial(int k, int j) {
    if (j < 0 || j > k) return 0.0;
    j = std::min(j, k - j);
    double b = 1.0;
    for (int m = 1; m <= j; ++m) b = b * (k - j + m) / m;
    return b < 1e15 ? std::round(b) : b;
}

inline double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace lab
