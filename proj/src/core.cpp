#include "lab/core.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace lab {

Grid Grid::make(int n, Point origin, Point extent, double h, bool halfspace, std::array<bool, 3> periodic) {
    if (n != 2 && n != 3) throw Error("grid dimension must be 2 or 3");
    if (!(h > 0.0)) throw Error("grid spacing must be positive");
    Grid g;
    g.n_ = n;
    g.h_ = h;
    g.halfspace_ = halfspace;
    g.origin_ = origin;
    g.extent_ = extent;
    g.periodic_ = periodic;
    for (int a = n; a < 3; ++a) {
        g.origin_[a] = 0.0;
        g.extent_[a] = 0.0;
        g.periodic_[a] = false;
    }
    if (halfspace) {
        if (g.origin_[n - 1] != 0.0) throw Error("half-space grid must start at x_n = 0");
        if (g.periodic_[n - 1]) throw Error("normal axis of a half-space grid cannot be periodic");
    }
    for (int a = 0; a < n; ++a) {
        if (!(g.extent_[a] > 0.0)) throw Error("grid extent must be positive on every axis");
        double cells = g.extent_[a] / h;
        double rc = std::round(cells);
        if (std::abs(cells - rc) > 1e-9 * std::max(1.0, rc)) throw Error("grid extent is not a multiple of h");
        g.count_[a] = static_cast<int>(rc) + (g.periodic_[a] ? 0 : 1);
        if (g.count_[a] < 4) throw Error("grid needs at least 4 nodes per axis");
    }
    std::size_t s = 1;
    for (int a = n - 1; a >= 0; --a) {
        g.stride_[a] = s;
        s *= static_cast<std::size_t>(g.count_[a]);
    }
    g.size_ = s;
    return g;
}

Index Grid::unravel(std::size_t node) const {
    Index idx{0, 0, 0};
    for (int a = 0; a < n_; ++a) {
        idx[a] = static_cast<int>(node / stride_[a]);
        node %= stride_[a];
    }
    return idx;
}

std::size_t Grid::ravel(const Index& idx) const {
    std::size_t k = 0;
    for (int a = 0; a < n_; ++a) k += static_cast<std::size_t>(idx[a]) * stride_[a];
    return k;
}

Point Grid::position(std::size_t node) const {
    Index idx = unravel(node);
    Point x{0, 0, 0};
    for (int a = 0; a < n_; ++a) x[a] = coord(a, idx[a]);
    return x;
}

long Grid::neighbor(std::size_t node, int axis, int d) const {
    Index idx = unravel(node);
    int j = idx[axis] + d;
    if (periodic_[axis]) {
        j %= count_[axis];
        if (j < 0) j += count_[axis];
    } else if (j < 0 || j >= count_[axis]) {
        return -1;
    }
    idx[axis] = j;
    return static_cast<long>(ravel(idx));
}

bool Grid::on_box_face(std::size_t node) const {
    Index idx = unravel(node);
    for (int a = 0; a < n_; ++a)
        if (!periodic_[a] && (idx[a] == 0 || idx[a] == count_[a] - 1)) return true;
    return false;
}

bool Grid::same_as(const Grid& o) const {
    if (n_ != o.n_ || halfspace_ != o.halfspace_ || std::abs(h_ - o.h_) > 1e-14 * h_) return false;
    for (int a = 0; a < n_; ++a)
        if (count_[a] != o.count_[a] || periodic_[a] != o.periodic_[a] || std::abs(origin_[a] - o.origin_[a]) > 1e-12)
            return false;
    return true;
}

Grid Grid::mirrored() const {
    if (!halfspace_) throw Error("mirrored() requires a half-space grid");
    Point o = origin_, e = extent_;
    o[n_ - 1] = -extent_[n_ - 1];
    e[n_ - 1] = 2.0 * extent_[n_ - 1];
    return Grid::make(n_, o, e, h_, false, periodic_);
}

CoefficientAudit audit_coefficients(const TensorField& a) {
    const int n = a.grid().dim();
    CoefficientAudit out{std::numeric_limits<double>::infinity(), 0.0};
    Eigen::MatrixXd m(n, n);
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                m(i, j) = a.at(k, i, j);
                out.Lambda_max = std::max(out.Lambda_max, std::abs(m(i, j)));
            }
        Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
        out.lambda_min = std::min(out.lambda_min, es.eigenvalues().minCoeff());
    }
    return out;
}

}  // namespace lab
