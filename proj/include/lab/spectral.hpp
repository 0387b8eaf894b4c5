#pragma once

#include "lab/core.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace lab {

/// Tangential Fourier layout of a half-space grid whose tangential axes are
/// periodic. A block holds one component as (normal node) x (tangential mode).
class HalfSpaceSpectral {
public:
    using Block = Eigen::MatrixXcd;

    explicit HalfSpaceSpectral(const Grid& g);

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_.dim(); }
    int normal_nodes() const { return nn_; }
    int modes() const { return modes_; }
    double h() const { return grid_.h(); }

    /// ξ_axis of mode m; zero on Nyquist modes, which forward() discards.
    double xi(int m, int axis) const { return xi_[m * 2 + axis]; }
    double a(int m) const { return a_[m]; }
    bool nyquist(int m) const { return nyq_[m]; }

    template <Rank R>
    Block forward(const GridField<R>& f, int c) const {
        return forward_values(f.values(), f.components(), c);
    }

    template <Rank R>
    void inverse(const Block& b, GridField<R>& f, int c) const {
        inverse_values(b, f.values(), f.components(), c);
    }

    Block forward_values(const std::vector<double>& v, int comps, int c) const;
    void inverse_values(const Block& b, std::vector<double>& v, int comps, int c) const;

private:
    Grid grid_;
    int nn_ = 0, modes_ = 0;
    std::array<int, 2> nt_{1, 1};
    std::vector<double> xi_, a_;
    std::vector<bool> nyq_;
};

/// X f(x) = ∫_0^x e^{-a(x-z)} f(z) dz, exact for piecewise-linear f on spacing h.
Eigen::VectorXcd forward_filter(double a, double h, const Eigen::VectorXcd& f);

/// U f(x) = ∫_x^∞ e^{-a(z-x)} f(z) dz with f = 0 beyond the last node.
Eigen::VectorXcd backward_filter(double a, double h, const Eigen::VectorXcd& f);

/// Tangential-frequency Neumann (+1) or Dirichlet (-1) potential of f and its
/// normal derivative. The Neumann value at a = 0 is undefined and returned as 0;
/// every use multiplies it by a power of ξ.
struct NormalPotential {
    Eigen::VectorXcd value, dx;
};

NormalPotential normal_potential(double a, double h, const Eigen::VectorXcd& f, int sign);

/// Piecewise-linear heat tables on normal nodes x_i = i h, y_j = j h for time s:
/// T: f ↦ ∫(g(x-y) - g(x+y)) f, R: f ↦ ∫ g(x+y) f, W: f ↦ ∫ ∂_y(g(x-y) - g(x+y)) f.
struct HeatTables {
    Eigen::MatrixXd T, R, W;
};

HeatTables heat_tables(double s, double h, int rows, int cols);

/// Per-cell Gaussian masses the tables are assembled from; cheap to cache per lag.
struct HeatProfile {
    double s = 0.0, h = 0.0;
    int span = 0;
    std::vector<double> B, C;  // indexed m + span for |m| ≤ span
};

HeatProfile heat_profile(double s, double h, int span);
HeatTables heat_tables(const HeatProfile& p, int rows, int cols);

}  // namespace lab
