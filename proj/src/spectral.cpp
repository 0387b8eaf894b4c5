#include "lab/spectral.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <unsupported/Eigen/FFT>

#include <numbers>

namespace lab {

namespace {

constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;

}  // namespace

HalfSpaceSpectral::HalfSpaceSpectral(const Grid& g) : grid_(g) {
    if (!g.halfspace()) throw Error("spectral engine needs a half-space grid");
    const int n = g.dim();
    if (n != 2 && n != 3) throw Error("spectral engine supports n = 2 or 3");
    for (int k = 0; k < n - 1; ++k) {
        if (!g.periodic(k)) throw Error("spectral engine needs periodic tangential axes");
        nt_[k] = g.nodes(k);
    }
    nn_ = g.nodes(n - 1);
    modes_ = nt_[0] * nt_[1];
    xi_.assign(2 * modes_, 0.0);
    a_.assign(modes_, 0.0);
    nyq_.assign(modes_, false);
    for (int m = 0; m < modes_; ++m) {
        int k[2] = {m / nt_[1], m % nt_[1]};
        double s = 0.0;
        for (int ax = 0; ax < n - 1; ++ax) {
            int N = nt_[ax], kk = k[ax] <= N / 2 ? k[ax] : k[ax] - N;
            if (N % 2 == 0 && k[ax] == N / 2) nyq_[m] = true;
            double v = 2 * pi * kk / (N * g.h());
            xi_[2 * m + ax] = v;
            s += v * v;
        }
        a_[m] = std::sqrt(s);
    }
    for (int m = 0; m < modes_; ++m)
        if (nyq_[m]) {
            xi_[2 * m] = xi_[2 * m + 1] = 0.0;
            a_[m] = 0.0;
        }
}

HalfSpaceSpectral::Block HalfSpaceSpectral::forward_values(const std::vector<double>& v, int comps, int c) const {
    if (v.size() != grid_.size() * comps) throw Error("component-count mismatch");
    Eigen::FFT<double> fft;
    const int n = dim();
    Block out(nn_, modes_);
    std::vector<cplx> in0(nt_[0]), out0(nt_[0]), in1(nt_[1]), out1(nt_[1]);
    std::vector<cplx> slab(modes_);
    for (int j = 0; j < nn_; ++j) {
        for (int i0 = 0; i0 < nt_[0]; ++i0)
            for (int i1 = 0; i1 < nt_[1]; ++i1) {
                std::size_t node = i0 * grid_.stride(0) + (n == 3 ? i1 * grid_.stride(1) : 0) + j;
                slab[i0 * nt_[1] + i1] = v[node * comps + c];
            }
        if (n == 3)
            for (int i0 = 0; i0 < nt_[0]; ++i0) {
                for (int i1 = 0; i1 < nt_[1]; ++i1) in1[i1] = slab[i0 * nt_[1] + i1];
                fft.fwd(out1, in1);
                for (int i1 = 0; i1 < nt_[1]; ++i1) slab[i0 * nt_[1] + i1] = out1[i1];
            }
        for (int i1 = 0; i1 < nt_[1]; ++i1) {
            for (int i0 = 0; i0 < nt_[0]; ++i0) in0[i0] = slab[i0 * nt_[1] + i1];
            fft.fwd(out0, in0);
            for (int i0 = 0; i0 < nt_[0]; ++i0) slab[i0 * nt_[1] + i1] = out0[i0];
        }
        for (int m = 0; m < modes_; ++m) out(j, m) = nyq_[m] ? cplx(0.0) : slab[m];
    }
    return out;
}

void HalfSpaceSpectral::inverse_values(const Block& b, std::vector<double>& v, int comps, int c) const {
    if (b.rows() != nn_ || b.cols() != modes_) throw Error("spectral block shape mismatch");
    if (v.size() != grid_.size() * comps) throw Error("component-count mismatch");
    Eigen::FFT<double> fft;
    const int n = dim();
    std::vector<cplx> in0(nt_[0]), out0(nt_[0]), in1(nt_[1]), out1(nt_[1]);
    std::vector<cplx> slab(modes_);
    for (int j = 0; j < nn_; ++j) {
        for (int m = 0; m < modes_; ++m) slab[m] = b(j, m);
        for (int i1 = 0; i1 < nt_[1]; ++i1) {
            for (int k0 = 0; k0 < nt_[0]; ++k0) in0[k0] = slab[k0 * nt_[1] + i1];
            fft.inv(out0, in0);
            for (int k0 = 0; k0 < nt_[0]; ++k0) slab[k0 * nt_[1] + i1] = out0[k0];
        }
        if (n == 3)
            for (int i0 = 0; i0 < nt_[0]; ++i0) {
                for (int k1 = 0; k1 < nt_[1]; ++k1) in1[k1] = slab[i0 * nt_[1] + k1];
                fft.inv(out1, in1);
                for (int k1 = 0; k1 < nt_[1]; ++k1) slab[i0 * nt_[1] + k1] = out1[k1];
            }
        for (int i0 = 0; i0 < nt_[0]; ++i0)
            for (int i1 = 0; i1 < nt_[1]; ++i1) {
                std::size_t node = i0 * grid_.stride(0) + (n == 3 ? i1 * grid_.stride(1) : 0) + j;
                v[node * comps + c] = slab[i0 * nt_[1] + i1].real();
            }
    }
}

namespace {

// φ1 = (1 - e^{-q})/q and φ2 = (1 - e^{-q}(1 + q))/q², by series for small q.
void filter_weights(double q, double& p1, double& p2) {
    if (q < 1e-3) {
        p1 = 1 - q / 2 + q * q / 6 - q * q * q / 24;
        p2 = 0.5 - q / 3 + q * q / 8 - q * q * q / 30;
        return;
    }
    double e = std::exp(-q);
    p1 = (1 - e) / q;
    p2 = (1 - e * (1 + q)) / (q * q);
}

}  // namespace

Eigen::VectorXcd forward_filter(double a, double h, const Eigen::VectorXcd& f) {
    const double q = a * h, e = std::exp(-q);
    double p1, p2;
    filter_weights(q, p1, p2);
    Eigen::VectorXcd X(f.size());
    if (f.size() == 0) return X;
    X(0) = 0.0;
    for (Eigen::Index k = 0; k + 1 < f.size(); ++k) X(k + 1) = e * X(k) + h * p2 * f(k) + h * (p1 - p2) * f(k + 1);
    return X;
}

Eigen::VectorXcd backward_filter(double a, double h, const Eigen::VectorXcd& f) {
    const double q = a * h, e = std::exp(-q);
    double p1, p2;
    filter_weights(q, p1, p2);
    const Eigen::Index N = f.size();
    Eigen::VectorXcd U(N);
    if (N == 0) return U;
    U(N - 1) = 0.0;
    for (Eigen::Index k = N - 1; k-- > 0;) U(k) = e * U(k + 1) + h * p2 * f(k + 1) + h * (p1 - p2) * f(k);
    return U;
}

NormalPotential normal_potential(double a, double h, const Eigen::VectorXcd& f, int sign) {
    const Eigen::Index N = f.size();
    const double sg = sign >= 0 ? 1.0 : -1.0;
    Eigen::VectorXcd X = forward_filter(a, h, f), U = backward_filter(a, h, f);
    const cplx m = N ? U(0) : cplx(0.0);
    NormalPotential p;
    p.value.resize(N);
    p.dx.resize(N);
    for (Eigen::Index k = 0; k < N; ++k) {
        cplx img = sg * std::exp(-a * k * h) * m;
        p.dx(k) = 0.5 * (X(k) - U(k) + img);
        p.value(k) = a > 0 ? -(X(k) + U(k) + img) / (2 * a) : cplx(0.0);
    }
    if (a == 0.0 && sign < 0) {
        // -∫ min(x, y) f(y) dy, integrated cell by cell from x = 0.
        for (Eigen::Index k = 0; k + 1 < N; ++k)
            p.value(k + 1) = p.value(k) - (h * U(k) - h * h * (f(k) / 3.0 + f(k + 1) / 6.0));
    }
    return p;
}

namespace {

// Φ(b) - Φ(a) for Φ(x) = ½ erf(x / 2√t), without cancellation in the tails.
double gauss_mass(double lo, double hi, double s) {
    const double r = 0.5 / std::sqrt(s), u = lo * r, v = hi * r;
    using boost::math::erf;
    using boost::math::erfc;
    if (u > 0) return 0.5 * (erfc(u) - erfc(v));
    if (v < 0) return 0.5 * (erfc(-v) - erfc(-u));
    return 0.5 * (erf(v) - erf(u));
}

}  // namespace

HeatProfile heat_profile(double s, double h, int span) {
    if (!(s > 0)) throw Error("heat tables need s > 0");
    auto g = [&](double r) { return std::exp(-r * r / (4 * s)) / std::sqrt(4 * pi * s); };
    HeatProfile p{s, h, span, std::vector<double>(2 * span + 1), std::vector<double>(2 * span + 1)};
    for (int m = -span; m <= span; ++m) {
        double c = m * h, dm = gauss_mass(c, c + h, s);
        p.B[m + span] = (1 + c / h) * dm + (2 * s / h) * (g(c + h) - g(c));
        p.C[m + span] = dm;
    }
    return p;
}

HeatTables heat_tables(const HeatProfile& p, int rows, int cols) {
    const int M = p.span;
    if (rows + cols + 1 > M) throw Error("heat profile span too short for the requested tables");
    const double h = p.h;
    auto b = [&](int m) { return p.B[m + M]; };
    auto a = [&](int m) { return p.B[m + M] + p.B[-m + M]; };
    auto cc = [&](int m) { return p.C[m + M]; };
    HeatTables t;
    t.T.resize(rows, cols);
    t.R.resize(rows, cols);
    t.W.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
        t.T(i, 0) = b(-i) - b(i);
        t.R(i, 0) = b(i);
        t.W(i, 0) = (cc(i - 1) - cc(i)) / h;
        for (int j = 1; j < cols; ++j) {
            t.T(i, j) = a(i - j) - a(i + j);
            t.R(i, j) = a(i + j);
            t.W(i, j) = -(cc(i - j) - cc(i - j - 1) - cc(i + j - 1) + cc(i + j)) / h;
        }
    }
    return t;
}

HeatTables heat_tables(double s, double h, int rows, int cols) {
    return heat_tables(heat_profile(s, h, rows + cols + 1), rows, cols);
}

}  // namespace lab
