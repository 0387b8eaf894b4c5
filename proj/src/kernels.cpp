#include "lab/kernels.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <unsupported/Eigen/FFT>

#include <array>
#include <numbers>

namespace lab {

namespace {

constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;
using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double norm_of(const Point& z, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += z[i] * z[i];
    return std::sqrt(s);
}

double heat1(double t, double r) { return std::exp(-r * r / (4 * t)) / std::sqrt(4 * pi * t); }

void require_t(double t) {
    if (!(t > 0.0)) throw Error("parabolic kernel needs t > 0");
}

void require_dim(int n) {
    if (n != 2 && n != 3) throw Error("kernels support n = 2 or 3");
}

// Composite 10-point Gauss-Legendre over [a, b] in `panels` pieces; fn(z, weight) accumulates.
template <class Fn>
void gauss_panels(double a, double b, int panels, Fn&& fn) {
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double c = a + (p + 0.5) * w, r = 0.5 * w;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            fn(c - r * xs[k], r * ws[k]);
            fn(c + r * xs[k], r * ws[k]);
        }
    }
}

// ∫_0^A f(a) da split into panels no longer than π/w so oscillation stays resolved.
double frequency_integral(const std::function<double(double)>& f, double A, double w, double tol, double* err) {
    int panels = std::max(1, static_cast<int>(std::ceil(A * std::abs(w) / pi)));
    panels = std::min(panels, 4000);
    double total = 0.0, e = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = A * p / panels, hi = A * (p + 1) / panels, pe = 0.0;
        total += GK::integrate(f, lo, hi, 8, tol, &pe);
        e += pe;
    }
    if (err) *err = e;
    return total;
}

double frequency_cutoff(double t) { return std::sqrt(40.0 / t); }

}  // namespace

double erfcx(double u) {
    if (u < 0) return 2 * std::exp(u * u) - erfcx(-u);
    if (u < 26.0) return std::exp(u * u) * boost::math::erfc(u);
    // Continued fraction erfc(u) = e^{-u²}/√π · 1/(u + (1/2)/(u + 1/(u + (3/2)/(u + ...)))).
    double f = u;
    for (int k = 40; k >= 1; --k) f = u + 0.5 * k / f;
    return 1.0 / (std::sqrt(pi) * f);
}

double eval_E(const Point& z, int n) {
    require_dim(n);
    double r = norm_of(z, n);
    if (r == 0.0) throw Error("E is singular at z = 0");
    return n == 2 ? std::log(r) / (2 * pi) : -1.0 / (4 * pi * r);
}

Point reflect(const Point& y, int n) {
    Point s = y;
    s[n - 1] = -s[n - 1];
    return s;
}

double eval_N(const Point& x, const Point& y, int n, int sign) {
    Point d{}, ds{};
    Point ys = reflect(y, n);
    for (int i = 0; i < n; ++i) {
        d[i] = x[i] - y[i];
        ds[i] = x[i] - ys[i];
    }
    if (norm_of(d, n) == 0.0 || norm_of(ds, n) == 0.0) throw Error("N needs x != y and x != y*");
    return eval_E(d, n) + (sign >= 0 ? 1.0 : -1.0) * eval_E(ds, n);
}

double eval_Gamma(double t, const Point& x, int n, int s) {
    require_t(t);
    require_dim(n);
    if (s < 0) throw Error("negative derivative order");
    // ∂^s_t Γ = (4π)^{-n/2} e^{-A u} Σ_m c_m u^{m + n/2} with u = 1/t, A = |x|²/4.
    double A = 0.0;
    for (int i = 0; i < n; ++i) A += x[i] * x[i];
    A /= 4;
    std::vector<double> c{1.0};
    const double half = 0.5 * n;
    for (int k = 0; k < s; ++k) {
        std::vector<double> next(c.size() + 2, 0.0);
        for (std::size_t m = 0; m < c.size(); ++m) {
            next[m + 2] += A * c[m];
            next[m + 1] -= (m + half) * c[m];
        }
        c = std::move(next);
    }
    double u = 1.0 / t, sum = 0.0;
    for (std::size_t m = c.size(); m-- > 0;) sum = sum * u + c[m];
    return std::pow(4 * pi, -half) * std::exp(-A * u) * std::pow(u, half) * sum;
}

double layer_integral(double a, double t, double x, double y) {
    if (x <= 0.0) return 0.0;
    const double st = 2 * std::sqrt(t);
    const double u0 = (y - 2 * t * a) / st, u1 = (x + y - 2 * t * a) / st;
    const double e0 = std::exp(-a * x - y * y / (4 * t)), e1 = std::exp(-(x + y) * (x + y) / (4 * t));
    if (u0 >= 0) return 0.5 * (e0 * erfcx(u0) - e1 * erfcx(u1));
    if (u1 <= 0) return 0.5 * (e1 * erfcx(-u1) - e0 * erfcx(-u0));
    return 0.5 * std::exp(t * a * a - a * (x + y)) * boost::math::erfc(u0) - 0.5 * e1 * erfcx(u1);
}

double layer_integral_dy(double a, double t, double x, double y) {
    if (x <= 0.0) return 0.0;
    return heat1(t, x + y) - std::exp(-a * x) * heat1(t, y) - a * layer_integral(a, t, x, y);
}

cplx green_symbol(double t, const double* xi, int n, double x, double y, int i, int j) {
    double a2 = 0.0;
    for (int b = 0; b < n - 1; ++b) a2 += xi[b] * xi[b];
    const double a = std::sqrt(a2), e = std::exp(-a2 * t);
    cplx v = (i == j) ? e * (heat1(t, x - y) - heat1(t, x + y)) : 0.0;
    if (j == n - 1 || a == 0.0) return v;
    const double J = layer_integral(a, t, x, y);
    if (i < n - 1) return v + 2 * xi[j] * xi[i] / a * e * J;
    return v + cplx(0.0, 2 * xi[j] * e * J);
}


namespace {

// Correction G_ij - δ_ij(Γ(x-y) - Γ(x-y*)) from the tangential Fourier transform.
double correction_fourier(double t, const Point& x, const Point& y, int i, int j, int n, double tol, double* err) {
    const int nn = n - 1;
    if (j == nn) {
        if (err) *err = 0.0;
        return 0.0;
    }
    const double A = frequency_cutoff(t), xn = x[nn], yn = y[nn];
    if (n == 2) {
        const double w = x[0] - y[0];
        if (i == 0) {
            auto f = [&](double a) { return 2 * a * std::exp(-a * a * t) * layer_integral(a, t, xn, yn) * std::cos(a * w); };
            return frequency_integral(f, A, w, tol, err) / pi;
        }
        auto f = [&](double a) { return a * std::exp(-a * a * t) * layer_integral(a, t, xn, yn) * std::sin(a * w); };
        return -2 * frequency_integral(f, A, w, tol, err) / pi;
    }
    const double w0 = x[0] - y[0], w1 = x[1] - y[1], r = std::hypot(w0, w1);
    const double u[2] = {r > 0 ? w0 / r : 1.0, r > 0 ? w1 / r : 0.0};
    using boost::math::cyl_bessel_j;
    if (i < nn) {
        const double d = i == j ? 1.0 : 0.0, q = 2 * u[i] * u[j] - d;
        auto f = [&](double a) {
            double base = std::exp(-a * a * t) * layer_integral(a, t, xn, yn) * a * a;
            return base * (cyl_bessel_j(0, a * r) * d - cyl_bessel_j(2, a * r) * q);
        };
        return frequency_integral(f, A, r, tol, err) / (2 * pi);
    }
    auto f = [&](double a) { return std::exp(-a * a * t) * layer_integral(a, t, xn, yn) * a * a * cyl_bessel_j(1, a * r); };
    return -frequency_integral(f, A, r, tol, err) * u[j] / pi;
}

// ∂_{x_i} E(w).
double grad_E(const Point& w, int i, int n) {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += w[k] * w[k];
    return n == 2 ? w[i] / (2 * pi * r2) : w[i] / (4 * pi * r2 * std::sqrt(r2));
}

// 4 ∫_0^{x_n} ∫ ∂_{x_i}E(x-z) ∂_{z_j}Γ(t, z-y*) dz' dz_n, the tangential ∂_{x_j} moved onto Γ.
double correction_slab(double t, const Point& x, const Point& y, int i, int j, int n, const QuadratureSpec& spec,
                       double* err) {
    const int nn = n - 1;
    if (j == nn || x[nn] <= 0.0) {
        if (err) *err = 0.0;
        return 0.0;
    }
    const Point ys = reflect(y, n);
    const double L = spec.r_trunc * std::sqrt(2 * t);
    const double rmax = std::hypot(x[0] - y[0], n == 3 ? x[1] - y[1] : 0.0) + L;
    auto integrand = [&](const Point& z) {
        Point w{}, d{};
        for (int k = 0; k < n; ++k) {
            w[k] = x[k] - z[k];
            d[k] = z[k] - ys[k];
        }
        return grad_E(w, i, n) * (-(z[j] - y[j]) / (2 * t)) * eval_Gamma(t, d, n);
    };
    boost::math::quadrature::tanh_sinh<double> outer;
    std::function<double(double)> slice;
    if (n == 2) {
        slice = [&](double zn) {
            std::vector<double> cuts{y[0] - L, y[0] + L};
            if (x[0] > cuts[0] && x[0] < cuts[1]) cuts.insert(cuts.begin() + 1, x[0]);
            double s = 0.0;
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                s += GK::integrate([&](double z1) { return integrand({z1, zn, 0.0}); }, cuts[c], cuts[c + 1], 12,
                                   spec.tol);
            }
            return s;
        };
    } else {
        // Polar coordinates about x' so the 1/r² factor of ∂E is absorbed by the Jacobian.
        slice = [&](double zn) {
            auto ring = [&](double phi) {
                double c = std::cos(phi), s = std::sin(phi), e = 0.0;
                double v = GK::integrate(
                    [&](double r) { return r * integrand({x[0] + r * c, x[1] + r * s, zn}); }, 0.0, rmax, 10,
                    spec.tol, &e);
                return v;
            };
            return GK::integrate(ring, 0.0, 2 * pi, 8, spec.tol);
        };
    }
    double e = 0.0;
    double v = outer.integrate(slice, 0.0, x[nn], spec.tol, &e);
    // Inner rules run at spec.tol; the outer estimate plus that relative floor.
    if (err) *err = 4 * (e + spec.tol * std::abs(v));
    return 4 * v;
}

}  // namespace

GValue eval_G(double t, const Point& x, const Point& y, int i, int j, int n, const QuadratureSpec& spec,
              KernelRoute route) {
    require_t(t);
    require_dim(n);
    if (i < 0 || i >= n || j < 0 || j >= n) throw Error("kernel index out of range");
    if (x[n - 1] < 0 || y[n - 1] < 0) throw Error("points must lie in the closed half space");
    Point d{}, ds{};
    const Point ys = reflect(y, n);
    for (int k = 0; k < n; ++k) {
        d[k] = x[k] - y[k];
        ds[k] = x[k] - ys[k];
    }
    GValue g;
    double c = route == KernelRoute::Fourier ? correction_fourier(t, x, y, i, j, n, spec.tol, &g.error)
                                             : correction_slab(t, x, y, i, j, n, spec, &g.error);
    double delta = i == j ? 1.0 : 0.0;
    g.gstar = c - delta * eval_Gamma(t, ds, n);
    g.value = delta * eval_Gamma(t, d, n) + g.gstar;
    return g;
}


namespace {

// z-integrals of the normal factors of K̂ at frequency magnitude a:
// {∫D aN̂, ∫D ∂N̂, ∫J aN̂, ∫J ∂N̂} with D = g(x-z) - g(x+z), J = J(x, z).
std::array<double, 4> normal_moments(double a, double t, double x, double y, int sign, double L) {
    const double sg = sign >= 0 ? 1.0 : -1.0;
    const double width = std::min(0.5 * std::sqrt(t), a > 0 ? 2.0 / a : 1e300);
    auto aN = [&](double z) { return -0.5 * (std::exp(-a * std::abs(z - y)) + sg * std::exp(-a * (z + y))); };
    auto dN = [&](double z) {
        return 0.5 * ((z >= y ? 1.0 : -1.0) * std::exp(-a * std::abs(z - y)) + sg * std::exp(-a * (z + y)));
    };
    std::array<double, 4> m{};
    auto run = [&](double lo, double hi, auto&& body) {
        std::vector<double> cuts{lo};
        if (y > lo && y < hi) cuts.push_back(y);
        if (x > lo && x < hi && x != y) cuts.push_back(x);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            double len = cuts[c + 1] - cuts[c];
            if (len <= 0) continue;
            gauss_panels(cuts[c], cuts[c + 1], std::max(1, static_cast<int>(std::ceil(len / width))), body);
        }
    };
    run(std::max(0.0, x - L), x + L, [&](double z, double w) {
        double D = heat1(t, x - z) - heat1(t, x + z);
        m[0] += w * D * aN(z);
        m[1] += w * D * dN(z);
    });
    if (x > 0)
        run(0.0, L, [&](double z, double w) {
            double J = layer_integral(a, t, x, z);
            m[2] += w * J * aN(z);
            m[3] += w * J * dN(z);
        });
    return m;
}

// Symbol of K_ijq at tangential frequency ξ given the normal moments at a = |ξ|.
cplx k_symbol(const double* xi, double a, double t, int n, int i, int j, int q, const std::array<double, 4>& m) {
    const int nn = n - 1;
    const double e = std::exp(-a * a * t);
    auto factor = [&](double IN, double Id) -> cplx { return q < nn ? cplx(0.0, xi[q] / a * IN) : cplx(Id); };
    cplx c = i == j ? e * factor(m[0], m[1]) : 0.0;
    if (j == nn) return c;
    if (i < nn) return c + 2 * xi[i] * xi[j] / a * e * factor(m[2], m[3]);
    return c + cplx(0.0, 2 * xi[j]) * e * factor(m[2], m[3]);
}

KValue k_fourier(double t, const Point& x, const Point& y, int i, int j, int q, int n, int sign,
                 const QuadratureSpec& spec) {
    const int nn = n - 1;
    const double A = frequency_cutoff(t), L = spec.r_trunc * std::sqrt(2 * t);
    const double xn = x[nn], yn = y[nn];
    KValue k;
    if (n == 2) {
        const double w = x[0] - y[0];
        auto f = [&](double a) {
            auto m = normal_moments(a, t, xn, yn, sign, L);
            double p = a, mneg = -a;
            cplx v = k_symbol(&p, a, t, n, i, j, q, m) * std::polar(1.0, a * w) +
                     k_symbol(&mneg, a, t, n, i, j, q, m) * std::polar(1.0, -a * w);
            return v.real();
        };
        k.value = frequency_integral(f, A, w, spec.tol, &k.error) / (2 * pi);
        k.error /= 2 * pi;
        return k;
    }
    const double w0 = x[0] - y[0], w1 = x[1] - y[1], r = std::hypot(w0, w1);
    auto f = [&](double a) {
        auto m = normal_moments(a, t, xn, yn, sign, L);
        const int np = 32 + 2 * static_cast<int>(std::ceil(a * r));
        cplx s = 0.0;
        for (int p = 0; p < np; ++p) {
            double phi = 2 * pi * p / np;
            double xi[2] = {a * std::cos(phi), a * std::sin(phi)};
            s += k_symbol(xi, a, t, n, i, j, q, m) * std::polar(1.0, xi[0] * w0 + xi[1] * w1);
        }
        return a * s.real() * (2 * pi / np);
    };
    k.value = frequency_integral(f, A, r, spec.tol, &k.error) / (4 * pi * pi);
    k.error /= 4 * pi * pi;
    return k;
}

// Physical-space route: ∫ G_ij(x, z) ∂_{z_q}N^±(z, y) dz over a truncated half plane.
KValue k_slab(double t, const Point& x, const Point& y, int i, int j, int q, int sign, const QuadratureSpec& spec) {
    const double sg = sign >= 0 ? 1.0 : -1.0;
    const double L = spec.r_trunc * std::sqrt(2 * t);
    const double far = 20 * (std::sqrt(t) + x[1] + y[1] + std::abs(x[0] - y[0]));
    QuadratureSpec inner = spec;
    auto dN = [&](const Point& z) {
        double a0 = z[0] - y[0], a1 = z[1] - y[1], b1 = z[1] + y[1];
        double r = a0 * a0 + a1 * a1, rs = a0 * a0 + b1 * b1;
        double da = q == 0 ? a0 : a1, db = q == 0 ? a0 : b1;
        return (da / r + sg * db / rs) / (2 * pi);
    };
    auto integrand = [&](double z0, double z1) {
        Point z{z0, z1, 0.0};
        return eval_G(t, x, z, i, j, 2, inner, KernelRoute::Fourier).value * dN(z);
    };
    auto row = [&](double z1) {
        std::vector<double> cuts{std::min(x[0], y[0]) - far, y[0], std::max(x[0], y[0]) + far};
        if (x[0] != y[0]) cuts.push_back(x[0]);
        std::sort(cuts.begin(), cuts.end());
        double s = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
            s += GK::integrate([&](double z0) { return integrand(z0, z1); }, cuts[c], cuts[c + 1], 10, spec.tol);
        return s;
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double top = std::max(x[1], y[1]) + L;
    KValue k;
    double e1 = 0.0, e2 = 0.0;
    k.value = ts.integrate(row, 0.0, y[1], spec.tol, &e1) + ts.integrate(row, y[1], top, spec.tol, &e2);
    // Tangential tail beyond `far`: |G| ≲ |G(x, z_far)| and |∂N| ≲ 1/(π far), over a strip of height `top`.
    double tail = 0.0;
    for (double z0 : {std::min(x[0], y[0]) - far, std::max(x[0], y[0]) + far})
        tail += std::abs(eval_G(t, x, Point{z0, x[1], 0.0}, i, j, 2, inner).value) * far * top / (pi * far);
    k.error = e1 + e2 + tail + spec.tol * std::abs(k.value);
    return k;
}

}  // namespace

KValue eval_K(double t, const Point& x, const Point& y, int i, int j, int q, int n, int sign,
              const QuadratureSpec& spec, KernelRoute route) {
    require_t(t);
    require_dim(n);
    if (i < 0 || i >= n || j < 0 || j >= n || q < 0 || q >= n) throw Error("kernel index out of range");
    if (x[n - 1] < 0 || y[n - 1] <= 0) throw Error("K needs x_n >= 0 and y_n > 0");
    if (route == KernelRoute::Slab) {
        if (n != 2) throw Error("physical-space K quadrature supports n = 2 only");
        return k_slab(t, x, y, i, j, q, sign, spec);
    }
    return k_fourier(t, x, y, i, j, q, n, sign, spec);
}


namespace {

constexpr double surface(int n) { return n == 2 ? 2 * pi : 4 * pi; }

// ∫ |∂^s_t ∇^d Γ| over R^n by radial quadrature; derivatives in ρ by central differences.
double gamma_l1_radial(double t, int n, int s, int d, const QuadratureSpec& spec) {
    const double sig = std::sqrt(2 * t), step = 1e-4 * sig;
    auto f = [&](double r) { return eval_Gamma(t, {r, 0.0, 0.0}, n, s); };
    auto density = [&](double r) {
        double v;
        if (d == 0) {
            v = std::abs(f(r));
        } else {
            double fp = (f(r + step) - f(r - step)) / (2 * step);
            if (d == 1) {
                v = std::abs(fp);
            } else {
                double fpp = (f(r + step) - 2 * f(r) + f(r - step)) / (step * step);
                double tang = r > 0 ? fp / r : fpp;
                v = std::sqrt(fpp * fpp + (n - 1) * tang * tang);
            }
        }
        return v * surface(n) * std::pow(r, n - 1);
    };
    // Split at σ multiples so sign changes of the derivative profiles fall near panel ends.
    double total = 0.0;
    const int pieces = static_cast<int>(std::ceil(spec.r_trunc));
    for (int k = 0; k < pieces; ++k)
        total += GK::integrate(density, k * sig * spec.r_trunc / pieces, (k + 1) * sig * spec.r_trunc / pieces, 12,
                               spec.tol);
    return total;
}

// ∫ Γ over the box [-R σ, R σ]^n by a tensor Gauss rule (σ = √(2t)).
double gamma_l1_box(double t, int n, const QuadratureSpec& spec) {
    const double half = spec.r_trunc * std::sqrt(2 * t);
    const int panels = std::max(1, spec.nodes / 10);
    std::vector<double> z, w;
    gauss_panels(-half, half, panels, [&](double x, double wt) {
        z.push_back(x);
        w.push_back(wt);
    });
    double total = 0.0;
    if (n == 2) {
        for (std::size_t a = 0; a < z.size(); ++a)
            for (std::size_t b = 0; b < z.size(); ++b) total += w[a] * w[b] * eval_Gamma(t, {z[a], z[b], 0.0}, 2);
    } else {
        for (std::size_t a = 0; a < z.size(); ++a)
            for (std::size_t b = 0; b < z.size(); ++b)
                for (std::size_t c = 0; c < z.size(); ++c)
                    total += w[a] * w[b] * w[c] * eval_Gamma(t, {z[a], z[b], z[c]}, 3);
    }
    return total;
}

// G*_ij(t; (0, x_n), (w, y_n)) on a periodic tangential box and Gauss nodes in y_n (n = 2).
struct GstarSampling {
    double half_width = 0.0, hw = 0.0;
    int nw = 0;
    std::vector<double> yn, wy;
};

GstarSampling gstar_sampling(double t, double xn, const QuadratureSpec& spec) {
    GstarSampling g;
    const double sig = std::sqrt(2 * t);
    g.half_width = 40 * (xn + sig);
    g.nw = 1;
    while (g.nw * sig / 3 < 2 * g.half_width) g.nw *= 2;
    g.hw = 2 * g.half_width / g.nw;
    const double top = spec.r_trunc * sig;
    gauss_panels(0.0, top, std::max(4, spec.nodes / 8), [&](double y, double w) {
        g.yn.push_back(y);
        g.wy.push_back(w);
    });
    return g;
}

// Rows [y node][w node] for each of the four components at time t.
std::array<std::vector<double>, 4> gstar_fields(double t, double xn, const GstarSampling& g) {
    Eigen::FFT<double> fft;
    const int N = g.nw;
    const double P = N * g.hw;
    std::array<std::vector<double>, 4> out;
    for (auto& o : out) o.assign(g.yn.size() * N, 0.0);
    std::vector<cplx> spec(N), phys(N);
    for (std::size_t m = 0; m < g.yn.size(); ++m) {
        const double y = g.yn[m];
        for (int c = 0; c < 4; ++c) {
            const int i = c / 2, j = c % 2;
            for (int k = 0; k < N; ++k) {
                int kk = k <= N / 2 ? k : k - N;
                double xi = 2 * pi * kk / P;
                if (k == N / 2) {
                    spec[k] = 0.0;
                    continue;
                }
                cplx v = green_symbol(t, &xi, 2, xn, y, i, j);
                if (i == j) v -= std::exp(-xi * xi * t) * heat1(t, xn - y);
                spec[k] = v;
            }
            fft.inv(phys, spec);
            for (int k = 0; k < N; ++k) out[c][m * N + k] = phys[k].real() / g.hw;
        }
    }
    return out;
}

double gstar_l1(double t, double xn, int s, const QuadratureSpec& spec) {
    const GstarSampling g = gstar_sampling(t, xn, spec);
    std::array<std::vector<double>, 4> f;
    const double dt = 1e-3 * t;
    if (s == 0) {
        f = gstar_fields(t, xn, g);
    } else {
        auto p = gstar_fields(t + dt, xn, g), m = gstar_fields(t - dt, xn, g);
        auto c = s == 2 ? gstar_fields(t, xn, g) : std::array<std::vector<double>, 4>{};
        for (int k = 0; k < 4; ++k) {
            f[k].resize(p[k].size());
            for (std::size_t q = 0; q < p[k].size(); ++q)
                f[k][q] = s == 1 ? (p[k][q] - m[k][q]) / (2 * dt) : (p[k][q] - 2 * c[k][q] + m[k][q]) / (dt * dt);
        }
    }
    double norm = 0.0;
    for (int i = 0; i < 2; ++i) {
        double row = 0.0;
        for (int j = 0; j < 2; ++j) {
            const auto& v = f[2 * i + j];
            for (std::size_t m = 0; m < g.yn.size(); ++m) {
                double acc = 0.0;
                for (int k = 0; k < g.nw; ++k) acc += std::abs(v[m * g.nw + k]);
                row += g.wy[m] * acc * g.hw;
            }
        }
        norm = std::max(norm, row);
    }
    return norm;
}

}  // namespace

double l1_norm_y(L1Kernel kernel, double t, double x_n, int n, int s, int d, const QuadratureSpec& spec) {
    require_t(t);
    require_dim(n);
    if (s < 0 || s > 2 || d < 0 || d > 2) throw Error("L1 norms support time order s <= 2 and y order d <= 2");
    if (kernel == L1Kernel::Gamma) return s == 0 && d == 0 ? gamma_l1_box(t, n, spec) : gamma_l1_radial(t, n, s, d, spec);
    if (n != 2) throw Error("G* L1 norm supports n = 2 only");
    if (d != 0) throw Error("G* L1 norm supports d = 0 only");
    if (x_n < 0) throw Error("x_n must be >= 0");
    return gstar_l1(t, x_n, s, spec);
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.size() < 2) throw Error("slope fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(t[k] > 0) || !(v[k] > 0)) throw Error("slope fit needs positive values");
        mx += std::log(t[k]);
        my += std::log(v[k]);
    }
    mx /= t.size();
    my /= t.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        double dx = std::log(t[k]) - mx;
        sxy += dx * (std::log(v[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

ScalingScan scan_t(const std::function<double(double)>& norm, std::vector<double> times) {
    ScalingScan s;
    s.t = std::move(times);
    for (double t : s.t) s.value.push_back(norm(t));
    s.slope = loglog_slope(s.t, s.value);
    return s;
}

PointwiseEnvelope fit_pointwise_envelope(const std::vector<double>& v, const std::vector<double>& base,
                                         const std::vector<double>& zeta, bool with_decay) {
    if (v.size() != base.size() || v.size() != zeta.size()) throw Error("envelope inputs differ in length");
    std::vector<double> L, Z;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(base[k] > 0)) throw Error("envelope base must be positive");
        if (std::abs(v[k]) < 1e-300) continue;
        L.push_back(std::log(std::abs(v[k]) / base[k]));
        Z.push_back(zeta[k]);
    }
    PointwiseEnvelope e;
    e.samples = static_cast<int>(L.size());
    if (L.empty()) return e;
    const double m = static_cast<double>(L.size());
    double mz = 0, ml = 0;
    for (std::size_t k = 0; k < L.size(); ++k) {
        mz += Z[k] / m;
        ml += L[k] / m;
    }
    double szz = 0, szl = 0;
    for (std::size_t k = 0; k < L.size(); ++k) {
        szz += (Z[k] - mz) * (Z[k] - mz);
        szl += (Z[k] - mz) * (L[k] - ml);
    }
    e.c = with_decay && szz > 0 ? -szl / szz : 0.0;
    double intercept = ml + e.c * mz, rss = 0.0, top = -1e300;
    for (std::size_t k = 0; k < L.size(); ++k) {
        double r = L[k] - (intercept - e.c * Z[k]);
        rss += r * r;
        top = std::max(top, L[k] + e.c * Z[k]);
    }
    e.residual = std::sqrt(rss / m);
    e.C = std::exp(top);
    for (std::size_t k = 0; k < L.size(); ++k) e.max_excess = std::max(e.max_excess, std::exp(L[k] + e.c * Z[k] - top));
    return e;
}

}  // namespace lab
