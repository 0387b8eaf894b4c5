#include "lab/extension.hpp"

#include "lab/numerics.hpp"

namespace lab {

BoundaryMode parse_boundary_mode(const std::string& s) {
    if (s == "dirichlet") return BoundaryMode::Dirichlet;
    if (s == "conormal") return BoundaryMode::Conormal;
    throw Error("unknown boundary mode '" + s + "' (expected dirichlet or conormal)");
}

const char* to_string(BoundaryMode m) { return m == BoundaryMode::Dirichlet ? "dirichlet" : "conormal"; }

namespace {

void require_half(const Grid& g) {
    if (!g.halfspace()) throw Error("extension needs a half-space grid");
}

// Calls fn(whole_node, half_node, sign of x_n) for every node of the mirrored grid.
template <class Fn>
void for_each_mirror(const Grid& half, const Grid& whole, Fn&& fn) {
    const int a = half.dim() - 1;
    const int zero = half.nodes(a) - 1;
    for (std::size_t k = 0; k < whole.size(); ++k) {
        Index idx = whole.unravel(k);
        int m = idx[a] - zero;
        idx[a] = std::abs(m);
        fn(k, half.ravel(idx), (m > 0) - (m < 0));
    }
}

}  // namespace

ScalarField extend_solution(const ScalarField& u, BoundaryMode mode, double tau_rel) {
    const Grid& g = u.grid();
    require_half(g);
    if (mode == BoundaryMode::Dirichlet) {
        double trace = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.unravel(k)[g.dim() - 1] == 0) trace = std::max(trace, std::abs(u(k)));
        if (trace > tau_rel * u.max_abs())
            throw Error("Dirichlet trace violation: |u| at x_n = 0 reaches " + std::to_string(trace));
    }
    Grid w = g.mirrored();
    ScalarField out(w);
    for_each_mirror(g, w, [&](std::size_t kw, std::size_t kh, int s) {
        out(kw) = (mode == BoundaryMode::Dirichlet && s < 0) ? -u(kh) : u(kh);
    });
    return out;
}

VectorField extend_flux(const VectorField& f, BoundaryMode mode) {
    const Grid& g = f.grid();
    require_half(g);
    const int n = g.dim();
    Grid w = g.mirrored();
    VectorField out(w);
    for_each_mirror(g, w, [&](std::size_t kw, std::size_t kh, int s) {
        for (int i = 0; i < n; ++i) {
            bool odd = (i == n - 1) == (mode == BoundaryMode::Conormal);
            out(kw, i) = (odd && s < 0) ? -f(kh, i) : f(kh, i);
        }
    });
    return out;
}

TensorField extend_coefficients(const TensorField& a) {
    const Grid& g = a.grid();
    require_half(g);
    const int n = g.dim();
    Grid w = g.mirrored();
    TensorField out(w);
    for_each_mirror(g, w, [&](std::size_t kw, std::size_t kh, int s) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                bool odd = (i == n - 1) != (j == n - 1);
                out.at(kw, i, j) = odd ? s * a.at(kh, i, j) : a.at(kh, i, j);
            }
    });
    return out;
}

template <Rank R>
GridField<R> restrict_to_halfspace(const GridField<R>& whole, const Grid& half) {
    require_half(half);
    if (!whole.grid().same_as(half.mirrored())) throw Error("grid mismatch");
    GridField<R> out(half);
    for_each_mirror(half, whole.grid(), [&](std::size_t kw, std::size_t kh, int s) {
        if (s >= 0)
            for (int c = 0; c < out.components(); ++c) out(kh, c) = whole(kw, c);
    });
    return out;
}

template ScalarField restrict_to_halfspace(const ScalarField&, const Grid&);
template VectorField restrict_to_halfspace(const VectorField&, const Grid&);
template TensorField restrict_to_halfspace(const TensorField&, const Grid&);

double conormal_trace(const TensorField& a, const ScalarField& u, const VectorField* f) {
    const Grid& g = u.grid();
    require_half(g);
    if (!a.grid().same_as(g) || (f && !f->grid().same_as(g))) throw Error("grid mismatch");
    const int n = g.dim();
    VectorField grad = gradient(u);
    double m = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.unravel(k)[n - 1] != 0) continue;
        double v = f ? (*f)(k, n - 1) : 0.0;
        for (int j = 0; j < n; ++j) v += a.at(k, n - 1, j) * grad(k, j);
        m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace lab
