#include "lab/projection.hpp"

#include <map>
#include <tuple>

namespace lab {

namespace {

using cplx = std::complex<double>;
using Block = HalfSpaceSpectral::Block;
const cplx I(0.0, 1.0);

// Generated by expanding ∂_k F′_kj over the componentwise F′ formulas and merging like terms.
const std::vector<LayerTerm> h_table_2 = {
    {0, {0, 0, 0}, +1, 0, 0, -1},
    {0, {0, 0, 0}, +1, 1, 1, +1},
    {0, {0, 0, 1}, -1, 0, 1, -1},
    {0, {0, 0, 1}, -1, 1, 0, -1},
    {1, {0, 0, 0}, -1, 0, 1, +1},
    {1, {0, 0, 0}, -1, 1, 0, +1},
    {1, {0, 0, 1}, +1, 0, 0, -1},
    {1, {0, 0, 1}, +1, 1, 1, +1},};

const std::vector<LayerTerm> h_table_3 = {
    {0, {0, 0, 0}, +1, 0, 0, -1},
    {0, {0, 0, 0}, +1, 2, 2, +1},
    {0, {0, 0, 1}, +1, 0, 1, -1},
    {0, {0, 0, 1}, +1, 1, 0, -1},
    {0, {0, 0, 2}, -1, 0, 2, -1},
    {0, {0, 0, 2}, -1, 2, 0, -1},
    {0, {0, 1, 1}, +1, 1, 1, -1},
    {0, {0, 1, 1}, +1, 2, 2, +1},
    {0, {0, 1, 2}, -1, 1, 2, -1},
    {0, {0, 1, 2}, -1, 2, 1, -1},
    {1, {0, 0, 1}, +1, 0, 0, -1},
    {1, {0, 0, 1}, +1, 2, 2, +1},
    {1, {0, 1, 1}, +1, 0, 1, -1},
    {1, {0, 1, 1}, +1, 1, 0, -1},
    {1, {0, 1, 2}, -1, 0, 2, -1},
    {1, {0, 1, 2}, -1, 2, 0, -1},
    {1, {1, 1, 1}, +1, 1, 1, -1},
    {1, {1, 1, 1}, +1, 2, 2, +1},
    {1, {1, 1, 2}, -1, 1, 2, -1},
    {1, {1, 1, 2}, -1, 2, 1, -1},
    {2, {0, 0, 0}, -1, 0, 2, +1},
    {2, {0, 0, 0}, -1, 2, 0, +1},
    {2, {0, 0, 1}, -1, 1, 2, +1},
    {2, {0, 0, 1}, -1, 2, 1, +1},
    {2, {0, 0, 2}, +1, 0, 0, -1},
    {2, {0, 0, 2}, +1, 2, 2, +1},
    {2, {0, 1, 1}, -1, 0, 2, +1},
    {2, {0, 1, 1}, -1, 2, 0, +1},
    {2, {0, 1, 2}, +1, 0, 1, -1},
    {2, {0, 1, 2}, +1, 1, 0, -1},
    {2, {1, 1, 1}, -1, 1, 2, +1},
    {2, {1, 1, 1}, -1, 2, 1, +1},
    {2, {1, 1, 2}, +1, 1, 1, -1},
    {2, {1, 1, 2}, +1, 2, 2, +1},};

void require_spectral_tensor(const Grid& g) {
    if (!g.halfspace()) throw Error("projection needs a half-space grid");
}

// Second-order normal derivative of each column, one-sided at the ends.
Block normal_derivative(const Block& b, double h) {
    const Eigen::Index N = b.rows();
    Block d(N, b.cols());
    if (N < 3) throw Error("normal derivative needs at least 3 nodes");
    for (Eigen::Index j = 1; j + 1 < N; ++j) d.row(j) = (b.row(j + 1) - b.row(j - 1)) / (2 * h);
    d.row(0) = (-3.0 * b.row(0) + 4.0 * b.row(1) - b.row(2)) / (2 * h);
    d.row(N - 1) = (3.0 * b.row(N - 1) - 4.0 * b.row(N - 2) + b.row(N - 3)) / (2 * h);
    return d;
}

// Evaluates Σ c ∂_d... ∫ N^± F_kl over a term list, mode by mode.
class LayerEvaluator {
public:
    LayerEvaluator(const HalfSpaceSpectral& s, const std::vector<Block>& F) : s_(s), F_(F) {}

    Block apply(const std::vector<LayerTerm>& terms) {
        const int n = s_.dim();
        Block out = Block::Zero(s_.normal_nodes(), s_.modes());
        for (int m = 0; m < s_.modes(); ++m) {
            if (s_.nyquist(m)) continue;
            for (const auto& t : terms) {
                cplx tang = t.c;
                int p = 0;
                for (int d : t.d) {
                    if (d < 0) continue;
                    if (d == n - 1) ++p;
                    else tang *= I * s_.xi(m, d);
                }
                if (tang == cplx(0.0)) continue;
                const auto& pot = potential(m, t.k * n + t.l, t.sign);
                const double a = s_.a(m);
                switch (p) {
                    case 0: out.col(m) += tang * pot.value; break;
                    case 1: out.col(m) += tang * pot.dx; break;
                    case 2: out.col(m) += tang * (F_[t.k * n + t.l].col(m) + a * a * pot.value); break;
                    default: throw Error("layer term with more than two normal derivatives");
                }
            }
        }
        return out;
    }

private:
    const NormalPotential& potential(int m, int c, int sign) {
        auto key = std::make_tuple(m, c, sign);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Eigen::VectorXcd f = F_[c].col(m);
        return cache_.emplace(key, normal_potential(s_.a(m), s_.h(), f, sign)).first->second;
    }

    const HalfSpaceSpectral& s_;
    const std::vector<Block>& F_;
    std::map<std::tuple<int, int, int>, NormalPotential> cache_;
};

std::vector<Block> forward_all(const HalfSpaceSpectral& s, const std::vector<double>& v, int comps) {
    std::vector<Block> out;
    out.reserve(comps);
    for (int c = 0; c < comps; ++c) out.push_back(s.forward_values(v, comps, c));
    return out;
}

Block divergence_block(const HalfSpaceSpectral& s, const std::vector<Block>& rows) {
    const int n = s.dim();
    Block d = normal_derivative(rows[n - 1], s.h());
    for (int m = 0; m < s.modes(); ++m)
        for (int k = 0; k + 1 < n; ++k) d.col(m) += I * s.xi(m, k) * rows[k].col(m);
    return d;
}

}  // namespace

std::vector<LayerTerm> projection_layer_terms(int n, int k, int m) {
    const int nn = n - 1;
    std::vector<LayerTerm> out;
    if (k == nn) return out;
    const int b = k;
    auto add = [&](int d0, int d1, int sign, int kk, int ll, double c) {
        out.push_back({m, {d0, d1, -1}, sign, kk, ll, c});
    };
    if (m < nn) {
        const int g = m;
        for (int q = 0; q < nn; ++q) add(g, q, +1, b, q, -1.0);
        add(g, nn, -1, b, nn, -1.0);
        add(g, nn, -1, nn, b, -1.0);
        add(g, b, +1, nn, nn, +1.0);
    } else {
        for (int g = 0; g < nn; ++g) add(g, nn, +1, b, g, -1.0);
        add(b, nn, +1, nn, nn, +1.0);
        for (int g = 0; g < nn; ++g) {
            add(g, g, -1, b, nn, +1.0);
            add(g, g, -1, nn, b, +1.0);
        }
    }
    return out;
}

std::vector<LocalTerm> projection_local_terms(int n, int k, int m) {
    const int nn = n - 1;
    std::vector<LocalTerm> out;
    if (k == nn || m < nn) {
        out.push_back({k, m, 1.0});
        if (k == m) out.push_back({nn, nn, -1.0});
    } else {
        out.push_back({nn, k, -1.0});
    }
    return out;
}

const std::vector<LayerTerm>& h_coefficients(int n) {
    if (n == 2) return h_table_2;
    if (n == 3) return h_table_3;
    throw Error("coefficient table exists for n = 2 or 3");
}

void check_admissible(const TensorField& F, double tol) {
    const Grid& g = F.grid();
    const int n = g.dim();
    const double scale = std::max(F.max_abs(), 1e-300);
    for (std::size_t node = 0; node < g.size(); ++node) {
        if (g.unravel(node)[n - 1] != 0) continue;
        for (int m = 0; m < n; ++m)
            if (std::abs(F.at(node, n - 1, m)) > tol * scale)
                throw Error("boundary flag violated: F_nm does not vanish at x_n = 0");
    }
}

HelmholtzParts helmholtz_decompose(const VectorField& f) {
    require_spectral_tensor(f.grid());
    HalfSpaceSpectral s(f.grid());
    const int n = s.dim();
    auto fb = forward_all(s, f.values(), n);
    HelmholtzParts out{VectorField(f.grid()), VectorField(f.grid())};
    Block phi = Block::Zero(s.normal_nodes(), s.modes());
    Block gn = Block::Zero(s.normal_nodes(), s.modes());
    for (int m = 0; m < s.modes(); ++m) {
        if (s.nyquist(m)) continue;
        const double a = s.a(m);
        auto pn = normal_potential(a, s.h(), fb[n - 1].col(m), -1);
        phi.col(m) = pn.dx;
        gn.col(m) = fb[n - 1].col(m) + a * a * pn.value;
        for (int b = 0; b + 1 < n; ++b) {
            if (s.xi(m, b) == 0.0) continue;
            auto pb = normal_potential(a, s.h(), fb[b].col(m), +1);
            phi.col(m) += I * s.xi(m, b) * pb.value;
            gn.col(m) += I * s.xi(m, b) * pb.dx;
        }
    }
    for (int g = 0; g + 1 < n; ++g) {
        Block d = phi;
        for (int m = 0; m < s.modes(); ++m) d.col(m) *= I * s.xi(m, g);
        s.inverse(d, out.grad_phi, g);
    }
    s.inverse(gn, out.grad_phi, n - 1);
    out.qf = f - out.grad_phi;
    return out;
}

TensorField project_F(const TensorField& F) {
    require_spectral_tensor(F.grid());
    check_admissible(F);
    HalfSpaceSpectral s(F.grid());
    const int n = s.dim();
    auto fb = forward_all(s, F.values(), n * n);
    LayerEvaluator ev(s, fb);
    TensorField out(F.grid());
    for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m) {
            auto layer = projection_layer_terms(n, k, m);
            if (layer.empty()) {
                // Purely algebraic entries are evaluated pointwise.
                const auto local = projection_local_terms(n, k, m);
                for (std::size_t node = 0; node < F.grid().size(); ++node) {
                    double v = 0;
                    for (const auto& t : local) v += t.c * F.at(node, t.k, t.l);
                    out.at(node, k, m) = v;
                }
                continue;
            }
            Block b = Block::Zero(s.normal_nodes(), s.modes());
            for (const auto& t : projection_local_terms(n, k, m)) b += t.c * fb[t.k * n + t.l];
            b += ev.apply(layer);
            s.inverse(b, out, k * n + m);
        }
    return out;
}

std::vector<Block> h_blocks(const HalfSpaceSpectral& s, const std::vector<Block>& F) {
    const int n = s.dim();
    LayerEvaluator ev(s, F);
    std::vector<Block> out;
    for (int j = 0; j < n; ++j) {
        std::vector<LayerTerm> terms;
        for (const auto& t : h_coefficients(n))
            if (t.row == j) terms.push_back(t);
        out.push_back(ev.apply(terms));
    }
    return out;
}

VectorField compute_h(const TensorField& F) {
    require_spectral_tensor(F.grid());
    check_admissible(F);
    HalfSpaceSpectral s(F.grid());
    auto hb = h_blocks(s, forward_all(s, F.values(), s.dim() * s.dim()));
    VectorField out(F.grid());
    for (int j = 0; j < s.dim(); ++j) s.inverse(hb[j], out, j);
    return out;
}

VectorField tensor_divergence(const TensorField& F) {
    require_spectral_tensor(F.grid());
    HalfSpaceSpectral s(F.grid());
    const int n = s.dim();
    auto fb = forward_all(s, F.values(), n * n);
    VectorField out(F.grid());
    for (int m = 0; m < n; ++m) {
        std::vector<Block> rows;
        for (int k = 0; k < n; ++k) rows.push_back(fb[k * n + m]);
        s.inverse(divergence_block(s, rows), out, m);
    }
    return out;
}

ScalarField vector_divergence(const VectorField& f) {
    require_spectral_tensor(f.grid());
    HalfSpaceSpectral s(f.grid());
    ScalarField out(f.grid());
    s.inverse(divergence_block(s, forward_all(s, f.values(), s.dim())), out, 0);
    return out;
}

}  // namespace lab
