#include "lab/mild.hpp"

#include "lab/kernels.hpp"
#include "lab/projection.hpp"
#include "lab/spectral.hpp"

#include <fstream>
#include <map>

namespace lab {

namespace {

using cplx = std::complex<double>;
using Block = HalfSpaceSpectral::Block;
const cplx I(0.0, 1.0);

// Tangential-mode evaluation of the Green semigroup and the Duhamel kernel on
// a fixed grid. Blocks passed in and out keep only the listed mode columns.
class MildEngine {
public:
    explicit MildEngine(const Grid& g) : s_(g), n_(g.dim()), N_(s_.normal_nodes()) {}

    const HalfSpaceSpectral& spectral() const { return s_; }
    int dim() const { return n_; }
    int rows() const { return N_; }

    std::vector<int> all_modes() const {
        std::vector<int> m;
        for (int k = 0; k < s_.modes(); ++k)
            if (!s_.nyquist(k)) m.push_back(k);
        return m;
    }

    // Modes where any block carries content above rel · (largest entry).
    std::vector<int> active_modes(const std::vector<const Block*>& blocks, double rel = 1e-14) const {
        double big = 0.0;
        for (auto* b : blocks) big = std::max(big, b->cwiseAbs().maxCoeff());
        std::vector<int> out;
        if (big == 0.0) return out;
        for (int m = 0; m < s_.modes(); ++m) {
            if (s_.nyquist(m)) continue;
            for (auto* b : blocks)
                if (b->col(m).cwiseAbs().maxCoeff() > rel * big) {
                    out.push_back(m);
                    break;
                }
        }
        return out;
    }

    static Block compress(const Block& b, const std::vector<int>& modes) {
        Block c(b.rows(), modes.size());
        for (std::size_t q = 0; q < modes.size(); ++q) c.col(q) = b.col(modes[q]);
        return c;
    }

    Block expand(const Block& c, const std::vector<int>& modes) const {
        Block b = Block::Zero(c.rows(), s_.modes());
        for (std::size_t q = 0; q < modes.size(); ++q) b.col(modes[q]) = c.col(q);
        return b;
    }

    // û(t) restricted to the first `rows` normal nodes.
    std::vector<Block> semigroup(double t, const std::vector<Block>& u0, const std::vector<int>& modes, int rows) {
        auto tb = heat_tables(profile(t), rows, N_);
        std::vector<Block> out(n_);
        for (int c = 0; c < n_; ++c) out[c] = tb.T * u0[c];
        std::vector<Block> RU(n_ - 1);
        for (int b = 0; b + 1 < n_; ++b) RU[b] = tb.R * u0[b];
        for (std::size_t q = 0; q < modes.size(); ++q) {
            const int m = modes[q];
            const double a = s_.a(m);
            if (a > 0) {
                Eigen::VectorXcd corr = Eigen::VectorXcd::Zero(rows);
                for (int b = 0; b + 1 < n_; ++b) corr += s_.xi(m, b) * forward_filter(a, s_.h(), RU[b].col(q));
                for (int g = 0; g + 1 < n_; ++g) out[g].col(q) += (2 * s_.xi(m, g) / a) * corr;
                out[n_ - 1].col(q) += 2.0 * I * corr;
            }
            const double e = std::exp(-a * a * t);
            for (int c = 0; c < n_; ++c) out[c].col(q) *= e;
        }
        return out;
    }

    // Kernel action at lag s on S = u⊗u - F with its layer part ĥ.
    std::vector<Block> kernel(double s, const std::vector<Block>& S, const std::vector<Block>& h, const std::vector<int>& modes,
                              int rows) {
        const int n = n_, nn = n_ - 1;
        const Eigen::Index A = modes.size();
        auto tb = heat_tables(profile(s), rows, N_);
        auto Sx = [&](int k, int l) -> const Block& { return S[k * n + l]; };
        std::vector<Block> P(n, Block::Zero(N_, A));
        for (Eigen::Index q = 0; q < A; ++q) {
            const int m = modes[q];
            for (int g = 0; g < nn; ++g) {
                auto col = P[g].col(q);
                for (int k = 0; k < nn; ++k) col -= I * s_.xi(m, k) * Sx(k, g).col(q);
                col += I * s_.xi(m, g) * Sx(nn, nn).col(q) - h[g].col(q);
            }
            auto col = P[nn].col(q);
            for (int b = 0; b < nn; ++b) col += I * s_.xi(m, b) * Sx(nn, b).col(q);
            col -= h[nn].col(q);
        }
        std::vector<Block> out(n);
        for (int c = 0; c < n; ++c) out[c] = tb.T * P[c];
        std::vector<Block> RS(nn), RP(nn);
        for (int b = 0; b < nn; ++b) {
            out[b] += tb.W * Sx(nn, b);
            RS[b] = tb.R * Sx(nn, b);
            RP[b] = tb.R * P[b];
        }
        Eigen::VectorXd decay(rows);
        for (Eigen::Index q = 0; q < A; ++q) {
            const int m = modes[q];
            const double a = s_.a(m);
            if (a > 0) {
                for (int i = 0; i < rows; ++i) decay(i) = std::exp(-a * i * s_.h());
                Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(rows);
                for (int b = 0; b < nn; ++b) {
                    Eigen::VectorXcd arg = RP[b].col(q) - a * RS[b].col(q);
                    psi += s_.xi(m, b) * (forward_filter(a, s_.h(), arg) + RS[b].col(q) - RS[b](0, q) * decay);
                }
                for (int g = 0; g < nn; ++g) out[g].col(q) += (2 * s_.xi(m, g) / a) * psi;
                out[nn].col(q) += 2.0 * I * psi;
            }
            const double e = std::exp(-a * a * s);
            for (int c = 0; c < n; ++c) out[c].col(q) *= e;
        }
        return out;
    }

    // Transformed S and ĥ of a physical tensor field.
    std::pair<std::vector<Block>, std::vector<Block>> source_blocks(const TensorField& S) const {
        std::vector<Block> b;
        for (int c = 0; c < n_ * n_; ++c) b.push_back(s_.forward(S, c));
        auto hb = h_blocks(s_, b);
        return {std::move(b), std::move(hb)};
    }

private:
    const HeatProfile& profile(double s) {
        auto it = profiles_.find(s);
        if (it != profiles_.end()) return it->second;
        return profiles_.emplace(s, heat_profile(s, s_.h(), 2 * N_ + 1)).first->second;
    }

    HalfSpaceSpectral s_;
    int n_, N_;
    std::map<double, HeatProfile> profiles_;
};

// Gauss-Legendre nodes and weights on [-1, 1] by Golub-Welsch.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int points) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Eigen::VectorXd w = 2 * es.eigenvectors().row(0).transpose().array().square();
    return {es.eigenvalues(), w};
}

double max_diff(const VectorField& a, const VectorField& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) d = std::max(d, std::abs(a.values()[k] - b.values()[k]));
    return d;
}

struct Frames {
    std::vector<std::vector<Block>> S, h;  // compressed to `modes`
    std::vector<int> modes;
};

Frames prepare_frames(MildEngine& E, const std::vector<TensorField>& S) {
    std::vector<std::vector<Block>> fullS, fullH;
    std::vector<const Block*> all;
    for (const auto& f : S) {
        auto [b, hb] = E.source_blocks(f);
        fullS.push_back(std::move(b));
        fullH.push_back(std::move(hb));
    }
    for (std::size_t j = 0; j < S.size(); ++j) {
        for (auto& b : fullS[j]) all.push_back(&b);
        for (auto& b : fullH[j]) all.push_back(&b);
    }
    Frames fr;
    fr.modes = E.active_modes(all);
    for (std::size_t j = 0; j < S.size(); ++j) {
        std::vector<Block> cs, ch;
        for (auto& b : fullS[j]) cs.push_back(MildEngine::compress(b, fr.modes));
        for (auto& b : fullH[j]) ch.push_back(MildEngine::compress(b, fr.modes));
        fr.S.push_back(std::move(cs));
        fr.h.push_back(std::move(ch));
    }
    return fr;
}

// Source blocks at τ by quadratic interpolation between the frame times.
std::pair<std::vector<Block>, std::vector<Block>> frames_at(const Frames& fr, const std::vector<double>& times, double tau) {
    const std::size_t K = times.size();
    std::vector<std::size_t> pts;
    if (K == 1) {
        pts = {0};
    } else {
        std::size_t j = std::upper_bound(times.begin(), times.end(), tau) - times.begin();
        j = std::clamp<std::size_t>(j, 1, K - 1) - 1;  // times[j] ≤ tau ≤ times[j + 1]
        if (K == 2) pts = {0, 1};
        else if (j + 2 < K && (j == 0 || tau - times[j] < times[j + 1] - tau)) pts = {j, j + 1, j + 2};
        else if (j + 2 < K) pts = {j - 1, j, j + 1};
        else pts = {K - 3, K - 2, K - 1};
    }
    std::vector<Block> S(fr.S[0].size()), h(fr.h[0].size());
    for (auto& b : S) b = Block::Zero(fr.S[0][0].rows(), fr.S[0][0].cols());
    for (auto& b : h) b = Block::Zero(fr.S[0][0].rows(), fr.S[0][0].cols());
    for (std::size_t p : pts) {
        double l = 1.0;
        for (std::size_t q : pts)
            if (q != p) l *= (tau - times[q]) / (times[p] - times[q]);
        if (l == 0.0) continue;
        for (std::size_t c = 0; c < S.size(); ++c) S[c] += l * fr.S[p][c];
        for (std::size_t c = 0; c < h.size(); ++c) h[c] += l * fr.h[p][c];
    }
    return {std::move(S), std::move(h)};
}

// ∫_0^t D(t - τ)[S(τ)] dτ = ∫_0^t (t - τ)^{-1/2} g(τ) dτ with g = √(t - τ) D.
VectorField duhamel_from_frames(MildEngine& E, const Frames& fr, const std::vector<double>& times, double t, const Grid& g) {
    const int n = E.dim();
    VectorField out(g);
    if (fr.modes.empty()) return out;
    if (times.front() != 0.0 || times.back() < t * (1 - 1e-12))
        throw Error("time-node resolution insufficient: source frames must cover [0, t]");
    auto rule = singular_rule(t);
    const Eigen::Index A = fr.modes.size();
    std::vector<Block> acc(n, Block::Zero(E.rows(), A));
    for (std::size_t k = 0; k < rule.tau.size(); ++k) {
        const double lag = t - rule.tau[k];
        auto [S, h] = frames_at(fr, times, rule.tau[k]);
        auto D = E.kernel(lag, S, h, fr.modes, E.rows());
        for (int c = 0; c < n; ++c) acc[c] += (rule.w[k] * std::sqrt(lag)) * D[c];
    }
    for (int c = 0; c < n; ++c) E.spectral().inverse(E.expand(acc[c], fr.modes), out, c);
    return out;
}

VectorField semigroup_with(MildEngine& E, const VectorField& u0, double t) {
    if (t == 0.0) return u0;
    if (!(t > 0)) throw Error("semigroup needs t > 0");
    const int n = E.dim();
    std::vector<Block> full;
    std::vector<const Block*> ptr;
    for (int c = 0; c < n; ++c) full.push_back(E.spectral().forward(u0, c));
    for (auto& b : full) ptr.push_back(&b);
    auto modes = E.active_modes(ptr);
    VectorField out(u0.grid());
    if (modes.empty()) return out;
    std::vector<Block> cb;
    for (auto& b : full) cb.push_back(MildEngine::compress(b, modes));
    auto r = E.semigroup(t, cb, modes, E.rows());
    for (int c = 0; c < n; ++c) E.spectral().inverse(E.expand(r[c], modes), out, c);
    return out;
}

void check_initial_data(const VectorField& u0) {
    const Grid& g = u0.grid();
    const int n = g.dim();
    const double scale = u0.max_abs();
    if (scale == 0.0) return;
    for (std::size_t node = 0; node < g.size(); ++node)
        if (g.unravel(node)[n - 1] == 0)
            for (int c = 0; c < n; ++c)
                if (std::abs(u0(node, c)) > 1e-10 * scale) throw Error("initial data must vanish at x_n = 0");
    double parts = 0.0;
    for (int c = 0; c < n; ++c) {
        VectorField one(g);
        for (std::size_t node = 0; node < g.size(); ++node) one(node, c) = u0(node, c);
        parts = std::max(parts, vector_divergence(one).max_abs());
    }
    if (vector_divergence(u0).max_abs() > 0.1 * parts) throw Error("initial data is not divergence free");
}

}  // namespace

std::vector<double> graded_nodes(double T, int M) {
    if (!(T > 0) || M < 1) throw Error("graded nodes need T > 0 and M ≥ 1");
    std::vector<double> t(M + 1);
    for (int m = 0; m <= M; ++m) t[m] = T * (double(m) / M) * (double(m) / M);
    t[M] = T;
    return t;
}

SingularRule singular_rule(double t, int levels, int points) {
    if (!(t > 0) || levels < 0 || points < 1 || points > 20) throw Error("singular rule needs t > 0 and 1 ≤ points ≤ 20");
    // s = t - τ = t v², so (t - τ)^{-1/2} dτ = 2√t dv; dyadic panels in v cluster lags at s = 0.
    std::vector<double> edges{0.0};
    for (int k = levels; k >= 0; --k) edges.push_back(std::ldexp(1.0, -k));
    const auto [x, w] = gauss_legendre(points);
    SingularRule r;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        for (int i = 0; i < points; ++i) {
            double v = 0.5 * (a + b) + 0.5 * (b - a) * x(i);
            r.tau.push_back(t - t * v * v);
            r.w.push_back(std::sqrt(t) * (b - a) * w(i));
        }
    }
    return r;
}

VectorField semigroup_term(const VectorField& u0, double t) {
    MildEngine E(u0.grid());
    return semigroup_with(E, u0, t);
}

TensorField assemble_quadratic_source(const VectorField& u, const TensorField* F) {
    const Grid& g = u.grid();
    const int n = g.dim();
    TensorField S(g);
    if (F && !F->grid().same_as(g)) throw Error("source and velocity grids differ");
    for (std::size_t node = 0; node < g.size(); ++node)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) S.at(node, k, l) = u(node, k) * u(node, l) - (F ? F->at(node, k, l) : 0.0);
    return S;
}

VectorField kernel_action(const TensorField& S, double s) {
    if (!(s > 0)) throw Error("kernel action needs s > 0");
    const Grid& g = S.grid();
    MildEngine E(g);
    auto fr = prepare_frames(E, {S});
    VectorField out(g);
    if (fr.modes.empty()) return out;
    auto D = E.kernel(s, fr.S[0], fr.h[0], fr.modes, E.rows());
    for (int c = 0; c < g.dim(); ++c) E.spectral().inverse(E.expand(D[c], fr.modes), out, c);
    return out;
}

VectorField duhamel_term(const TensorSeries& S, double t) {
    if (S.size() == 0) throw Error("Duhamel term needs source frames");
    if (S.times.front() != 0.0) throw Error("source frames must start at t = 0");
    if (!(t > 0)) throw Error("Duhamel term needs t > 0");
    const Grid& g = S.frames.front().grid();
    MildEngine E(g);
    auto fr = prepare_frames(E, S.frames);
    return duhamel_from_frames(E, fr, S.times, t, g);
}

KernelL1 probe_kernel_l1(int n, double t, double x_n, const ProbeGrid& pg) {
    if (n != 2 && n != 3) throw Error("kernel probe supports n = 2 or 3");
    Grid g = n == 2 ? Grid::make(2, {0, 0, 0}, {pg.tangential, pg.normal, 0}, pg.h, true, {true, false, false})
                    : Grid::make(3, {0, 0, 0}, {pg.tangential, pg.tangential, pg.normal}, pg.h, true, {true, true, false});
    MildEngine E(g);
    const auto& s = E.spectral();
    const int N = E.rows(), ip = int(std::lround(x_n / pg.h));
    if (ip < 1 || ip >= N) throw Error("probe height outside the grid");
    const auto modes = E.all_modes();
    const Eigen::Index A = modes.size();
    // Σ_x' |f(x', x_n)| for the inverse transform of a row of mode coefficients.
    ScalarField tmp(g);
    auto row_l1 = [&](const Block& blk) {
        Block full = Block::Zero(N, s.modes());
        for (Eigen::Index q = 0; q < A; ++q) full(ip, modes[q]) = blk(ip, q);
        s.inverse(full, tmp, 0);
        double sum = 0.0;
        for (std::size_t node = 0; node < g.size(); ++node)
            if (g.unravel(node)[n - 1] == ip) sum += std::abs(tmp(node));
        return sum;
    };
    std::vector<double> gsum(n, 0.0), ksum(n, 0.0);
    for (int j = 1; j < N; ++j) {
        for (int c = 0; c < n; ++c) {
            std::vector<Block> u0(n, Block::Zero(N, A));
            u0[c].row(j).setOnes();
            auto r = E.semigroup(t, u0, modes, ip + 1);
            for (int i = 0; i < n; ++i) gsum[i] += row_l1(r[i]);
        }
        for (int kl = 0; kl < n * n; ++kl) {
            std::vector<Block> full(n * n, Block::Zero(N, s.modes()));
            for (int m : modes) full[kl](j, m) = 1.0;
            auto hb = h_blocks(s, full);
            std::vector<Block> S, h;
            for (auto& b : full) S.push_back(MildEngine::compress(b, modes));
            for (auto& b : hb) h.push_back(MildEngine::compress(b, modes));
            auto r = E.kernel(t, S, h, modes, ip + 1);
            for (int i = 0; i < n; ++i) ksum[i] += row_l1(r[i]);
        }
    }
    return {*std::max_element(gsum.begin(), gsum.end()), *std::max_element(ksum.begin(), ksum.end())};
}

KernelConstants measure_kernel_constants(int n, const ProbeGrid& pg, double x_n, std::vector<double> times) {
    if (times.size() < 2) throw Error("kernel sweep needs at least two times");
    std::sort(times.begin(), times.end(), std::greater<>());
    KernelConstants k;
    k.x_n = x_n;
    k.times = times;
    std::vector<double> kt;
    for (double t : times) {
        auto v = probe_kernel_l1(n, t, x_n, pg);
        k.values.push_back(v);
        kt.push_back(v.ktilde);
        k.C0 = std::max(k.C0, v.g);
    }
    k.C0 = std::max(k.C0, probe_kernel_l1(n, 0.25, std::min(1.5, 0.5 * pg.normal), pg).g);
    k.slope = loglog_slope(times, kt);
    // √t ‖K̃‖ ≈ C - c √t / x_n.
    const std::size_t a = times.size() - 2, b = times.size() - 1;
    const double fa = std::sqrt(times[a]) * kt[a], fb = std::sqrt(times[b]) * kt[b];
    const double ra = std::sqrt(times[a]), rb = std::sqrt(times[b]);
    k.C = std::max(fb, (fb * ra - fa * rb) / (ra - rb));
    return k;
}

SmallnessCheck check_smallness(double C, double C0, double data_norm, double T) {
    SmallnessCheck s;
    const double a = 8 * C * C0 * data_norm;
    s.lhs = a * std::sqrt(T);
    s.admissible_T = a > 0 ? std::pow(0.5 / a, 2) : std::numeric_limits<double>::infinity();
    s.ok = s.lhs <= 0.5;
    return s;
}

PicardResult picard_solve(const MildProblem& p) {
    const Grid& g = p.u0.grid();
    check_initial_data(p.u0);
    const auto nodes = graded_nodes(p.T, p.time_nodes);
    const std::size_t M = nodes.size();
    std::vector<TensorField> F;
    double fnorm = 0.0;
    for (double t : nodes) {
        F.push_back(p.F ? p.F(t) : TensorField(g));
        check_admissible(F.back());
        fnorm = std::max(fnorm, F.back().max_abs());
    }
    PicardResult r;
    KernelConstants kc = p.constants;
    if (kc.C == 0.0) kc = measure_kernel_constants(g.dim());
    r.smallness = check_smallness(kc.C, kc.C0, p.u0.max_abs() + fnorm, p.T);
    if (p.enforce_smallness && !r.smallness.ok)
        throw Error("smallness condition fails: 8 C C0 (|u0| + |F|) sqrt(T) = " + std::to_string(r.smallness.lhs) +
                    " > 1/2; admissible T ≤ " + std::to_string(r.smallness.admissible_T));

    MildEngine E(g);
    std::vector<VectorField> sg;
    for (double t : nodes) sg.push_back(semigroup_with(E, p.u0, t));
    std::vector<VectorField> u = sg;
    // One application of the mild map; returns the new iterate and its sup-distance to `u`.
    auto step = [&](const std::vector<VectorField>& u, double& diff) {
        std::vector<TensorField> S;
        for (std::size_t j = 0; j < M; ++j) S.push_back(assemble_quadratic_source(u[j], &F[j]));
        auto fr = prepare_frames(E, S);
        std::vector<VectorField> next(M);
        next[0] = p.u0;
        diff = 0.0;
        for (std::size_t i = 1; i < M; ++i) {
            next[i] = sg[i] + duhamel_from_frames(E, fr, nodes, nodes[i], g);
            diff = std::max(diff, max_diff(next[i], u[i]));
        }
        return next;
    };
    int bad = 0;
    for (int m = 1; m <= p.max_iter; ++m) {
        double diff = 0.0;
        u = step(u, diff);
        double sup = 0.0;
        for (const auto& f : u) sup = std::max(sup, f.max_abs());
        PicardState st{m, sup, diff, 0.0};
        if (!r.states.empty() && r.states.back().diff_norm > 0) st.ratio = diff / r.states.back().diff_norm;
        r.states.push_back(st);
        if (!std::isfinite(sup)) throw Error("contraction failure: iterate is not finite");
        if (diff <= p.tol) {
            r.converged = true;
            break;
        }
        bad = st.ratio > 0.9 ? bad + 1 : 0;
        if (bad >= 3) throw Error("contraction failure: difference ratio above 0.9 for 3 iterates");
    }
    if (r.converged) step(u, r.residual);
    r.u.kind = NodeKind::Graded;
    for (std::size_t i = 0; i < M; ++i) r.u.push(nodes[i], u[i]);
    return r;
}

VectorSeries evaluate_mild(const MildProblem& p, const PicardResult& r, const std::vector<double>& times) {
    const Grid& g = p.u0.grid();
    MildEngine E(g);
    std::vector<TensorField> S;
    for (std::size_t j = 0; j < r.u.size(); ++j) {
        TensorField F = p.F ? p.F(r.u.times[j]) : TensorField(g);
        S.push_back(assemble_quadratic_source(r.u.frames[j], &F));
    }
    auto fr = prepare_frames(E, S);
    VectorSeries out;
    for (double t : times) {
        if (!(t > 0) || t > r.u.times.back()) throw Error("evaluation time outside (0, T]");
        out.push(t, semigroup_with(E, p.u0, t) + duhamel_from_frames(E, fr, r.u.times, t, g));
    }
    return out;
}

void write_picard_csv(const std::filesystem::path& path, const std::vector<PicardState>& states) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "m,sup_norm,diff_norm,ratio\n";
    os.precision(12);
    for (const auto& s : states) os << s.m << ',' << s.sup_norm << ',' << s.diff_norm << ',' << s.ratio << '\n';
}

}  // namespace lab
