#include "lab/numerics.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lab {

namespace {

using Entry = std::pair<long, double>;

// Flux-form stencil of ∂_i(a_ij ∂_j u) at `k`; false when a neighbour is missing.
bool stencil(const TensorField& a, std::size_t k, std::vector<Entry>& out) {
    const Grid& g = a.grid();
    const int n = g.dim();
    const double h = g.h();
    out.clear();
    for (int i = 0; i < n; ++i) {
        long kp = g.neighbor(k, i, +1), km = g.neighbor(k, i, -1);
        if (kp < 0 || km < 0) return false;
        for (int side = 0; side < 2; ++side) {
            long kn = side == 0 ? kp : km;
            double sgn = side == 0 ? 1.0 : -1.0;  // (F(k+½) - F(k-½)) / h
            for (int j = 0; j < n; ++j) {
                double aij = 0.5 * (a.at(k, i, j) + a.at(static_cast<std::size_t>(kn), i, j));
                if (aij == 0.0) continue;
                double w = sgn * aij / h;
                if (j == i) {
                    // D_i u = ±(u(kn) - u(k))/h
                    out.emplace_back(kn, w * sgn / h);
                    out.emplace_back(static_cast<long>(k), -w * sgn / h);
                } else {
                    long k_pj = g.neighbor(k, j, +1), k_mj = g.neighbor(k, j, -1);
                    long n_pj = g.neighbor(static_cast<std::size_t>(kn), j, +1);
                    long n_mj = g.neighbor(static_cast<std::size_t>(kn), j, -1);
                    if (k_pj < 0 || k_mj < 0 || n_pj < 0 || n_mj < 0) return false;
                    double c = w / (4.0 * h);
                    out.emplace_back(k_pj, c);
                    out.emplace_back(k_mj, -c);
                    out.emplace_back(n_pj, c);
                    out.emplace_back(n_mj, -c);
                }
            }
        }
    }
    return true;
}

void check_same_grid(const Grid& a, const Grid& b) {
    if (!a.same_as(b)) throw Error("grid mismatch");
}

// Fills face nodes of bounded axes by one-sided extrapolation along the face normal.
void extrapolate_faces(ScalarField& r) {
    const Grid& g = r.grid();
    const int n = g.dim();
    for (int a = 0; a < n; ++a) {
        if (g.periodic(a)) continue;
        for (std::size_t k = 0; k < g.size(); ++k) {
            Index idx = g.unravel(k);
            bool on_a = idx[a] == 0 || idx[a] == g.nodes(a) - 1;
            if (!on_a) continue;
            bool later = false;
            for (int b = a + 1; b < n; ++b)
                if (!g.periodic(b) && (idx[b] == 0 || idx[b] == g.nodes(b) - 1)) later = true;
            if (later) continue;
            int dir = idx[a] == 0 ? +1 : -1;
            auto at = [&](int s) {
                Index j = idx;
                j[a] += dir * s;
                return r(g.ravel(j));
            };
            r(k) = g.nodes(a) >= 5 ? 3.0 * at(1) - 3.0 * at(2) + at(3) : 2.0 * at(1) - at(2);
        }
    }
}

}  // namespace

Eigen::SparseMatrix<double> assemble_divergence_operator(const TensorField& a, std::vector<bool>* interior) {
    const Grid& g = a.grid();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(g.size() * 20);
    if (interior) interior->assign(g.size(), false);
    std::vector<Entry> row;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!stencil(a, k, row)) continue;
        if (interior) (*interior)[k] = true;
        for (auto [c, w] : row) trips.emplace_back(static_cast<int>(k), static_cast<int>(c), w);
    }
    Eigen::SparseMatrix<double> m(static_cast<int>(g.size()), static_cast<int>(g.size()));
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

ScalarField discrete_divergence(const VectorField& f) {
    const Grid& g = f.grid();
    ScalarField out(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        double s = 0.0;
        bool ok = true;
        for (int i = 0; i < g.dim() && ok; ++i) {
            long kp = g.neighbor(k, i, +1), km = g.neighbor(k, i, -1);
            if (kp < 0 || km < 0) {
                ok = false;
                break;
            }
            s += (f(static_cast<std::size_t>(kp), i) - f(static_cast<std::size_t>(km), i)) / (2.0 * g.h());
        }
        out(k) = ok ? s : 0.0;
    }
    return out;
}

ScalarField apply_divergence_form_any(const TensorField& a, const ScalarField& u, const VectorField* f) {
    check_same_grid(a.grid(), u.grid());
    if (f) check_same_grid(a.grid(), f->grid());
    const Grid& g = u.grid();
    std::vector<bool> interior;
    Eigen::SparseMatrix<double> m = assemble_divergence_operator(a, &interior);
    Eigen::Map<const Eigen::VectorXd> uv(u.values().data(), static_cast<Eigen::Index>(g.size()));
    Eigen::VectorXd r = m * uv;
    ScalarField out(g, std::vector<double>(r.data(), r.data() + r.size()));
    if (f) {
        ScalarField d = discrete_divergence(*f);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (interior[k]) out(k) += d(k);
    }
    extrapolate_faces(out);
    return out;
}

ScalarField apply_divergence_form(const TensorField& a, const ScalarField& u, const VectorField* f) {
    if (u.grid().halfspace()) throw Error("half-space grid passed to apply_divergence_form; extend the problem first");
    return apply_divergence_form_any(a, u, f);
}

TensorField identity_coefficients(const Grid& g) {
    return TensorField::sample(g, [n = g.dim()](const Point&, int c) { return c / n == c % n ? 1.0 : 0.0; });
}

VectorField gradient(const ScalarField& u) {
    const Grid& g = u.grid();
    VectorField out(g);
    const double h = g.h();
    for (std::size_t k = 0; k < g.size(); ++k) {
        for (int i = 0; i < g.dim(); ++i) {
            long kp = g.neighbor(k, i, +1), km = g.neighbor(k, i, -1);
            double v;
            if (kp >= 0 && km >= 0) {
                v = (u(static_cast<std::size_t>(kp)) - u(static_cast<std::size_t>(km))) / (2 * h);
            } else if (km < 0) {
                long k2 = g.neighbor(static_cast<std::size_t>(kp), i, +1);
                v = (-3 * u(k) + 4 * u(static_cast<std::size_t>(kp)) - u(static_cast<std::size_t>(k2))) / (2 * h);
            } else {
                long k2 = g.neighbor(static_cast<std::size_t>(km), i, -1);
                v = (3 * u(k) - 4 * u(static_cast<std::size_t>(km)) + u(static_cast<std::size_t>(k2))) / (2 * h);
            }
            out(k, i) = v;
        }
    }
    return out;
}

namespace {

double image_offset(const Grid& g, int axis, double d) {
    if (!g.periodic(axis)) return d;
    double p = g.extent(axis);
    d = std::fmod(d, p);
    if (d > 0.5 * p) d -= p;
    if (d < -0.5 * p) d += p;
    return d;
}

// Quadrature weight of each node for the ball |x - x0| < r.
std::vector<std::pair<std::size_t, double>> ball_weights(const Grid& g, const Point& x0, double r) {
    const int n = g.dim();
    const double h = g.h();
    for (int a = 0; a < n; ++a) {
        if (g.periodic(a)) {
            if (2 * r > g.extent(a)) throw Error("cylinder exits sampled region");
        } else if (x0[a] - r < g.origin(a) - 1e-12 || x0[a] + r > g.origin(a) + g.extent(a) + 1e-12) {
            throw Error("cylinder exits sampled region");
        }
    }
    const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(n));
    constexpr int sub = 8;
    std::vector<std::pair<std::size_t, double>> w;
    for (std::size_t k = 0; k < g.size(); ++k) {
        Index idx = g.unravel(k);
        Point d{0, 0, 0};
        double dist2 = 0.0;
        for (int a = 0; a < n; ++a) {
            d[a] = image_offset(g, a, g.coord(a, idx[a]) - x0[a]);
            dist2 += d[a] * d[a];
        }
        double dist = std::sqrt(dist2);
        if (dist > r + half_diag) continue;
        double frac;
        if (dist < r - half_diag) {
            frac = 1.0;
        } else {
            int inside = 0, total = 0;
            int m3 = n == 3 ? sub : 1;
            for (int i0 = 0; i0 < sub; ++i0)
                for (int i1 = 0; i1 < sub; ++i1)
                    for (int i2 = 0; i2 < m3; ++i2) {
                        double s0 = d[0] + h * ((i0 + 0.5) / sub - 0.5);
                        double s1 = d[1] + h * ((i1 + 0.5) / sub - 0.5);
                        double s2 = n == 3 ? d[2] + h * ((i2 + 0.5) / sub - 0.5) : 0.0;
                        inside += (s0 * s0 + s1 * s1 + s2 * s2 < r * r);
                        ++total;
                    }
            frac = static_cast<double>(inside) / total;
        }
        if (frac > 0) w.emplace_back(k, frac * std::pow(h, n));
    }
    return w;
}

}  // namespace

double cylinder_norm(const ScalarSeries& u, const Cylinder& q, NormKind kind) {
    return space_time_norm(u, q.t0 - q.r * q.r, q.t0, q.x0, q.r, kind);
}

double space_time_norm(const ScalarSeries& u, double ta, double tb, const Point& x0, double r, NormKind kind) {
    if (u.size() == 0) throw Error("cylinder exits sampled region");
    if (!(r > 0)) throw Error("cylinder radius must be positive");
    if (!(tb > ta)) throw Error("empty time interval");
    const Cylinder q{tb, x0, r};
    const double eps = 1e-12 * std::max(1.0, std::abs(tb));
    if (ta < u.times.front() - eps || tb > u.times.back() + eps) throw Error("cylinder exits sampled region");
    const Grid& g = u.frames.front().grid();
    auto w = ball_weights(g, q.x0, q.r);

    if (kind == NormKind::Linf) {
        double m = 0.0;
        for (std::size_t s = 0; s < u.size(); ++s) {
            if (u.times[s] < ta - eps || u.times[s] > tb + eps) continue;
            for (auto [k, wk] : w) {
                Point x = g.position(k);
                double d2 = 0;
                for (int a = 0; a < g.dim(); ++a) {
                    double d = image_offset(g, a, x[a] - q.x0[a]);
                    d2 += d * d;
                }
                if (d2 < q.r * q.r) m = std::max(m, std::abs(u.frames[s](k)));
            }
        }
        return m;
    }

    std::vector<double> spatial(u.size());
    for (std::size_t s = 0; s < u.size(); ++s) {
        double acc = 0.0;
        for (auto [k, wk] : w) acc += wk * u.frames[s](k) * u.frames[s](k);
        spatial[s] = acc;
    }
    // Integrate the piecewise-linear interpolant of `spatial` over [ta, tb].
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < u.size(); ++s) {
        double t0 = u.times[s], t1 = u.times[s + 1];
        double lo = std::max(t0, ta), hi = std::min(t1, tb);
        if (hi <= lo) continue;
        auto lerp = [&](double t) { return spatial[s] + (spatial[s + 1] - spatial[s]) * (t - t0) / (t1 - t0); };
        total += 0.5 * (lerp(lo) + lerp(hi)) * (hi - lo);
    }
    return std::sqrt(std::max(0.0, total));
}

ScalarSeries component_series(const VectorSeries& v, int c) {
    ScalarSeries out;
    out.kind = v.kind;
    for (std::size_t s = 0; s < v.size(); ++s) {
        ScalarField f(v.frames[s].grid());
        for (std::size_t k = 0; k < f.size(); ++k) f(k) = v.frames[s](k, c);
        out.push(v.times[s], std::move(f));
    }
    return out;
}

ScalarSeries magnitude_series(const VectorSeries& v) {
    ScalarSeries out;
    out.kind = v.kind;
    for (std::size_t s = 0; s < v.size(); ++s) {
        const VectorField& fv = v.frames[s];
        ScalarField f(fv.grid());
        for (std::size_t k = 0; k < f.size(); ++k) {
            double acc = 0;
            for (int c = 0; c < fv.components(); ++c) acc += fv(k, c) * fv(k, c);
            f(k) = std::sqrt(acc);
        }
        out.push(v.times[s], std::move(f));
    }
    return out;
}

// ---- IO --------------------------------------------------------------------

namespace {

nlohmann::json grid_header(const Grid& g, int comps) {
    nlohmann::json j;
    j["n"] = g.dim();
    std::vector<int> shape;
    std::vector<double> origin, extent;
    std::vector<bool> periodic;
    for (int a = 0; a < g.dim(); ++a) {
        shape.push_back(g.nodes(a));
        origin.push_back(g.origin(a));
        extent.push_back(g.extent(a));
        periodic.push_back(g.periodic(a));
    }
    j["shape"] = shape;
    j["origin"] = origin;
    j["h"] = g.h();
    j["halfspace"] = g.halfspace();
    j["components"] = comps;
    j["periodic"] = periodic;
    return j;
}

struct Header {
    Grid grid;
    int components = 0;
};

Header parse_header(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw Error(std::string("malformed header: ") + e.what());
    }
    try {
        int n = j.at("n").get<int>();
        auto shape = j.at("shape").get<std::vector<int>>();
        auto origin = j.at("origin").get<std::vector<double>>();
        double h = j.at("h").get<double>();
        bool half = j.at("halfspace").get<bool>();
        int comps = j.at("components").get<int>();
        std::vector<bool> periodic(static_cast<std::size_t>(n), false);
        if (j.contains("periodic")) periodic = j["periodic"].get<std::vector<bool>>();
        if (static_cast<int>(shape.size()) != n || static_cast<int>(origin.size()) != n ||
            static_cast<int>(periodic.size()) != n)
            throw Error("malformed header: axis arrays do not match n");
        Point o{0, 0, 0}, e{0, 0, 0};
        std::array<bool, 3> per{false, false, false};
        for (int a = 0; a < n; ++a) {
            o[a] = origin[static_cast<std::size_t>(a)];
            per[a] = periodic[static_cast<std::size_t>(a)];
            int cells = shape[static_cast<std::size_t>(a)] - (per[a] ? 0 : 1);
            e[a] = cells * h;
        }
        return {Grid::make(n, o, e, h, half, per), comps};
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string("malformed header: ") + e.what());
    }
}

}  // namespace

template <Rank R>
void write_field(const std::filesystem::path& path, const GridField<R>& f) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << grid_header(f.grid(), f.components()).dump() << '\n';
    char buf[40];
    for (std::size_t k = 0; k < f.size(); ++k) {
        for (int c = 0; c < f.components(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", f(k, c));
            if (c) os << ' ';
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw Error("write failed for " + path.string());
}

int field_file_components(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw Error("malformed header: empty file");
    return parse_header(line).components;
}

template <Rank R>
GridField<R> read_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw Error("malformed header: empty file");
    Header hd = parse_header(line);
    if (hd.components != component_count(R, hd.grid.dim())) throw Error("component-count mismatch");
    GridField<R> f(hd.grid);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!std::getline(is, line)) throw Error("truncated field data in " + path.string());
        const char* p = line.c_str();
        for (int c = 0; c < f.components(); ++c) {
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p) throw Error("component-count mismatch");
            f(k, c) = v;
            p = end;
        }
        while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
        if (*p != '\0') throw Error("component-count mismatch");
    }
    return f;
}

namespace {
template <class F>
constexpr Rank rank_of() {
    return F::rank;
}
}  // namespace

template <class F>
void write_series(const std::filesystem::path& dir, const TimeSeries<F>& s) {
    std::filesystem::create_directories(dir);
    nlohmann::json idx;
    idx["times"] = s.times;
    idx["kind"] = s.kind == NodeKind::Uniform ? "uniform" : s.kind == NodeKind::Chebyshev ? "chebyshev" : "graded";
    std::vector<std::string> files;
    char name[32];
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::snprintf(name, sizeof name, "frame_%04zu.field", k);
        files.emplace_back(name);
        write_field(dir / name, s.frames[k]);
    }
    idx["frames"] = files;
    std::ofstream os(dir / "index.json");
    os << idx.dump(2) << '\n';
}

template <class F>
TimeSeries<F> read_series(const std::filesystem::path& dir) {
    std::ifstream is(dir / "index.json");
    if (!is) throw Error("missing series index in " + dir.string());
    nlohmann::json idx;
    try {
        is >> idx;
    } catch (const std::exception& e) {
        throw Error(std::string("malformed series index: ") + e.what());
    }
    TimeSeries<F> s;
    auto times = idx.at("times").get<std::vector<double>>();
    auto files = idx.at("frames").get<std::vector<std::string>>();
    std::string kind = idx.value("kind", "uniform");
    s.kind = kind == "chebyshev" ? NodeKind::Chebyshev : kind == "graded" ? NodeKind::Graded : NodeKind::Uniform;
    if (times.size() != files.size()) throw Error("malformed series index: times and frames differ in length");
    for (std::size_t k = 0; k < times.size(); ++k) s.push(times[k], read_field<rank_of<F>()>(dir / files[k]));
    return s;
}

template void write_field(const std::filesystem::path&, const ScalarField&);
template void write_field(const std::filesystem::path&, const VectorField&);
template void write_field(const std::filesystem::path&, const TensorField&);
template ScalarField read_field<Rank::Scalar>(const std::filesystem::path&);
template VectorField read_field<Rank::Vector>(const std::filesystem::path&);
template TensorField read_field<Rank::Tensor>(const std::filesystem::path&);
template void write_series(const std::filesystem::path&, const ScalarSeries&);
template void write_series(const std::filesystem::path&, const VectorSeries&);
template ScalarSeries read_series(const std::filesystem::path&);
template VectorSeries read_series(const std::filesystem::path&);

}  // namespace lab
