#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "core.hpp"
#include "format.hpp"
#include "scene.hpp"

namespace slp {

/// P(y) = (a/2)|y - x|^2 + t
struct Paraboloid {
    Vec center;
    double opening = 1.0;
    double offset = 0.0;

    double operator()(const Vec& y) const { return 0.5 * opening * (y - center).squaredNorm() + offset; }
};

inline double eval_paraboloid(const Paraboloid& p, const Vec& y) { return p(y); }

inline void require_opening(double a)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw Error("paraboloid opening must be positive and finite");
}

/// t* = max_z z_{n+1} - (a/2)|z' - x|^2 over the samples.
inline double touching_offset(const ClosedSetSample& g, double a, const Vec& x)
{
    require_nonempty(g);
    require_opening(a);
    if (x.size() != g.n())
        throw Error("touching_offset: center has wrong dimension");
    return g.height_index().best(as_span(x), a).value;
}

/// Offsets closer than this to t* count as ties.
inline double tie_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

/// Contact samples of the touching paraboloid with center x, within a band of
/// `tol` below it. Without tol the band is a rho^2/2 + 2 rho.
inline std::vector<std::size_t> contact_indices(const ClosedSetSample& g, double a, const Vec& x,
                                                std::optional<double> tol = std::nullopt)
{
    const double t = touching_offset(g, a, x);
    const double band = tol ? *tol : 0.5 * a * g.rho() * g.rho() + 2.0 * g.rho();
    if (band < 0.0)
        throw Error("contact_points: tol must be non-negative");
    return g.height_index().collect(as_span(x), a, t - std::max(band, tie_tolerance(t)));
}

inline std::vector<Vec> contact_points(const ClosedSetSample& g, double a, const Vec& x,
                                       std::optional<double> tol = std::nullopt)
{
    std::vector<Vec> out;
    for (std::size_t i : contact_indices(g, a, x, tol))
        out.push_back(g.points().point(i));
    return out;
}

/// Upward unit normal of the paraboloid graph at z.
inline Vec contact_normal(double a, const Vec& x, std::span<const double> z)
{
    const auto n = x.size();
    Vec eta(n + 1);
    for (Eigen::Index i = 0; i < n; ++i)
        eta[i] = -a * (z[static_cast<std::size_t>(i)] - x[i]);
    eta[n] = 1.0;
    return eta / eta.norm();
}
inline Vec contact_normal(double a, const Vec& x, const Vec& z) { return contact_normal(a, x, as_span(z)); }

/// x = w' + eta' / (a eta_{n+1})
inline Vec vertex_map(double a, const Vec& w, const Vec& eta)
{
    const auto n = w.size() - 1;
    if (!(eta[n] > 0.0))
        throw Error("vertex_map: normal must point upward");
    require_opening(a);
    return w.head(n) + eta.head(n) / (a * eta[n]);
}

// ---------------------------------------------------------------------------
// Center sets

/// Centers of a contact-set computation. Lattice sets are enumerated in
/// lexicographic order.
struct CenterGrid {
    int n = 2;
    double spacing = 0.0;  ///< 0 for arbitrary lists
    std::vector<Vec> centers;

    /// Lattice points k * spacing inside the closed ball B(c, radius).
    static CenterGrid ball(int n, double spacing, double radius, const Vec& c)
    {
        if (!(spacing > 0.0) || !(radius >= 0.0))
            throw Error("center grid: spacing must be positive and radius non-negative");
        CenterGrid grid;
        grid.n = n;
        grid.spacing = spacing;
        std::vector<std::int64_t> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n)), k;
        for (int d = 0; d < n; ++d) {
            lo[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::ceil((c[d] - radius) / spacing - 1e-9));
            hi[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::floor((c[d] + radius) / spacing + 1e-9));
            if (lo[static_cast<std::size_t>(d)] > hi[static_cast<std::size_t>(d)])
                return grid;
        }
        k = lo;
        const double r2 = radius * radius * (1.0 + 1e-12);
        Vec x(n);
        while (true) {
            for (int d = 0; d < n; ++d)
                x[d] = static_cast<double>(k[static_cast<std::size_t>(d)]) * spacing;
            if ((x - c).squaredNorm() <= r2)
                grid.centers.push_back(x);
            int d = n - 1;
            while (d >= 0 && ++k[static_cast<std::size_t>(d)] > hi[static_cast<std::size_t>(d)]) {
                k[static_cast<std::size_t>(d)] = lo[static_cast<std::size_t>(d)];
                --d;
            }
            if (d < 0)
                break;
        }
        return grid;
    }
    static CenterGrid ball(int n, double spacing, double radius = 1.0) { return ball(n, spacing, radius, Vec::Zero(n)); }

    static CenterGrid list(int n, std::vector<Vec> pts)
    {
        CenterGrid grid;
        grid.n = n;
        grid.centers = std::move(pts);
        for (const Vec& x : grid.centers)
            if (x.size() != n)
                throw Error("center grid: center has wrong dimension");
        return grid;
    }
};

// ---------------------------------------------------------------------------
// Upper envelopes of equal-opening parabolas

namespace detail {

/// Appends the upper envelope of max_i v_i - (a/2)(q - s_i)^2 over sources
/// (s_i, v_i), s ascending, to the piece arrays: source position, height and
/// the abscissa where it takes over. Entries before pos.size() on entry are
/// left alone. Sources with v = -inf are ignored.
inline void append_envelope(const double* s, const double* v, std::size_t count, double a, std::vector<double>& pos,
                            std::vector<double>& val, std::vector<double>& from)
{
    const std::size_t base = pos.size();
    auto meet = [a](double s1, double v1, double s2, double v2) { return (v1 - v2) / (a * (s2 - s1)) + 0.5 * (s1 + s2); };
    auto pop = [&] {
        pos.pop_back();
        val.pop_back();
        from.pop_back();
    };
    for (std::size_t j = 0; j < count; ++j) {
        if (v[j] == -kInf)
            continue;
        if (pos.size() > base && pos.back() == s[j]) {
            if (v[j] <= val.back())
                continue;
            pop();
        }
        // the top piece survives when the new source takes over right of
        // where the top began: meet > from, cross-multiplied since s[j] > pos
        while (pos.size() > base &&
               !(val.back() - v[j] > a * (s[j] - pos.back()) * (from.back() - 0.5 * (pos.back() + s[j]))))
            pop();
        from.push_back(pos.size() > base ? meet(pos.back(), val.back(), s[j], v[j]) : -kInf);
        pos.push_back(s[j]);
        val.push_back(v[j]);
    }
}

/// max_i v_i - (a/2)(q - s_i)^2 over sources (s_i, v_i), as a piecewise
/// winner table. Sources with v = -inf are ignored.
class Envelope1D {
public:
    Envelope1D() = default;

    /// `s` must be sorted ascending.
    Envelope1D(const std::vector<double>& s, const std::vector<double>& v, double a) : a_(a)
    {
        append_envelope(s.data(), v.data(), s.size(), a, pos_, val_, from_);
    }

    bool empty() const { return pos_.empty(); }

    double operator()(double q) const
    {
        if (pos_.empty())
            return -kInf;
        const auto it = std::upper_bound(from_.begin(), from_.end(), q);
        const auto k = static_cast<std::size_t>(it - from_.begin()) - 1;
        return value(k, q);
    }

    /// Evaluates at ascending queries.
    void eval_sorted(const std::vector<double>& q, double* out) const
    {
        std::size_t k = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (pos_.empty()) {
                out[i] = -kInf;
                continue;
            }
            while (k + 1 < from_.size() && from_[k + 1] <= q[i])
                ++k;
            out[i] = value(k, q[i]);
        }
    }

private:
    double value(std::size_t k, double q) const
    {
        const double e = q - pos_[k];
        return val_[k] - 0.5 * a_ * e * e;
    }

    double a_ = 1.0;
    std::vector<double> pos_, val_, from_;
};

struct Source {
    std::vector<double> x;  // horizontal coordinates (n of them)
    double v;
};

/// Dense field over the product lattice axes[0] x ... x axes[n-1]
/// (lexicographic, last axis fastest), for sources sorted by nothing in particular.
inline std::vector<double> envelope_field(std::vector<Source> src, const std::vector<std::vector<double>>& axes, double a,
                                          unsigned threads)
{
    const auto n = axes.size();
    std::size_t cells = 1;
    for (const auto& ax : axes)
        cells *= ax.size();
    std::vector<double> out(cells, -kInf);
    if (src.empty() || cells == 0)
        return out;
    const std::size_t last = n - 1;

    if (n == 1) {
        std::sort(src.begin(), src.end(), [](const Source& p, const Source& q) { return p.x[0] < q.x[0]; });
        std::vector<double> s, v;
        for (const auto& e : src) {
            s.push_back(e.x[0]);
            v.push_back(e.v);
        }
        Envelope1D(s, v, a).eval_sorted(axes[0], out.data());
        return out;
    }

    // group by the last coordinate
    std::sort(src.begin(), src.end(), [last](const Source& p, const Source& q) {
        if (p.x[last] != q.x[last])
            return p.x[last] < q.x[last];
        return p.x < q.x;
    });
    std::vector<double> group_pos;
    std::vector<std::size_t> group_begin;
    for (std::size_t i = 0; i < src.size(); ++i)
        if (i == 0 || src[i].x[last] != src[i - 1].x[last]) {
            group_pos.push_back(src[i].x[last]);
            group_begin.push_back(i);
        }
    group_begin.push_back(src.size());
    const std::size_t G = group_pos.size();
    const std::size_t inner = cells / axes[last].size();
    const std::vector<double>& qlast = axes[last];

    if (n == 2) {
        // row envelopes packed back to back, queried per column
        std::vector<double> xs(src.size()), vs(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
            xs[i] = src[i].x[0];
            vs[i] = src[i].v;
        }
        std::vector<double> pos, val, from;
        std::vector<std::size_t> row_begin{0};
        for (std::size_t g = 0; g < G; ++g) {
            append_envelope(xs.data() + group_begin[g], vs.data() + group_begin[g], group_begin[g + 1] - group_begin[g], a,
                            pos, val, from);
            row_begin.push_back(pos.size());
        }
        const std::size_t M = qlast.size();
        parallel_for(inner, [&](std::size_t k) {
            const double q = axes[0][k];
            std::vector<double> col(G);
            for (std::size_t g = 0; g < G; ++g) {
                std::size_t j = row_begin[g];
                const std::size_t end = row_begin[g + 1];
                if (end - j > 1)
                    j = static_cast<std::size_t>(std::upper_bound(from.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                                                                  from.begin() + static_cast<std::ptrdiff_t>(end), q) -
                                                 from.begin()) - 1;
                if (j == end) {
                    col[g] = -kInf;
                    continue;
                }
                const double e = q - pos[j];
                col[g] = val[j] - 0.5 * a * e * e;
            }
            double* dst = out.data() + k * M;
            if (G <= 4 * M) {
                Envelope1D(group_pos, col, a).eval_sorted(qlast, dst);
                return;
            }
            // Every 8th row gives values lb_j attained by real sources. A row
            // with col <= T(s) = min_j lb_j + (a/2)(s - y_j)^2 stays below lb_j
            // at every query, so only the remaining rows need the full pass.
            std::vector<double> ss, sv;
            for (std::size_t g = 0; g < G; g += 8) {
                ss.push_back(group_pos[g]);
                sv.push_back(col[g]);
            }
            std::vector<double> lb(M);
            Envelope1D(ss, sv, a).eval_sorted(qlast, lb.data());
            std::vector<double> neg(M);
            for (std::size_t j = 0; j < M; ++j) {
                if (lb[j] == -kInf) {
                    Envelope1D(group_pos, col, a).eval_sorted(qlast, dst);
                    return;
                }
                neg[j] = -lb[j];
            }
            std::vector<double> minus_T(G);
            Envelope1D(qlast, neg, a).eval_sorted(group_pos, minus_T.data());
            ss.clear();
            sv.clear();
            for (std::size_t g = 0; g < G; ++g)
                if (col[g] > -minus_T[g] - 1e-9 * (1.0 + std::abs(minus_T[g]))) {
                    ss.push_back(group_pos[g]);
                    sv.push_back(col[g]);
                }
            Envelope1D(ss, sv, a).eval_sorted(qlast, dst);
            for (std::size_t j = 0; j < M; ++j)
                dst[j] = std::max(dst[j], lb[j]);
        }, threads);
        return out;
    }

    std::vector<std::vector<double>> sub_axes(axes.begin(), axes.end() - 1);
    std::vector<std::vector<double>> sub(G);
    for (std::size_t g = 0; g < G; ++g) {
        std::vector<Source> part;
        for (std::size_t i = group_begin[g]; i < group_begin[g + 1]; ++i)
            part.push_back({std::vector<double>(src[i].x.begin(), src[i].x.end() - 1), src[i].v});
        sub[g] = envelope_field(std::move(part), sub_axes, a, threads);
    }
    parallel_for(inner, [&](std::size_t k) {
        std::vector<double> col(G);
        for (std::size_t g = 0; g < G; ++g)
            col[g] = sub[g][k];
        Envelope1D(group_pos, col, a).eval_sorted(qlast, out.data() + k * qlast.size());
    }, threads);
    return out;
}

} // namespace detail

struct OffsetField {
    std::vector<double> offsets;  ///< one per center, in center order
    bool fast_path = true;        ///< false when the centers were not a lattice and brute force ran
};

/// touching_offset for every center. Centers whose coordinates span a product
/// lattice of moderate size go through a separable upper-envelope transform
/// that uses the exact sample positions; other center lists fall back to
/// per-center branch-and-bound with fast_path = false.
inline OffsetField touching_offset_field(const ClosedSetSample& g, double a, const CenterGrid& grid,
                                         unsigned threads = default_threads())
{
    require_nonempty(g);
    require_opening(a);
    const int n = g.n();
    if (grid.n != n)
        throw Error("touching_offset_field: grid dimension differs from the scene");
    OffsetField res;
    res.offsets.assign(grid.centers.size(), -kInf);
    if (grid.centers.empty())
        return res;

    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    std::size_t cells = 1;
    for (int d = 0; d < n; ++d) {
        auto& ax = axes[static_cast<std::size_t>(d)];
        for (const Vec& x : grid.centers)
            ax.push_back(x[d]);
        std::sort(ax.begin(), ax.end());
        ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
        cells = cells > (std::size_t{1} << 40) / ax.size() ? (std::size_t{1} << 40) : cells * ax.size();
    }
    const std::size_t budget = 64 * grid.centers.size() + 64;
    if (cells > budget) {
        res.fast_path = false;
        const auto& index = g.height_index();
        parallel_for(grid.centers.size(), [&](std::size_t i) {
            res.offsets[i] = index.best(as_span(grid.centers[i]), a).value;
        }, threads);
        return res;
    }

    std::vector<detail::Source> src;
    src.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto z = g[i];
        src.push_back({std::vector<double>(z.begin(), z.end() - 1), z.back()});
    }
    const auto field = detail::envelope_field(std::move(src), axes, a, threads);
    for (std::size_t c = 0; c < grid.centers.size(); ++c) {
        std::size_t flat = 0;
        for (int d = 0; d < n; ++d) {
            const auto& ax = axes[static_cast<std::size_t>(d)];
            const auto k = static_cast<std::size_t>(std::lower_bound(ax.begin(), ax.end(), grid.centers[c][d]) - ax.begin());
            flat = flat * ax.size() + k;
        }
        res.offsets[c] = field[flat];
    }
    return res;
}

// ---------------------------------------------------------------------------
// Contact sets

struct ContactPair {
    Vec z;    ///< contact point (ambient)
    Vec eta;  ///< unit normal, eta_{n+1} > 0
    Vec x;    ///< center
    double a = 1.0;
    std::size_t sample = 0;  ///< index of z in the scene
};

struct ContactSet {
    double a = 1.0;
    double rho = 0.0;
    CenterGrid grid;
    std::vector<ContactPair> pairs;
    bool boundary_touch = false;
    bool fast_path = true;

    bool empty() const { return pairs.empty(); }
};

/// A_a(Gamma; C): every sample on a touching paraboloid (exact ties) for
/// every center, merged when |z - z~| <= rho and the normals agree to 2 a rho.
inline ContactSet contact_set(const ClosedSetSample& g, double a, const CenterGrid& grid, unsigned threads = default_threads())
{
    ContactSet res;
    res.a = a;
    res.rho = g.rho();
    res.grid = grid;
    const auto field = touching_offset_field(g, a, grid, threads);
    res.fast_path = field.fast_path;

    const auto& index = g.height_index();
    std::vector<std::vector<std::size_t>> hits(grid.centers.size());
    parallel_for(grid.centers.size(), [&](std::size_t c) {
        const double t = field.offsets[c];
        hits[c] = index.collect(as_span(grid.centers[c]), a, t - tie_tolerance(t));
    }, threads);

    const int D = g.ambient_dim();
    const double zcell = g.rho() / std::sqrt(static_cast<double>(D));
    const double ecell = 2.0 * a * g.rho() / std::sqrt(static_cast<double>(D));
    std::set<std::vector<std::int64_t>> seen;
    std::vector<std::int64_t> key(static_cast<std::size_t>(2 * D));
    const double edge = 1.0 - 2.0 * g.rho();
    for (std::size_t c = 0; c < grid.centers.size(); ++c) {
        const Vec& x = grid.centers[c];
        for (std::size_t i : hits[c]) {
            auto z = g[i];
            Vec eta = contact_normal(a, x, z);
            for (int d = 0; d < D; ++d) {
                key[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::floor(z[static_cast<std::size_t>(d)] / zcell + 1e-9));
                key[static_cast<std::size_t>(D + d)] = static_cast<std::int64_t>(std::floor(eta[d] / ecell + 1e-9));
            }
            if (!seen.insert(key).second)
                continue;
            if (std::sqrt(horizontal_norm2(z)) >= edge)
                res.boundary_touch = true;
            res.pairs.push_back({g.points().point(i), std::move(eta), x, a, i});
        }
    }
    return res;
}

/// A'_a(Gamma; C): contact points projected to R^n, merged at resolution rho.
inline PointSet project_contact_set(const ContactSet& A)
{
    if (A.pairs.empty())
        return PointSet(A.grid.n);
    const auto n = A.pairs.front().x.size();
    PointSet out(static_cast<int>(n));
    const double cell = A.rho > 0.0 ? A.rho / std::sqrt(static_cast<double>(n)) : 0.0;
    std::set<std::vector<std::int64_t>> seen;
    std::set<std::vector<double>> exact;
    for (const auto& p : A.pairs) {
        const Vec foot = p.z.head(n);
        if (cell > 0.0) {
            std::vector<std::int64_t> key(n);
            for (std::size_t d = 0; d < n; ++d)
                key[d] = static_cast<std::int64_t>(std::floor(foot[static_cast<Eigen::Index>(d)] / cell + 1e-9));
            if (!seen.insert(key).second)
                continue;
        } else if (!exact.insert(std::vector<double>(foot.data(), foot.data() + n)).second) {
            continue;
        }
        out.push_back(foot);
    }
    return out;
}

/// Columns z1..zD, eta1..etaD, x1..xn, a.
inline void write_contact_set(std::ostream& os, const ContactSet& A)
{
    const int n = A.grid.n;
    const int D = n + 1;
    for (int d = 1; d <= D; ++d)
        os << "z" << d << ",";
    for (int d = 1; d <= D; ++d)
        os << "eta" << d << ",";
    for (int d = 1; d <= n; ++d)
        os << "x" << d << ",";
    os << "a\n";
    for (const auto& p : A.pairs) {
        for (int d = 0; d < D; ++d)
            os << format_real(p.z[d]) << ",";
        for (int d = 0; d < D; ++d)
            os << format_real(p.eta[d]) << ",";
        for (int d = 0; d < n; ++d)
            os << format_real(p.x[d]) << ",";
        os << format_real(p.a) << "\n";
    }
}

} // namespace slp
