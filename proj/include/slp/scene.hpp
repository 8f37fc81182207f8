#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "format.hpp"
#include "height_index.hpp"
#include "kdtree.hpp"

namespace slp {

/// Analytic side information attached to generated scenes. Every member may be
/// empty; consumers check before calling.
struct SceneOracle {
    /// Exact distance to the (uncut) analytic set.
    std::function<double(std::span<const double>)> distance;
    /// Mean curvature vector H(z) at a point of the set.
    std::function<Vec(std::span<const double>)> mean_curvature;
    /// Draws a point of the set inside the cylinder (nullopt when the draw
    /// lands outside it).
    std::function<std::optional<Vec>(std::mt19937_64&)> random_point;
};

/// Finite rho-net of a relatively closed subset of the cylinder U^n(0,1) x R.
class ClosedSetSample {
public:
    ClosedSetSample() = default;

    ClosedSetSample(std::string id, int intrinsic_dim, double rho, double mc_bound, PointSet points,
                    std::shared_ptr<const SceneOracle> oracle = nullptr)
        : id_(std::move(id)), intrinsic_dim_(intrinsic_dim), rho_(rho), mc_bound_(mc_bound),
          oracle_(std::move(oracle))
    {
        if (points.dim() < 2)
            throw Error("ClosedSetSample: ambient dimension must be at least 2");
        if (!(rho > 0.0))
            throw Error("ClosedSetSample: resolution must be positive");
        if (intrinsic_dim < 1 || intrinsic_dim > points.dim() - 1)
            throw Error("ClosedSetSample: intrinsic dimension must lie in [1, n]");
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto p = points[i];
            if (!(horizontal_norm2(p) < 1.0))
                throw Error("ClosedSetSample: point outside the open cylinder");
            if (!std::isfinite(height(p)))
                throw Error("ClosedSetSample: non-finite height");
            height_bound_ = std::max(height_bound_, std::abs(height(p)));
        }
        data_ = std::make_shared<Data>(std::move(points));
    }

    const std::string& id() const { return id_; }
    int ambient_dim() const { return data_ ? data_->points.dim() : 0; }
    /// Horizontal dimension n (ambient is n+1).
    int n() const { return ambient_dim() - 1; }
    int intrinsic_dim() const { return intrinsic_dim_; }
    double rho() const { return rho_; }
    double height_bound() const { return height_bound_; }
    double mc_bound() const { return mc_bound_; }
    const SceneOracle* oracle() const { return oracle_.get(); }

    std::size_t size() const { return data_ ? data_->points.size() : 0; }
    bool empty() const { return size() == 0; }
    const PointSet& points() const { return data_->points; }
    std::span<const double> operator[](std::size_t i) const { return data_->points[i]; }

    const KdTree& tree() const { return data_->tree; }

    /// Horizontal index with per-node maximal height, built on first use.
    const HeightIndex& height_index() const
    {
        std::call_once(data_->height_once, [&] { data_->heights = std::make_unique<HeightIndex>(data_->points); });
        return *data_->heights;
    }

private:
    struct Data {
        explicit Data(PointSet p) : points(std::move(p)), tree(points) {}
        PointSet points;
        KdTree tree;
        mutable std::once_flag height_once;
        mutable std::unique_ptr<HeightIndex> heights;
    };

    std::string id_;
    int intrinsic_dim_ = 1;
    double rho_ = 1.0;
    double height_bound_ = 0.0;
    double mc_bound_ = 0.0;
    std::shared_ptr<const SceneOracle> oracle_;
    std::shared_ptr<const Data> data_;
};

inline void require_nonempty(const ClosedSetSample& g)
{
    if (g.empty())
        throw Error("closed set sample is empty");
}

/// delta_Gamma(p): minimum distance from p to the samples.
inline double distance(const ClosedSetSample& g, std::span<const double> p)
{
    require_nonempty(g);
    return std::sqrt(g.tree().nearest(p).dist2);
}
inline double distance(const ClosedSetSample& g, const Vec& p) { return distance(g, as_span(p)); }

/// All samples realizing the distance from p up to tol.
inline std::vector<Vec> nearest_points(const ClosedSetSample& g, const Vec& p, double tol)
{
    if (tol < 0.0)
        throw Error("nearest_points: tol must be non-negative");
    const double d = distance(g, p);
    const double reach = d + tol;
    std::vector<Vec> out;
    for (std::size_t i : g.tree().within(as_span(p), reach * reach * (1.0 + 1e-15)))
        if (std::sqrt(dist2(g[i], as_span(p))) <= reach)
            out.push_back(g.points().point(i));
    return out;
}

// ---------------------------------------------------------------------------
// Scene generators

enum class Generator { Plane, Graph, Sphere, CantorGraph, CurveR3, PointUnion };

enum class GraphKind {
    Corner,     ///< u(x) = shift - coef |x|
    Quadratic,  ///< u(x) = shift - (coef/2) |x|^2
    Bump,       ///< u(x) = shift + amplitude (exp(-|x|^2 / width^2) - 1)
    Scherk,     ///< u(x) = shift + lambda log(cos(x2/lambda) / cos(x1/lambda)), n = 2
};

struct SceneSpec {
    std::string id = "scene";
    Generator generator = Generator::Plane;
    int n = 2;               ///< horizontal dimension; ambient is n+1
    double rho = 1.0 / 64.0;

    // plane: z = slope * x1 + shift; graphs add `kind` and its coefficients
    double slope = 0.0;
    double shift = 0.0;
    GraphKind kind = GraphKind::Quadratic;
    double coef = 1.0;
    double amplitude = 0.01;
    double width = 0.5;
    double lambda = 1.0;

    // sphere (n = 1 gives a circle): full sphere of radius R about center
    double radius = 0.5;
    std::vector<double> center;  ///< ambient coordinates; empty = origin
    bool upper_cap_only = false;

    // cantor-primitive graph (n = 1)
    int depth = 8;

    // curve in R^3: horizontal circle of radius `radius` at height `shift`

    // point union
    std::vector<std::vector<double>> points;

    std::optional<int> intrinsic_dim;  ///< overrides the generator default
    std::optional<double> mc_bound;    ///< overrides the generator default
};

inline const char* generator_tag(Generator g)
{
    switch (g) {
    case Generator::Plane: return "plane";
    case Generator::Graph: return "graph-of-function";
    case Generator::Sphere: return "sphere-cap";
    case Generator::CantorGraph: return "cantor-primitive-graph";
    case Generator::CurveR3: return "curve-in-R3";
    case Generator::PointUnion: return "point-union";
    }
    return "?";
}

inline std::optional<Generator> generator_from_tag(std::string_view tag)
{
    for (Generator g : {Generator::Plane, Generator::Graph, Generator::Sphere, Generator::CantorGraph,
                        Generator::CurveR3, Generator::PointUnion})
        if (tag == generator_tag(g))
            return g;
    return std::nullopt;
}

inline const char* graph_kind_tag(GraphKind k)
{
    switch (k) {
    case GraphKind::Corner: return "corner";
    case GraphKind::Quadratic: return "quadratic";
    case GraphKind::Bump: return "bump";
    case GraphKind::Scherk: return "scherk";
    }
    return "?";
}

inline std::optional<GraphKind> graph_kind_from_tag(std::string_view tag)
{
    for (GraphKind k : {GraphKind::Corner, GraphKind::Quadratic, GraphKind::Bump, GraphKind::Scherk})
        if (tag == graph_kind_tag(k))
            return k;
    return std::nullopt;
}

/// Primitive of the depth-k piecewise-linear approximant of the ternary Cantor
/// function, F_k(t) = int_0^t c_k, for t in [0, 1]. F_k is C^1 and convex with
/// F_k(1) = 1/2.
inline double cantor_primitive(int depth, double t)
{
    t = std::clamp(t, 0.0, 1.0);
    if (depth <= 0)
        return 0.5 * t * t;
    if (t <= 1.0 / 3.0)
        return cantor_primitive(depth - 1, 3.0 * t) / 6.0;
    if (t <= 2.0 / 3.0)
        return 1.0 / 12.0 + 0.5 * (t - 1.0 / 3.0);
    return 1.0 / 12.0 + 1.0 / 6.0 + 0.5 * (t - 2.0 / 3.0) + cantor_primitive(depth - 1, 3.0 * t - 2.0) / 6.0;
}

/// Depth-k approximant of the Cantor function itself (the derivative of
/// cantor_primitive).
inline double cantor_function(int depth, double t)
{
    t = std::clamp(t, 0.0, 1.0);
    if (depth <= 0)
        return t;
    if (t <= 1.0 / 3.0)
        return 0.5 * cantor_function(depth - 1, 3.0 * t);
    if (t <= 2.0 / 3.0)
        return 0.5;
    return 0.5 + 0.5 * cantor_function(depth - 1, 3.0 * t - 2.0);
}

namespace detail {

/// Lattice points k*rho (k integer) of U^n(0,1), lexicographic order.
inline std::vector<Vec> disk_lattice(int n, double rho, double radius = 1.0, bool closed = false)
{
    const int K = static_cast<int>(std::ceil(radius / rho)) + 1;
    std::vector<Vec> out;
    std::vector<int> k(static_cast<std::size_t>(n), -K);
    Vec x(n);
    while (true) {
        double r2 = 0.0;
        for (int d = 0; d < n; ++d) {
            x[d] = k[static_cast<std::size_t>(d)] * rho;
            r2 += x[d] * x[d];
        }
        if (closed ? r2 <= radius * radius : r2 < radius * radius)
            out.push_back(x);
        int d = n - 1;
        while (d >= 0 && ++k[static_cast<std::size_t>(d)] > K) {
            k[static_cast<std::size_t>(d)] = -K;
            --d;
        }
        if (d < 0)
            break;
    }
    return out;
}

inline std::function<double(const Vec&)> graph_function(const SceneSpec& s)
{
    switch (s.kind) {
    case GraphKind::Corner:
        return [c = s.coef, t = s.shift](const Vec& x) { return t - c * x.norm(); };
    case GraphKind::Quadratic:
        return [c = s.coef, t = s.shift](const Vec& x) { return t - 0.5 * c * x.squaredNorm(); };
    case GraphKind::Bump:
        return [A = s.amplitude, w = s.width, t = s.shift](const Vec& x) {
            return t + A * (std::exp(-x.squaredNorm() / (w * w)) - 1.0);
        };
    case GraphKind::Scherk:
        return [l = s.lambda, t = s.shift](const Vec& x) {
            return t + l * std::log(std::cos(x[1] / l) / std::cos(x[0] / l));
        };
    }
    throw Error("unknown graph kind");
}

/// Mean curvature vector of the graph of u at x, by central differences:
/// H = div(grad u / W) * (-grad u, 1) / W.
inline Vec graph_mean_curvature(const std::function<double(const Vec&)>& u, const Vec& x)
{
    const int n = static_cast<int>(x.size());
    const double h = 1e-4;
    auto grad = [&](const Vec& y) {
        Vec g(n);
        for (int i = 0; i < n; ++i) {
            Vec a = y, b = y;
            a[i] += h;
            b[i] -= h;
            g[i] = (u(a) - u(b)) / (2 * h);
        }
        return g;
    };
    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const Vec ga = grad(a), gb = grad(b);
        div += (ga[i] / std::sqrt(1 + ga.squaredNorm()) - gb[i] / std::sqrt(1 + gb.squaredNorm())) / (2 * h);
    }
    const Vec g = grad(x);
    const double W = std::sqrt(1 + g.squaredNorm());
    Vec H(n + 1);
    H.head(n) = -g * div / W;
    H[n] = div / W;
    return H;
}

inline Vec lift(const Vec& x, double h)
{
    Vec z(x.size() + 1);
    z.head(x.size()) = x;
    z[x.size()] = h;
    return z;
}

inline Vec random_in_disk(int n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec x(n);
    do {
        for (int i = 0; i < n; ++i)
            x[i] = U(rng);
    } while (x.squaredNorm() >= 1.0);
    return x;
}

inline Vec random_unit(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0.0, 1.0);
    Vec v(dim);
    do {
        for (int i = 0; i < dim; ++i)
            v[i] = N(rng);
    } while (v.norm() < 1e-12);
    return v.normalized();
}

} // namespace detail

/// Builds the sample net of a scene. Graph and sphere generators are cut to the
/// open cylinder; explicit point lists and curves must already lie inside it.
inline ClosedSetSample build_scene(const SceneSpec& s)
{
    if (!(s.rho > 0.0))
        throw Error("scene '" + s.id + "': resolution rho must be positive");
    if (s.n < 1)
        throw Error("scene '" + s.id + "': n must be at least 1");
    const int n = s.n;
    PointSet pts(n + 1);
    auto oracle = std::make_shared<SceneOracle>();
    int m = n;
    double h = 0.0;

    switch (s.generator) {
    case Generator::Plane: {
        for (const Vec& x : detail::disk_lattice(n, s.rho))
            pts.push_back(detail::lift(x, s.slope * x[0] + s.shift));
        const double norm = std::sqrt(1 + s.slope * s.slope);
        oracle->distance = [slope = s.slope, shift = s.shift, norm](std::span<const double> p) {
            return std::abs(slope * p[0] + shift - p.back()) / norm;
        };
        oracle->mean_curvature = [n](std::span<const double>) { return Vec::Zero(n + 1).eval(); };
        oracle->random_point = [n, slope = s.slope, shift = s.shift](std::mt19937_64& rng) -> std::optional<Vec> {
            Vec x = detail::random_in_disk(n, rng);
            return detail::lift(x, slope * x[0] + shift);
        };
        break;
    }
    case Generator::Graph: {
        if (s.kind == GraphKind::Scherk && (n != 2 || !(s.lambda > 2.0 / M_PI)))
            throw Error("scene '" + s.id + "': scherk graph needs n = 2 and lambda > 2/pi");
        if (s.kind == GraphKind::Bump && !(s.width > 0.0))
            throw Error("scene '" + s.id + "': bump width must be positive");
        auto u = detail::graph_function(s);
        for (const Vec& x : detail::disk_lattice(n, s.rho))
            pts.push_back(detail::lift(x, u(x)));
        oracle->mean_curvature = [u, n](std::span<const double> z) {
            return detail::graph_mean_curvature(u, horizontal(z));
        };
        oracle->random_point = [u, n](std::mt19937_64& rng) -> std::optional<Vec> {
            Vec x = detail::random_in_disk(n, rng);
            return detail::lift(x, u(x));
        };
        if (s.kind == GraphKind::Scherk)
            h = 0.0;
        else if (s.kind == GraphKind::Quadratic)
            h = n * s.coef;  // sup of |H| is attained at the vertex
        else if (s.kind == GraphKind::Bump)
            h = 2.0 * n * std::abs(s.amplitude) / (s.width * s.width);
        else
            h = (n - 1.0) * s.coef;  // cone away from the vertex; the vertex itself is singular
        break;
    }
    case Generator::Sphere: {
        if (!(s.radius > 0.0))
            throw Error("scene '" + s.id + "': radius must be positive");
        if (n > 2)
            throw Error("scene '" + s.id + "': sphere generator supports n <= 2");
        Vec c = Vec::Zero(n + 1);
        if (!s.center.empty()) {
            if (static_cast<int>(s.center.size()) != n + 1)
                throw Error("scene '" + s.id + "': center must have n+1 coordinates");
            for (int i = 0; i <= n; ++i)
                c[i] = s.center[static_cast<std::size_t>(i)];
        }
        if (c.head(n).norm() - s.radius >= 1.0)
            throw Error("scene '" + s.id + "': sphere lies outside the cylinder");
        const double R = s.radius;
        std::vector<Vec> raw;
        if (n == 1) {
            const auto N = static_cast<std::size_t>(std::ceil(2 * M_PI * R / s.rho));
            for (std::size_t k = 0; k < N; ++k) {
                const double th = M_PI / 2 + 2 * M_PI * static_cast<double>(k) / static_cast<double>(N);
                Vec z(2);
                z << c[0] + R * std::cos(th), c[1] + R * std::sin(th);
                raw.push_back(z);
            }
        } else {
            const auto N = static_cast<std::size_t>(std::ceil(1.25 * 4 * M_PI * R * R / (s.rho * s.rho)));
            const double golden = M_PI * (3.0 - std::sqrt(5.0));
            Vec top = c, bottom = c;
            top[2] += R;
            bottom[2] -= R;
            raw.push_back(top);
            for (std::size_t i = 0; i < N; ++i) {
                const double zc = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(N);
                const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
                const double ph = golden * static_cast<double>(i);
                Vec z(3);
                z << c[0] + R * rr * std::cos(ph), c[1] + R * rr * std::sin(ph), c[2] + R * zc;
                raw.push_back(z);
            }
            raw.push_back(bottom);
        }
        for (const Vec& z : raw) {
            if (s.upper_cap_only && z[n] < c[n])
                continue;
            if (z.head(n).squaredNorm() < 1.0)
                pts.push_back(z);
        }
        if (pts.empty())
            throw Error("scene '" + s.id + "': sphere lies outside the cylinder");
        oracle->distance = [c, R](std::span<const double> p) {
            return std::abs((Eigen::Map<const Vec>(p.data(), c.size()) - c).norm() - R);
        };
        oracle->mean_curvature = [c, R, n](std::span<const double> z) {
            return (-(static_cast<double>(n) / (R * R)) * (Eigen::Map<const Vec>(z.data(), c.size()) - c)).eval();
        };
        oracle->random_point = [c, R, n, cap = s.upper_cap_only](std::mt19937_64& rng) -> std::optional<Vec> {
            Vec z = c + R * detail::random_unit(n + 1, rng);
            if (z.head(n).squaredNorm() >= 1.0 || (cap && z[n] < c[n]))
                return std::nullopt;
            return z;
        };
        h = n / R;
        break;
    }
    case Generator::CantorGraph: {
        if (n != 1)
            throw Error("scene '" + s.id + "': cantor-primitive graph needs n = 1");
        if (s.depth < 0 || s.depth > 30)
            throw Error("scene '" + s.id + "': cantor depth must lie in [0, 30]");
        auto u = [d = s.depth, t0 = s.shift](double x) { return t0 + cantor_primitive(d, 0.5 * (x + 1.0)); };
        for (const Vec& x : detail::disk_lattice(1, s.rho))
            pts.push_back(detail::lift(x, u(x[0])));
        oracle->random_point = [u](std::mt19937_64& rng) -> std::optional<Vec> {
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            const double x = U(rng);
            Vec z(2);
            z << x, u(x);
            return z;
        };
        h = kInf;
        break;
    }
    case Generator::CurveR3: {
        if (n != 2)
            throw Error("scene '" + s.id + "': curve-in-R3 needs n = 2");
        const double R = s.radius;
        if (!(R > 0.0) || R >= 1.0)
            throw Error("scene '" + s.id + "': curve escapes the cylinder (radius must lie in (0,1))");
        const auto N = static_cast<std::size_t>(std::ceil(2 * M_PI * R / s.rho));
        for (std::size_t k = 0; k < N; ++k) {
            const double th = 2 * M_PI * static_cast<double>(k) / static_cast<double>(N);
            Vec z(3);
            z << R * std::cos(th), R * std::sin(th), s.shift;
            pts.push_back(z);
        }
        oracle->distance = [R, hz = s.shift](std::span<const double> p) {
            return std::hypot(std::hypot(p[0], p[1]) - R, p[2] - hz);
        };
        oracle->mean_curvature = [R, hz = s.shift](std::span<const double> z) {
            Vec H(3);
            H << -z[0] / (R * R), -z[1] / (R * R), 0.0;
            (void)hz;
            return H;
        };
        oracle->random_point = [R, hz = s.shift](std::mt19937_64& rng) -> std::optional<Vec> {
            std::uniform_real_distribution<double> U(0.0, 2 * M_PI);
            const double th = U(rng);
            Vec z(3);
            z << R * std::cos(th), R * std::sin(th), hz;
            return z;
        };
        m = 1;
        h = 1.0 / R;
        break;
    }
    case Generator::PointUnion: {
        if (s.points.empty())
            throw Error("scene '" + s.id + "': point union is empty");
        for (const auto& p : s.points) {
            if (static_cast<int>(p.size()) != n + 1)
                throw Error("scene '" + s.id + "': point has wrong dimension");
            if (!(horizontal_norm2(p) < 1.0))
                throw Error("scene '" + s.id + "': point escapes the cylinder");
            pts.push_back(p);
        }
        m = std::min(n, 1);
        h = kInf;
        oracle = nullptr;
        break;
    }
    }

    if (s.intrinsic_dim)
        m = *s.intrinsic_dim;
    if (s.mc_bound)
        h = *s.mc_bound;
    return ClosedSetSample(s.id, m, s.rho, h, std::move(pts), std::move(oracle));
}

// ---------------------------------------------------------------------------
// Scene dump / load: one point per line, comma separated, 12 significant digits.

inline void write_points(std::ostream& os, const PointSet& pts)
{
    for (int d = 0; d < pts.dim(); ++d)
        os << (d ? "," : "") << "z" << (d + 1);
    os << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto p = pts[i];
        for (std::size_t d = 0; d < p.size(); ++d)
            os << (d ? "," : "") << format_real(p[d]);
        os << '\n';
    }
}

inline PointSet read_points(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw Error("scene file is empty");
    const auto dim = static_cast<int>(split(trim(line), ',').size());
    PointSet pts(dim);
    std::vector<double> buf(static_cast<std::size_t>(dim));
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        auto cells = split(trim(line), ',');
        if (static_cast<int>(cells.size()) != dim)
            throw Error("scene file line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                        " columns");
        for (int d = 0; d < dim; ++d) {
            try {
                buf[static_cast<std::size_t>(d)] = parse_real(cells[static_cast<std::size_t>(d)]);
            } catch (const std::invalid_argument& e) {
                throw Error("scene file line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        pts.push_back(buf);
    }
    return pts;
}

inline ClosedSetSample load_scene(std::istream& is, std::string id, int intrinsic_dim, double rho, double mc_bound)
{
    return ClosedSetSample(std::move(id), intrinsic_dim, rho, mc_bound, read_points(is));
}

} // namespace slp
