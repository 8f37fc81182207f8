#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "measure.hpp"
#include "normal_bundle.hpp"
#include "paraboloid.hpp"
#include "scene.hpp"

namespace slp {

// ---------------------------------------------------------------------------
// Barrier

/// -(16^g - 1)/g on [0, 1/16], -(t^-g - 1)/g on [1/16, 1], 0 beyond.
inline double barrier_phi(double gamma, double t)
{
    if (!(gamma > 1.0))
        throw Error("barrier_phi: exponent must exceed 1");
    if (!(t >= 0.0))
        throw Error("barrier_phi: argument must be non-negative");
    if (t >= 1.0)
        return 0.0;
    if (t <= 1.0 / 16.0)
        return -(std::pow(16.0, gamma) - 1.0) / gamma;
    return -(std::pow(t, -gamma) - 1.0) / gamma;
}

/// Depth of the barrier dip in units of a r^2: (16^g - 1)/g.
inline double barrier_depth(double gamma) { return (std::pow(16.0, gamma) - 1.0) / gamma; }

/// Largest admissible opening for exponent g: 1/(16^{g+1} + 2).
inline double barrier_opening_limit(double gamma) { return 1.0 / (std::pow(16.0, gamma + 1.0) + 2.0); }

struct BarrierSpec {
    double gamma = 2.0;
    Paraboloid anchor;  ///< P_{a,x1}; its opening is a
    Vec x0;
    double r = 0.5;

    double a() const { return anchor.opening; }
    /// Upper bound a r^2 (16^g - 1)/g of the slide.
    double slide_bound() const { return a() * r * r * barrier_depth(gamma); }
};

/// psi(x) = P(x) + a r^2 phi(|x - x0|/r).
inline double barrier_psi(const BarrierSpec& s, const Vec& x)
{
    return s.anchor(x) + s.a() * s.r * s.r * barrier_phi(s.gamma, (x - s.x0).norm() / s.r);
}

/// (psi - t)/a, free of the opening: |x - x1|^2/2 + r^2 phi.
inline double barrier_psi_scaled(const BarrierSpec& s, const Vec& x)
{
    return 0.5 * (x - s.anchor.center).squaredNorm() + s.r * s.r * barrier_phi(s.gamma, (x - s.x0).norm() / s.r);
}

/// Why a spec fails the lemma's admissibility, empty when it passes.
inline std::string barrier_admissibility(const BarrierSpec& s, double h)
{
    if (!(s.gamma > 1.0))
        return "exponent must exceed 1";
    if (!(s.r > 0.0))
        return "radius must be positive";
    if (!(h >= 0.0 && h < s.a()))
        return "need 0 <= h < a";
    if (s.a() > barrier_opening_limit(s.gamma))
        return "opening exceeds 1/(16^(gamma+1)+2)";
    if (!(s.x0.norm() + s.r < 1.0))
        return "ball B(x0, r) leaves the open unit ball";
    return {};
}

// ---------------------------------------------------------------------------
// Grid functions

/// Values on a regular n-dimensional grid, stored as (f - offset)/scale so
/// that barriers of tiny opening keep their precision.
class GridFunction {
public:
    GridFunction(Vec lo, double step, std::vector<int> dims, double offset = 0.0, double scale = 1.0,
                 double feature = 0.0)
        : lo_(std::move(lo)), step_(step), dims_(std::move(dims)), offset_(offset), scale_(scale), feature_(feature)
    {
        if (!(step > 0.0) || !(scale > 0.0))
            throw Error("GridFunction: step and scale must be positive");
        if (static_cast<int>(dims_.size()) != lo_.size())
            throw Error("GridFunction: dimension mismatch");
        std::size_t total = 1;
        for (int d : dims_) {
            if (d < 3)
                throw Error("GridFunction: need at least 3 nodes per axis");
            total *= static_cast<std::size_t>(d);
        }
        values_.assign(total, 0.0);
    }

    /// Samples the scaled function g = (f - offset)/scale at every node.
    static GridFunction sample(const std::function<double(const Vec&)>& scaled, const Vec& lo, double step,
                               std::vector<int> dims, double offset, double scale, double feature = 0.0,
                               unsigned threads = default_threads())
    {
        GridFunction gf(lo, step, std::move(dims), offset, scale, feature);
        parallel_for(gf.size(), [&](std::size_t i) { gf.values_[i] = scaled(gf.node(i)); }, threads);
        return gf;
    }

    int n() const { return static_cast<int>(dims_.size()); }
    double step() const { return step_; }
    double offset() const { return offset_; }
    double scale() const { return scale_; }
    double feature() const { return feature_; }
    const std::vector<int>& dims() const { return dims_; }
    std::size_t size() const { return values_.size(); }
    const Vec& lo() const { return lo_; }
    Vec hi() const
    {
        Vec h = lo_;
        for (int d = 0; d < n(); ++d)
            h[d] += step_ * (dims_[static_cast<std::size_t>(d)] - 1);
        return h;
    }

    std::vector<int> index_of(std::size_t flat) const
    {
        std::vector<int> k(dims_.size());
        for (int d = n() - 1; d >= 0; --d) {
            k[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(dims_[static_cast<std::size_t>(d)]));
            flat /= static_cast<std::size_t>(dims_[static_cast<std::size_t>(d)]);
        }
        return k;
    }
    std::size_t flat_of(const std::vector<int>& k) const
    {
        std::size_t f = 0;
        for (int d = 0; d < n(); ++d)
            f = f * static_cast<std::size_t>(dims_[static_cast<std::size_t>(d)]) + static_cast<std::size_t>(k[static_cast<std::size_t>(d)]);
        return f;
    }
    Vec node(std::size_t flat) const
    {
        const auto k = index_of(flat);
        Vec x = lo_;
        for (int d = 0; d < n(); ++d)
            x[d] += step_ * k[static_cast<std::size_t>(d)];
        return x;
    }

    /// Scaled value at a node.
    double scaled(const std::vector<int>& k) const { return values_[flat_of(k)]; }
    double& scaled(const std::vector<int>& k) { return values_[flat_of(k)]; }

    bool contains(const Vec& x) const
    {
        const Vec h = hi();
        for (int d = 0; d < n(); ++d)
            if (x[d] < lo_[d] - 1e-12 || x[d] > h[d] + 1e-12)
                return false;
        return true;
    }

    /// Multilinear interpolation, unscaled.
    double operator()(const Vec& x) const
    {
        if (!contains(x))
            throw Error("GridFunction: point outside the grid");
        const int N = n();
        std::vector<int> base(static_cast<std::size_t>(N));
        std::vector<double> frac(static_cast<std::size_t>(N));
        for (int d = 0; d < N; ++d) {
            const double u = std::clamp((x[d] - lo_[d]) / step_, 0.0, dims_[static_cast<std::size_t>(d)] - 1.0);
            int b = std::min(static_cast<int>(std::floor(u)), dims_[static_cast<std::size_t>(d)] - 2);
            base[static_cast<std::size_t>(d)] = b;
            frac[static_cast<std::size_t>(d)] = u - b;
        }
        double acc = 0.0;
        std::vector<int> k(static_cast<std::size_t>(N));
        for (unsigned corner = 0; corner < (1u << N); ++corner) {
            double w = 1.0;
            for (int d = 0; d < N; ++d) {
                const int bit = (corner >> d) & 1;
                k[static_cast<std::size_t>(d)] = base[static_cast<std::size_t>(d)] + bit;
                w *= bit ? frac[static_cast<std::size_t>(d)] : 1.0 - frac[static_cast<std::size_t>(d)];
            }
            if (w != 0.0)
                acc += w * scaled(k);
        }
        return offset_ + scale_ * acc;
    }

    /// Scaled gradient and Hessian by central differences at an interior node.
    std::pair<Vec, Mat> derivatives(const std::vector<int>& k) const
    {
        const int N = n();
        for (int d = 0; d < N; ++d)
            if (k[static_cast<std::size_t>(d)] < 1 || k[static_cast<std::size_t>(d)] > dims_[static_cast<std::size_t>(d)] - 2)
                throw Error("GridFunction: stencil leaves the grid");
        Vec g(N);
        Mat H(N, N);
        const double f0 = scaled(k);
        auto at = [&](int i, int si, int j, int sj) {
            auto q = k;
            q[static_cast<std::size_t>(i)] += si;
            q[static_cast<std::size_t>(j)] += sj;
            return scaled(q);
        };
        const double h = step_;
        for (int i = 0; i < N; ++i) {
            const double fp = at(i, 1, i, 0), fm = at(i, -1, i, 0);
            g[i] = (fp - fm) / (2 * h);
            H(i, i) = (fp - 2 * f0 + fm) / (h * h);
            for (int j = 0; j < i; ++j) {
                H(i, j) = H(j, i) = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4 * h * h);
            }
        }
        return {g, H};
    }

private:
    Vec lo_;
    double step_;
    std::vector<int> dims_;
    double offset_, scale_, feature_;
    std::vector<double> values_;
};

enum class NormalChoice { Up, Down };

/// trace Q(z) . nu for the graph of the grid function at the node nearest x,
/// nu = +-(-grad f, 1)/W: (Laplacian f - grad f^T D^2 f grad f / W^2) / W.
inline double graph_trace_Q(const GridFunction& f, const Vec& x, NormalChoice nu = NormalChoice::Up)
{
    if (f.feature() > 0.0 && f.step() > f.feature() / 64.0 * (1 + 1e-12))
        throw Error("graph_trace_Q: grid step exceeds feature/64");
    std::vector<int> k(static_cast<std::size_t>(f.n()));
    for (int d = 0; d < f.n(); ++d)
        k[static_cast<std::size_t>(d)] = static_cast<int>(std::lround((x[d] - f.lo()[d]) / f.step()));
    auto [g, H] = f.derivatives(k);
    const double s = f.scale();
    const double W2 = 1.0 + s * s * g.squaredNorm();
    const double W = std::sqrt(W2);
    const double val = s * (H.trace() - s * s * g.dot(H * g) / W2) / W;
    return nu == NormalChoice::Up ? val : -val;
}

struct BarrierCertificate {
    int n = 0;
    double step = 0.0;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst = -kInf;  ///< max over nodes of (trace Q . nu + h W)/a
    bool pass() const { return checked > 0 && violations == 0; }
};

/// Samples psi on [x0 - r, x0 + r]^n and checks trace Q . nu + h W < 0 at every
/// annulus node r/16 < |x - x0| < r whose stencil stays in the annulus.
/// The scaled grid does not depend on a, so `hs` lists several h/a ratios
/// checked on one grid; one certificate per ratio.
inline std::vector<BarrierCertificate> certify_barrier(const BarrierSpec& s, const std::vector<double>& h_over_a,
                                                       double step, unsigned threads = default_threads())
{
    const int n = static_cast<int>(s.x0.size());
    if (!(step > 0.0) || step > s.r / 64.0 * (1 + 1e-12))
        throw Error("certify_barrier: grid step must lie in (0, r/64]");
    const int half = static_cast<int>(std::ceil(s.r / step));
    std::vector<int> dims(static_cast<std::size_t>(n), 2 * half + 1);
    const Vec lo = s.x0 - Vec::Constant(n, half * step);
    const auto gf = GridFunction::sample([&](const Vec& x) { return barrier_psi_scaled(s, x); }, lo, step, dims,
                                         s.anchor.offset, s.a(), s.r, threads);
    const double inner = s.r / 16.0 + step * std::sqrt(static_cast<double>(n));
    const double outer = s.r - step * std::sqrt(static_cast<double>(n));

    std::vector<BarrierCertificate> out(h_over_a.size());
    for (auto& c : out) {
        c.n = n;
        c.step = step;
    }
    // (trace Q . nu)/a and W per node
    std::vector<double> vals(gf.size(), kInf), wvals(gf.size(), 1.0);
    parallel_for(gf.size(), [&](std::size_t i) {
        const double d = (gf.node(i) - s.x0).norm();
        if (d <= inner || d >= outer)
            return;
        auto [g, H] = gf.derivatives(gf.index_of(i));
        const double a = s.a();
        const double W2 = 1.0 + a * a * g.squaredNorm();
        vals[i] = (H.trace() - a * a * g.dot(H * g) / W2) / std::sqrt(W2);
        wvals[i] = std::sqrt(W2);
    }, threads);
    for (std::size_t i = 0; i < gf.size(); ++i) {
        if (!std::isfinite(vals[i]))
            continue;
        for (std::size_t j = 0; j < h_over_a.size(); ++j) {
            const double v = vals[i] + h_over_a[j] * wvals[i];
            auto& c = out[j];
            ++c.checked;
            c.worst = std::max(c.worst, v);
            if (!(v < 0.0))
                ++c.violations;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration

struct GammaCalibration {
    int n = 0;
    double safety = 0.0;
    double gamma = 0.0;
    double worst_raw = 0.0;  ///< max over the scan of n(1+t^{-g-2}) - (g+2)t^{-g-2}/8
    double margin = 0.0;     ///< -1/safety - worst_raw, non-negative on success
};

/// n(1+t^{-g-2}) - (g+2)t^{-g-2}/8, the lemma's bound divided by a.
inline double barrier_bound_expression(int n, double gamma, double t)
{
    const double p = std::pow(t, -gamma - 2.0);
    return n * (1.0 + p) - (gamma + 2.0) * p / 8.0;
}

/// Smallest g on the grid 2^{k/16} (k = 1, 2, ...) with the bound expression
/// at most -1/safety at 1000 points of [1/16, 1].
inline GammaCalibration calibrate_gamma(int n, double safety)
{
    if (n < 1)
        throw Error("calibrate_gamma: n must be at least 1");
    if (!(safety > 1.0))
        throw Error("calibrate_gamma: safety must exceed 1");
    constexpr int kScan = 1000;
    for (int k = 1; k <= 16 * 10; ++k) {
        const double g = std::pow(2.0, k / 16.0);
        double worst = -kInf;
        for (int i = 0; i < kScan; ++i) {
            const double t = 1.0 / 16.0 + (1.0 - 1.0 / 16.0) * i / (kScan - 1.0);
            worst = std::max(worst, barrier_bound_expression(n, g, t));
        }
        if (worst <= -1.0 / safety)
            return {n, safety, g, worst, -1.0 / safety - worst};
    }
    throw Error("calibrate_gamma: search grid exhausted");
}

/// Smallest power of two theta with theta (r/64)^2 (9 - 1)/2 > r^2 ((16^g - 1)/g + slack):
/// Q_y - P >= theta a/2 (|x - y|^2 - |z' - y|^2) - a r^2 (16^g - 1)/g, and
/// |x - y| >= 3r/64, |z' - y| <= r/64 whenever |x - z'| >= r/16.
inline double calibrate_theta(double gamma, double slack = 1.0)
{
    const double need = barrier_depth(gamma) + slack;
    double theta = 1.0;
    while (theta * 8.0 / (2.0 * 4096.0) <= need) {
        theta *= 2.0;
        if (!std::isfinite(theta))
            throw Error("calibrate_theta: overflow");
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Sliding

struct SlideResult {
    double t = 0.0;
    std::vector<std::size_t> contacts;  ///< ascending sample indices
};

/// t = max_z (z_{n+1} - f(z')); contacts are the samples within the tie
/// tolerance of t.
inline SlideResult slide_to_touch(const ClosedSetSample& g, const std::function<double(const Vec&)>& f)
{
    require_nonempty(g);
    const int n = g.n();
    std::vector<double> gap(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto z = g[i];
        gap[i] = z[static_cast<std::size_t>(n)] - f(Eigen::Map<const Vec>(z.data(), n));
    }
    SlideResult out;
    out.t = *std::max_element(gap.begin(), gap.end());
    const double tol = tie_tolerance(out.t);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (gap[i] >= out.t - tol)
            out.contacts.push_back(i);
    return out;
}

/// Grid-function surface; every sample must project into the grid.
inline SlideResult slide_to_touch(const ClosedSetSample& g, const GridFunction& f)
{
    require_nonempty(g);
    const int n = g.n();
    if (f.n() != n)
        throw Error("slide_to_touch: grid dimension differs from the scene");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!f.contains(Eigen::Map<const Vec>(g[i].data(), n)))
            throw Error("slide_to_touch: scene sample outside the grid region");
    return slide_to_touch(g, [&](const Vec& x) { return f(x); });
}

// ---------------------------------------------------------------------------
// Measure to point

enum class HarnackIssue {
    None,
    BadParameters,
    NotAnNhSet,
    EmptyContactInBall,
    SlideOutOfBounds,
    LocalizationFailed,
    SweepEscaped,
    NotBelowZero,
    SlabMissed,
    CurvatureTooLarge,
    TouchNotContained,
};

inline const char* harnack_issue_tag(HarnackIssue i)
{
    switch (i) {
    case HarnackIssue::None: return "none";
    case HarnackIssue::BadParameters: return "bad-parameters";
    case HarnackIssue::NotAnNhSet: return "not-an-(n,h)-set";
    case HarnackIssue::EmptyContactInBall: return "no-contact-in-ball";
    case HarnackIssue::SlideOutOfBounds: return "slide-out-of-bounds";
    case HarnackIssue::LocalizationFailed: return "localization-failed";
    case HarnackIssue::SweepEscaped: return "sweep-escaped";
    case HarnackIssue::NotBelowZero: return "not-below-zero";
    case HarnackIssue::SlabMissed: return "slab-missed";
    case HarnackIssue::CurvatureTooLarge: return "h-too-large";
    case HarnackIssue::TouchNotContained: return "touch-not-contained";
    }
    return "?";
}

struct MeasureToPointOptions {
    std::size_t viscosity_trials = 0;  ///< optional (n,h) screen
    std::uint64_t seed = 1;
    double sweep_step = 0.0;           ///< lattice step of the y sweep; 0 selects r/512
    double center_spacing = 0.0;       ///< lattice of B(0,1) for A'_{alpha a}; 0 selects rho
    unsigned threads = 0;
};

struct MeasureToPointReport {
    std::string scene;
    HarnackIssue issue = HarnackIssue::None;
    std::string diagnostic;
    double gamma = 0.0, theta = 0.0, alpha = 0.0, a = 0.0, h = 0.0, r = 0.0;
    Vec x0, x1;
    double slide = 0.0, slide_bound = 0.0;
    std::size_t slide_contacts = 0;
    Vec foot;                  ///< contact z used for the sweep
    double height_gap = 0.0;   ///< P(z') - z_{n+1}
    std::size_t sweep_points = 0;
    std::size_t sweep_localized = 0;
    MeasureEstimate sweep_measure;  ///< projections of the sweep contacts
    MeasureEstimate touched;        ///< A'_{alpha a} in U(x0, r/8)
    double beta_hat = 0.0, beta_error = 0.0;

    bool ok() const { return issue == HarnackIssue::None; }
};

namespace detail {

inline MeasureToPointReport mtp_fail(MeasureToPointReport rep, HarnackIssue issue, std::string why)
{
    rep.issue = issue;
    rep.diagnostic = std::move(why);
    return rep;
}

/// Projections of A_a(Gamma; B(0,1)) as a point set.
inline PointSet touched_projection(const ClosedSetSample& g, double a, double spacing, unsigned threads)
{
    return project_contact_set(contact_set(g, a, CenterGrid::ball(g.n(), spacing), threads));
}

} // namespace detail

/// The lemma's pipeline: anchor paraboloid with a contact over B(x0, r),
/// barrier slide and localization into C_{r/16}(x0), the y-sweep of
/// paraboloids of opening (theta+1)a, and beta^ = L^n(A'_{alpha a} n U(x0, r/8))/r^n.
inline MeasureToPointReport measure_to_point(const ClosedSetSample& g, double h, double a, const Vec& x0, double r,
                                             double gamma, double theta, const MeasureToPointOptions& opt = {})
{
    require_nonempty(g);
    const int n = g.n();
    const unsigned threads = opt.threads ? opt.threads : default_threads();
    MeasureToPointReport rep;
    rep.scene = g.id();
    rep.gamma = gamma;
    rep.theta = theta;
    rep.alpha = theta + 1.0;
    rep.a = a;
    rep.h = h;
    rep.r = r;
    rep.x0 = x0;
    if (x0.size() != n)
        throw Error("measure_to_point: x0 has wrong dimension");

    BarrierSpec spec;
    spec.gamma = gamma;
    spec.x0 = x0;
    spec.r = r;
    spec.anchor = {x0, a, 0.0};
    if (auto why = barrier_admissibility(spec, h); !why.empty())
        return detail::mtp_fail(rep, HarnackIssue::BadParameters, why);
    if (!(theta > 0.0) || a * rep.alpha > 1.0 * (1 + 1e-12))
        return detail::mtp_fail(rep, HarnackIssue::BadParameters, "need a <= 1/alpha");
    if (opt.viscosity_trials > 0) {
        const auto v = viscosity_test(g, n, h, opt.viscosity_trials, opt.seed);
        if (v.witness)
            return detail::mtp_fail(rep, HarnackIssue::NotAnNhSet, "viscosity test found a witness for (n, h)");
    }

    // anchor: nearest lattice center with an exact contact over U(x0, r)
    const double rho = g.rho();
    const double spacing = opt.center_spacing > 0.0 ? opt.center_spacing : rho;
    auto centers = CenterGrid::ball(n, spacing).centers;
    std::stable_sort(centers.begin(), centers.end(),
                     [&](const Vec& p, const Vec& q) { return (p - x0).squaredNorm() < (q - x0).squaredNorm(); });
    std::optional<Vec> x1;
    for (std::size_t c = 0; c < centers.size() && c < 4096 && !x1; ++c)
        for (std::size_t i : contact_indices(g, a, centers[c], 0.0))
            if ((horizontal(g[i]) - x0).norm() < r) {
                x1 = centers[c];
                break;
            }
    if (!x1)
        return detail::mtp_fail(rep, HarnackIssue::EmptyContactInBall, "no contact of P_{a,x1} over U(x0, r)");
    rep.x1 = *x1;
    spec.anchor = {*x1, a, touching_offset(g, a, *x1)};

    // slide the barrier
    const auto slide = slide_to_touch(g, [&](const Vec& x) { return barrier_psi(spec, x); });
    rep.slide = slide.t;
    rep.slide_bound = spec.slide_bound();
    rep.slide_contacts = slide.contacts.size();
    const double tol = tie_tolerance(spec.anchor.offset) + tie_tolerance(slide.t);
    if (!(slide.t > 0.0) || slide.t > rep.slide_bound + tol)
        return detail::mtp_fail(rep, HarnackIssue::SlideOutOfBounds, "slide outside (0, a r^2 (16^g - 1)/g]");
    std::optional<std::size_t> best;
    for (std::size_t i : slide.contacts) {
        const double d = (horizontal(g[i]) - x0).norm();
        if (d > r / 16.0 * (1 + 1e-12))
            return detail::mtp_fail(rep, HarnackIssue::LocalizationFailed,
                                    "barrier contact at distance " + format_real(d / r) + " r from x0");
        if (!best || d < (horizontal(g[*best]) - x0).norm())
            best = i;
    }
    const Vec z = g.points().point(*best);
    rep.foot = z;
    const Vec zh = z.head(n);
    rep.height_gap = spec.anchor(zh) - z[n];

    // sweep y over B(z', r/64)
    const double ystep = opt.sweep_step > 0.0 ? opt.sweep_step : r / 512.0;
    const auto ys = CenterGrid::ball(n, ystep, r / 64.0, zh).centers;
    const double opening = rep.alpha * a;
    std::vector<std::vector<std::size_t>> hits(ys.size());
    parallel_for(ys.size(), [&](std::size_t k) {
        const Vec c = (theta * ys[k] + *x1) / (1.0 + theta);
        hits[k] = contact_indices(g, opening, c, 0.0);
    }, threads);
    rep.sweep_points = ys.size();
    PointSet swept(n);
    for (const auto& hk : hits) {
        bool inside = !hk.empty();
        for (std::size_t i : hk) {
            const Vec p = horizontal(g[i]);
            inside = inside && (p - zh).norm() <= r / 16.0 * (1 + 1e-12);
            swept.push_back(p);
        }
        rep.sweep_localized += inside;
    }
    rep.sweep_measure = box_count_measure(swept, n, rho);
    if (rep.sweep_localized < rep.sweep_points)
        return detail::mtp_fail(rep, HarnackIssue::SweepEscaped, "a sweep paraboloid touched outside C_{r/16}(z')");

    // beta^
    const auto proj = detail::touched_projection(g, opening, spacing, threads);
    PointSet near(n);
    for (std::size_t i = 0; i < proj.size(); ++i)
        if ((proj.point(i) - x0).norm() < r / 8.0)
            near.push_back(proj[i]);
    rep.touched = box_count_measure(near, n, rho);
    const double rn = std::pow(r, n);
    rep.beta_hat = rep.touched.value / rn;
    rep.beta_error = rep.touched.error_bound / rn;
    return rep;
}

// ---------------------------------------------------------------------------
// Weak Harnack cascade

struct HarnackLevel {
    int j = 0;
    double opening = 0.0;
    MeasureEstimate measure;  ///< L^n(F_j), F_j dilated by rho
};

struct HarnackReport {
    std::string scene;
    double alpha = 0.0;
    int k = 0;
    double mu = 0.0;
    double eps = 0.0;
    double h = 0.0;
    double rho = 0.0;
    HarnackIssue issue = HarnackIssue::None;
    std::string diagnostic;
    bool touch_contained = false;  ///< P (center 0, opening 48 eps) touches inside C_{1/3}(0)
    std::vector<HarnackLevel> levels;
    bool monotone = false;
    double ball_measure = 0.0;
    double residual = 1.0;         ///< L^n(B(0,1/3) \ A'_{1/alpha}) / L^n(B(0,1/3))
    double implied_beta1 = 0.0;    ///< 1 - residual^{1/k}
    std::string verdict = "hypothesis-violated";
};

struct HarnackOptions {
    double center_spacing = 0.0;  ///< 0 selects rho
    unsigned threads = 0;
};

/// Lebesgue measure of B(0, 1/3) covered by the rho-dilation of a projected
/// set, by lattice counting at spacing rho; the error bound is the change
/// under 2 rho dilation.
inline MeasureEstimate covered_measure(const PointSet& proj, int n, double rho, double radius = 1.0 / 3.0)
{
    const auto lattice = CenterGrid::ball(n, rho, radius).centers;
    MeasureEstimate est;
    est.dimension = n;
    est.resolution = rho;
    if (proj.empty())
        return est;
    KdTree tree(proj);
    std::size_t near = 0, wide = 0;
    for (const Vec& x : lattice) {
        const double d2 = tree.nearest(as_span(x)).dist2;
        near += d2 <= rho * rho * (1 + 1e-12);
        wide += d2 <= 4 * rho * rho * (1 + 1e-12);
    }
    const double cell = std::pow(rho, n);
    est.value = static_cast<double>(near) * cell;
    est.error_bound = static_cast<double>(wide - near) * cell;
    return est;
}

inline HarnackReport weak_harnack_check(const ClosedSetSample& g, double h, double alpha, int k, double mu,
                                        const HarnackOptions& opt = {})
{
    require_nonempty(g);
    const int n = g.n();
    const unsigned threads = opt.threads ? opt.threads : default_threads();
    HarnackReport rep;
    rep.scene = g.id();
    rep.alpha = alpha;
    rep.k = k;
    rep.mu = mu;
    rep.h = h;
    rep.rho = g.rho();
    auto fail = [&](HarnackIssue i, std::string why) {
        rep.issue = i;
        rep.diagnostic = std::move(why);
        return rep;
    };
    if (!(alpha > 1.0) || k < 1 || !(mu > 0.0))
        return fail(HarnackIssue::BadParameters, "need alpha > 1, k >= 1, mu > 0");
    const double depth = std::pow(alpha, -(k + 1.0));
    rep.eps = 1.0 / (48.0 * std::pow(alpha, k + 1.0));
    if (!(h >= 0.0 && h < depth))
        return fail(HarnackIssue::CurvatureTooLarge, "need 0 <= h < alpha^(-k-1)");
    bool in_slab = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto z = g[i];
        const double zn = z[static_cast<std::size_t>(n)];
        if (zn > 1e-12)
            return fail(HarnackIssue::NotBelowZero, "sample above {x_{n+1} = 0}");
        in_slab = in_slab || (horizontal_norm2(z) <= 1.0 / 16.0 && zn >= -depth / 48.0);
    }
    if (!in_slab)
        return fail(HarnackIssue::SlabMissed, "no sample in {|x'| <= 1/4, -alpha^(-k-1)/48 <= x_{n+1} <= 0}");

    // open question in the source: containment of the first touching set is checked, not assumed
    rep.touch_contained = true;
    for (std::size_t i : contact_indices(g, 48.0 * rep.eps, Vec::Zero(n), 0.0))
        rep.touch_contained = rep.touch_contained && std::sqrt(horizontal_norm2(g[i])) < 1.0 / 3.0;

    const double rho = g.rho();
    const double spacing = opt.center_spacing > 0.0 ? opt.center_spacing : rho;
    for (int j = 0; j <= k; ++j) {
        HarnackLevel lvl;
        lvl.j = j;
        lvl.opening = 48.0 * rep.eps * std::pow(alpha, j);
        lvl.measure = covered_measure(detail::touched_projection(g, lvl.opening, spacing, threads), n, rho);
        rep.levels.push_back(lvl);
    }
    rep.ball_measure = static_cast<double>(CenterGrid::ball(n, rho, 1.0 / 3.0).centers.size()) * std::pow(rho, n);
    rep.monotone = true;
    for (std::size_t j = 1; j < rep.levels.size(); ++j) {
        const auto& p = rep.levels[j - 1].measure;
        const auto& q = rep.levels[j].measure;
        rep.monotone = rep.monotone && q.value >= p.value - (p.error_bound + q.error_bound);
    }
    if (rep.levels.front().measure.value <= 0.0)
        return fail(HarnackIssue::EmptyContactInBall, "F_0 is empty");
    if (!rep.touch_contained) {
        rep.issue = HarnackIssue::TouchNotContained;
        rep.diagnostic = "touching set of the opening-48eps paraboloid leaves C_{1/3}(0)";
    }
    rep.residual = std::max(0.0, 1.0 - rep.levels.back().measure.value / rep.ball_measure);
    rep.implied_beta1 = 1.0 - std::pow(rep.residual, 1.0 / k);
    rep.verdict = rep.residual <= mu ? "holds" : "fails";
    return rep;
}

/// Share of A'_a (dilated by rho) not covered by A'_b, for a <= b.
inline double opening_monotonicity_defect(const ClosedSetSample& g, double a, double b, double spacing = 0.0,
                                          unsigned threads = default_threads())
{
    if (!(a <= b))
        throw Error("opening_monotonicity_defect: need a <= b");
    const double s = spacing > 0.0 ? spacing : g.rho();
    const auto pa = detail::touched_projection(g, a, s, threads);
    const auto pb = detail::touched_projection(g, b, s, threads);
    if (pa.empty())
        return 0.0;
    if (pb.empty())
        return 1.0;
    KdTree tree(pb);
    std::size_t miss = 0;
    const double r2 = g.rho() * g.rho() * (1 + 1e-12);
    for (std::size_t i = 0; i < pa.size(); ++i)
        miss += tree.nearest(pa[i]).dist2 > r2;
    return static_cast<double>(miss) / static_cast<double>(pa.size());
}

} // namespace slp
