#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "measure.hpp"
#include "normal_bundle.hpp"
#include "paraboloid.hpp"
#include "scene.hpp"

namespace slp {

/// The constant in front of the measure term, kept as its three factors.
struct AbpConstants {
    double gamma = 0.0;
    double factor1 = 0.0;
    double factor2 = 0.0;

    double product() const { return gamma * factor1 * factor2; }
};

/// Codimension-one form: (2n+4h)^n, (1+a+h/a)^n, sqrt(1+4a^2).
inline AbpConstants codim1_constants(int n, double h, double a)
{
    require_opening(a);
    const double dn = n;
    return {std::pow(2.0 * dn + 4.0 * h, dn), std::pow(1.0 + a + h / a, dn), std::sqrt(1.0 + 4.0 * a * a)};
}

/// General form: 4^{n-m}(2m+4h)^m, (1+a+1/a)^{n-m}, (1+a+h/a)^m.
inline AbpConstants general_constants(int n, int m, double h, double a)
{
    require_opening(a);
    if (m < 1 || m > n)
        throw Error("abp: intrinsic dimension m must lie in [1, n]");
    const double k = n - m;
    const double dm = m;
    return {std::pow(4.0, k) * std::pow(2.0 * dm + 4.0 * h, dm), std::pow(1.0 + a + 1.0 / a, k),
            std::pow(1.0 + a + h / a, dm)};
}

enum class AbpVerdict { Holds, Fails, HypothesisViolated, InsufficientResolution };

inline const char* abp_verdict_tag(AbpVerdict v)
{
    switch (v) {
    case AbpVerdict::Holds: return "holds";
    case AbpVerdict::Fails: return "fails";
    case AbpVerdict::HypothesisViolated: return "hypothesis-violated";
    case AbpVerdict::InsufficientResolution: return "insufficient-resolution";
    }
    return "?";
}

/// Fiber measure on one pooled cell of contact feet.
struct FiberSample {
    Vec foot;              ///< mean contact point of the cell
    double weight = 0.0;   ///< H^m of the feet in the cell
    double fiber = 0.0;    ///< H^{n-m} of the pooled normal directions
    std::size_t directions = 0;
};

struct AbpReport {
    std::string scene;
    int n = 0, m = 0;
    double h = 0.0, a = 0.0, rho = 0.0;
    MeasureEstimate lhs;
    AbpConstants constants;
    MeasureEstimate measure;  ///< H^n(A') or the fiber integral
    double rhs = 0.0;
    double rhs_error = 0.0;
    double margin = 0.0;
    bool boundary_touch = false;
    bool empty_contact = false;
    bool viscosity_witness = false;
    bool lower_strata = false;  ///< every foot sat outside the m-stratum
    std::size_t pairs = 0;
    std::vector<FiberSample> fibers;
    AbpVerdict verdict = AbpVerdict::Holds;

    /// Semicolon-joined hypothesis flags, "-" when none.
    std::string flags() const
    {
        std::string s;
        auto add = [&](bool on, const char* tag) {
            if (!on)
                return;
            if (!s.empty())
                s += ';';
            s += tag;
        };
        add(empty_contact, "empty-contact-set");
        add(boundary_touch, "boundary-touch");
        add(viscosity_witness, "viscosity-witness");
        add(lower_strata, "lower-strata");
        add(!lhs.reliable || !measure.reliable, "unreliable-measure");
        return s.empty() ? "-" : s;
    }
};

struct AbpOptions {
    std::size_t viscosity_trials = 200;  ///< 0 skips the (m,h) screen
    std::uint64_t viscosity_seed = 1;
    double fiber_cell = 0.0;             ///< pooling side for feet; 0 selects 8 rho
    double fiber_gap = 0.0;              ///< largest angular step inside one fiber; 0 selects max(0.1, 4 a s sqrt(n))
    double stratum_resolution = 0.25;    ///< angular resolution of the stratum direction net
    unsigned threads = 0;                ///< 0 uses default_threads()
};

namespace detail {

inline PointSet center_points(const CenterGrid& grid)
{
    PointSet pts(grid.n);
    for (const Vec& x : grid.centers)
        pts.push_back(x);
    return pts;
}

inline double center_side(const CenterGrid& grid, double rho) { return grid.spacing > 0.0 ? grid.spacing : rho; }

inline MeasureEstimate lhs_measure(const CenterGrid& grid, double rho)
{
    return box_count_measure(center_points(grid), grid.n, center_side(grid, rho));
}

inline void finish(AbpReport& rep)
{
    rep.rhs = rep.constants.product() * rep.measure.value;
    rep.rhs_error = rep.constants.product() * rep.measure.error_bound;
    rep.margin = rep.rhs - rep.lhs.value;
    if (rep.empty_contact || rep.viscosity_witness || rep.lower_strata) {
        rep.verdict = AbpVerdict::HypothesisViolated;
        return;
    }
    if (!rep.lhs.reliable || !rep.measure.reliable) {
        rep.verdict = AbpVerdict::InsufficientResolution;
        return;
    }
    if (rep.margin < -(rep.lhs.error_bound + rep.rhs_error))
        rep.verdict = rep.boundary_touch ? AbpVerdict::HypothesisViolated : AbpVerdict::Fails;
    else
        rep.verdict = AbpVerdict::Holds;
}

inline void screen(AbpReport& rep, const ClosedSetSample& g, const AbpOptions& opt)
{
    if (opt.viscosity_trials == 0)
        return;
    const auto v = viscosity_test(g, rep.m, rep.h, opt.viscosity_trials, opt.viscosity_seed);
    rep.viscosity_witness = v.witness.has_value();
}

/// Number of direction clusters at angular separation pi/4.
inline double cluster_count(const std::vector<Vec>& dirs)
{
    const double cut = std::cos(M_PI / 4.0);
    std::vector<Vec> reps;
    for (const Vec& e : dirs)
        if (std::none_of(reps.begin(), reps.end(), [&](const Vec& r) { return r.dot(e) >= cut; }))
            reps.push_back(e);
    return static_cast<double>(reps.size());
}

/// Length of a set of unit vectors lying near one great circle: angular
/// coordinate along the principal great circle, summed over consecutive steps
/// no larger than `gap`.
inline double arc_length(const std::vector<Vec>& dirs, double gap)
{
    if (dirs.size() < 2)
        return 0.0;
    const auto D = dirs.front().size();
    Vec c = Vec::Zero(D);
    for (const Vec& e : dirs)
        c += e;
    if (c.norm() < 1e-12)
        c = dirs.front();
    c.normalize();
    Mat cov = Mat::Zero(D, D);
    for (const Vec& e : dirs) {
        const Vec t = e - e.dot(c) * c;
        cov += t * t.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const Vec t = es.eigenvectors().col(D - 1);
    std::vector<double> phi;
    phi.reserve(dirs.size());
    for (const Vec& e : dirs)
        phi.push_back(std::atan2(e.dot(t), e.dot(c)));
    std::sort(phi.begin(), phi.end());
    double len = 0.0;
    for (std::size_t i = 1; i < phi.size(); ++i) {
        const double step = phi[i] - phi[i - 1];
        if (step <= gap)
            len += step;
    }
    return len;
}

inline double fiber_measure(const std::vector<Vec>& dirs, int k, double gap, double side)
{
    if (dirs.empty())
        return 0.0;
    if (k == 0)
        return cluster_count(dirs);
    if (k == 1)
        return arc_length(dirs, gap);
    PointSet pts(static_cast<int>(dirs.front().size()));
    for (const Vec& e : dirs)
        pts.push_back(e);
    return box_count_level(pts, k, side);
}

struct Foot {
    Vec z;
    std::vector<Vec> dirs;
};

/// Per-foot share of H^m of the feet: graph area when m = n (feet are
/// touched from above, so they form a graph over A'), spanning-forest length
/// when m = 1, box counts otherwise.
inline std::vector<double> foot_weights(const PointSet& pts, int m, double side)
{
    if (m == pts.dim() - 1)
        return graph_point_weights(pts, side);
    if (m == 1)
        return chain_point_weights(pts, 2.0 * side);
    BoxGrid grid(pts, side);
    const auto bw = box_weights(pts, grid, m, side);
    std::vector<double> w(pts.size(), 0.0);
    for (std::size_t b = 0; b < grid.keys.size(); ++b)
        for (std::size_t i : grid.members[b])
            w[i] = bw[b] / static_cast<double>(grid.members[b].size());
    return w;
}

/// Sum over pooled cells of [H^m of the feet] x [H^{n-m} of the pooled fiber].
inline double fiber_integral(const std::vector<Foot>& feet, int m, int k, double side, double pool, double gap,
                             double dir_side, std::vector<FiberSample>* samples)
{
    if (feet.empty())
        return 0.0;
    const int D = static_cast<int>(feet.front().z.size());
    PointSet pts(D);
    for (const Foot& f : feet)
        pts.push_back(f.z);
    const auto w = foot_weights(pts, m, side);

    struct Cell {
        double weight = 0.0;
        Vec sum;
        std::size_t count = 0;
        std::vector<Vec> dirs;
    };
    std::map<BoxKey, Cell> cells;
    for (std::size_t i = 0; i < feet.size(); ++i) {
        Cell& c = cells[box_key(pts[i], pool)];
        if (c.count == 0)
            c.sum = Vec::Zero(D);
        c.weight += w[i];
        c.sum += feet[i].z;
        ++c.count;
        c.dirs.insert(c.dirs.end(), feet[i].dirs.begin(), feet[i].dirs.end());
    }
    double total = 0.0;
    for (auto& [key, c] : cells) {
        const double f = fiber_measure(c.dirs, k, gap, dir_side);
        total += c.weight * f;
        if (samples)
            samples->push_back({c.sum / static_cast<double>(c.count), c.weight, f, c.dirs.size()});
    }
    return total;
}

} // namespace detail

/// H^n(C) <= (2n+4h)^n (1+a+h/a)^n sqrt(1+4a^2) H^n(A'_a(Gamma; C)).
inline AbpReport abp_codim1(const ClosedSetSample& g, double h, double a, const CenterGrid& C,
                            const AbpOptions& opt = {})
{
    require_nonempty(g);
    if (C.centers.empty())
        throw Error("abp_codim1: center set is empty");
    AbpReport rep;
    rep.scene = g.id();
    rep.n = g.n();
    rep.m = g.n();
    rep.h = h;
    rep.a = a;
    rep.rho = g.rho();
    rep.constants = codim1_constants(rep.n, h, a);
    rep.lhs = detail::lhs_measure(C, g.rho());

    const auto A = contact_set(g, a, C, opt.threads ? opt.threads : default_threads());
    rep.pairs = A.pairs.size();
    rep.boundary_touch = A.boundary_touch;
    rep.empty_contact = A.empty();
    rep.measure = box_count_measure(project_contact_set(A), rep.n, g.rho());
    if (!rep.empty_contact)
        detail::screen(rep, g, opt);
    detail::finish(rep);
    return rep;
}

/// H^n(C) <= 4^{n-m}(2m+4h)^m (1+a+1/a)^{n-m} (1+a+h/a)^m
///           * integral over the m-stratum of H^{n-m}(fiber of A_a(Gamma; C)).
inline AbpReport abp_general(const ClosedSetSample& g, int m, double h, double a, const CenterGrid& C,
                             const AbpOptions& opt = {})
{
    require_nonempty(g);
    if (C.centers.empty())
        throw Error("abp_general: center set is empty");
    AbpReport rep;
    rep.scene = g.id();
    rep.n = g.n();
    rep.m = m;
    rep.h = h;
    rep.a = a;
    rep.rho = g.rho();
    rep.constants = general_constants(rep.n, m, h, a);
    rep.lhs = detail::lhs_measure(C, g.rho());
    rep.measure.dimension = rep.n;
    rep.measure.resolution = g.rho();

    const unsigned threads = opt.threads ? opt.threads : default_threads();
    const auto A = contact_set(g, a, C, threads);
    rep.pairs = A.pairs.size();
    rep.boundary_touch = A.boundary_touch;
    rep.empty_contact = A.empty();
    if (rep.empty_contact) {
        detail::finish(rep);
        return rep;
    }

    // group normals by foot sample
    std::map<std::size_t, std::vector<std::size_t>> by_sample;
    for (std::size_t i = 0; i < A.pairs.size(); ++i)
        by_sample[A.pairs[i].sample].push_back(i);
    std::vector<std::size_t> samples;
    for (const auto& [s, ids] : by_sample)
        samples.push_back(s);

    // Feet above the m-stratum (too few normal directions) are dropped. Feet
    // classified below it stay in: their H^m share vanishes with rho, while
    // genuine m-stratum feet near the rank cut would otherwise tear the chain.
    std::vector<int> dims(samples.size(), m);
    if (m < rep.n) {
        parallel_for(samples.size(), [&](std::size_t i) {
            const auto& p = A.pairs[by_sample.at(samples[i]).front()];
            const double r = 1.0 / (a * p.eta[rep.n]);
            dims[i] = stratum_dimension(g, samples[i], r, opt.stratum_resolution).dimension;
        }, threads);
    }
    std::vector<detail::Foot> feet;
    bool on_stratum = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (dims[i] > m)
            continue;
        on_stratum = on_stratum || dims[i] == m;
        detail::Foot f;
        f.z = g.points().point(samples[i]);
        for (std::size_t id : by_sample.at(samples[i]))
            f.dirs.push_back(A.pairs[id].eta);
        feet.push_back(std::move(f));
    }
    if (!on_stratum) {
        rep.lower_strata = true;
        detail::finish(rep);
        return rep;
    }

    const double rho = g.rho();
    const double pool = opt.fiber_cell > 0.0 ? opt.fiber_cell : 8.0 * rho;
    const double spacing = detail::center_side(C, rho);
    const double gap = opt.fiber_gap > 0.0 ? opt.fiber_gap
                                           : std::max(0.1, 4.0 * a * spacing * std::sqrt(static_cast<double>(rep.n)));
    const int k = rep.n - m;
    const double dir_side = a * spacing;
    const double side = rho;
    rep.measure.value = detail::fiber_integral(feet, m, k, side, pool, gap, dir_side, &rep.fibers);
    const double coarse = detail::fiber_integral(feet, m, k, 2.0 * side, pool, gap, 2.0 * dir_side, nullptr);
    rep.measure.error_bound = std::abs(rep.measure.value - coarse);
    detail::screen(rep, g, opt);
    detail::finish(rep);
    return rep;
}

/// H^n(B) <= sqrt(1+4a^2) H^n(A'), B the set of contact points, measured as
/// a graph over A'.
struct ProjectionCheck {
    std::string scene;
    double a = 0.0;
    MeasureEstimate feet;       ///< H^n(B)
    MeasureEstimate projected;  ///< H^n(A')
    double factor = 0.0;        ///< sqrt(1+4a^2)
    double ratio = 0.0;
    double ratio_error = 0.0;
    bool holds = false;
};

inline ProjectionCheck projection_inequality_check(const ClosedSetSample& g, double a, const CenterGrid& C,
                                                   unsigned threads = default_threads())
{
    require_nonempty(g);
    const auto A = contact_set(g, a, C, threads);
    if (A.empty())
        throw Error("projection_inequality_check: contact set is empty");
    ProjectionCheck out;
    out.scene = g.id();
    out.a = a;
    out.factor = std::sqrt(1.0 + 4.0 * a * a);
    std::vector<std::size_t> ids;
    for (const auto& p : A.pairs)
        ids.push_back(p.sample);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    PointSet B(g.ambient_dim());
    for (std::size_t i : ids)
        B.push_back(g[i]);
    const int n = g.n();
    out.feet = graph_measure(B, g.rho());
    out.projected = box_count_measure(project_contact_set(A), n, g.rho());
    if (out.projected.value > 0.0) {
        out.ratio = out.feet.value / out.projected.value;
        out.ratio_error = out.feet.error_bound / out.projected.value +
                          out.ratio * out.projected.error_bound / out.projected.value;
    } else {
        out.ratio = kInf;
        out.ratio_error = kInf;
    }
    out.holds = out.feet.value - out.factor * out.projected.value <=
                out.feet.error_bound + out.factor * out.projected.error_bound;
    return out;
}

/// H^n(A'_a) / H^n(C) with its error bar; `contained` is false when a contact
/// point reaches the boundary band of the cylinder.
struct SavinRatio {
    double ratio = 0.0;
    double error = 0.0;
    bool contained = true;
};

inline SavinRatio savin_ratio(const ClosedSetSample& g, double a, const CenterGrid& C,
                              unsigned threads = default_threads())
{
    require_nonempty(g);
    if (!(a > 0.0) || a > 1.0)
        throw Error("savin_ratio: opening must lie in (0, 1]");
    const auto A = contact_set(g, a, C, threads);
    const auto lhs = detail::lhs_measure(C, g.rho());
    const auto proj = box_count_measure(project_contact_set(A), g.n(), g.rho());
    SavinRatio out;
    out.contained = !A.boundary_touch;
    out.ratio = proj.value / lhs.value;
    out.error = proj.error_bound / lhs.value + out.ratio * lhs.error_bound / lhs.value;
    return out;
}

} // namespace slp
