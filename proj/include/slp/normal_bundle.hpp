#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "format.hpp"
#include "paraboloid.hpp"
#include "scene.hpp"

namespace slp {

struct NormalSample {
    Vec z;
    Vec eta;
    double r = 0.0;
    std::size_t sample = 0;
};

/// Quasi-uniform directions on S^{D-1} with roughly the given angular spacing.
/// The coordinate axes (both signs) are always included.
inline std::vector<Vec> direction_net(int D, double angular_resolution)
{
    if (!(angular_resolution > 0.0))
        throw Error("direction net: angular resolution must be positive");
    std::vector<Vec> out;
    for (int d = 0; d < D; ++d) {
        out.push_back(Vec::Unit(D, d));
        out.push_back(-Vec::Unit(D, d));
    }
    if (D == 2) {
        const auto N = static_cast<std::size_t>(std::ceil(2 * M_PI / angular_resolution));
        for (std::size_t k = 0; k < N; ++k) {
            const double t = 2 * M_PI * (static_cast<double>(k) + 0.5) / static_cast<double>(N);
            Vec v(2);
            v << std::cos(t), std::sin(t);
            out.push_back(v);
        }
    } else if (D == 3) {
        const auto N = static_cast<std::size_t>(std::ceil(4 * M_PI / (angular_resolution * angular_resolution)));
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < N; ++i) {
            const double zc = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(N);
            const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
            Vec v(3);
            v << rr * std::cos(golden * static_cast<double>(i)), rr * std::sin(golden * static_cast<double>(i)), zc;
            out.push_back(v);
        }
    } else {
        const double area = 2 * std::pow(M_PI, 0.5 * D) / std::tgamma(0.5 * D);
        const auto N = static_cast<std::size_t>(std::ceil(area / std::pow(angular_resolution, D - 1)));
        std::mt19937_64 rng(0x5eed);
        for (std::size_t i = 0; i < N; ++i)
            out.push_back(detail::random_unit(D, rng));
    }
    return out;
}

/// Whether the open ball of radius r centred at z + r eta misses the samples,
/// up to the 3 rho net tolerance.
inline bool in_normal_bundle(const ClosedSetSample& g, const Vec& z, const Vec& eta, double r)
{
    return std::abs(distance(g, (z + r * eta).eval()) - r) <= 3.0 * g.rho();
}

/// N_r(Gamma) restricted to the listed sample indices (all samples when
/// `subset` is empty), ordered by (sample, direction).
inline std::vector<NormalSample> sample_normal_bundle(const ClosedSetSample& g, double r, double angular_resolution,
                                                      const std::vector<std::size_t>& subset = {},
                                                      unsigned threads = default_threads())
{
    if (!(r > 0.0))
        throw Error("normal bundle: radius must be positive");
    require_nonempty(g);
    const auto dirs = direction_net(g.ambient_dim(), angular_resolution);
    std::vector<std::size_t> ids = subset;
    if (ids.empty()) {
        ids.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            ids[i] = i;
    }
    std::vector<std::vector<NormalSample>> per(ids.size());
    parallel_for(ids.size(), [&](std::size_t k) {
        const Vec z = g.points().point(ids[k]);
        for (const Vec& eta : dirs)
            if (in_normal_bundle(g, z, eta, r))
                per[k].push_back({z, eta, r, ids[k]});
    }, threads);
    std::vector<NormalSample> out;
    for (auto& v : per)
        out.insert(out.end(), v.begin(), v.end());
    return out;
}

/// Normal samples indexed by direction rather than by foot: for each eta the
/// foot is the support point argmax_z eta.z, kept when the reach identity
/// holds at radius r. Sampling the Gauss map uniformly weights each normal
/// direction equally, which is the measure under which sharp folds of a convex
/// set occupy a positive share of the bundle.
inline std::vector<NormalSample> support_normal_samples(const ClosedSetSample& g, double r,
                                                        const std::vector<Vec>& directions)
{
    require_nonempty(g);
    std::vector<NormalSample> out;
    for (const Vec& eta : directions) {
        std::size_t best = 0;
        double top = -kInf;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = eta.dot(Eigen::Map<const Vec>(g[i].data(), eta.size()));
            if (v > top) {
                top = v;
                best = i;
            }
        }
        const Vec z = g.points().point(best);
        if (in_normal_bundle(g, z, eta, r))
            out.push_back({z, eta, r, best});
    }
    return out;
}

struct StratumEstimate {
    int dimension = 0;
    std::size_t accepted = 0;
    bool low_confidence = false;
};

/// (n+1) - rank of the accepted directions at sample `index`. Singular values
/// are taken relative to the largest and cut at max(10 rho/r, 3 sqrt(rho/r)):
/// the 3 rho acceptance band alone lets directions tilt by about
/// sqrt(6 rho/r), which spreads a single normal line to a relative singular
/// value near 2 sqrt(rho/r).
inline StratumEstimate stratum_dimension(const ClosedSetSample& g, std::size_t index, double r,
                                         double angular_resolution)
{
    const int D = g.ambient_dim();
    const Vec z = g.points().point(index);
    std::vector<Vec> acc;
    for (const Vec& eta : direction_net(D, angular_resolution))
        if (in_normal_bundle(g, z, eta, r))
            acc.push_back(eta);
    StratumEstimate est;
    est.accepted = acc.size();
    if (acc.empty()) {
        est.dimension = D;
        est.low_confidence = true;
        return est;
    }
    Mat M(static_cast<Eigen::Index>(acc.size()), D);
    for (std::size_t i = 0; i < acc.size(); ++i)
        M.row(static_cast<Eigen::Index>(i)) = acc[i].transpose();
    const Vec sv = Eigen::JacobiSVD<Mat>(M).singularValues();
    const double cut = std::max(10.0 * g.rho() / r, 3.0 * std::sqrt(g.rho() / r)) * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        rank += sv[i] > cut;
    est.dimension = D - rank;
    return est;
}

// ---------------------------------------------------------------------------
// Curvatures

struct SmoothedFoot {
    Vec foot;
    double distance = 0.0;
    double spread = 0.0;  ///< weighted RMS distance of the samples from foot
};

/// Gaussian-weighted centroid of the samples near their distance from p,
/// weights exp(-(|p - z|^2 - d^2) / (2 s^2)). Reduces to the nearest sample as
/// s -> 0 and averages out net noise otherwise.
inline SmoothedFoot smoothed_foot(const ClosedSetSample& g, const Vec& p, double s)
{
    SmoothedFoot out;
    const auto hit = g.tree().nearest(as_span(p));
    const double d2 = hit.dist2;
    out.distance = std::sqrt(d2);
    const double window = 36.0 * s * s;
    double wsum = 0.0;
    Vec acc = Vec::Zero(p.size());
    const auto ids = g.tree().within(as_span(p), d2 + window);
    std::vector<double> w(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        w[k] = std::exp(-(dist2(g[ids[k]], as_span(p)) - d2) / (2.0 * s * s));
        wsum += w[k];
        acc += w[k] * Eigen::Map<const Vec>(g[ids[k]].data(), p.size());
    }
    out.foot = acc / wsum;
    double var = 0.0;
    for (std::size_t k = 0; k < ids.size(); ++k)
        var += w[k] * (Eigen::Map<const Vec>(g[ids[k]].data(), p.size()) - out.foot).squaredNorm();
    out.spread = std::sqrt(var / wsum);
    return out;
}

struct CurvatureOptions {
    double smoothing = 0.0;     ///< Gaussian width s; 0 selects 2.5 rho
    double spread_limit = 0.0;  ///< ambiguity threshold; 0 selects max(8 s, r / 8)
};

struct CurvatureRecord {
    NormalSample sample;
    double step = 0.0;
    bool valid = false;
    std::string diagnostic;
    int tangent_dim = 0;
    std::vector<double> chis;    ///< eigenvalues of the offset-normal derivative, ascending
    std::vector<double> kappas;  ///< ascending, infinite entries last
    double finite_trace = 0.0;

    std::size_t sentinel_count() const
    {
        return static_cast<std::size_t>(std::count_if(kappas.begin(), kappas.end(), [](double k) { return std::isinf(k); }));
    }
};

/// Orthonormal basis of the complement of the unit vector v.
inline Mat orthogonal_complement(const Vec& v)
{
    const auto D = v.size();
    Mat P = Mat::Identity(D, D) - v * v.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    return es.eigenvectors().rightCols(D - 1);  // eigenvalue 1 block
}

/// kappa = chi / (1 - r chi) from central differences of the offset normal
/// field on the level set {distance = r} around z + r eta.
inline CurvatureRecord principal_curvatures(const ClosedSetSample& g, const NormalSample& ns, double step,
                                            const CurvatureOptions& opt = {})
{
    CurvatureRecord rec;
    rec.sample = ns;
    rec.step = step;
    const double r = ns.r;
    if (!(step > 0.0) || !(r > 0.0))
        throw Error("principal_curvatures: step and radius must be positive");
    const int n = g.n();
    const double s = opt.smoothing > 0.0 ? opt.smoothing : 2.5 * g.rho();
    const double limit = opt.spread_limit > 0.0 ? opt.spread_limit : std::max(8.0 * s, r / 8.0);
    const Vec x = ns.z + r * ns.eta;
    const Mat T = orthogonal_complement(ns.eta);

    auto normal_at = [&](const Vec& p) -> std::optional<Vec> {
        const auto f = smoothed_foot(g, p, s);
        if (f.spread > limit)
            return std::nullopt;
        const Vec d = p - f.foot;
        const double len = d.norm();
        if (!(len > 0.0))
            return std::nullopt;
        return (d / len).eval();
    };

    if (!normal_at(x)) {
        rec.diagnostic = "ambiguous nearest point at the offset point";
        return rec;
    }
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
        const auto up = normal_at(x + step * T.col(j));
        const auto dn = normal_at(x - step * T.col(j));
        if (!up || !dn) {
            rec.diagnostic = "ambiguous nearest point within the stencil";
            return rec;
        }
        const Vec dnu = (*up - *dn) / (2.0 * step);
        for (int i = 0; i < n; ++i)
            J(i, j) = T.col(i).dot(dnu);
    }
    const Mat S = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const double cut = 10.0 * step / r;
    for (int i = 0; i < n; ++i) {
        const double chi = es.eigenvalues()[i];
        rec.chis.push_back(chi);
        const double denom = 1.0 - r * chi;
        rec.kappas.push_back(std::abs(denom) <= cut ? kInf : chi / denom);
    }
    std::sort(rec.kappas.begin(), rec.kappas.end());
    const auto finite = static_cast<int>(n - rec.sentinel_count());
    rec.tangent_dim = g.oracle() ? std::min(g.intrinsic_dim(), n) : finite;
    for (int i = 0; i < rec.tangent_dim; ++i)
        if (std::isfinite(rec.kappas[static_cast<std::size_t>(i)]))
            rec.finite_trace += rec.kappas[static_cast<std::size_t>(i)];
    rec.valid = true;
    return rec;
}

/// Normal sample of a contact pair at the radius r = 1/(a eta_{n+1}).
inline NormalSample normal_sample_of(const ContactPair& p)
{
    const auto n = p.eta.size() - 1;
    return {p.z, p.eta, 1.0 / (p.a * p.eta[n]), p.sample};
}

/// Columns z.., eta.., r, tangent_dim, kappa1..kappan, finite_trace.
inline void write_curvature_records(std::ostream& os, const std::vector<CurvatureRecord>& recs, int n)
{
    for (int d = 1; d <= n + 1; ++d)
        os << "z" << d << ",";
    for (int d = 1; d <= n + 1; ++d)
        os << "eta" << d << ",";
    os << "r,tangent_dim,";
    for (int d = 1; d <= n; ++d)
        os << "kappa" << d << ",";
    os << "finite_trace\n";
    for (const auto& rec : recs) {
        if (!rec.valid)
            continue;
        for (int d = 0; d <= n; ++d)
            os << format_real(rec.sample.z[d]) << ",";
        for (int d = 0; d <= n; ++d)
            os << format_real(rec.sample.eta[d]) << ",";
        os << format_real(rec.sample.r) << "," << rec.tangent_dim << ",";
        for (double k : rec.kappas)
            os << format_real(k) << ",";
        os << format_real(rec.finite_trace) << "\n";
    }
}

struct TraceViolation {
    std::size_t record = 0;
    double margin = 0.0;  ///< h - finite_trace
};

struct TraceReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::vector<TraceViolation> violations;
    double worst_margin = kInf;
    double max_mean_curvature_gap = 0.0;  ///< max |finite_trace + H(z).eta| when the oracle knows H
    bool has_mean_curvature = false;
    bool pass() const { return violations.empty(); }
};

/// Per record margin h - finite_trace, violations beyond 5 step/r + 10 rho/r.
inline TraceReport check_trace_bound(const ClosedSetSample& g, double h, const std::vector<CurvatureRecord>& recs)
{
    TraceReport rep;
    const auto* oracle = g.oracle();
    rep.has_mean_curvature = oracle && oracle->mean_curvature;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& rec = recs[i];
        if (!rec.valid) {
            ++rep.skipped;
            continue;
        }
        ++rep.checked;
        const double margin = h - rec.finite_trace;
        const double tol = 5.0 * rec.step / rec.sample.r + 10.0 * g.rho() / rec.sample.r;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -tol)
            rep.violations.push_back({i, margin});
        if (rep.has_mean_curvature) {
            const Vec H = oracle->mean_curvature(as_span(rec.sample.z));
            rep.max_mean_curvature_gap = std::max(rep.max_mean_curvature_gap, std::abs(rec.finite_trace + H.dot(rec.sample.eta)));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Viscosity condition

/// f(y) = g.(y - x0) + 1/2 (y - x0)^T H (y - x0)
struct TestFunction {
    Vec gradient;
    Mat hessian;
    Vec base;

    TestFunction(Vec g, Mat H, Vec x0) : gradient(std::move(g)), hessian(std::move(H)), base(std::move(x0))
    {
        if (!(gradient.norm() > 0.0))
            throw Error("test function needs a nonzero gradient");
        if (hessian.rows() != gradient.size() || hessian.cols() != gradient.size() || base.size() != gradient.size())
            throw Error("test function: dimension mismatch");
    }

    double operator()(std::span<const double> y) const
    {
        const Vec d = Eigen::Map<const Vec>(y.data(), base.size()) - base;
        return gradient.dot(d) + 0.5 * d.dot(hessian * d);
    }
};

/// Sum of the m smallest eigenvalues.
inline double trace_lowest(const Mat& H, int m)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < m && i < es.eigenvalues().size(); ++i)
        s += es.eigenvalues()[i];
    return s;
}

/// Whether f restricted to the samples within `radius` of the base point
/// stays at or below f(base).
inline bool attains_local_max(const ClosedSetSample& g, const TestFunction& f, double radius)
{
    const double top = 0.0;  // f(base) = 0
    for (std::size_t i : g.tree().within(as_span(f.base), radius * radius))
        if (f(g[i]) > top + 1e-15)
            return false;
    return true;
}

struct ViscosityWitness {
    Vec base, gradient;
    Mat hessian;
    double trace_m = 0.0;
    double bound = 0.0;  ///< h |g| + tol
};

struct ViscosityReport {
    int m = 0;
    double h = 0.0;
    std::size_t trials = 0;
    std::size_t admissible = 0;
    std::size_t skipped = 0;    ///< never admissible, or based within local_radius of the rim
    std::size_t violations = 0;
    double worst_margin = kInf;  ///< min over admissible trials of h|g| + tol - trace_m H
    std::optional<ViscosityWitness> witness;

    double pass_rate() const { return admissible ? 1.0 - static_cast<double>(violations) / static_cast<double>(admissible) : 1.0; }
    std::string verdict() const
    {
        if (admissible == 0)
            return "inconclusive";
        return violations ? "witness-found" : "consistent";
    }
};

struct ViscosityOptions {
    double local_radius = 0.1;
    int attempts = 40;          ///< proposals per trial before it is skipped
    double max_ball_radius = 0.5;
};

/// Random quadratic test functions whose restriction to the samples peaks at
/// the base point. Base points come in two kinds, alternating: contact points
/// of random paraboloids with their contact normal, and nearest samples z of
/// random points p with eta = (p - z)/|p - z|. Both give exact normal-bundle
/// pairs of the net. The gradient is lambda * eta; the Hessian is a random
/// symmetric matrix plus a random multiple of the identity, so admissible and
/// near-critical proposals both occur.
inline ViscosityReport viscosity_test(const ClosedSetSample& g, int m, double h, std::size_t trials,
                                      std::uint64_t seed, const ViscosityOptions& opt = {})
{
    if (trials == 0)
        throw Error("viscosity_test: trials must be positive");
    require_nonempty(g);
    const int D = g.ambient_dim();
    const int n = g.n();
    ViscosityReport rep;
    rep.m = m;
    rep.h = h;
    rep.trials = trials;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);

    auto propose_base = [&](std::size_t trial) -> std::optional<std::pair<Vec, Vec>> {
        if (trial % 2 == 0) {
            const double a = 0.25 + 4.0 * U(rng);
            const Vec x = detail::random_in_disk(n, rng);
            const auto ids = contact_indices(g, a, x, 0.0);
            const Vec z = g.points().point(ids.front());
            return std::pair{z, contact_normal(a, x, z)};
        }
        const Vec p = g.points().point(pick(rng)) + opt.max_ball_radius * U(rng) * detail::random_unit(D, rng);
        const Vec z = g.points().point(g.tree().nearest(as_span(p)).index);
        const Vec d = p - z;
        if (!(d.norm() > 0.0))
            return std::nullopt;
        return std::pair{z, d.normalized()};
    };

    for (std::size_t t = 0; t < trials; ++t) {
        const auto base = propose_base(t);
        if (!base) {
            ++rep.skipped;
            continue;
        }
        const auto& [z, eta] = *base;
        // the sample ends at |x'| = 1; a test ball crossing it sees a false edge
        if (std::sqrt(horizontal_norm2(as_span(z))) > 1.0 - opt.local_radius) {
            ++rep.skipped;
            continue;
        }
        bool found = false;
        for (int attempt = 0; attempt < opt.attempts && !found; ++attempt) {
            const double lambda = 0.5 + 1.5 * U(rng);
            Mat A(D, D);
            for (int i = 0; i < D; ++i)
                for (int j = 0; j <= i; ++j)
                    A(i, j) = A(j, i) = N(rng);
            const double scale = lambda * (0.5 + 4.0 * U(rng)) / std::max(1e-12, A.norm());
            const Mat H = scale * A + lambda * (4.0 * U(rng) - 2.0) * Mat::Identity(D, D);
            TestFunction f(lambda * eta, H, z);
            if (!attains_local_max(g, f, opt.local_radius))
                continue;
            found = true;
            ++rep.admissible;
            const double hnorm = Eigen::SelfAdjointEigenSolver<Mat>(H, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
            const double tol = hnorm * g.rho();
            const double tr = trace_lowest(H, m);
            const double bound = h * f.gradient.norm() + tol;
            rep.worst_margin = std::min(rep.worst_margin, bound - tr);
            if (tr > bound) {
                ++rep.violations;
                if (!rep.witness)
                    rep.witness = ViscosityWitness{z, f.gradient, H, tr, bound};
            }
        }
        if (!found)
            ++rep.skipped;
    }
    return rep;
}

enum class BarrierVerdict { Pass, Fail, Inadmissible };

inline const char* barrier_verdict_tag(BarrierVerdict v)
{
    switch (v) {
    case BarrierVerdict::Pass: return "pass";
    case BarrierVerdict::Fail: return "fail";
    case BarrierVerdict::Inadmissible: return "inadmissible";
    }
    return "?";
}

struct BarrierCheck {
    BarrierVerdict verdict = BarrierVerdict::Inadmissible;
    double eigen_sum = 0.0;  ///< sum of the m largest eigenvalues of D^2 f(0)
    double tolerance = 0.0;
    std::string diagnostic;
};

/// For the graph of f(x) = 1/2 x^T A x lying above the samples near 0 with
/// 0 in Gamma: the m largest eigenvalues of A must sum to at least -h.
inline BarrierCheck barrier_eigen_check(const Mat& A, const ClosedSetSample& g, int m, double h, double radius = 0.1)
{
    BarrierCheck res;
    const int n = g.n();
    if (A.rows() != n || A.cols() != n)
        throw Error("barrier_eigen_check: Hessian must be n x n");
    const Vec origin = Vec::Zero(n + 1);
    if (distance(g, origin) > 1e-12) {
        res.diagnostic = "origin is not a sample";
        return res;
    }
    const Mat S = 0.5 * (A + A.transpose());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec x = horizontal(g[i]);
        if (x.norm() >= radius)
            continue;
        if (height(g[i]) > 0.5 * x.dot(S * x) + 1e-12) {
            res.diagnostic = "graph of f is not above the samples near 0";
            return res;
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    for (int i = 0; i < m; ++i)
        res.eigen_sum += es.eigenvalues()[n - 1 - i];
    res.tolerance = es.eigenvalues().cwiseAbs().maxCoeff() * g.rho();
    res.verdict = res.eigen_sum >= -h - res.tolerance ? BarrierVerdict::Pass : BarrierVerdict::Fail;
    return res;
}

} // namespace slp
