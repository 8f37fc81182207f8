#include <gtest/gtest.h>

#include "slp/normal_bundle.hpp"

using namespace slp;

namespace {

ClosedSetSample circle(double rho)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.n = 1;
    s.radius = 1.0;
    s.rho = rho;
    return build_scene(s);
}

ClosedSetSample plane(double rho, int n = 2)
{
    SceneSpec s;
    s.generator = Generator::Plane;
    s.n = n;
    s.rho = rho;
    return build_scene(s);
}

ClosedSetSample sphere(double rho)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.radius = 0.5;
    s.center = {0, 0, -0.5};
    s.rho = rho;
    return build_scene(s);
}

ClosedSetSample corner(double rho)
{
    SceneSpec s;
    s.generator = Generator::Graph;
    s.kind = GraphKind::Corner;
    s.n = 1;
    s.rho = rho;
    return build_scene(s);
}

std::size_t sample_near(const ClosedSetSample& g, const Vec& p) { return g.tree().nearest(as_span(p)).index; }

NormalSample radial(const ClosedSetSample& g, double theta, double sign, double r)
{
    Vec p(2);
    p << std::cos(theta), std::sin(theta);
    const auto i = sample_near(g, p);
    const Vec z = g.points().point(i);
    return {z, sign * z.normalized(), r, i};
}

}  // namespace

TEST(NormalBundle, CircleAcceptsBothRadialDirections)
{
    auto g = circle(1.0 / 128.0);
    const double res = 0.02;
    auto bundle = sample_normal_bundle(g, 0.25, res);
    std::vector<int> out(g.size(), 0), in(g.size(), 0);
    for (const auto& s : bundle) {
        const double c = s.eta.dot(s.z.normalized());
        if (c > std::cos(res))
            out[s.sample] = 1;
        if (c < -std::cos(res))
            in[s.sample] = 1;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        ASSERT_TRUE(out[i]) << i;
        ASSERT_TRUE(in[i]) << i;
    }
}

// Inward balls fit up to the radius of the circle: z - r z sits at distance
// 1 - |1 - r| from the circle, which equals r exactly when r <= 1.
TEST(NormalBundle, InwardBallsFitUpToTheRadius)
{
    auto g = circle(1.0 / 128.0);
    for (double th : {0.1, 1.0, 2.0}) {
        auto ns = radial(g, th, -1.0, 0.75);
        EXPECT_TRUE(in_normal_bundle(g, ns.z, ns.eta, 0.75));
        EXPECT_FALSE(in_normal_bundle(g, ns.z, ns.eta, 1.5));
        EXPECT_TRUE(in_normal_bundle(g, ns.z, -ns.eta, 1.5));
    }
}

TEST(NormalBundle, PlaneKeepsOnlyNearVerticalDirections)
{
    auto g = plane(1.0 / 64.0);
    Vec z = Vec::Zero(3);
    for (double r : {0.1, 0.5, 2.0}) {
        EXPECT_TRUE(in_normal_bundle(g, z, Vec::Unit(3, 2), r));
        EXPECT_TRUE(in_normal_bundle(g, z, -Vec::Unit(3, 2), r));
    }
    Vec tilted(3);
    tilted << std::sin(0.3), 0.0, std::cos(0.3);
    EXPECT_TRUE(in_normal_bundle(g, z, tilted, 0.01));
    EXPECT_FALSE(in_normal_bundle(g, z, tilted, 2.0));
}

TEST(NormalBundle, RadiusMonotonicity)
{
    auto g = circle(1.0 / 128.0);
    auto big = sample_normal_bundle(g, 0.4, 0.05);
    for (const auto& s : big)
        for (double r : {0.1, 0.25})
            ASSERT_TRUE(in_normal_bundle(g, s.z, s.eta, r));
}

TEST(Stratum, PlaneInteriorPoint)
{
    auto g = plane(1.0 / 256.0);
    auto est = stratum_dimension(g, sample_near(g, Vec::Zero(3)), 0.25, 0.05);
    EXPECT_EQ(est.dimension, 2);
    EXPECT_FALSE(est.low_confidence);
}

TEST(Stratum, CornerIsALowerStratumPoint)
{
    auto g = corner(1.0 / 512.0);
    EXPECT_EQ(stratum_dimension(g, sample_near(g, Vec::Zero(2)), 0.125, 0.02).dimension, 0);
    Vec smooth(2);
    smooth << 0.5, -0.5;
    EXPECT_EQ(stratum_dimension(g, sample_near(g, smooth), 0.125, 0.02).dimension, 1);
}

TEST(Stratum, CurveInR3)
{
    SceneSpec s;
    s.generator = Generator::CurveR3;
    s.radius = 0.5;
    for (double rho : {1.0 / 512.0, 1.0 / 1024.0}) {
        s.rho = rho;
        auto g = build_scene(s);
        EXPECT_EQ(stratum_dimension(g, 0, 0.125, 0.05).dimension, 1) << rho;
    }
}

TEST(Curvature, UnitCircleBothSides)
{
    auto g = circle(1.0 / 1024.0);
    for (double th : {0.2, 1.3, 2.9, 4.4}) {
        auto out = principal_curvatures(g, radial(g, th, 1.0, 0.25), 1.0 / 64.0);
        auto in = principal_curvatures(g, radial(g, th, -1.0, 0.25), 1.0 / 64.0);
        ASSERT_TRUE(out.valid && in.valid);
        EXPECT_NEAR(out.kappas[0], 1.0, 0.02);
        EXPECT_NEAR(in.kappas[0], -1.0, 0.02);
        EXPECT_EQ(out.tangent_dim, 1);
        EXPECT_NEAR(out.finite_trace, 1.0, 0.02);
    }
}

TEST(Curvature, TransferFormulaIsRadiusIndependent)
{
    auto g = circle(1.0 / 1024.0);
    for (double sign : {1.0, -1.0}) {
        auto a = principal_curvatures(g, radial(g, 0.7, sign, 0.125), 1.0 / 256.0);
        auto b = principal_curvatures(g, radial(g, 0.7, sign, 0.25), 1.0 / 256.0);
        ASSERT_TRUE(a.valid && b.valid);
        EXPECT_NE(a.chis[0], b.chis[0]);
        const double tol = 5.0 / 256.0 / 0.125 + 10.0 / 1024.0 / 0.125;
        EXPECT_NEAR(a.kappas[0], b.kappas[0], tol);
    }
}

TEST(Curvature, PlaneIsFlat)
{
    const double rho = 1.0 / 128.0, r = 0.25;
    auto g = plane(rho);
    for (double sign : {1.0, -1.0}) {
        NormalSample ns{Vec::Zero(3), sign * Vec::Unit(3, 2), r, sample_near(g, Vec::Zero(3))};
        auto rec = principal_curvatures(g, ns, 1.0 / 64.0);
        ASSERT_TRUE(rec.valid);
        for (double k : rec.kappas)
            EXPECT_NEAR(k, 0.0, 10 * rho / r);
    }
}

TEST(Curvature, AmbiguousFiberIsSkipped)
{
    auto g = circle(1.0 / 256.0);
    auto ns = radial(g, 0.0, -1.0, 1.0);  // ball centred at the circle's centre
    auto rec = principal_curvatures(g, ns, 1.0 / 64.0);
    EXPECT_FALSE(rec.valid);
    EXPECT_FALSE(rec.diagnostic.empty());
}

TEST(TraceBound, SphereOutwardEqualityAndInwardSignFlip)
{
    auto g = sphere(1.0 / 256.0);
    std::vector<CurvatureRecord> out, in;
    const Vec c = (Vec(3) << 0, 0, -0.5).finished();
    for (std::size_t i = 0; i < g.size(); i += 997) {
        const Vec z = g.points().point(i);
        const Vec nu = (z - c).normalized();
        out.push_back(principal_curvatures(g, {z, nu, 0.25, i}, 1.0 / 128.0));
        in.push_back(principal_curvatures(g, {z, -nu, 0.25, i}, 1.0 / 128.0));
    }
    int good = 0, total = 0;
    for (const auto& rec : out) {
        if (!rec.valid)
            continue;
        ++total;
        good += std::abs(rec.finite_trace - 4.0) <= 0.2;
    }
    EXPECT_GE(good, 0.9 * total);
    for (const auto& rec : in)
        if (rec.valid)
            EXPECT_NEAR(rec.finite_trace, -4.0, 0.2);
    auto rep = check_trace_bound(g, 4.0, out);
    EXPECT_TRUE(rep.pass());
    EXPECT_TRUE(rep.has_mean_curvature);
    int close = 0;
    for (const auto& rec : out) {
        const Vec H = g.oracle()->mean_curvature(as_span(rec.sample.z));
        close += std::abs(rec.finite_trace + H.dot(rec.sample.eta)) <= 0.2;
    }
    EXPECT_GE(close, 0.9 * static_cast<double>(out.size()));
}

TEST(TraceBound, PlaneMarginsVanish)
{
    auto g = plane(1.0 / 128.0);
    std::vector<CurvatureRecord> recs;
    for (std::size_t i = 0; i < g.size(); i += 1999)
        if (horizontal_norm2(g[i]) < 0.5)
            recs.push_back(principal_curvatures(g, {g.points().point(i), Vec::Unit(3, 2), 0.25, i}, 1.0 / 64.0));
    auto rep = check_trace_bound(g, 0.0, recs);
    EXPECT_TRUE(rep.pass());
    EXPECT_NEAR(rep.worst_margin, 0.0, 0.05);
}

namespace {

// Share of downward Gauss-map directions whose curvature is the infinite
// sentinel, with the nearest point left essentially unsmoothed so that folds
// between consecutive samples register as corners.
double cantor_sentinel_fraction(int depth, double rho)
{
    SceneSpec s;
    s.generator = Generator::CantorGraph;
    s.n = 1;
    s.depth = depth;
    s.rho = rho;
    auto g = build_scene(s);
    std::vector<Vec> dirs;
    for (int k = 0; k < 200; ++k) {
        Vec eta(2);
        eta << 0.02 + 0.45 * k / 200.0, -1.0;
        dirs.push_back(eta.normalized());
    }
    CurvatureOptions opt;
    opt.smoothing = 0.05 * rho;
    std::size_t valid = 0, sentinel = 0;
    for (const auto& ns : support_normal_samples(g, 1.0, dirs)) {
        auto rec = principal_curvatures(g, ns, 2.0 * rho, opt);
        if (!rec.valid)
            continue;
        ++valid;
        sentinel += rec.sentinel_count() > 0;
    }
    return static_cast<double>(sentinel) / static_cast<double>(valid);
}

}  // namespace

TEST(Cantor, SentinelFractionGrowsWithDepth)
{
    const double rho = 1.0 / 4096.0;
    const double f4 = cantor_sentinel_fraction(4, rho), f6 = cantor_sentinel_fraction(6, rho),
                 f8 = cantor_sentinel_fraction(8, rho);
    EXPECT_LE(f4, f6);
    EXPECT_LE(f6, f8);
    EXPECT_GT(f8, 0.05);
    EXPECT_GT(f8, f4);
    // beyond the sample resolution the share saturates, at a level that rises
    // under refinement
    EXPECT_GT(cantor_sentinel_fraction(12, rho / 2), cantor_sentinel_fraction(12, rho));
}

TEST(Cantor, SmoothScenesHaveNoSentinels)
{
    auto g = circle(1.0 / 1024.0);
    for (double th : {0.3, 2.0}) {
        auto rec = principal_curvatures(g, radial(g, th, 1.0, 0.25), 1.0 / 64.0);
        EXPECT_EQ(rec.sentinel_count(), 0u);
    }
}

TEST(Viscosity, PlaneTrivialExamples)
{
    auto g = plane(1.0 / 64.0);
    const Vec z = Vec::Zero(3);
    TestFunction flat(Vec::Unit(3, 2), Mat::Zero(3, 3), z);
    EXPECT_TRUE(attains_local_max(g, flat, 0.1));
    EXPECT_LE(trace_lowest(flat.hessian, 2), 0.0);
    Mat H = Mat::Zero(3, 3);
    H(2, 2) = 5.0;
    TestFunction vertical(0.01 * Vec::Unit(3, 2), H, z);
    EXPECT_TRUE(attains_local_max(g, vertical, 0.1));
    EXPECT_EQ(trace_lowest(H, 2), 0.0);
    EXPECT_THROW(TestFunction(Vec::Zero(3), H, z), Error);
}

TEST(Viscosity, SphereIsConsistent)
{
    auto g = sphere(1.0 / 64.0);
    auto rep = viscosity_test(g, 2, 4.0, 1000, 42);
    EXPECT_GE(rep.admissible, 500u);
    EXPECT_EQ(rep.verdict(), "consistent");
}

TEST(Viscosity, CornerHasAWitness)
{
    auto g = corner(1.0 / 256.0);
    auto rep = viscosity_test(g, 1, 0.0, 200, 42);
    EXPECT_EQ(rep.verdict(), "witness-found");
    ASSERT_TRUE(rep.witness);
    EXPECT_NEAR(rep.witness->base.norm(), 0.0, 1e-12);
    EXPECT_GT(rep.witness->trace_m, rep.witness->bound);
}

TEST(Viscosity, DeterministicForASeed)
{
    auto g = sphere(1.0 / 32.0);
    auto a = viscosity_test(g, 2, 4.0, 100, 9), b = viscosity_test(g, 2, 4.0, 100, 9);
    EXPECT_EQ(a.admissible, b.admissible);
    EXPECT_EQ(a.worst_margin, b.worst_margin);
}

TEST(BarrierEigen, Examples)
{
    auto g = plane(1.0 / 64.0);
    EXPECT_EQ(barrier_eigen_check(Mat::Zero(2, 2), g, 2, 0.0).verdict, BarrierVerdict::Pass);
    EXPECT_EQ(barrier_eigen_check(-2.0 * Mat::Identity(2, 2), g, 2, 0.0).verdict, BarrierVerdict::Inadmissible);
    auto s = sphere(1.0 / 64.0);
    auto osc = barrier_eigen_check(-2.0 * Mat::Identity(2, 2), s, 2, 4.0);
    EXPECT_EQ(osc.verdict, BarrierVerdict::Pass);
    EXPECT_NEAR(osc.eigen_sum, -4.0, 1e-12);
    EXPECT_EQ(barrier_eigen_check(-2.0 * Mat::Identity(2, 2), s, 2, 3.0).verdict, BarrierVerdict::Fail);
}
