#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "slp/measure.hpp"
#include "slp/scene.hpp"

using namespace slp;

namespace {

SceneSpec plane_spec(double rho = 1.0 / 128.0)
{
    SceneSpec s;
    s.id = "plane";
    s.generator = Generator::Plane;
    s.n = 2;
    s.rho = rho;
    return s;
}

double brute_distance(const ClosedSetSample& g, std::span<const double> p)
{
    double best = kInf;
    for (std::size_t i = 0; i < g.size(); ++i)
        best = std::min(best, dist2(g[i], p));
    return std::sqrt(best);
}

}  // namespace

TEST(BuildScene, PlaneFillsTheDiskAtHeightZero)
{
    auto g = build_scene(plane_spec());
    EXPECT_EQ(g.ambient_dim(), 3);
    EXPECT_EQ(g.intrinsic_dim(), 2);
    EXPECT_EQ(g.mc_bound(), 0.0);
    EXPECT_EQ(g.height_bound(), 0.0);
    // lattice count ~ pi / rho^2
    const double expected = M_PI * 128.0 * 128.0;
    EXPECT_NEAR(static_cast<double>(g.size()), expected, 0.01 * expected);
    for (std::size_t i = 0; i < g.size(); ++i) {
        ASSERT_LT(horizontal_norm2(g[i]), 1.0);
        ASSERT_EQ(height(g[i]), 0.0);
    }
}

TEST(BuildScene, SphereCapDeclaresNOverR)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.n = 2;
    s.radius = 0.5;
    s.center = {0, 0, -0.5};
    s.rho = 1.0 / 64.0;
    auto g = build_scene(s);
    EXPECT_DOUBLE_EQ(g.mc_bound(), 4.0);
    ASSERT_NE(g.oracle(), nullptr);
    for (std::size_t i = 0; i < g.size(); ++i)
        ASSERT_NEAR(g.oracle()->distance(g[i]), 0.0, 1e-12);
}

TEST(BuildScene, SphereNetCoversTheOracleSet)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.n = 2;
    s.radius = 0.5;
    s.rho = 1.0 / 32.0;
    auto g = build_scene(s);
    std::mt19937_64 rng(7);
    int drawn = 0;
    while (drawn < 2000) {
        auto z = g.oracle()->random_point(rng);
        if (!z)
            continue;
        ++drawn;
        ASSERT_LE(distance(g, *z), s.rho);
    }
}

TEST(BuildScene, CantorSamplesMatchTheRecursiveConstruction)
{
    SceneSpec s;
    s.generator = Generator::CantorGraph;
    s.n = 1;
    s.depth = 8;
    s.rho = 1.0 / 256.0;
    auto g = build_scene(s);
    EXPECT_EQ(g.intrinsic_dim(), 1);
    EXPECT_TRUE(std::isinf(g.mc_bound()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = 0.5 * (g[i][0] + 1.0);
        ASSERT_NEAR(g[i][1], cantor_primitive(8, t), 1e-15);
    }
}

// Independent oracle: F_k(t) = int_0^t c_k by composite midpoint quadrature of
// the Cantor-function approximant, checked at ternary breakpoints.
TEST(Cantor, PrimitiveAgreesWithQuadratureOfTheCantorFunction)
{
    const int depth = 6;
    const int steps = 3 * 3 * 3 * 3 * 3 * 3 * 40;
    const double dt = 1.0 / steps;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
        if (i % 40 == 0) {
            const double t = i * dt;
            ASSERT_NEAR(acc, cantor_primitive(depth, t), 1e-9) << "t=" << t;
        }
        acc += cantor_function(depth, (i + 0.5) * dt) * dt;
    }
    EXPECT_NEAR(acc, 0.5, 1e-9);
    EXPECT_DOUBLE_EQ(cantor_primitive(depth, 1.0), 0.5);
}

TEST(Cantor, PlateauValuesAreExact)
{
    EXPECT_DOUBLE_EQ(cantor_function(8, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(cantor_function(8, 1.0 / 6.0), 0.25);
    EXPECT_DOUBLE_EQ(cantor_primitive(1, 1.0 / 3.0), 1.0 / 12.0);
    EXPECT_DOUBLE_EQ(cantor_primitive(1, 2.0 / 3.0), 0.25);
}

TEST(BuildScene, Rejections)
{
    auto s = plane_spec();
    s.rho = 0.0;
    EXPECT_THROW(build_scene(s), Error);
    SceneSpec c;
    c.generator = Generator::CurveR3;
    c.radius = 1.5;
    EXPECT_THROW(build_scene(c), Error);
    SceneSpec p;
    p.generator = Generator::PointUnion;
    p.n = 1;
    p.points = {{0.2, 0.0}, {1.2, 0.0}};
    EXPECT_THROW(build_scene(p), Error);
}

TEST(BuildScene, Deterministic)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.n = 2;
    s.rho = 1.0 / 32.0;
    auto a = build_scene(s), b = build_scene(s);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int d = 0; d < 3; ++d)
            ASSERT_EQ(a[i][static_cast<std::size_t>(d)], b[i][static_cast<std::size_t>(d)]);
}

TEST(Distance, PlaneExamples)
{
    auto g = build_scene(plane_spec());
    EXPECT_DOUBLE_EQ(distance(g, Vec{Vec::Unit(3, 2)}), 1.0);
    Vec p(3);
    p << 0, 0, -2;
    EXPECT_DOUBLE_EQ(distance(g, p), 2.0);
}

TEST(Distance, CantorMatchesExhaustiveScan)
{
    SceneSpec s;
    s.generator = Generator::CantorGraph;
    s.n = 1;
    s.depth = 8;
    s.rho = 1.0 / 512.0;
    auto g = build_scene(s);
    // midpoint of the central plateau t in [1/3, 2/3] is x = 0
    for (double lift : {0.01, 0.1, 0.7}) {
        Vec p(2);
        p << 0.0, cantor_primitive(8, 0.5) + lift;
        EXPECT_NEAR(distance(g, p), brute_distance(g, as_span(p)), 1e-12);
    }
}

TEST(Distance, OneLipschitz)
{
    SceneSpec s;
    s.generator = Generator::Graph;
    s.kind = GraphKind::Bump;
    s.amplitude = 0.1;
    s.rho = 1.0 / 64.0;
    auto g = build_scene(s);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        Vec p(3), q(3);
        for (int d = 0; d < 3; ++d) {
            p[d] = U(rng);
            q[d] = U(rng);
        }
        ASSERT_LE(std::abs(distance(g, p) - distance(g, q)), (p - q).norm() + 1e-14);
        ASSERT_NEAR(distance(g, p), brute_distance(g, as_span(p)), 1e-14);
    }
}

TEST(Distance, EmptySetThrows)
{
    ClosedSetSample empty("e", 1, 0.1, 0.0, PointSet(2));
    EXPECT_THROW(distance(empty, Vec::Zero(2).eval()), Error);
}

TEST(NearestPoints, PlaneGridPoint)
{
    auto g = build_scene(plane_spec());
    Vec p(3);
    p << 0.3, 0.2, 0.7;
    auto near = nearest_points(g, p, 0.0);
    ASSERT_EQ(near.size(), 1u);
    EXPECT_NEAR(near[0][0], 0.3, 1.0 / 256.0);
    EXPECT_NEAR(near[0][1], 0.2, 1.0 / 256.0);
    EXPECT_EQ(near[0][2], 0.0);
    EXPECT_NEAR((near[0] - p).norm(), distance(g, p), 1e-15);
}

TEST(NearestPoints, CircleCenterSeesEverySample)
{
    SceneSpec s;
    s.generator = Generator::Sphere;
    s.n = 1;
    s.radius = 1.0;
    s.rho = 1.0 / 64.0;
    auto g = build_scene(s);
    auto near = nearest_points(g, Vec::Zero(2).eval(), s.rho);
    EXPECT_EQ(near.size(), g.size());
}

TEST(NearestPoints, TwoPointScene)
{
    SceneSpec s;
    s.generator = Generator::PointUnion;
    s.n = 1;
    s.points = {{-0.5, 0.0}, {0.5, 0.0}};
    auto g = build_scene(s);
    Vec p(2);
    p << 0.0, 0.3;
    EXPECT_EQ(nearest_points(g, p, 0.0).size(), 2u);
}

TEST(BoxCount, UnitSegment)
{
    PointSet seg(2);
    const int N = 4096;
    for (int i = 0; i <= N; ++i)
        seg.push_back(std::vector<double>{0.1 + static_cast<double>(i) / N, 0.3});
    auto est = box_count_measure(seg, 1, 1.0 / 64.0, 1.0 / N);
    EXPECT_NEAR(est.value, 1.0, 2.0 / 64.0);
    EXPECT_TRUE(est.reliable);
}

TEST(BoxCount, TiltedSegmentIsCalibrated)
{
    PointSet seg(3);
    const int N = 8192;
    Vec dir(3);
    dir << 1, std::sqrt(2.0), -0.5 * std::sqrt(3.0);  // irrational slopes avoid corner crossings
    dir.normalize();
    for (int i = 0; i <= N; ++i) {
        Vec p = 0.1 * Vec::Ones(3) + dir * (static_cast<double>(i) / N);
        seg.push_back(p);
    }
    EXPECT_NEAR(box_count_measure(seg, 1, 1.0 / 64.0).value, 1.0, 3.0 / 64.0);
}

TEST(BoxCount, UnitCircleLength)
{
    PointSet c(2);
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
        const double t = 2 * M_PI * i / N;
        c.push_back(std::vector<double>{std::cos(t), std::sin(t)});
    }
    EXPECT_NEAR(box_count_measure(c, 1, 1.0 / 128.0).value, 2 * M_PI, 0.05 * 2 * M_PI);
}

TEST(BoxCount, FullDiskArea)
{
    PointSet disk(2);
    for (const Vec& x : detail::disk_lattice(2, 1.0 / 256.0))
        disk.push_back(x);
    EXPECT_NEAR(box_count_measure(disk, 2, 1.0 / 128.0).value, M_PI, 0.05 * M_PI);
}

TEST(BoxCount, PlaneConvergesMonotonically)
{
    auto g = build_scene(plane_spec(1.0 / 512.0));
    PointSet feet(2);
    for (std::size_t i = 0; i < g.size(); ++i)
        feet.push_back(horizontal(g[i]));
    double prev = kInf;
    for (double side : {1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0}) {
        const double err = std::abs(box_count_measure(feet, 2, side).value - M_PI);
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(BoxCount, BelowSampleResolutionIsUnreliable)
{
    PointSet seg(2);
    for (int i = 0; i <= 64; ++i)
        seg.push_back(std::vector<double>{i / 64.0, 0.0});
    auto est = box_count_measure(seg, 1, 1.0 / 512.0, 1.0 / 64.0);
    EXPECT_FALSE(est.reliable);
    EXPECT_TRUE(std::isinf(est.error_bound));
}

TEST(SceneIo, RoundTrip)
{
    auto g = build_scene(plane_spec(1.0 / 16.0));
    std::stringstream ss;
    write_points(ss, g.points());
    auto back = load_scene(ss, "copy", 2, 1.0 / 16.0, 0.0);
    ASSERT_EQ(back.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        ASSERT_NEAR(dist2(back[i], g[i]), 0.0, 1e-20);
}

TEST(SceneIo, MalformedLineReportsLineNumber)
{
    std::stringstream ss("z1,z2\n0.1,0.2\n0.3,oops\n");
    try {
        read_points(ss);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}
