#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "kdtree.hpp"

namespace slp {

struct MeasureEstimate {
    double value = 0.0;
    int dimension = 0;
    double resolution = 0.0;
    double error_bound = 0.0;
    bool reliable = true;  ///< false when the box side undercuts the sample resolution
};

namespace detail {

using BoxKey = std::vector<std::int64_t>;

inline BoxKey box_key(std::span<const double> p, double side)
{
    BoxKey k(p.size());
    for (std::size_t d = 0; d < p.size(); ++d)
        k[d] = static_cast<std::int64_t>(std::floor(p[d] / side + 1e-9));
    return k;
}

/// Occupied boxes of side `side`: sorted unique keys plus, for each key, the
/// indices of the points it contains.
struct BoxGrid {
    std::vector<BoxKey> keys;
    std::vector<std::vector<std::size_t>> members;

    BoxGrid(const PointSet& pts, double side)
    {
        std::vector<std::pair<BoxKey, std::size_t>> tagged;
        tagged.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            tagged.emplace_back(box_key(pts[i], side), i);
        std::sort(tagged.begin(), tagged.end());
        for (auto& [k, i] : tagged) {
            if (keys.empty() || keys.back() != k) {
                keys.push_back(k);
                members.emplace_back();
            }
            members.back().push_back(i);
        }
    }

    const std::vector<std::size_t>* find(const BoxKey& k) const
    {
        auto it = std::lower_bound(keys.begin(), keys.end(), k);
        if (it == keys.end() || *it != k)
            return nullptr;
        return &members[static_cast<std::size_t>(it - keys.begin())];
    }
};

/// Sum over all d-element coordinate subsets of |det| of the corresponding
/// d x d minor of the D x d orthonormal frame T. This is the expected number
/// of unit boxes a unit d-area of the plane spanned by T passes through.
inline double box_crossing_density(const Mat& T)
{
    const auto D = static_cast<int>(T.rows());
    const auto d = static_cast<int>(T.cols());
    std::vector<int> idx(static_cast<std::size_t>(d));
    std::iota(idx.begin(), idx.end(), 0);
    double total = 0.0;
    while (true) {
        Mat minor(d, d);
        for (int a = 0; a < d; ++a)
            minor.row(a) = T.row(idx[static_cast<std::size_t>(a)]);
        total += std::abs(minor.determinant());
        int i = d - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == D - d + i)
            --i;
        if (i < 0)
            break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < d; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return total;
}

/// Leading-d principal directions of the points (orthonormal columns).
inline Mat principal_frame(const PointSet& pts, const std::vector<std::size_t>& ids, int d)
{
    const int D = pts.dim();
    Vec mean = Vec::Zero(D);
    for (std::size_t i : ids)
        mean += Eigen::Map<const Vec>(pts[i].data(), D);
    mean /= static_cast<double>(ids.size());
    Mat cov = Mat::Zero(D, D);
    for (std::size_t i : ids) {
        const Vec v = Eigen::Map<const Vec>(pts[i].data(), D) - mean;
        cov += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    return es.eigenvectors().rightCols(d);  // eigenvalues ascend
}

/// Per-box contributions to the d-dimensional box count: box_side^d divided
/// by the crossing density of the local tangent plane.
inline std::vector<double> box_weights(const PointSet& pts, const BoxGrid& grid, int d, double side)
{
    const int D = pts.dim();
    std::vector<double> w(grid.keys.size(), 1.0);
    if (d == 0)
        return w;
    if (d >= D) {
        std::fill(w.begin(), w.end(), std::pow(side, D));
        return w;
    }
    const double cell = std::pow(side, d);
    std::vector<std::size_t> neigh;
    for (std::size_t b = 0; b < grid.keys.size(); ++b) {
        const BoxKey& k = grid.keys[b];
        neigh.clear();
        // 3^D neighbourhood of the box
        BoxKey off(static_cast<std::size_t>(D), -1);
        while (true) {
            BoxKey q = k;
            for (int a = 0; a < D; ++a)
                q[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
            if (const auto* mem = grid.find(q))
                neigh.insert(neigh.end(), mem->begin(), mem->end());
            int a = D - 1;
            while (a >= 0 && ++off[static_cast<std::size_t>(a)] > 1) {
                off[static_cast<std::size_t>(a)] = -1;
                --a;
            }
            if (a < 0)
                break;
        }
        double density = 1.0;
        if (static_cast<int>(neigh.size()) > d) {
            density = box_crossing_density(principal_frame(pts, neigh, d));
            if (!(density >= 1.0))
                density = 1.0;  // a coordinate-aligned frame gives exactly 1
        }
        w[b] = cell / density;
    }
    return w;
}

inline double box_count_level(const PointSet& pts, int d, double side)
{
    if (pts.empty())
        return 0.0;
    BoxGrid grid(pts, side);
    const auto w = box_weights(pts, grid, d, side);
    return std::accumulate(w.begin(), w.end(), 0.0);
}

} // namespace detail

/// d-dimensional measure of a point set by dyadic box counting at side
/// `box_side`. For d below the ambient dimension each occupied box contributes
/// box_side^d divided by the box-crossing density of the local tangent plane
/// (principal directions of the neighbouring points), so that flat unit
/// d-cubes report 1 in any orientation. The error bound is the difference to
/// the estimate at twice the box side.
inline MeasureEstimate box_count_measure(const PointSet& pts, int d, double box_side,
                                         double sample_resolution = 0.0)
{
    if (d < 0)
        throw Error("box_count_measure: dimension must be non-negative");
    if (!(box_side > 0.0))
        throw Error("box_count_measure: box side must be positive");
    MeasureEstimate est;
    est.dimension = d;
    est.resolution = box_side;
    est.value = detail::box_count_level(pts, d, box_side);
    if (box_side < sample_resolution * (1.0 - 1e-12)) {
        est.reliable = false;
        est.error_bound = kInf;
        return est;
    }
    est.error_bound = std::abs(est.value - detail::box_count_level(pts, d, 2.0 * box_side));
    return est;
}

namespace detail {

/// Per-point share of H^n for points forming a graph over their first n
/// coordinates: each occupied box of side `side` in the projection carries
/// side^n times the area factor 1/|nu_{n+1}| of the local tangent plane,
/// split evenly among its points.
inline std::vector<double> graph_point_weights(const PointSet& pts, double side)
{
    std::vector<double> out(pts.size(), 0.0);
    if (pts.empty())
        return out;
    const int D = pts.dim();
    const int n = D - 1;
    PointSet proj(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
        proj.push_back(pts[i].first(static_cast<std::size_t>(n)));
    BoxGrid grid(proj, side);
    const double cell = std::pow(side, n);
    std::vector<std::size_t> neigh;
    for (std::size_t b = 0; b < grid.keys.size(); ++b) {
        neigh.clear();
        BoxKey off(static_cast<std::size_t>(n), -1);
        while (true) {
            BoxKey q = grid.keys[b];
            for (int a = 0; a < n; ++a)
                q[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
            if (const auto* mem = grid.find(q))
                neigh.insert(neigh.end(), mem->begin(), mem->end());
            int a = n - 1;
            while (a >= 0 && ++off[static_cast<std::size_t>(a)] > 1) {
                off[static_cast<std::size_t>(a)] = -1;
                --a;
            }
            if (a < 0)
                break;
        }
        double factor = 1.0;
        if (static_cast<int>(neigh.size()) > n) {
            const Mat T = principal_frame(pts, neigh, n);
            // |det| of the projected frame is the Jacobian of the projection
            const double det = std::abs(T.topRows(n).determinant());
            if (det > 1e-3)
                factor = 1.0 / det;
        }
        const auto& mem = grid.members[b];
        for (std::size_t i : mem)
            out[i] = cell * factor / static_cast<double>(mem.size());
    }
    return out;
}

/// Per-point share of the length of the minimum spanning forest whose edges
/// are no longer than `gap` (each edge split between its ends).
inline std::vector<double> chain_point_weights(const PointSet& pts, double gap, std::size_t* components = nullptr)
{
    const std::size_t N = pts.size();
    std::vector<double> out(N, 0.0);
    struct Edge {
        double len;
        std::size_t i, j;
        bool operator<(const Edge& o) const { return std::tie(len, i, j) < std::tie(o.len, o.i, o.j); }
    };
    std::vector<Edge> edges;
    KdTree tree(pts);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j : tree.within(pts[i], gap * gap))
            if (j > i)
                edges.push_back({std::sqrt(dist2(pts[i], pts[j])), i, j});
    std::sort(edges.begin(), edges.end());
    std::vector<std::size_t> parent(N);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t comps = N;
    for (const Edge& e : edges) {
        const auto ri = find(e.i), rj = find(e.j);
        if (ri == rj)
            continue;
        parent[std::max(ri, rj)] = std::min(ri, rj);
        --comps;
        out[e.i] += 0.5 * e.len;
        out[e.j] += 0.5 * e.len;
    }
    if (components)
        *components = comps;
    return out;
}

} // namespace detail

/// H^n of a point set that is a graph over its first n coordinates, with the
/// area factor taken from local tangent planes. The error bound is the change
/// at twice the box side.
inline MeasureEstimate graph_measure(const PointSet& pts, double side)
{
    if (!(side > 0.0))
        throw Error("graph_measure: box side must be positive");
    auto total = [&](double s) {
        const auto w = detail::graph_point_weights(pts, s);
        return std::accumulate(w.begin(), w.end(), 0.0);
    };
    MeasureEstimate est;
    est.dimension = pts.dim() - 1;
    est.resolution = side;
    est.value = total(side);
    est.error_bound = std::abs(est.value - total(2.0 * side));
    return est;
}

/// Length of a sampled curve as the minimum spanning forest with edges up to
/// `gap`. The error bound adds one gap per component to the change at 2 gap.
inline MeasureEstimate chain_measure(const PointSet& pts, double gap)
{
    if (!(gap > 0.0))
        throw Error("chain_measure: gap must be positive");
    std::size_t comps = 0;
    const auto w = detail::chain_point_weights(pts, gap, &comps);
    const auto w2 = detail::chain_point_weights(pts, 2.0 * gap);
    MeasureEstimate est;
    est.dimension = 1;
    est.resolution = gap;
    est.value = std::accumulate(w.begin(), w.end(), 0.0);
    est.error_bound = std::abs(est.value - std::accumulate(w2.begin(), w2.end(), 0.0)) +
                      (pts.empty() ? 0.0 : gap * static_cast<double>(comps));
    return est;
}

} // namespace slp
