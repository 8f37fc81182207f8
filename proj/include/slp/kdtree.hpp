#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "core.hpp"

namespace slp {

/// Static kd-tree over a PointSet. Queries are exact (same squared distances
/// as a linear scan) and read-only, so a built tree can be shared across threads.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(const PointSet& points) : points_(&points)
    {
        index_.resize(points.size());
        std::iota(index_.begin(), index_.end(), std::uint32_t{0});
        if (!index_.empty())
            nodes_.reserve(2 * index_.size() / kLeafSize + 2);
        if (!index_.empty())
            build(0, index_.size(), 0);
    }

    bool empty() const { return index_.empty(); }

    struct Hit {
        std::size_t index = 0;
        double dist2 = kInf;
    };

    /// Closest point; ties resolve to the smallest index.
    Hit nearest(std::span<const double> q) const
    {
        Hit best;
        if (!index_.empty())
            nearest_rec(0, q, best);
        return best;
    }

    /// Indices of all points with |p - q|^2 <= r2, in ascending index order.
    std::vector<std::size_t> within(std::span<const double> q, double r2) const
    {
        std::vector<std::size_t> out;
        if (!index_.empty())
            within_rec(0, q, r2, out);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static constexpr std::size_t kLeafSize = 12;

    struct Node {
        std::uint32_t begin, end;
        int axis;          // -1 for leaves
        double split;
        std::int32_t left, right;
        std::vector<double> lo, hi;  // bounding box
    };

    std::int32_t build(std::size_t begin, std::size_t end, int depth)
    {
        const int dim = points_->dim();
        Node node;
        node.begin = static_cast<std::uint32_t>(begin);
        node.end = static_cast<std::uint32_t>(end);
        node.lo.assign(dim, kInf);
        node.hi.assign(dim, -kInf);
        for (std::size_t i = begin; i < end; ++i) {
            auto p = (*points_)[index_[i]];
            for (int d = 0; d < dim; ++d) {
                node.lo[d] = std::min(node.lo[d], p[d]);
                node.hi[d] = std::max(node.hi[d], p[d]);
            }
        }
        node.axis = -1;
        node.split = 0.0;
        node.left = node.right = -1;
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize)
            return id;

        int axis = 0;
        double widest = -1.0;
        for (int d = 0; d < dim; ++d) {
            const double w = node.hi[d] - node.lo[d];
            if (w > widest) {
                widest = w;
                axis = d;
            }
        }
        if (widest <= 0.0)
            return id;  // all points coincide
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                         index_.begin() + static_cast<std::ptrdiff_t>(mid),
                         index_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return (*points_)[a][axis] < (*points_)[b][axis];
                         });
        const double split = (*points_)[index_[mid]][axis];
        const std::int32_t l = build(begin, mid, depth + 1);
        const std::int32_t r = build(mid, end, depth + 1);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    double box_dist2(const Node& n, std::span<const double> q) const
    {
        double s = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) {
            double e = 0.0;
            if (q[d] < n.lo[d])
                e = n.lo[d] - q[d];
            else if (q[d] > n.hi[d])
                e = q[d] - n.hi[d];
            s += e * e;
        }
        return s;
    }

    void nearest_rec(std::int32_t id, std::span<const double> q, Hit& best) const
    {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (box_dist2(n, q) > best.dist2)
            return;
        if (n.axis < 0) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const double d2 = dist2((*points_)[index_[i]], q);
                if (d2 < best.dist2 || (d2 == best.dist2 && index_[i] < best.index)) {
                    best.dist2 = d2;
                    best.index = index_[i];
                }
            }
            return;
        }
        const bool go_left = q[static_cast<std::size_t>(n.axis)] < n.split;
        nearest_rec(go_left ? n.left : n.right, q, best);
        nearest_rec(go_left ? n.right : n.left, q, best);
    }

    void within_rec(std::int32_t id, std::span<const double> q, double r2, std::vector<std::size_t>& out) const
    {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (box_dist2(n, q) > r2)
            return;
        if (n.axis < 0) {
            for (std::uint32_t i = n.begin; i < n.end; ++i)
                if (dist2((*points_)[index_[i]], q) <= r2)
                    out.push_back(index_[i]);
            return;
        }
        within_rec(n.left, q, r2, out);
        within_rec(n.right, q, r2, out);
    }

    const PointSet* points_ = nullptr;
    std::vector<std::uint32_t> index_;
    std::vector<Node> nodes_;
};

} // namespace slp
