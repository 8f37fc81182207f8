#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "core.hpp"

namespace slp {

/// kd-tree over the horizontal coordinates z' of a point set, each node
/// carrying the largest height z_{n+1} below it. Supports branch-and-bound
/// queries of  max_z  z_{n+1} - (a/2)|z' - x|^2  and enumeration of all
/// samples whose value clears a threshold.
class HeightIndex {
public:
    explicit HeightIndex(const PointSet& pts) : pts_(&pts), n_(pts.dim() - 1)
    {
        order_.resize(pts.size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        if (!order_.empty())
            build(0, order_.size());
    }

    struct Best {
        std::size_t index = 0;
        double value = -kInf;
    };

    Best best(std::span<const double> x, double a) const
    {
        Best b;
        if (!order_.empty())
            best_rec(0, x, a, b);
        return b;
    }

    /// Indices (ascending) of samples with z_{n+1} - (a/2)|z'-x|^2 >= threshold.
    std::vector<std::size_t> collect(std::span<const double> x, double a, double threshold) const
    {
        std::vector<std::size_t> out;
        if (!order_.empty())
            collect_rec(0, x, a, threshold, out);
        std::sort(out.begin(), out.end());
        return out;
    }

    double value(std::size_t i, std::span<const double> x, double a) const
    {
        auto z = (*pts_)[i];
        double s = 0.0;
        for (int d = 0; d < n_; ++d) {
            const double e = z[static_cast<std::size_t>(d)] - x[static_cast<std::size_t>(d)];
            s += e * e;
        }
        return z[static_cast<std::size_t>(n_)] - 0.5 * a * s;
    }

private:
    static constexpr std::size_t kLeaf = 8;

    struct Node {
        std::uint32_t begin, end;
        std::int32_t left = -1, right = -1;
        double max_height;
        std::vector<double> lo, hi;
    };

    std::int32_t build(std::size_t begin, std::size_t end)
    {
        Node node;
        node.begin = static_cast<std::uint32_t>(begin);
        node.end = static_cast<std::uint32_t>(end);
        node.lo.assign(static_cast<std::size_t>(n_), kInf);
        node.hi.assign(static_cast<std::size_t>(n_), -kInf);
        node.max_height = -kInf;
        for (std::size_t i = begin; i < end; ++i) {
            auto z = (*pts_)[order_[i]];
            for (int d = 0; d < n_; ++d) {
                node.lo[static_cast<std::size_t>(d)] = std::min(node.lo[static_cast<std::size_t>(d)], z[static_cast<std::size_t>(d)]);
                node.hi[static_cast<std::size_t>(d)] = std::max(node.hi[static_cast<std::size_t>(d)], z[static_cast<std::size_t>(d)]);
            }
            node.max_height = std::max(node.max_height, z[static_cast<std::size_t>(n_)]);
        }
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeaf)
            return id;
        int axis = 0;
        double widest = -1.0;
        for (int d = 0; d < n_; ++d) {
            const double w = node.hi[static_cast<std::size_t>(d)] - node.lo[static_cast<std::size_t>(d)];
            if (w > widest) {
                widest = w;
                axis = d;
            }
        }
        if (widest <= 0.0)
            return id;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t p, std::uint32_t q) {
                             return (*pts_)[p][static_cast<std::size_t>(axis)] < (*pts_)[q][static_cast<std::size_t>(axis)];
                         });
        const std::int32_t l = build(begin, mid);
        const std::int32_t r = build(mid, end);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    double upper_bound(const Node& node, std::span<const double> x, double a) const
    {
        double s = 0.0;
        for (int d = 0; d < n_; ++d) {
            const auto k = static_cast<std::size_t>(d);
            double e = 0.0;
            if (x[k] < node.lo[k])
                e = node.lo[k] - x[k];
            else if (x[k] > node.hi[k])
                e = x[k] - node.hi[k];
            s += e * e;
        }
        return node.max_height - 0.5 * a * s;
    }

    void best_rec(std::int32_t id, std::span<const double> x, double a, Best& b) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (upper_bound(node, x, a) < b.value)
            return;
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const double v = value(order_[i], x, a);
                if (v > b.value || (v == b.value && order_[i] < b.index)) {
                    b.value = v;
                    b.index = order_[i];
                }
            }
            return;
        }
        const Node& l = nodes_[static_cast<std::size_t>(node.left)];
        const Node& r = nodes_[static_cast<std::size_t>(node.right)];
        if (upper_bound(l, x, a) >= upper_bound(r, x, a)) {
            best_rec(node.left, x, a, b);
            best_rec(node.right, x, a, b);
        } else {
            best_rec(node.right, x, a, b);
            best_rec(node.left, x, a, b);
        }
    }

    void collect_rec(std::int32_t id, std::span<const double> x, double a, double thr, std::vector<std::size_t>& out) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (upper_bound(node, x, a) < thr)
            return;
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i)
                if (value(order_[i], x, a) >= thr)
                    out.push_back(order_[i]);
            return;
        }
        collect_rec(node.left, x, a, thr, out);
        collect_rec(node.right, x, a, thr, out);
    }

    const PointSet* pts_;
    int n_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace slp
