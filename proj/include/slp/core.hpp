#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace slp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised for malformed inputs (bad parameters, empty sets, domain violations).
class Error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense list of points of a fixed dimension, stored row-major in one buffer.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
    bool empty() const { return data_.empty(); }

    void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }

    void push_back(std::span<const double> p)
    {
        if (static_cast<int>(p.size()) != dim_)
            throw Error("PointSet: dimension mismatch");
        data_.insert(data_.end(), p.begin(), p.end());
    }
    void push_back(const Vec& p) { push_back(std::span<const double>(p.data(), static_cast<std::size_t>(p.size()))); }

    std::span<const double> operator[](std::size_t i) const
    {
        return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    std::span<double> operator[](std::size_t i)
    {
        return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }

    Vec point(std::size_t i) const
    {
        auto s = (*this)[i];
        return Eigen::Map<const Vec>(s.data(), dim_);
    }

    const std::vector<double>& raw() const { return data_; }

private:
    int dim_ = 0;
    std::vector<double> data_;
};

inline double dist2(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline std::span<const double> as_span(const Vec& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Horizontal part z' of a point z = (z', z_{n+1}).
inline Vec horizontal(std::span<const double> z)
{
    return Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(z.size() - 1));
}

inline double height(std::span<const double> z) { return z.back(); }

inline double horizontal_norm2(std::span<const double> z)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); ++i)
        s += z[i] * z[i];
    return s;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d)
{
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Worker count used by parallel maps; the CLI sets it from --threads.
inline std::atomic<unsigned>& default_threads_slot()
{
    static std::atomic<unsigned> slot{1};
    return slot;
}
inline unsigned default_threads() { return std::max(1u, default_threads_slot().load()); }
inline void set_default_threads(unsigned k) { default_threads_slot().store(std::max(1u, k)); }

/// Runs fn(i) for i in [0, count). Each index is handled exactly once; results
/// written to index-addressed slots are therefore independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = default_threads())
{
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
            next.store(count);
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads - 1);
        for (unsigned t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace slp
