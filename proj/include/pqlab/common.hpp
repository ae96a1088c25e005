#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pqlab {

// Thrown on rejected input (bad polygon, bad parameters, format errors).
// The CLI maps it to exit code 2.
class rejection : public std::runtime_error {
public:
    explicit rejection(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an experiment cannot produce a verdict (solver failure,
// unstable flags). The CLI maps it to exit code 3.
class inconclusive : public std::runtime_error {
public:
    explicit inconclusive(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void concat_into(std::ostringstream&) {}
template <class T, class... Rest>
void concat_into(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    concat_into(os, rest...);
}
}  // namespace detail

template <class... Args>
std::string concat(const Args&... args) {
    std::ostringstream os;
    os.precision(17);
    detail::concat_into(os, args...);
    return os.str();
}

template <class... Args>
[[noreturn]] void reject(const Args&... args) {
    throw rejection(concat(args...));
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Deterministic pairwise-tree summation. The reduction tree depends only on
// the element count (fixed leaf chunks of 256), so results do not depend on
// thread count or evaluation order.
inline double pairwise_sum(const double* v, std::size_t n) {
    constexpr std::size_t leaf = 256;
    if (n <= leaf) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    // align the split to a leaf boundary
    half -= half % leaf;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

inline int thread_count() {
    if (const char* env = std::getenv("PQLAB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static row partition; every index is computed exactly once and outputs are
// written to disjoint locations, so the result is independent of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    int nt = thread_count();
    if (nt <= 1 || n < 64) {
        body(0, n);
        return;
    }
    std::size_t chunk = (n + nt - 1) / nt;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        std::size_t lo = std::min(n, t * chunk);
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

// log-log least squares slope of y against x; requires at least two
// positive samples.
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace pqlab
