#ifndef GLFIELD_NETWORK_HPP
#define GLFIELD_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "glfield/dynamics.hpp"
#include "glfield/errors.hpp"
#include "glfield/rng.hpp"

namespace glfield {

// The bounded set D, taken as an interval [lo, hi].
struct SpatialDomain {
    double lo = 0.0;
    double hi = 1.0;

    SpatialDomain() = default;
    SpatialDomain(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi - lo > 0.0))
            throw ValidationError("domain: requires finite lo < hi");
    }

    double length() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Base-2 radical inverse (van der Corput sequence), n >= 1.
inline double radical_inverse_base2(std::uint64_t n) {
    double v = 0.0, scale = 0.5;
    while (n) {
        if (n & 1)
            v += scale;
        n >>= 1;
        scale *= 0.5;
    }
    return v;
}

// Nested site grids D_1(x) subset D_2(x) subset ... with |D_l| = l and
// D_1 = {anchor}. New sites come from the base-2 van der Corput sequence
// rescaled to the domain, which densely fills D with fill distance O(1/l).
class NestedGrids {
  public:
    NestedGrids(const SpatialDomain& domain, double anchor, std::size_t l_max)
        : domain_(domain) {
        if (!domain.contains(anchor))
            throw DomainError("build_nested_grids: anchor outside domain");
        if (l_max < 1)
            throw DomainError("build_nested_grids: l_max must be >= 1");
        points_.push_back(anchor);
        std::uint64_t n = 1;
        while (points_.size() < l_max) {
            double p = domain.lo + domain.length() * radical_inverse_base2(n++);
            bool dup = false;
            for (double q : points_)
                if (q == p) {
                    dup = true;
                    break;
                }
            if (!dup)
                points_.push_back(p);
        }
    }

    double anchor() const { return points_.front(); }
    std::size_t max_level() const { return points_.size(); }
    const std::vector<double>& all_points() const { return points_; }

    // Grid D_l: the first l points, in insertion order.
    std::vector<double> grid(std::size_t l) const {
        if (l < 1 || l > points_.size())
            throw DomainError("NestedGrids::grid: level out of range");
        return {points_.begin(), points_.begin() + std::ptrdiff_t(l)};
    }

    // sup over x in D of the distance to the nearest point of D_l.
    double fill_distance(std::size_t l) const {
        std::vector<double> g = grid(l);
        std::sort(g.begin(), g.end());
        double worst = std::max(g.front() - domain_.lo, domain_.hi - g.back());
        for (std::size_t i = 0; i + 1 < g.size(); ++i)
            worst = std::max(worst, 0.5 * (g[i + 1] - g[i]));
        return worst;
    }

  private:
    SpatialDomain domain_;
    std::vector<double> points_;
};

inline NestedGrids build_nested_grids(const SpatialDomain& domain, double anchor,
                                      std::size_t l_max) {
    return NestedGrids(domain, anchor, l_max);
}

enum class KernelKind { Constant, GaussianBump, Cosine, TabulatedGrid };

// Continuous bounded interaction weights w : D x D -> [0, inf). Symmetry is
// not assumed. Signed kernels are rejected: increments must keep intensities
// nonnegative.
class WeightKernel {
  public:
    static WeightKernel constant(double c) {
        WeightKernel k;
        k.kind_ = KernelKind::Constant;
        k.a_ = require_nonneg(c, "kernel: constant value");
        k.bound_ = c;
        return k;
    }

    // amplitude * exp(-(x-y)^2 / (2 width^2))
    static WeightKernel gaussian_bump(double amplitude, double width) {
        WeightKernel k;
        k.kind_ = KernelKind::GaussianBump;
        k.a_ = require_nonneg(amplitude, "kernel: amplitude");
        if (!(width > 0.0))
            throw ValidationError("kernel: width must be > 0");
        k.p_ = width;
        k.bound_ = amplitude;
        return k;
    }

    // amplitude * (1 + cos(frequency (x-y))) / 2, nonnegative by construction.
    static WeightKernel cosine(double amplitude, double frequency) {
        WeightKernel k;
        k.kind_ = KernelKind::Cosine;
        k.a_ = require_nonneg(amplitude, "kernel: amplitude");
        k.p_ = frequency;
        k.bound_ = amplitude;
        return k;
    }

    // Bilinear interpolation of values[i][j] over (x_nodes[i], y_nodes[j]).
    static WeightKernel tabulated(std::vector<double> x_nodes,
                                  std::vector<double> y_nodes,
                                  std::vector<std::vector<double>> values) {
        WeightKernel k;
        k.kind_ = KernelKind::TabulatedGrid;
        if (x_nodes.size() < 2 || y_nodes.size() < 2)
            throw ValidationError("kernel: tabulated grid needs >= 2 nodes per axis");
        if (!std::is_sorted(x_nodes.begin(), x_nodes.end()) ||
            !std::is_sorted(y_nodes.begin(), y_nodes.end()))
            throw ValidationError("kernel: tabulated nodes must be sorted");
        if (values.size() != x_nodes.size())
            throw ValidationError("kernel: tabulated values shape mismatch");
        double bound = 0.0;
        for (const auto& row : values) {
            if (row.size() != y_nodes.size())
                throw ValidationError("kernel: tabulated values shape mismatch");
            for (double v : row) {
                require_nonneg(v, "kernel: tabulated value");
                bound = std::max(bound, v);
            }
        }
        k.xs_ = std::move(x_nodes);
        k.ys_ = std::move(y_nodes);
        k.table_ = std::move(values);
        k.bound_ = bound;
        return k;
    }

    KernelKind kind() const { return kind_; }
    double sup_bound() const { return bound_; }

    double operator()(double x, double y) const {
        switch (kind_) {
        case KernelKind::Constant:
            return a_;
        case KernelKind::GaussianBump: {
            double d = (x - y) / p_;
            return a_ * std::exp(-0.5 * d * d);
        }
        case KernelKind::Cosine:
            return a_ * 0.5 * (1.0 + std::cos(p_ * (x - y)));
        case KernelKind::TabulatedGrid:
            return bilinear(x, y);
        }
        return 0.0;
    }

    double amplitude() const { return a_; }
    double param() const { return p_; }
    const std::vector<double>& x_nodes() const { return xs_; }
    const std::vector<double>& y_nodes() const { return ys_; }
    const std::vector<std::vector<double>>& table() const { return table_; }

  private:
    static double require_nonneg(double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(what) + " must be >= 0 and finite");
        return v;
    }

    static std::size_t bracket(const std::vector<double>& nodes, double v,
                               double& frac) {
        if (v <= nodes.front()) {
            frac = 0.0;
            return 0;
        }
        if (v >= nodes.back()) {
            frac = 1.0;
            return nodes.size() - 2;
        }
        auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
        std::size_t i = std::size_t(it - nodes.begin()) - 1;
        frac = (v - nodes[i]) / (nodes[i + 1] - nodes[i]);
        return i;
    }

    double bilinear(double x, double y) const {
        double fx, fy;
        std::size_t i = bracket(xs_, x, fx);
        std::size_t j = bracket(ys_, y, fy);
        return (1 - fx) * ((1 - fy) * table_[i][j] + fy * table_[i][j + 1]) +
               fx * ((1 - fy) * table_[i + 1][j] + fy * table_[i + 1][j + 1]);
    }

    KernelKind kind_ = KernelKind::Constant;
    double a_ = 0.0;
    double p_ = 0.0;
    double bound_ = 0.0;
    std::vector<double> xs_, ys_;
    std::vector<std::vector<double>> table_;
};

enum class ResetKind { Constant, Tabulated };

// Reset values r : D -> [0, inf).
class ResetField {
  public:
    static ResetField constant(double r) {
        ResetField f;
        f.kind_ = ResetKind::Constant;
        if (!(r >= 0.0) || !std::isfinite(r))
            throw ValidationError("reset: value must be >= 0 and finite");
        f.value_ = r;
        return f;
    }

    static ResetField tabulated(std::vector<double> nodes,
                                std::vector<double> values) {
        ResetField f;
        f.kind_ = ResetKind::Tabulated;
        if (nodes.size() < 2 || nodes.size() != values.size())
            throw ValidationError("reset: tabulated needs >= 2 matched nodes");
        if (!std::is_sorted(nodes.begin(), nodes.end()))
            throw ValidationError("reset: tabulated nodes must be sorted");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("reset: tabulated value must be >= 0");
        f.nodes_ = std::move(nodes);
        f.values_ = std::move(values);
        f.value_ = *std::max_element(f.values_.begin(), f.values_.end());
        return f;
    }

    ResetKind kind() const { return kind_; }

    double operator()(double x) const {
        if (kind_ == ResetKind::Constant)
            return value_;
        if (x <= nodes_.front())
            return values_.front();
        if (x >= nodes_.back())
            return values_.back();
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t i = std::size_t(it - nodes_.begin()) - 1;
        double f = (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
        return (1 - f) * values_[i] + f * values_[i + 1];
    }

    double max_value() const { return value_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& values() const { return values_; }

  private:
    ResetKind kind_ = ResetKind::Constant;
    double value_ = 0.0;
    std::vector<double> nodes_, values_;
};

enum class InitialKind { Constant, Uniform, Exponential };

// Law of lambda(x, 0), i.i.d. across neurons and replicas. All supported
// laws have finite mean.
class InitialLaw {
  public:
    static InitialLaw constant(double v) {
        check(v >= 0.0 && std::isfinite(v), "initial: value must be >= 0");
        return InitialLaw{InitialKind::Constant, v, v};
    }
    static InitialLaw uniform(double a, double b) {
        check(a >= 0.0 && b >= a && std::isfinite(b),
              "initial: uniform needs 0 <= a <= b finite");
        return InitialLaw{InitialKind::Uniform, a, b};
    }
    static InitialLaw exponential(double mean) {
        check(mean > 0.0 && std::isfinite(mean),
              "initial: exponential mean must be > 0 finite");
        return InitialLaw{InitialKind::Exponential, mean, mean};
    }

    InitialKind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }

    double mean() const {
        switch (kind_) {
        case InitialKind::Constant:
            return a_;
        case InitialKind::Uniform:
            return 0.5 * (a_ + b_);
        case InitialKind::Exponential:
            return a_;
        }
        return 0.0;
    }

    double max_support() const {
        // Exponential is unbounded; callers needing a bound use a quantile.
        if (kind_ == InitialKind::Exponential)
            return std::numeric_limits<double>::infinity();
        return b_;
    }

    double sample(Rng& rng) const {
        switch (kind_) {
        case InitialKind::Constant:
            return a_;
        case InitialKind::Uniform:
            return a_ + (b_ - a_) * rng.next_double();
        case InitialKind::Exponential:
            return a_ * rng.next_exp();
        }
        return 0.0;
    }

  private:
    InitialLaw(InitialKind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    static void check(bool ok, const char* msg) {
        if (!ok)
            throw ValidationError(msg);
    }
    InitialKind kind_;
    double a_, b_;
};

// Full model description: domain, intrinsic dynamics, kernel, resets and
// initial law. Site grids are derived from the domain on demand.
struct NetworkSpec {
    SpatialDomain domain;
    AutonomousDynamics dynamics = AutonomousDynamics::leaky(1.0, 1.0);
    WeightKernel kernel = WeightKernel::constant(0.0);
    ResetField reset = ResetField::constant(0.0);
    InitialLaw initial = InitialLaw::constant(0.0);
    double horizon = 1.0;

    NestedGrids sites(std::size_t k) const {
        return build_nested_grids(domain, domain.midpoint(), k);
    }
};

struct RunConfig {
    double horizon = 1.0;      // T
    std::size_t k_sites = 2;   // K >= 2: the 1/(K-1) scaling requires it
    std::size_t m_replicas = 2; // M >= 2
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    double dt_out = 0.1;

    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ValidationError("run.T: must be > 0 and finite");
        if (k_sites < 2)
            throw ValidationError("run.K: must be >= 2");
        if (m_replicas < 2)
            throw ValidationError("run.M: must be >= 2");
        if (trials < 1)
            throw ValidationError("run.trials: must be >= 1");
        if (!(dt_out > 0.0))
            throw ValidationError("run.dt_out: must be > 0");
    }
};

} // namespace glfield

#endif
