#ifndef GLFIELD_RATE_FIELD_HPP
#define GLFIELD_RATE_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "glfield/errors.hpp"

namespace glfield {

// Deterministic mean-rate field m(x, t) ~ E[lambda(x, t)] on a fixed set of
// sites, piecewise-linear in t between knots. The unknown of the Poisson
// Hypothesis / neural-field fixed points.
class RateField {
  public:
    RateField() = default;

    RateField(std::vector<double> sites, std::vector<double> knots)
        : sites_(std::move(sites)), knots_(std::move(knots)),
          values_(sites_.size(), std::vector<double>(knots_.size(), 0.0)) {
        validate_knots();
    }

    RateField(std::vector<double> sites, std::vector<double> knots,
              std::vector<std::vector<double>> values)
        : sites_(std::move(sites)), knots_(std::move(knots)),
          values_(std::move(values)) {
        validate_knots();
        if (values_.size() != sites_.size())
            throw DomainError("RateField: values/site shape mismatch");
        for (const auto& row : values_) {
            if (row.size() != knots_.size())
                throw DomainError("RateField: values/knot shape mismatch");
            for (double v : row)
                if (v < 0.0 || std::isnan(v))
                    throw DomainError("RateField: values must be >= 0");
        }
    }

    static std::vector<double> uniform_knots(double horizon, double dt_out) {
        std::vector<double> knots;
        std::size_t n = std::size_t(std::ceil(horizon / dt_out - 1e-12));
        for (std::size_t j = 0; j <= n; ++j)
            knots.push_back(std::min(double(j) * dt_out, horizon));
        return knots;
    }

    static RateField constant(std::vector<double> sites, std::vector<double> knots,
                              double value) {
        RateField f(std::move(sites), std::move(knots));
        for (auto& row : f.values_)
            std::fill(row.begin(), row.end(), value);
        return f;
    }

    const std::vector<double>& sites() const { return sites_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<std::vector<double>>& values() const { return values_; }
    std::vector<std::vector<double>>& values() { return values_; }

    double t_begin() const { return knots_.front(); }
    double t_end() const { return knots_.back(); }

    // Linear interpolation in t; constant extension outside the knot span.
    double at(std::size_t site, double t) const {
        const std::vector<double>& v = values_[site];
        if (t <= knots_.front())
            return v.front();
        if (t >= knots_.back())
            return v.back();
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        std::size_t j = std::size_t(it - knots_.begin()) - 1;
        double f = (t - knots_[j]) / (knots_[j + 1] - knots_[j]);
        return (1 - f) * v[j] + f * v[j + 1];
    }

    // Linear interpolation in x (between the two nearest sites) and t.
    double at_xt(double x, double t) const {
        if (sorted_order_.size() != sites_.size())
            build_order();
        const auto& ord = sorted_order_;
        if (x <= sites_[ord.front()])
            return at(ord.front(), t);
        if (x >= sites_[ord.back()])
            return at(ord.back(), t);
        std::size_t lo = 0, hi = ord.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (sites_[ord[mid]] <= x)
                lo = mid;
            else
                hi = mid;
        }
        double x0 = sites_[ord[lo]], x1 = sites_[ord[hi]];
        double f = (x - x0) / (x1 - x0);
        return (1 - f) * at(ord[lo], t) + f * at(ord[hi], t);
    }

    // Trapezoid integral of m(site, s) over [0, t] on the knot grid; the
    // integrand is piecewise linear so this is exact.
    double integral(std::size_t site, double t) const {
        const std::vector<double>& v = values_[site];
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
            double t0 = knots_[j], t1 = knots_[j + 1];
            if (t <= t0)
                break;
            double tb = std::min(t, t1);
            double vb = at(site, tb);
            acc += 0.5 * (v[j] + vb) * (tb - t0);
        }
        if (t > knots_.back())
            acc += v.back() * (t - knots_.back());
        return acc;
    }

    double sup_norm() const {
        double s = 0.0;
        for (const auto& row : values_)
            for (double v : row)
                s = std::max(s, std::abs(v));
        return s;
    }

    double sup_distance(const RateField& other) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            for (std::size_t j = 0; j < values_[i].size(); ++j)
                s = std::max(s, std::abs(values_[i][j] - other.values_[i][j]));
        return s;
    }

  private:
    void validate_knots() const {
        if (sites_.empty() || knots_.size() < 2)
            throw DomainError("RateField: needs >= 1 site and >= 2 knots");
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j)
            if (!(knots_[j] < knots_[j + 1]))
                throw DomainError("RateField: knots must be strictly increasing");
    }

    void build_order() const {
        sorted_order_.resize(sites_.size());
        std::iota(sorted_order_.begin(), sorted_order_.end(), std::size_t(0));
        std::sort(sorted_order_.begin(), sorted_order_.end(),
                  [&](std::size_t a, std::size_t b) { return sites_[a] < sites_[b]; });
    }

    std::vector<double> sites_;
    std::vector<double> knots_;
    std::vector<std::vector<double>> values_;
    mutable std::vector<std::size_t> sorted_order_;
};

} // namespace glfield

#endif
