#ifndef GLFIELD_DYNAMICS_HPP
#define GLFIELD_DYNAMICS_HPP

#include <cmath>
#include <optional>
#include <string>

#include "glfield/errors.hpp"

namespace glfield {

enum class DynamicsKind { Leaky, Quadratic };

// Closed-form primitives of the autonomous intensity flow between events:
//   leaky      d(lambda)/dt = (b - lambda) / tau
//   quadratic  d(lambda)/dt = (b + lambda^2) / tau
// The quadratic flow diverges in finite time; every helper below is exact up
// to that blow-up. Intensities are nonnegative by construction and negative
// inputs are rejected, never clamped.
class AutonomousDynamics {
  public:
    AutonomousDynamics(DynamicsKind kind, double b, double tau)
        : kind_(kind), b_(b), tau_(tau) {
        if (!(b > 0.0) || !std::isfinite(b))
            throw DomainError("AutonomousDynamics: b must be > 0, got " +
                              std::to_string(b));
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw DomainError("AutonomousDynamics: tau must be > 0, got " +
                              std::to_string(tau));
        sqrt_b_ = std::sqrt(b);
    }

    static AutonomousDynamics leaky(double b, double tau) {
        return AutonomousDynamics(DynamicsKind::Leaky, b, tau);
    }
    static AutonomousDynamics quadratic(double b, double tau) {
        return AutonomousDynamics(DynamicsKind::Quadratic, b, tau);
    }

    DynamicsKind kind() const { return kind_; }
    double b() const { return b_; }
    double tau() const { return tau_; }

    // lambda(dt) started from lambda0.
    // Leaky: b + (lambda0 - b) e^{-dt/tau}. Quadratic: sqrt(b) tan(theta0 +
    // sqrt(b) dt / tau), theta0 = arctan(lambda0 / sqrt(b)).
    double flow(double lambda0, double dt) const {
        check_inputs(lambda0, dt);
        if (kind_ == DynamicsKind::Leaky)
            return b_ + (lambda0 - b_) * std::exp(-dt / tau_);
        double theta = theta0(lambda0) + sqrt_b_ * dt / tau_;
        if (theta >= kHalfPi)
            throw BlowUpExceeded("quadratic flow queried at dt >= blow-up time");
        return sqrt_b_ * std::tan(theta);
    }

    // Lambda(dt) = integral of flow(lambda0, s) over s in [0, dt].
    // Quadratic allows dt -> blow-up with result -> +inf.
    double integrated_intensity(double lambda0, double dt) const {
        check_inputs(lambda0, dt);
        if (kind_ == DynamicsKind::Leaky)
            return b_ * dt + tau_ * (lambda0 - b_) * (-std::expm1(-dt / tau_));
        double th0 = theta0(lambda0);
        double theta = th0 + sqrt_b_ * dt / tau_;
        if (theta > kHalfPi)
            throw BlowUpExceeded(
                "quadratic integrated intensity queried beyond blow-up time");
        theta = std::min(theta, kThetaClamp);
        return tau_ * (std::log(std::cos(th0)) - std::log(std::cos(theta)));
    }

    // Unique dt with integrated_intensity(lambda0, dt) == area. Closed form
    // for quadratic; bracketed Newton for leaky (no closed form exists).
    double invert_integrated_intensity(double lambda0, double area) const {
        check_inputs(lambda0, 0.0);
        if (area < 0.0 || std::isnan(area))
            throw DomainError("invert_integrated_intensity: area must be >= 0");
        if (area == 0.0)
            return 0.0;
        if (kind_ == DynamicsKind::Quadratic) {
            double th0 = theta0(lambda0);
            double c = std::cos(th0) * std::exp(-area / tau_);
            double theta = std::min(std::acos(c), kThetaClamp);
            return (tau_ / sqrt_b_) * (theta - th0);
        }
        return invert_leaky(lambda0, area);
    }

    // Divergence time of the quadratic flow:
    // t* = (tau / sqrt(b)) (pi/2 - arctan(lambda0 / sqrt(b))).
    double blow_up_time(double lambda0) const {
        if (kind_ != DynamicsKind::Quadratic)
            throw KindError("blow_up_time: leaky flow does not blow up");
        check_inputs(lambda0, 0.0);
        return (tau_ / sqrt_b_) * (kHalfPi - theta0(lambda0));
    }

    // First time the flow from lambda0 reaches level c, or nullopt when the
    // leaky flow saturates below c.
    std::optional<double> hitting_time(double lambda0, double c) const {
        check_inputs(lambda0, 0.0);
        if (!(c > lambda0))
            throw DomainError("hitting_time: level must exceed lambda0");
        if (kind_ == DynamicsKind::Quadratic)
            return (tau_ / sqrt_b_) * (std::atan(c / sqrt_b_) - theta0(lambda0));
        if (c >= b_)
            return std::nullopt;
        return -tau_ * std::log((b_ - c) / (b_ - lambda0));
    }

  private:
    static constexpr double kHalfPi = 1.57079632679489661923;
    // Arguments of tan/log-cos are clamped here to avoid overflow while
    // keeping monotonicity.
    static constexpr double kThetaClamp = kHalfPi - 1e-12;

    void check_inputs(double lambda0, double dt) const {
        if (lambda0 < 0.0 || std::isnan(lambda0))
            throw DomainError("intensity must be >= 0");
        if (dt < 0.0 || std::isnan(dt))
            throw DomainError("duration must be >= 0");
    }

    double theta0(double lambda0) const { return std::atan(lambda0 / sqrt_b_); }

    double invert_leaky(double lambda0, double area) const {
        // Lambda is strictly increasing with slope between min(lambda0, b)
        // and max(lambda0, b), which gives the bracket below.
        double lo, hi;
        if (lambda0 > 0.0) {
            lo = area / std::max(lambda0, b_);
            hi = area / std::min(lambda0, b_);
        } else {
            lo = area / b_;
            hi = area / b_ + tau_;
        }
        auto eval = [&](double dt) {
            return integrated_intensity(lambda0, dt) - area;
        };
        double dt = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            double f = eval(dt);
            if (f > 0.0)
                hi = dt;
            else
                lo = dt;
            double slope = flow(lambda0, dt);
            double next = dt - f / slope;
            if (!(next > lo) || !(next < hi))
                next = 0.5 * (lo + hi); // Newton left the bracket: bisect
            double tol = 1e-12 * std::max(1.0, dt);
            if (std::abs(next - dt) <= tol) {
                dt = next;
                break;
            }
            dt = next;
        }
        return dt;
    }

    DynamicsKind kind_;
    double b_;
    double tau_;
    double sqrt_b_;
};

} // namespace glfield

#endif
