#ifndef GLFIELD_PH_HPP
#define GLFIELD_PH_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "glfield/dynamics.hpp"
#include "glfield/errors.hpp"
#include "glfield/network.hpp"
#include "glfield/parallel.hpp"
#include "glfield/rate_field.hpp"
#include "glfield/rng.hpp"

namespace glfield {

// One Poisson input channel of a PH neuron: arrivals follow an inhomogeneous
// Poisson process with rate m(source, t) and each arrival adds `jump` to the
// intensity.
struct InputChannel {
    std::size_t source;
    double jump;
};

struct PhTrajectory {
    std::vector<double> spikes;
    std::vector<double> lambda_at_knots;
    // Integral of lambda from 0 to each knot, accumulated in closed form per
    // segment. For quadratic dynamics lambda itself has infinite variance
    // (tan blow-up), while each inter-spike increment of this compensator is
    // an Exp(1) draw, so averages of it are well behaved.
    std::vector<double> integrated_at_knots;
    std::vector<double> lambda_at_samples;
};

// Exact sampler for one neuron of the GL dynamics under the Poisson
// Hypothesis, driven by a fixed rate field. Input arrival times invert the
// deterministic cumulative rate (piecewise quadratic under piecewise-linear
// rates, solved per segment in closed form); arrivals are attributed to
// source sites proportionally to their current rates, which fixes the jump
// size; own spikes use the same time-change sampling as the RMF engine.
class PhNeuronSampler {
  public:
    PhNeuronSampler(const AutonomousDynamics& dyn, double reset_value,
                    const RateField& rates, std::vector<InputChannel> channels)
        : dyn_(dyn), reset_(reset_value), rates_(&rates),
          channels_(std::move(channels)) {
        for (const InputChannel& c : channels_)
            for (double v : rates.values()[c.source])
                if (v < 0.0 || std::isnan(v))
                    throw DomainError("rate field has negative values");
        const std::vector<double>& knots = rates.knots();
        nu_.assign(knots.size(), 0.0);
        for (const InputChannel& c : channels_)
            for (std::size_t j = 0; j < knots.size(); ++j)
                nu_[j] += rates.at(c.source, knots[j]);
    }

    PhTrajectory simulate(double lambda0, double horizon, Rng rng,
                          const std::vector<double>& sample_times = {}) const {
        PhTrajectory out;
        out.lambda_at_samples.resize(sample_times.size());
        const std::vector<double>& knots = rates_->knots();

        double lam = lambda0;
        double anchor = 0.0;
        double cum = 0.0; // integral of lambda over [0, anchor]
        std::size_t next_knot = 0, next_sample = 0;

        double arrival_clock = 0.0;
        double next_arrival = channels_.empty()
                                  ? std::numeric_limits<double>::infinity()
                                  : sample_arrival(arrival_clock, rng);
        double candidate =
            anchor + dyn_.invert_integrated_intensity(lam, rng.next_exp());

        auto capture_until = [&](double t) {
            while (next_knot < knots.size() && knots[next_knot] <= t) {
                out.lambda_at_knots.push_back(
                    dyn_.flow(lam, knots[next_knot] - anchor));
                out.integrated_at_knots.push_back(
                    cum +
                    dyn_.integrated_intensity(lam, knots[next_knot] - anchor));
                ++next_knot;
            }
            while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
                out.lambda_at_samples[next_sample] =
                    dyn_.flow(lam, sample_times[next_sample] - anchor);
                ++next_sample;
            }
        };

        for (;;) {
            double te = std::min(candidate, next_arrival);
            if (te > horizon)
                break;
            capture_until(te);
            cum += dyn_.integrated_intensity(lam, te - anchor);
            if (candidate <= next_arrival) {
                out.spikes.push_back(te);
                lam = reset_;
            } else {
                lam = dyn_.flow(lam, te - anchor) + pick_channel(te, rng).jump;
                arrival_clock = te;
                next_arrival = sample_arrival(arrival_clock, rng);
            }
            anchor = te;
            candidate =
                anchor + dyn_.invert_integrated_intensity(lam, rng.next_exp());
        }
        capture_until(horizon);
        return out;
    }

  private:
    // Earliest t > s with integral of nu over [s, t] equal to a fresh Exp(1)
    // draw; +inf if the area to the horizon is insufficient (the rate field
    // extends constantly past its last knot).
    double sample_arrival(double s, Rng& rng) const {
        double target = rng.next_exp();
        const std::vector<double>& knots = rates_->knots();
        for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
            double t1 = knots[j + 1];
            if (t1 <= s)
                continue;
            double t0 = std::max(s, knots[j]);
            double seg = knots[j + 1] - knots[j];
            double f0 = (t0 - knots[j]) / seg;
            double a = (1 - f0) * nu_[j] + f0 * nu_[j + 1];
            double slope = (nu_[j + 1] - nu_[j]) / seg;
            double dt = t1 - t0;
            double area = a * dt + 0.5 * slope * dt * dt;
            if (area >= target) {
                double u = invert_segment(a, slope, target);
                return t0 + u;
            }
            target -= area;
        }
        double tail_rate = nu_.back();
        double t0 = std::max(s, knots.back());
        if (tail_rate <= 0.0)
            return std::numeric_limits<double>::infinity();
        return t0 + target / tail_rate;
    }

    // Solve a u + slope u^2 / 2 = area for the smallest u >= 0.
    static double invert_segment(double a, double slope, double area) {
        if (std::abs(slope) < 1e-300)
            return area / a;
        double disc = a * a + 2.0 * slope * area;
        disc = std::max(disc, 0.0);
        if (slope > 0.0)
            return 2.0 * area / (a + std::sqrt(disc));
        return (a - std::sqrt(disc)) / (-slope);
    }

    const InputChannel& pick_channel(double t, Rng& rng) const {
        double total = 0.0;
        for (const InputChannel& c : channels_)
            total += rates_->at(c.source, t);
        double u = rng.next_double() * total;
        for (const InputChannel& c : channels_) {
            u -= rates_->at(c.source, t);
            if (u <= 0.0)
                return c;
        }
        return channels_.back();
    }

    AutonomousDynamics dyn_;
    double reset_;
    const RateField* rates_;
    std::vector<InputChannel> channels_;
    std::vector<double> nu_; // total input rate at the knots
};

struct FixedPointOptions {
    std::size_t n_iter = 8;
    std::size_t trials_per_iter = 400;
    double alpha = 0.5; // damping of the Picard update
    double tolerance = 0.05;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct FixedPointReport {
    std::vector<double> deltas; // sup-norm change per iteration
    std::size_t trials_per_iter = 0;
    std::size_t final_trials = 0;
    double tolerance = 0.0;
    bool converged = false;
    // Standard errors of the final Monte Carlo estimate, per site and knot.
    std::vector<std::vector<double>> standard_errors;
};

// Sites plus the jump-size matrix of arrivals: neuron x receives arrivals
// from source y at rate m(y, t), each of size jump[x][y]. Zero-size channels
// are skipped (they cannot move the dynamics).
struct CouplingModel {
    std::vector<double> sites;
    std::vector<std::vector<double>> jump;
};

inline CouplingModel ph_coupling(const NetworkSpec& spec,
                                 const std::vector<double>& sites) {
    CouplingModel c;
    c.sites = sites;
    std::size_t k = sites.size();
    c.jump.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t x = 0; x < k; ++x)
        for (std::size_t y = 0; y < k; ++y)
            if (y != x)
                c.jump[x][y] = spec.kernel(sites[x], sites[y]) / double(k - 1);
    return c;
}

struct RateFixedPoint {
    RateField field;
    FixedPointReport report;
};

// Picard iteration on the mean-rate field with an exact single-neuron Monte
// Carlo inner loop: m^{k+1} <- (1 - alpha) m^k + alpha * (trial estimate of
// E[lambda] under m^k), starting from m^0 identically E[lambda(x, 0)]. The
// estimate at interior knots is the centered slope of the trial's integrated
// intensity, which keeps the variance finite for quadratic dynamics where
// lambda itself has none; at t = 0 the initial sample is used directly and
// the final knot uses the second-order one-sided slope. The trial budget is
// doubled on the final iteration to tighten the reported field.
// Non-convergence is a report flag, not an exception.
inline RateFixedPoint solve_rate_fixed_point(const NetworkSpec& spec,
                                             const CouplingModel& coupling,
                                             double horizon, double dt_out,
                                             const FixedPointOptions& opts) {
    if (opts.n_iter < 1)
        throw PreconditionError("fixed point: n_iter must be >= 1");
    if (opts.trials_per_iter < 100)
        throw PreconditionError("fixed point: trials_per_iter must be >= 100");

    const std::vector<double>& sites = coupling.sites;
    std::vector<double> knots = RateField::uniform_knots(horizon, dt_out);
    RateField m = RateField::constant(sites, knots, spec.initial.mean());

    RateFixedPoint out;
    out.report.trials_per_iter = opts.trials_per_iter;
    out.report.tolerance = opts.tolerance;

    for (std::size_t iter = 0; iter < opts.n_iter; ++iter) {
        bool last = iter + 1 == opts.n_iter;
        std::size_t trials = opts.trials_per_iter * (last ? 2 : 1);
        RateField next = m;
        if (last)
            out.report.standard_errors.assign(
                sites.size(), std::vector<double>(knots.size(), 0.0));

        for (std::size_t x = 0; x < sites.size(); ++x) {
            std::vector<InputChannel> channels;
            for (std::size_t y = 0; y < sites.size(); ++y)
                if (coupling.jump[x][y] > 0.0)
                    channels.push_back({y, coupling.jump[x][y]});
            PhNeuronSampler sampler(spec.dynamics, spec.reset(sites[x]), m,
                                    std::move(channels));

            std::vector<std::vector<double>> per_trial(trials);
            parallel_for(opts.jobs, trials, [&](std::size_t tr) {
                std::uint64_t key = Rng::derive(
                    opts.seed, {rng_tag::ph, iter, x, tr});
                Rng init(Rng::derive(key, rng_tag::initial));
                double lam0 = spec.initial.sample(init);
                PhTrajectory traj = sampler.simulate(lam0, horizon, Rng(key));
                std::size_t n = knots.size();
                std::vector<double> est(n);
                est[0] = lam0;
                for (std::size_t j = 1; j + 1 < n; ++j)
                    est[j] = (traj.integrated_at_knots[j + 1] -
                              traj.integrated_at_knots[j - 1]) /
                             (knots[j + 1] - knots[j - 1]);
                double h = knots[n - 1] - knots[n - 2];
                est[n - 1] =
                    n > 2 ? (3.0 * traj.integrated_at_knots[n - 1] -
                             4.0 * traj.integrated_at_knots[n - 2] +
                             traj.integrated_at_knots[n - 3]) /
                                (2.0 * h)
                          : (traj.integrated_at_knots[1] -
                             traj.integrated_at_knots[0]) /
                                h;
                per_trial[tr] = std::move(est);
            });

            // Sequential reduction in trial order keeps results independent
            // of the worker count.
            for (std::size_t j = 0; j < knots.size(); ++j) {
                double sum = 0.0, sumsq = 0.0;
                for (std::size_t tr = 0; tr < trials; ++tr) {
                    double v = per_trial[tr][j];
                    sum += v;
                    sumsq += v * v;
                }
                double mean = sum / double(trials);
                next.values()[x][j] = std::max(
                    0.0,
                    (1.0 - opts.alpha) * m.values()[x][j] + opts.alpha * mean);
                if (last) {
                    double var = std::max(
                        0.0, (sumsq - sum * sum / double(trials)) /
                                 double(trials - 1));
                    out.report.standard_errors[x][j] =
                        std::sqrt(var / double(trials));
                }
            }
        }
        out.report.deltas.push_back(m.sup_distance(next));
        m = std::move(next);
        if (last)
            out.report.final_trials = trials;
    }
    out.report.converged = out.report.deltas.back() <= opts.tolerance;
    out.field = std::move(m);
    return out;
}

inline RateFixedPoint solve_ph_fixed_point(const NetworkSpec& spec,
                                           const RunConfig& run,
                                           const FixedPointOptions& opts) {
    std::vector<double> sites = spec.sites(run.k_sites).grid(run.k_sites);
    FixedPointOptions o = opts;
    if (o.seed == 0)
        o.seed = run.seed;
    return solve_rate_fixed_point(spec, ph_coupling(spec, sites), run.horizon,
                                  run.dt_out, o);
}

// Finite upper bound for E[lambda(x, t)] on [0, T] in the Gronwall pattern
// of the finite-first-moment lemma.
inline double gronwall_cap(const NetworkSpec& spec, double sup_m, double horizon) {
    double c = spec.kernel.sup_bound() + spec.reset.max_value() + 1.0;
    double base = spec.initial.mean() +
                  spec.dynamics.b() * horizon / spec.dynamics.tau() +
                  spec.kernel.sup_bound() * sup_m * horizon +
                  spec.reset.max_value() * horizon;
    return base * std::exp(c * horizon);
}

} // namespace glfield

#endif
