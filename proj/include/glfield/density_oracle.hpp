#ifndef GLFIELD_DENSITY_ORACLE_HPP
#define GLFIELD_DENSITY_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "glfield/dynamics.hpp"
#include "glfield/errors.hpp"
#include "glfield/network.hpp"
#include "glfield/ph.hpp"
#include "glfield/rate_field.hpp"

namespace glfield {

struct DensityOracleOptions {
    double lambda_max = 10.0;
    std::size_t n_cells = 400; // nodes 0..n_cells, spacing lambda_max/n_cells
    double dt = 1e-4;
    // When false, spiked mass is absorbed instead of re-injected at the
    // reset value; the run then tracks first-passage quantities.
    bool reinject = true;
};

struct DensityOracleResult {
    std::vector<double> times;
    std::vector<double> mean_rate; // E[lambda(t)] at the requested times
    std::vector<double> survival;  // remaining mass (absorbing mode only)
    double max_mass_error = 0.0;   // sup_t |total mass - 1| (re-inject mode)
    double boundary_flux_total = 0.0; // mass that left through lambda_max
    bool truncation_warning = false;
    double mean_first_passage = 0.0; // integral of survival (absorbing mode)
};

// Deterministic Kolmogorov-forward companion of the single-neuron PH
// dynamics: evolves the density of one neuron's intensity under the
// autonomous drift (upwind finite volume), Poisson input jumps (shift
// operators) and the reset flux (sink lambda p everywhere, source at the
// reset value). Mass leaving through lambda_max is routed to the reset cell:
// a neuron at very large intensity spikes after O(1/lambda_max) time, so the
// redirection conserves mass with a bias that vanishes as lambda_max grows.
// The outflux is still reported and flagged past 1e-6.
inline DensityOracleResult
solve_density_oracle(const AutonomousDynamics& dyn, double reset_value,
                     const InitialLaw& initial, const RateField& rates,
                     const std::vector<InputChannel>& channels, double horizon,
                     const std::vector<double>& output_times,
                     const DensityOracleOptions& opts) {
    const std::size_t n = opts.n_cells;
    const double dl = opts.lambda_max / double(n);
    const double dt = opts.dt;

    // Explicit-scheme stability bound.
    double max_phi = dyn.kind() == DynamicsKind::Leaky
                         ? std::max(dyn.b(), opts.lambda_max - dyn.b())
                         : dyn.b() + opts.lambda_max * opts.lambda_max;
    double nu_max = 0.0;
    for (std::size_t j = 0; j < rates.knots().size(); ++j) {
        double total = 0.0;
        for (const InputChannel& c : channels)
            total += rates.values()[c.source][j];
        nu_max = std::max(nu_max, total);
    }
    double dt_bound = 0.5 * std::min(dl * dyn.tau() / max_phi,
                                     1.0 / (opts.lambda_max + nu_max));
    if (dt > dt_bound)
        throw StabilityError("density oracle: dt exceeds the stability bound");

    auto node = [&](std::size_t i) { return double(i) * dl; };
    auto deposit = [&](std::vector<double>& q, double lambda, double mass) {
        double pos = std::min(std::max(lambda, 0.0), opts.lambda_max) / dl;
        std::size_t i = std::min(std::size_t(pos), n - 1);
        double f = pos - double(i);
        q[i] += (1.0 - f) * mass;
        q[i + 1] += f * mass;
    };

    // Cell masses at the nodes.
    std::vector<double> q(n + 1, 0.0);
    switch (initial.kind()) {
    case InitialKind::Constant:
        deposit(q, initial.a(), 1.0);
        break;
    case InitialKind::Uniform: {
        if (initial.b() == initial.a()) {
            deposit(q, initial.a(), 1.0);
            break;
        }
        std::size_t pieces = 4 * n;
        for (std::size_t i = 0; i < pieces; ++i)
            deposit(q,
                    initial.a() + (initial.b() - initial.a()) *
                                      (double(i) + 0.5) / double(pieces),
                    1.0 / double(pieces));
        break;
    }
    case InitialKind::Exponential:
        for (std::size_t i = 0; i <= n; ++i) {
            double a = std::max(0.0, node(i) - 0.5 * dl);
            double b = node(i) + 0.5 * dl;
            q[i] = std::exp(-a / initial.a()) - std::exp(-b / initial.a());
        }
        // Tail beyond the grid goes to the last node.
        q[n] += std::exp(-(node(n) + 0.5 * dl) / initial.a());
        break;
    }

    // Static face velocities u_{i+1/2} = Phi(midpoint) / tau.
    std::vector<double> face_u(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mid = 0.5 * (node(i) + node(i + 1));
        face_u[i] = (dyn.kind() == DynamicsKind::Leaky ? dyn.b() - mid
                                                       : dyn.b() + mid * mid) /
                    dyn.tau();
    }
    double top_u = (dyn.kind() == DynamicsKind::Leaky
                        ? dyn.b() - opts.lambda_max
                        : dyn.b() + opts.lambda_max * opts.lambda_max) /
                   dyn.tau();

    std::vector<double> sorted_out = output_times;
    std::sort(sorted_out.begin(), sorted_out.end());

    DensityOracleResult res;
    std::size_t next_out = 0;
    double absorbed = 0.0;
    double surv_integral = 0.0;
    // Mass crossing lambda_max spikes after O(1/lambda_max) time and, by
    // memorylessness of the time change, carries exactly one expected unit
    // of remaining integral of lambda; adding the instantaneous outflux rate
    // to E[lambda] therefore recovers the truncated tail contribution.
    double bflux_rate = 0.0;
    std::vector<double> dq(n + 1);

    std::size_t n_steps = std::size_t(std::ceil(horizon / dt));
    auto record_until = [&](double t) {
        while (next_out < sorted_out.size() && sorted_out[next_out] <= t + 1e-12) {
            res.times.push_back(sorted_out[next_out]);
            double mean = 0.0, total = 0.0;
            for (std::size_t i = 0; i <= n; ++i) {
                mean += node(i) * q[i];
                total += q[i];
            }
            res.mean_rate.push_back(mean + bflux_rate);
            res.survival.push_back(total);
            ++next_out;
        }
    };

    record_until(0.0);
    for (std::size_t step = 0; step < n_steps; ++step) {
        double t = double(step) * dt;

        std::fill(dq.begin(), dq.end(), 0.0);

        // Drift, second-order upwind (linear reconstruction with a minmod
        // limiter); falls back to first order at the boundary nodes.
        auto minmod = [](double a, double b) {
            if (a * b <= 0.0)
                return 0.0;
            return std::abs(a) < std::abs(b) ? a : b;
        };
        for (std::size_t i = 0; i < n; ++i) {
            double u = face_u[i];
            double qu;
            if (u > 0.0) {
                qu = q[i];
                if (i > 0)
                    qu += 0.5 * minmod(q[i] - q[i - 1], q[i + 1] - q[i]);
            } else {
                qu = q[i + 1];
                if (i + 2 <= n)
                    qu -= 0.5 * minmod(q[i + 1] - q[i], q[i + 2] - q[i + 1]);
            }
            double flux = u * qu / dl;
            dq[i] -= dt * flux;
            dq[i + 1] += dt * flux;
        }
        double out_top = top_u > 0.0 ? dt * top_u * q[n] / dl : 0.0;
        out_top = std::min(out_top, q[n] + dq[n]);
        dq[n] -= out_top;
        res.boundary_flux_total += out_top;
        bflux_rate = out_top / dt;

        // Input jumps: rate rho_y(t), shift by the channel's jump size.
        for (const InputChannel& c : channels) {
            double rho = rates.at(c.source, t);
            if (rho <= 0.0)
                continue;
            for (std::size_t i = 0; i <= n; ++i) {
                double moved = dt * rho * q[i];
                if (moved == 0.0)
                    continue;
                dq[i] -= moved;
                double target = node(i) + c.jump;
                if (target >= opts.lambda_max) {
                    dq[n] += moved;
                } else {
                    double pos = target / dl;
                    std::size_t j = std::size_t(pos);
                    double f = pos - double(j);
                    dq[j] += (1.0 - f) * moved;
                    dq[j + 1] += f * moved;
                }
            }
        }

        // Reset flux: sink lambda q everywhere, source at r.
        double sunk = out_top;
        for (std::size_t i = 1; i <= n; ++i) {
            double d = dt * node(i) * q[i];
            dq[i] -= d;
            sunk += d;
        }
        for (std::size_t i = 0; i <= n; ++i)
            q[i] += dq[i];
        if (opts.reinject) {
            deposit(q, reset_value, sunk);
        } else {
            absorbed += sunk;
            double total = 1.0 - absorbed;
            surv_integral += dt * total;
        }

        if (opts.reinject) {
            double total = 0.0;
            for (double v : q)
                total += v;
            res.max_mass_error =
                std::max(res.max_mass_error, std::abs(total - 1.0));
        }
        record_until(t + dt);
    }
    record_until(horizon);
    res.truncation_warning = res.boundary_flux_total > 1e-6;
    res.mean_first_passage = surv_integral;
    return res;
}

// Deterministic companion of solve_rate_fixed_point: the same Picard map on
// the mean-rate field, with the Monte Carlo inner loop replaced by the
// forward-density oracle. Used to cross-check the stochastic solver.
inline RateField solve_oracle_fixed_point(const NetworkSpec& spec,
                                          const CouplingModel& coupling,
                                          double horizon, double dt_out,
                                          std::size_t n_iter,
                                          const DensityOracleOptions& opts) {
    const std::vector<double>& sites = coupling.sites;
    std::vector<double> knots = RateField::uniform_knots(horizon, dt_out);
    RateField m = RateField::constant(sites, knots, spec.initial.mean());

    for (std::size_t iter = 0; iter < n_iter; ++iter) {
        RateField next = m;
        for (std::size_t x = 0; x < sites.size(); ++x) {
            std::vector<InputChannel> channels;
            for (std::size_t y = 0; y < sites.size(); ++y)
                if (coupling.jump[x][y] > 0.0)
                    channels.push_back({y, coupling.jump[x][y]});
            DensityOracleResult r = solve_density_oracle(
                spec.dynamics, spec.reset(sites[x]), spec.initial, m, channels,
                horizon, knots, opts);
            for (std::size_t j = 0; j < knots.size(); ++j)
                next.values()[x][j] = std::max(0.0, r.mean_rate[j]);
        }
        m = std::move(next);
    }
    return m;
}

} // namespace glfield

#endif
