#ifndef GLFIELD_FIELD_HPP
#define GLFIELD_FIELD_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "glfield/errors.hpp"
#include "glfield/network.hpp"
#include "glfield/ph.hpp"
#include "glfield/rate_field.hpp"
#include "glfield/rng.hpp"

namespace glfield {

// Composite trapezoid nodes and weights on the domain; weights sum to |D|.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Quadrature trapezoid_quadrature(const SpatialDomain& domain,
                                       std::size_t q) {
    if (q < 2)
        throw PreconditionError("quadrature grid size must be >= 2");
    Quadrature quad;
    double h = domain.length() / double(q - 1);
    for (std::size_t i = 0; i < q; ++i) {
        quad.nodes.push_back(domain.lo + h * double(i));
        quad.weights.push_back(i == 0 || i + 1 == q ? 0.5 * h : h);
    }
    return quad;
}

struct FieldSolution {
    RateField field;
    Quadrature quadrature;
    FixedPointReport report;
};

// Neural-field limit with stochastic resets: the PH fixed point with the
// interaction integral over D replaced by quadrature, so neuron x receives
// arrivals from node y at rate m(y, t) with jump size w(x, y) q_y.
inline FieldSolution solve_neural_field(const NetworkSpec& spec, double horizon,
                                        double dt_out, std::size_t q,
                                        const FixedPointOptions& opts) {
    Quadrature quad = trapezoid_quadrature(spec.domain, q);
    CouplingModel coupling;
    coupling.sites = quad.nodes;
    coupling.jump.assign(q, std::vector<double>(q, 0.0));
    for (std::size_t x = 0; x < q; ++x)
        for (std::size_t y = 0; y < q; ++y)
            coupling.jump[x][y] =
                spec.kernel(quad.nodes[x], quad.nodes[y]) * quad.weights[y];
    RateFixedPoint fp =
        solve_rate_fixed_point(spec, coupling, horizon, dt_out, opts);
    return {std::move(fp.field), std::move(quad), std::move(fp.report)};
}

inline std::uint64_t sample_poisson(Rng& rng, double mean) {
    std::uint64_t k = 0;
    // Knuth's product method, chunked to dodge exp underflow.
    while (mean > 20.0) {
        double chunk = 20.0;
        double l = std::exp(-chunk);
        double p = rng.next_open_double();
        std::uint64_t kc = 0;
        while (p > l) {
            ++kc;
            p *= rng.next_open_double();
        }
        k += kc;
        mean -= chunk;
    }
    double l = std::exp(-mean);
    double p = rng.next_open_double();
    while (p > l) {
        ++k;
        p *= rng.next_open_double();
    }
    return k;
}

// Per-K statistics of the aggregate input A^K(x,t) of the K -> infinity
// convergence study.
struct AggregateInput {
    std::size_t k = 0;
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double target = 0.0; // quadrature value of the limit double integral
    double abs_err = 0.0;
    std::size_t trials = 0;
};

// Samples A^K(x,t) = sum over y in D_K(x)\{x} of w(x,y)/(K-1) * Poisson
// counts with the converged field's intensities. Under PH the inputs are
// Poisson with deterministic rates, so no neuron re-simulation is needed.
inline std::vector<AggregateInput>
aggregate_input_study(const NetworkSpec& spec, const RateField& field,
                      double x, double t, const std::vector<std::size_t>& k_list,
                      std::size_t trials, std::uint64_t seed) {
    // Limit target by trapezoid in y over a fine grid and the exact
    // piecewise-linear integral in s.
    Quadrature fine = trapezoid_quadrature(spec.domain, 257);
    double target = 0.0;
    for (std::size_t i = 0; i < fine.nodes.size(); ++i) {
        double y = fine.nodes[i];
        // integral over [0, t] of m(y, s) ds, piecewise linear in s
        double steps = 256;
        double acc = 0.0, prev = field.at_xt(y, 0.0);
        for (std::size_t j = 1; j <= std::size_t(steps); ++j) {
            double s = t * double(j) / steps;
            double cur = field.at_xt(y, s);
            acc += 0.5 * (prev + cur) * (t / steps);
            prev = cur;
        }
        target += fine.weights[i] * spec.kernel(x, y) * acc;
    }

    std::vector<AggregateInput> out;
    for (std::size_t k : k_list) {
        NestedGrids grids = build_nested_grids(spec.domain, x, k);
        std::vector<double> sites = grids.grid(k);
        std::vector<double> w_over(k, 0.0), mu(k, 0.0);
        for (std::size_t i = 1; i < k; ++i) {
            w_over[i] = spec.kernel(x, sites[i]) / double(k - 1);
            double steps = 256;
            double acc = 0.0, prev = field.at_xt(sites[i], 0.0);
            for (std::size_t j = 1; j <= std::size_t(steps); ++j) {
                double s = t * double(j) / steps;
                double cur = field.at_xt(sites[i], s);
                acc += 0.5 * (prev + cur) * (t / steps);
                prev = cur;
            }
            mu[i] = acc;
        }

        double sum = 0.0, sumsq = 0.0;
        for (std::size_t tr = 0; tr < trials; ++tr) {
            Rng rng(Rng::derive(seed, {0x61676772ull /* aggr */, k, tr}));
            double a = 0.0;
            for (std::size_t i = 1; i < k; ++i)
                if (w_over[i] > 0.0 && mu[i] > 0.0)
                    a += w_over[i] * double(sample_poisson(rng, mu[i]));
            sum += a;
            sumsq += a * a;
        }
        AggregateInput st;
        st.k = k;
        st.trials = trials;
        st.mean = sum / double(trials);
        st.variance =
            trials > 1
                ? std::max(0.0, (sumsq - sum * sum / double(trials)) /
                                    double(trials - 1))
                : 0.0;
        st.mean_se = std::sqrt(st.variance / double(trials));
        st.target = target;
        st.abs_err = std::abs(st.mean - target);
        out.push_back(st);
    }
    return out;
}

struct LlnCheck {
    bool inconclusive = false;
    bool condition1 = false; // means settle toward the limit target
    bool condition2 = false; // variances decrease toward zero
    std::string detail;
};

// Verifies the two hypotheses of the triangular-array law of large numbers
// on the study output: (1) the row sums of means approach the limit value,
// (2) Var(S_n) decreases toward 0 (final value <= 5% of the initial one).
inline LlnCheck lln_array_check(const std::vector<AggregateInput>& stats) {
    LlnCheck out;
    if (stats.size() < 2) {
        out.inconclusive = true;
        out.detail = "need stats for at least two K values";
        return out;
    }
    for (const AggregateInput& s : stats)
        if (s.trials < 2) {
            out.inconclusive = true;
            out.detail = "no variance estimate from a single trial";
            return out;
        }

    // Condition 1: |mean - target| shrinks along the K list, with Monte
    // Carlo slack.
    out.condition1 = true;
    for (std::size_t i = 1; i < stats.size(); ++i) {
        double slack = 3.0 * (stats[i].mean_se + stats[i - 1].mean_se);
        if (stats[i].abs_err > stats[i - 1].abs_err + slack) {
            out.condition1 = false;
            out.detail = "condition 1 violated between K=" +
                         std::to_string(stats[i - 1].k) + " and K=" +
                         std::to_string(stats[i].k);
        }
    }

    // Condition 2: variance of the row sum decreasing toward 0.
    double v0 = stats.front().variance, v1 = stats.back().variance;
    out.condition2 = v0 == 0.0 ? v1 == 0.0 : v1 <= 0.05 * v0;
    if (!out.condition2 && out.detail.empty())
        out.detail = "condition 2 violated: final variance too large";
    return out;
}

} // namespace glfield

#endif
