#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "glfield/density_oracle.hpp"

using namespace glfield;

TEST_CASE("stationary leaky point mass stays put", "[oracle]") {
    auto dyn = AutonomousDynamics::leaky(1.0, 1.0);
    RateField rates = RateField::constant({0.0}, {0.0, 2.0}, 0.0);
    DensityOracleOptions opts;
    opts.lambda_max = 8.0;
    opts.n_cells = 400;
    opts.dt = 1e-3;
    DensityOracleResult res =
        solve_density_oracle(dyn, 1.0, InitialLaw::constant(1.0), rates, {},
                             2.0, {0.0, 0.5, 1.0, 2.0}, opts);
    REQUIRE(res.times.size() == 4);
    for (double m : res.mean_rate)
        REQUIRE(m == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(res.max_mass_error <= 1e-6);
    REQUIRE_FALSE(res.truncation_warning);
}

TEST_CASE("mass is conserved with inputs and resets active", "[oracle]") {
    auto dyn = AutonomousDynamics::leaky(1.0, 1.0);
    RateField rates = RateField::constant({0.0}, {0.0, 3.0}, 1.5);
    DensityOracleOptions opts;
    opts.lambda_max = 8.0;
    opts.n_cells = 400;
    opts.dt = 1e-3;
    DensityOracleResult res = solve_density_oracle(
        dyn, 0.3, InitialLaw::uniform(0.0, 1.0), rates, {{0, 0.4}}, 3.0,
        {1.0, 3.0}, opts);
    REQUIRE(res.max_mass_error <= 1e-6);
    for (double m : res.mean_rate) {
        REQUIRE(m >= 0.0);
        REQUIRE(m < 8.0);
    }
}

TEST_CASE("stability bound is enforced", "[oracle]") {
    auto dyn = AutonomousDynamics::quadratic(1.0, 1.0);
    RateField rates = RateField::constant({0.0}, {0.0, 1.0}, 0.0);
    DensityOracleOptions opts;
    opts.lambda_max = 40.0;
    opts.n_cells = 640;
    opts.dt = 1e-3; // far above the quadratic bound
    REQUIRE_THROWS_AS(solve_density_oracle(dyn, 0.0, InitialLaw::constant(0.0),
                                           rates, {}, 1.0, {1.0}, opts),
                      StabilityError);
}

TEST_CASE("quadratic mean first-spike time is one", "[oracle]") {
    // survival from lambda0 = 0 is exp(-Lambda(t)) = cos(t); the mean
    // first-passage time is the integral of cos over [0, pi/2] = 1
    auto dyn = AutonomousDynamics::quadratic(1.0, 1.0);
    RateField rates = RateField::constant({0.0}, {0.0, 2.0}, 0.0);
    DensityOracleOptions opts;
    opts.lambda_max = 20.0;
    opts.n_cells = 2560;
    opts.dt = 9e-6;
    opts.reinject = false;
    DensityOracleResult res = solve_density_oracle(
        dyn, 0.0, InitialLaw::constant(0.0), rates, {}, 2.0, {0.5, 2.0}, opts);
    REQUIRE(res.mean_first_passage == Catch::Approx(1.0).epsilon(0.01));
    // survival at t = 0.5 should be near cos(0.5)
    REQUIRE(res.survival[0] == Catch::Approx(std::cos(0.5)).margin(0.02));
    // essentially no mass survives past pi/2
    REQUIRE(res.survival[1] < 0.01);
}

TEST_CASE("constant-input quadratic mean count matches Monte Carlo",
          "[oracle]") {
    auto dyn = AutonomousDynamics::quadratic(1.0, 1.0);
    std::vector<double> knots = RateField::uniform_knots(2.0, 0.1);
    RateField rates = RateField::constant({0.0}, knots, 1.0);
    std::vector<InputChannel> channels = {{0, 0.5}};

    DensityOracleOptions opts;
    opts.lambda_max = 40.0;
    opts.n_cells = 640;
    opts.dt = 1.5e-5;
    DensityOracleResult oracle = solve_density_oracle(
        dyn, 0.0, InitialLaw::constant(0.0), rates, channels, 2.0, knots, opts);

    // oracle spike count = integral of E[lambda] over [0, 2]
    double oracle_count = 0.0;
    for (std::size_t j = 0; j + 1 < oracle.times.size(); ++j)
        oracle_count += 0.5 * (oracle.mean_rate[j] + oracle.mean_rate[j + 1]) *
                        (oracle.times[j + 1] - oracle.times[j]);

    PhNeuronSampler sampler(dyn, 0.0, rates, channels);
    double total = 0.0, totalsq = 0.0;
    const std::size_t trials = 20000;
    for (std::size_t tr = 0; tr < trials; ++tr) {
        Rng rng(Rng::derive(555, tr));
        double c = double(sampler.simulate(0.0, 2.0, rng).spikes.size());
        total += c;
        totalsq += c * c;
    }
    double mc = total / double(trials);
    double se = std::sqrt((totalsq / trials - mc * mc) / double(trials));
    REQUIRE(std::abs(mc - oracle_count) <=
            std::max(0.02 * oracle_count, 3.0 * se) + 0.02 * oracle_count);
}

TEST_CASE("oracle-driven fixed point stays nonnegative", "[oracle]") {
    NetworkSpec spec;
    spec.domain = SpatialDomain(0.0, 1.0);
    spec.dynamics = AutonomousDynamics::leaky(1.0, 1.0);
    spec.kernel = WeightKernel::constant(0.5);
    spec.reset = ResetField::constant(0.2);
    spec.initial = InitialLaw::constant(0.0);
    std::vector<double> sites = spec.sites(2).grid(2);
    CouplingModel coupling = ph_coupling(spec, sites);
    DensityOracleOptions opts;
    opts.lambda_max = 8.0;
    opts.n_cells = 200;
    opts.dt = 1e-3;
    RateField m = solve_oracle_fixed_point(spec, coupling, 1.0, 0.25, 3, opts);
    for (const auto& row : m.values())
        for (double v : row) {
            REQUIRE(v >= 0.0);
            REQUIRE(v < 5.0);
        }
}
