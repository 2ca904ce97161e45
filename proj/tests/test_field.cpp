#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "glfield/field.hpp"

using namespace glfield;

namespace {

NetworkSpec field_spec(WeightKernel kernel) {
    NetworkSpec spec;
    spec.domain = SpatialDomain(0.0, 1.0);
    spec.dynamics = AutonomousDynamics::leaky(1.0, 1.0);
    spec.kernel = std::move(kernel);
    spec.reset = ResetField::constant(0.2);
    spec.initial = InitialLaw::constant(0.0);
    return spec;
}

FixedPointOptions quick_opts(std::uint64_t seed) {
    FixedPointOptions opts;
    opts.n_iter = 3;
    opts.trials_per_iter = 400;
    opts.seed = seed;
    return opts;
}

} // namespace

TEST_CASE("trapezoid weights sum to the domain length", "[field]") {
    SpatialDomain d(-1.5, 2.0);
    for (std::size_t q : {2, 5, 33, 64}) {
        Quadrature quad = trapezoid_quadrature(d, q);
        REQUIRE(quad.nodes.size() == q);
        double sum = 0.0;
        for (double w : quad.weights)
            sum += w;
        REQUIRE(std::abs(sum - d.length()) <= 1e-12);
        REQUIRE(quad.nodes.front() == d.lo);
        REQUIRE(quad.nodes.back() == d.hi);
    }
    REQUIRE_THROWS_AS(trapezoid_quadrature(d, 1), PreconditionError);
}

TEST_CASE("decoupled field nodes agree with the single-neuron solution",
          "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::constant(0.0));
    FieldSolution sol = solve_neural_field(spec, 2.0, 0.25, 5, quick_opts(3));
    // every node solves the same decoupled problem; curves agree to MC noise
    for (std::size_t j = 0; j < sol.field.knots().size(); ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t x = 0; x < 5; ++x) {
            lo = std::min(lo, sol.field.values()[x][j]);
            hi = std::max(hi, sol.field.values()[x][j]);
        }
        REQUIRE(hi - lo < 0.12);
    }
    // and match the one-site PH fixed point within the same band
    RunConfig run;
    run.horizon = 2.0;
    run.k_sites = 2;
    run.m_replicas = 2;
    run.dt_out = 0.25;
    run.seed = 3;
    RateFixedPoint ph = solve_ph_fixed_point(spec, run, quick_opts(3));
    for (std::size_t j = 0; j < sol.field.knots().size(); ++j)
        REQUIRE(sol.field.values()[2][j] ==
                Catch::Approx(ph.field.values()[0][j]).margin(0.12));
}

TEST_CASE("constant kernel gives an x-independent field", "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::constant(0.5));
    FieldSolution sol = solve_neural_field(spec, 2.0, 0.25, 9, quick_opts(11));
    for (std::size_t j = 0; j < sol.field.knots().size(); ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t x = 0; x < 9; ++x) {
            lo = std::min(lo, sol.field.values()[x][j]);
            hi = std::max(hi, sol.field.values()[x][j]);
        }
        REQUIRE(hi - lo < 0.15);
    }
}

TEST_CASE("doubling the quadrature barely moves the field", "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::gaussian_bump(0.6, 0.3));
    FixedPointOptions opts = quick_opts(21);
    opts.trials_per_iter = 800;
    FieldSolution coarse = solve_neural_field(spec, 2.0, 0.25, 32, opts);
    FieldSolution fine = solve_neural_field(spec, 2.0, 0.25, 64, opts);
    double worst = 0.0;
    for (double x : {0.1, 0.5, 0.9})
        for (double t : {0.5, 1.0, 2.0})
            worst = std::max(worst, std::abs(coarse.field.at_xt(x, t) -
                                             fine.field.at_xt(x, t)));
    REQUIRE(worst < 0.1); // within the MC noise band
}

TEST_CASE("nested-grid averages converge to Lebesgue integrals", "[field]") {
    // empirical measure of D_K \ {x} with weight |D|/(K-1) against smooth f
    SpatialDomain d(0.0, 1.0);
    struct Case {
        double (*f)(double);
        double integral;
        double lip;
    };
    std::vector<Case> cases = {{[](double y) { return y; }, 0.5, 1.0},
                               {[](double y) { return std::cos(y); },
                                std::sin(1.0), 1.0}};
    for (const Case& c : cases)
        for (std::size_t k : {8, 16, 32, 64, 128}) {
            NestedGrids grids = build_nested_grids(d, 0.5, k);
            std::vector<double> sites = grids.grid(k);
            double acc = 0.0;
            for (std::size_t i = 1; i < k; ++i)
                acc += c.f(sites[i]);
            acc *= d.length() / double(k - 1);
            REQUIRE(std::abs(acc - c.integral) <=
                    2.0 * d.length() / double(k) * c.lip);
        }
}

TEST_CASE("aggregate input study trivia", "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::constant(0.0));
    RateField field = RateField::constant(
        {0.0, 1.0}, RateField::uniform_knots(2.0, 0.5), 0.7);
    auto stats = aggregate_input_study(spec, field, 0.5, 2.0, {8, 16}, 50, 1);
    for (const AggregateInput& s : stats) {
        REQUIRE(s.mean == 0.0);
        REQUIRE(s.variance == 0.0);
        REQUIRE(s.target == 0.0);
    }
}

TEST_CASE("aggregate input means approach the quadrature target", "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::gaussian_bump(0.8, 0.3));
    RateField field = RateField::constant(
        {0.0, 0.5, 1.0}, RateField::uniform_knots(2.0, 0.5), 0.6);
    auto stats = aggregate_input_study(spec, field, 0.5, 2.0,
                                       {8, 16, 32, 64, 128, 256}, 4000, 9);
    REQUIRE(stats.size() == 6);
    for (const AggregateInput& s : stats) {
        REQUIRE(s.mean >= 0.0);
        REQUIRE(s.target == Catch::Approx(stats.front().target));
    }
    // variance shrinks roughly like 1/K
    REQUIRE(stats.back().variance < 0.2 * stats.front().variance);
    LlnCheck lln = lln_array_check(stats);
    REQUIRE_FALSE(lln.inconclusive);
    REQUIRE(lln.condition2);
}

TEST_CASE("lln check is inconclusive on degenerate trial counts", "[field]") {
    NetworkSpec spec = field_spec(WeightKernel::constant(0.4));
    RateField field = RateField::constant(
        {0.0, 1.0}, RateField::uniform_knots(1.0, 0.5), 0.5);
    auto stats = aggregate_input_study(spec, field, 0.5, 1.0, {8, 16}, 1, 3);
    LlnCheck lln = lln_array_check(stats);
    REQUIRE(lln.inconclusive);
    REQUIRE(lln_array_check({}).inconclusive);
}
