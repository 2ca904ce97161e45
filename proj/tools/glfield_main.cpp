// glfield: simulate and verify spatially-extended GL neural networks with
// stochastic resets (replica-mean-field, Poisson-Hypothesis and neural-field
// engines plus statistical verification studies).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glfield/config.hpp"
#include "glfield/density_oracle.hpp"
#include "glfield/field.hpp"
#include "glfield/io.hpp"
#include "glfield/parallel.hpp"
#include "glfield/ph.hpp"
#include "glfield/rmf.hpp"
#include "glfield/studies.hpp"

namespace fs = std::filesystem;
using glfield::json;

namespace {

constexpr const char* kVersion = "0.2.0";

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Collects output files and writes the manifest last, with a content hash
// per output.
class OutputDir {
  public:
    OutputDir(fs::path root, std::string command, std::string config_path,
              std::uint64_t seed)
        : root_(std::move(root)), command_(std::move(command)),
          config_path_(std::move(config_path)), seed_(seed),
          started_(iso_now()) {}

    void write(const std::string& rel, const std::string& content) {
        fs::path p = root_ / rel;
        glfield::write_text_file(p, content);
        outputs_.push_back(rel);
    }

    void finalize() {
        json manifest;
        manifest["tool_version"] = kVersion;
        manifest["command"] = command_;
        manifest["config"] = config_path_;
        manifest["seed"] = seed_;
        manifest["started"] = started_;
        manifest["finished"] = iso_now();
        json files = json::array();
        for (const std::string& rel : outputs_)
            files.push_back({{"path", rel},
                             {"hash", glfield::hash_file(root_ / rel)}});
        manifest["outputs"] = files;
        glfield::write_text_file(root_ / "manifest.json", manifest.dump(2) + "\n");
    }

  private:
    fs::path root_;
    std::string command_;
    std::string config_path_;
    std::uint64_t seed_;
    std::string started_;
    std::vector<std::string> outputs_;
};

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed_override = -1;
    std::size_t jobs = glfield::default_jobs();
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed_override,
                    "override the config seed (>= 0)");
    cmd->add_option("--jobs", args.jobs, "worker count (env GLFIELD_JOBS wins)");
}

glfield::Experiment load_experiment(const CommonArgs& args) {
    glfield::Experiment exp = glfield::load_config(args.config_path);
    if (args.seed_override >= 0)
        exp.run.seed = std::uint64_t(args.seed_override);
    return exp;
}

std::string zero_pad(std::size_t v, int width = 3) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
    return buf;
}

int run_simulate_rmf(const CommonArgs& args, bool with_routing,
                     std::optional<double> threshold) {
    glfield::Experiment exp = load_experiment(args);
    std::string cmd = threshold ? "simulate-rmf-threshold" : "simulate-rmf";
    OutputDir out(args.out_dir, cmd, args.config_path, exp.run.seed);

    glfield::RmfEngine engine(exp.spec, exp.run);
    glfield::RmfOptions opts;
    opts.record_events = true;
    opts.record_routing = with_routing;
    opts.record_trajectories = true;
    opts.threshold = threshold;

    std::vector<glfield::RmfResult> results(exp.run.trials);
    glfield::parallel_for(args.jobs, exp.run.trials, [&](std::size_t tr) {
        results[tr] = engine.run_trial(tr, opts);
    });
    for (std::size_t tr = 0; tr < exp.run.trials; ++tr) {
        const glfield::RmfResult& res = results[tr];
        std::string suffix = zero_pad(tr);
        out.write("logs/events_" + suffix + ".csv",
                  glfield::event_log_csv(res.log, engine.sites()));
        out.write("logs/trajectories_" + suffix + ".csv",
                  glfield::trajectories_csv(res.snapshot_times, res.snapshots,
                                            exp.run.m_replicas, engine.sites()));
        if (with_routing)
            out.write("logs/routing_" + suffix + ".csv",
                      glfield::routing_csv(res.log, engine.sites()));
    }
    out.finalize();
    return 0;
}

json fixed_point_report_json(const glfield::FixedPointReport& rep) {
    json j;
    j["deltas"] = rep.deltas;
    j["trials"] = rep.trials_per_iter;
    j["final_trials"] = rep.final_trials;
    j["tolerance"] = rep.tolerance;
    j["converged"] = rep.converged;
    return j;
}

void write_rate_field_outputs(OutputDir& out, const glfield::RateField& field,
                              const glfield::FixedPointReport& report,
                              const std::string& name) {
    out.write("fields/" + name + ".csv", glfield::rate_field_csv(field));
    out.write("reports/" + name + ".json",
              fixed_point_report_json(report).dump(2) + "\n");
    std::vector<glfield::SvgSeries> series;
    const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    for (std::size_t i = 0; i < field.sites().size(); ++i) {
        glfield::SvgSeries s;
        s.label = "x=" + glfield::format_double(field.sites()[i]);
        if (field.sites().size() > 8)
            s.label.clear();
        s.color = palette[i % 8];
        s.x = field.knots();
        s.y = field.values()[i];
        series.push_back(std::move(s));
    }
    out.write("plots/" + name + ".svg",
              glfield::svg_line_chart("mean rate m(x, t)", series));
}

struct SolveArgs {
    std::size_t iterations = 8;
    std::size_t trials_per_iter = 400;
    double alpha = 0.5;
    double tolerance = 0.05;
    std::size_t quadrature = 33;
};

int run_solve(const CommonArgs& args, const SolveArgs& solve, bool field_mode) {
    glfield::Experiment exp = load_experiment(args);
    if (solve.iterations < 1)
        throw glfield::PreconditionError("--iterations must be >= 1");

    glfield::FixedPointOptions fp;
    fp.n_iter = solve.iterations;
    fp.trials_per_iter = solve.trials_per_iter;
    fp.alpha = solve.alpha;
    fp.tolerance = solve.tolerance;
    fp.seed = exp.run.seed;
    fp.jobs = args.jobs;

    OutputDir out(args.out_dir, field_mode ? "solve-field" : "solve-ph",
                  args.config_path, exp.run.seed);
    if (field_mode) {
        glfield::FieldSolution sol = glfield::solve_neural_field(
            exp.spec, exp.run.horizon, exp.run.dt_out, solve.quadrature, fp);
        write_rate_field_outputs(out, sol.field, sol.report, "rate_field");
    } else {
        glfield::RateFixedPoint sol =
            glfield::solve_ph_fixed_point(exp.spec, exp.run, fp);
        write_rate_field_outputs(out, sol.field, sol.report, "rate_field");
    }
    out.finalize();
    return 0;
}

json check_json(const glfield::CheckResult& c) {
    return {{"name", c.name},           {"metric", c.metric},
            {"bound_or_slope", c.bound_or_slope}, {"tolerance", c.tolerance},
            {"pass", c.pass},           {"detail", c.detail}};
}

struct VerifyArgs {
    std::string study;
    std::size_t trials = 0;  // 0 = study default
    std::size_t samples = 0; // 0 = study default
    double t = 0.0;          // 0 = run horizon
};

int run_verify(const CommonArgs& args, const VerifyArgs& vargs) {
    glfield::Experiment exp = load_experiment(args);
    const glfield::NetworkSpec& spec = exp.spec;
    const glfield::RunConfig& run = exp.run;
    double t = vargs.t > 0.0 ? vargs.t : run.horizon;

    glfield::VerificationReport report;
    report.study = vargs.study;
    json extra;
    std::vector<glfield::SvgSeries> plot;
    bool log_log_plot = true;

    if (vargs.study == "poc") {
        std::vector<std::size_t> m_list = {4, 16, 64, 256};
        std::size_t samples = vargs.samples ? vargs.samples : 20000;
        glfield::PocStudyResult res = glfield::poc_scaling_study(
            spec, run, m_list, t, samples, 6, 600, args.jobs);
        report.checks.push_back({"poc_tv_loglog_slope", res.fit.slope, -0.3,
                                 0.0, res.fit.slope <= -0.3,
                                 "target -0.5; TV-estimator bias allowed"});
        report.checks.push_back({"poc_tv_monotone", res.monotone ? 1.0 : 0.0,
                                 1.0, 0.0, res.monotone,
                                 "nonincreasing up to CI overlap"});
        glfield::SvgSeries s{"TV", "#1f77b4", {}, {}};
        json tvs = json::array();
        for (std::size_t i = 0; i < m_list.size(); ++i) {
            s.x.push_back(double(m_list[i]));
            s.y.push_back(std::max(res.tv[i].value, 1e-6));
            tvs.push_back({{"M", m_list[i]},
                           {"tv", res.tv[i].value},
                           {"ci", {res.tv[i].ci_lo, res.tv[i].ci_hi}}});
        }
        plot.push_back(std::move(s));
        extra["tv"] = tvs;
        extra["slope"] = res.fit.slope;
    } else if (vargs.study == "tlln") {
        std::vector<std::size_t> m_list = {4, 16, 64, 256};
        std::size_t trials = vargs.trials ? vargs.trials : 300;
        glfield::TllnStudyResult res =
            glfield::tlln_study(spec, run, m_list, t, trials, args.jobs);
        bool pass = res.fit.slope >= -0.7 && res.fit.slope <= -0.3;
        report.checks.push_back({"tlln_loglog_slope", res.fit.slope, -0.5, 0.2,
                                 pass, "expected -0.5 +/- 0.2"});
        glfield::SvgSeries s{"tlln metric", "#d62728", {}, {}};
        for (std::size_t i = 0; i < m_list.size(); ++i) {
            s.x.push_back(double(m_list[i]));
            s.y.push_back(res.metric[i]);
        }
        plot.push_back(std::move(s));
        extra["metric"] = res.metric;
        extra["slope"] = res.fit.slope;
    } else if (vargs.study == "tail") {
        std::size_t trials = vargs.trials ? vargs.trials : 1000;
        std::vector<double> l_list = {1.0, 2.0, 5.0, 10.0};
        glfield::TailStudyResult res =
            glfield::tail_study(spec, run, t, trials, l_list, args.jobs);
        glfield::SvgSeries bound{"bound", "#444444", {}, {}};
        glfield::SvgSeries emp{"empirical", "#1f77b4", {}, {}};
        for (const glfield::TailCheck& c : res.checks) {
            report.checks.push_back(
                {"tail_bound_L=" + glfield::format_double(c.level), c.empirical,
                 c.bound, 3.0 * c.std_error, c.pass,
                 "P(lambda > L) <= 1/sqrt(1+L^2) + 3 SE"});
            bound.x.push_back(c.level);
            bound.y.push_back(c.bound);
            emp.x.push_back(c.level);
            emp.y.push_back(std::max(c.empirical, 1e-6));
        }
        plot.push_back(std::move(bound));
        plot.push_back(std::move(emp));
        extra["n_samples"] = res.n_samples;
    } else if (vargs.study == "chenstein") {
        std::vector<std::size_t> m_list = {4, 16, 64, 256};
        std::size_t trials = vargs.trials ? vargs.trials : 300;
        glfield::ChenSteinStudyResult res =
            glfield::chen_stein_study(spec, run, m_list, t, trials, args.jobs);
        report.checks.push_back({"chen_stein_terms_slope", res.fit.slope, -0.3,
                                 0.0, res.fit.slope <= -0.3,
                                 "term1 + term2 decreasing in M"});
        glfield::SvgSeries s{"term1+term2", "#2ca02c", {}, {}};
        json terms = json::array();
        for (std::size_t i = 0; i < m_list.size(); ++i) {
            const glfield::ChenSteinTerms& c = res.terms[i];
            // Headroom factor 5: the lemma's constant is unspecified, so the
            // comparison is recorded, not asserted against the paper.
            terms.push_back({{"M", m_list[i]},
                             {"term1", c.term1},
                             {"term2", c.term2},
                             {"tv_to_poisson", c.tv_to_poisson},
                             {"headroom_5x_ok",
                              c.tv_to_poisson <= 5.0 * (c.term1 + c.term2) + 1e-9}});
            s.x.push_back(double(m_list[i]));
            s.y.push_back(std::max(c.term1 + c.term2, 1e-12));
        }
        plot.push_back(std::move(s));
        extra["terms"] = terms;
    } else if (vargs.study == "lln-k") {
        std::vector<std::size_t> k_list = {8, 16, 32, 64, 128};
        std::size_t trials = vargs.trials ? vargs.trials : 20000;
        glfield::FixedPointOptions fp;
        fp.n_iter = 5;
        fp.trials_per_iter = 400;
        fp.seed = run.seed;
        fp.jobs = args.jobs;
        glfield::FieldSolution sol = glfield::solve_neural_field(
            spec, t, run.dt_out, 17, fp);
        std::vector<glfield::AggregateInput> stats =
            glfield::aggregate_input_study(spec, sol.field,
                                           spec.domain.midpoint(), t, k_list,
                                           trials, run.seed);
        glfield::LlnCheck lln = glfield::lln_array_check(stats);
        std::vector<double> ks, vars;
        json rows = json::array();
        for (const glfield::AggregateInput& s : stats) {
            ks.push_back(double(s.k));
            vars.push_back(std::max(s.variance, 1e-12));
            rows.push_back({{"K", s.k},
                            {"mean_A", s.mean},
                            {"var_A", s.variance},
                            {"target", s.target},
                            {"abs_err", s.abs_err}});
        }
        glfield::ScalingFit fit = glfield::fit_loglog(ks, vars);
        report.checks.push_back({"lln_condition1_means",
                                 lln.condition1 ? 1.0 : 0.0, 1.0, 0.0,
                                 lln.condition1, lln.detail});
        report.checks.push_back({"lln_condition2_variance",
                                 lln.condition2 ? 1.0 : 0.0, 1.0, 0.0,
                                 lln.condition2, lln.detail});
        bool slope_ok = fit.slope >= -1.25 && fit.slope <= -0.75;
        report.checks.push_back({"aggregate_variance_slope", fit.slope, -1.0,
                                 0.25, slope_ok, "Var(A^K) ~ 1/K"});
        glfield::SvgSeries s{"Var(A^K)", "#9467bd", ks, vars};
        plot.push_back(std::move(s));
        extra["stats"] = rows;
        extra["inconclusive"] = lln.inconclusive;
    } else {
        throw glfield::PreconditionError("unknown study \"" + vargs.study +
                                         "\"");
    }

    OutputDir out(args.out_dir, "verify --study " + vargs.study,
                  args.config_path, run.seed);
    json j;
    j["study"] = report.study;
    json checks = json::array();
    for (const glfield::CheckResult& c : report.checks)
        checks.push_back(check_json(c));
    j["checks"] = checks;
    j["data"] = extra;
    out.write("reports/" + vargs.study + ".json", j.dump(2) + "\n");
    out.write("plots/" + vargs.study + ".svg",
              glfield::svg_line_chart(vargs.study, plot, log_log_plot));
    out.finalize();

    for (const glfield::CheckResult& c : report.checks)
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                  << " metric=" << c.metric << "\n";
    return report.all_pass() ? 0 : 3;
}

int run_grid_info(const CommonArgs& args, std::size_t levels) {
    glfield::Experiment exp = load_experiment(args);
    std::size_t k = levels ? levels : exp.run.k_sites;
    glfield::NestedGrids grids = exp.spec.sites(k);
    std::cout << "anchor: " << glfield::format_double(grids.anchor()) << "\n";
    for (std::size_t l = 1; l <= k; ++l) {
        std::cout << "D_" << l << " fill_distance="
                  << glfield::format_double(grids.fill_distance(l)) << " points:";
        for (double p : grids.grid(l))
            std::cout << ' ' << glfield::format_double(p);
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GL neural network simulator and verifier"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs common;
    SolveArgs solve;
    VerifyArgs verify;
    double threshold = 0.0;
    bool with_routing = false;
    std::size_t grid_levels = 0;

    CLI::App* rmf = app.add_subcommand("simulate-rmf",
                                       "exact replica-mean-field simulation");
    add_common(rmf, common);
    rmf->add_flag("--routing", with_routing, "write the routing sidecar CSV");

    CLI::App* rmf_thr = app.add_subcommand(
        "simulate-rmf-threshold", "RMF simulation with threshold resets");
    add_common(rmf_thr, common);
    rmf_thr->add_flag("--routing", with_routing,
                      "write the routing sidecar CSV");
    rmf_thr->add_option("--threshold", threshold, "reset threshold C")
        ->required();

    CLI::App* ph = app.add_subcommand("solve-ph",
                                      "Poisson-Hypothesis fixed point");
    add_common(ph, common);
    ph->add_option("--iterations", solve.iterations, "Picard iterations");
    ph->add_option("--trials-per-iter", solve.trials_per_iter,
                   "Monte Carlo trials per iteration");
    ph->add_option("--alpha", solve.alpha, "Picard damping factor");
    ph->add_option("--tolerance", solve.tolerance, "convergence tolerance");

    CLI::App* field = app.add_subcommand("solve-field",
                                         "neural-field limit solve");
    add_common(field, common);
    field->add_option("--iterations", solve.iterations, "Picard iterations");
    field->add_option("--trials-per-iter", solve.trials_per_iter,
                      "Monte Carlo trials per iteration");
    field->add_option("--alpha", solve.alpha, "Picard damping factor");
    field->add_option("--tolerance", solve.tolerance, "convergence tolerance");
    field->add_option("--quadrature", solve.quadrature,
                      "trapezoid quadrature nodes (>= 2)");

    CLI::App* ver = app.add_subcommand("verify", "run a verification study");
    add_common(ver, common);
    ver->add_option("--study", verify.study,
                    "poc | tlln | tail | chenstein | lln-k")
        ->required();
    ver->add_option("--trials", verify.trials, "override the trial budget");
    ver->add_option("--samples", verify.samples, "override the sample budget");
    ver->add_option("--t", verify.t, "observation time (default: run.T)");

    CLI::App* gi = app.add_subcommand("grid-info", "print the nested grids");
    add_common(gi, common);
    gi->add_option("--levels", grid_levels, "levels to print (default run.K)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (rmf->parsed())
            return run_simulate_rmf(common, with_routing, std::nullopt);
        if (rmf_thr->parsed())
            return run_simulate_rmf(common, with_routing, threshold);
        if (ph->parsed())
            return run_solve(common, solve, false);
        if (field->parsed())
            return run_solve(common, solve, true);
        if (ver->parsed())
            return run_verify(common, verify);
        if (gi->parsed())
            return run_grid_info(common, grid_levels);
    } catch (const glfield::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const glfield::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const glfield::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const glfield::PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "engine error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
