#ifndef GLFIELD_STUDIES_HPP
#define GLFIELD_STUDIES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "glfield/field.hpp"
#include "glfield/network.hpp"
#include "glfield/ph.hpp"
#include "glfield/rmf.hpp"
#include "glfield/stats.hpp"

namespace glfield {

struct CheckResult {
    std::string name;
    double metric = 0.0;
    double bound_or_slope = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct VerificationReport {
    std::string study;
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const CheckResult& c : checks)
            if (!c.pass)
                return false;
        return true;
    }
};

// Raw per-trial material pulled out of RMF runs at a fixed observation time:
// intensities of every replica at the observed site, spike counts per
// replica at a source site, and routed arrivals into replica 0 at the
// observed site from that source site.
struct RmfStudySamples {
    std::vector<double> lambda_at_t; // trials x M values
    std::vector<std::vector<double>> counts_at_source; // [m][trial]
    std::vector<std::uint64_t> arrivals; // [trial]
};

inline RmfStudySamples collect_rmf_samples(const NetworkSpec& spec,
                                           const RunConfig& run, double t,
                                           std::size_t trials,
                                           std::size_t observed_site,
                                           std::size_t source_site,
                                           bool with_routing,
                                           std::size_t jobs = 1) {
    RmfEngine engine(spec, run);
    RmfOptions opts;
    opts.record_events = false;
    opts.record_routing = with_routing;
    opts.sample_times = {t};

    RmfStudySamples out;
    std::size_t m = run.m_replicas, k = run.k_sites;
    out.lambda_at_t.assign(trials * m, 0.0);
    out.counts_at_source.assign(m, std::vector<double>(trials, 0.0));
    out.arrivals.assign(trials, 0);

    std::vector<RmfStudySamples> parts(trials);
    parallel_for(jobs, trials, [&](std::size_t tr) {
        RmfResult res = engine.run_trial(tr, opts);
        RmfStudySamples part;
        part.lambda_at_t.resize(m);
        for (std::size_t mi = 0; mi < m; ++mi)
            part.lambda_at_t[mi] = res.snapshots.front()[mi * k + observed_site];
        part.counts_at_source.assign(m, std::vector<double>(1, 0.0));
        for (std::size_t mi = 0; mi < m; ++mi)
            part.counts_at_source[mi][0] =
                double(res.counts[mi][source_site]);
        if (with_routing) {
            std::uint64_t a = 0;
            for (const RoutingRecord& r : res.log.routing)
                if (r.t < t && r.target_replica == 0 &&
                    r.target_site == observed_site &&
                    r.source_site == source_site)
                    ++a;
            part.arrivals.push_back(a);
        }
        parts[tr] = std::move(part);
    });
    for (std::size_t tr = 0; tr < trials; ++tr) {
        for (std::size_t mi = 0; mi < m; ++mi) {
            out.lambda_at_t[tr * m + mi] = parts[tr].lambda_at_t[mi];
            out.counts_at_source[mi][tr] = parts[tr].counts_at_source[mi][0];
        }
        if (with_routing)
            out.arrivals[tr] = parts[tr].arrivals.front();
    }
    return out;
}

// Samples of lambda^K(x, t) under the Poisson Hypothesis, driven by a
// converged rate field.
inline std::vector<double>
collect_ph_samples(const NetworkSpec& spec, const std::vector<double>& sites,
                   const RateField& field, std::size_t site, double t,
                   std::size_t trials, std::uint64_t seed,
                   std::size_t jobs = 1) {
    CouplingModel coupling = ph_coupling(spec, sites);
    std::vector<InputChannel> channels;
    for (std::size_t y = 0; y < sites.size(); ++y)
        if (coupling.jump[site][y] > 0.0)
            channels.push_back({y, coupling.jump[site][y]});
    PhNeuronSampler sampler(spec.dynamics, spec.reset(sites[site]), field,
                            std::move(channels));
    std::vector<double> out(trials);
    parallel_for(jobs, trials, [&](std::size_t tr) {
        std::uint64_t key = Rng::derive(seed, {rng_tag::ph, 9999, site, tr});
        Rng init(Rng::derive(key, rng_tag::initial));
        double lam0 = spec.initial.sample(init);
        out[tr] = sampler.simulate(lam0, t, Rng(key), {t}).lambda_at_samples[0];
    });
    return out;
}

// Map both sample sets through the empirical CDF of their pooled values
// (midranks, scaled to [0, 1]). Total variation between two laws is
// invariant under a common monotone transformation, so the estimand is
// unchanged, but the histogram bins become equal-probability bins of the
// pooled law. Without this, heavy-tailed intensity samples (the quadratic
// dynamics has P(lambda > L) ~ L^-2) stretch the pooled range by orders of
// magnitude and collapse nearly all mass into a couple of bins.
inline void pooled_rank_transform(std::vector<double>& a,
                                  std::vector<double>& b) {
    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const double n = double(pooled.size());
    auto midrank = [&](double v) {
        auto lo = std::lower_bound(pooled.begin(), pooled.end(), v);
        auto hi = std::upper_bound(lo, pooled.end(), v);
        return 0.5 * double((lo - pooled.begin()) + (hi - pooled.begin())) / n;
    };
    for (double& v : a)
        v = midrank(v);
    for (double& v : b)
        v = midrank(v);
}

struct PocStudyResult {
    std::vector<std::size_t> m_list;
    std::vector<TVEstimate> tv;
    ScalingFit fit;
    bool monotone = true; // nonincreasing up to CI overlap
};

// Propagation-of-chaos study: TV distance between the law of a replica's
// intensity at (x, t) and the PH intensity at (x, t), across M.
inline PocStudyResult poc_scaling_study(const NetworkSpec& spec,
                                        const RunConfig& base,
                                        const std::vector<std::size_t>& m_list,
                                        double t, std::size_t samples_per_m,
                                        std::size_t ph_iters,
                                        std::size_t ph_trials_per_iter,
                                        std::size_t jobs = 1) {
    RunConfig run = base;
    run.horizon = t;

    FixedPointOptions fp;
    fp.n_iter = ph_iters;
    fp.trials_per_iter = ph_trials_per_iter;
    fp.seed = base.seed;
    fp.jobs = jobs;
    RateFixedPoint ph = solve_ph_fixed_point(spec, run, fp);

    std::vector<double> sites = spec.sites(run.k_sites).grid(run.k_sites);
    std::vector<double> ph_samples = collect_ph_samples(
        spec, sites, ph.field, 0, t, samples_per_m, base.seed, jobs);

    PocStudyResult out;
    out.m_list = m_list;
    std::vector<double> xs, ys;
    for (std::size_t m : m_list) {
        RunConfig r = run;
        r.m_replicas = m;
        r.seed = Rng::derive(base.seed, {0x706F63ull /* poc */, m});
        std::size_t trials = (samples_per_m + m - 1) / m;
        RmfStudySamples s =
            collect_rmf_samples(spec, r, t, trials, 0, 0, false, jobs);
        std::vector<double> ranked_ph = ph_samples;
        pooled_rank_transform(s.lambda_at_t, ranked_ph);
        TVEstimate tv = estimate_tv(
            s.lambda_at_t, ranked_ph,
            default_tv_bins(s.lambda_at_t.size(), ranked_ph.size()),
            base.seed);
        out.tv.push_back(tv);
        xs.push_back(double(m));
        ys.push_back(std::max(tv.value, 1e-6));
    }
    out.fit = fit_loglog(xs, ys);
    for (std::size_t i = 1; i < out.tv.size(); ++i) {
        bool nonincreasing = out.tv[i].value <= out.tv[i - 1].value;
        bool ci_overlap = out.tv[i].ci_lo <= out.tv[i - 1].ci_hi &&
                          out.tv[i - 1].ci_lo <= out.tv[i].ci_hi;
        if (!nonincreasing && !ci_overlap)
            out.monotone = false;
    }
    return out;
}

struct TllnStudyResult {
    std::vector<std::size_t> m_list;
    std::vector<double> metric;
    ScalingFit fit;
};

inline TllnStudyResult tlln_study(const NetworkSpec& spec, const RunConfig& base,
                                  const std::vector<std::size_t>& m_list,
                                  double t, std::size_t trials,
                                  std::size_t jobs = 1) {
    RunConfig run = base;
    run.horizon = t;
    TllnStudyResult out;
    out.m_list = m_list;
    std::vector<double> xs;
    for (std::size_t m : m_list) {
        RunConfig r = run;
        r.m_replicas = m;
        r.seed = Rng::derive(base.seed, {0x746C6C6Eull /* tlln */, m});
        RmfStudySamples s =
            collect_rmf_samples(spec, r, t, trials, 0, 0, false, jobs);
        out.metric.push_back(std::max(tlln_metric(s.counts_at_source), 1e-9));
        xs.push_back(double(m));
    }
    out.fit = fit_loglog(xs, out.metric);
    return out;
}

struct ChenSteinStudyResult {
    std::vector<std::size_t> m_list;
    std::vector<ChenSteinTerms> terms;
    ScalingFit fit; // slope of term1 + term2 against M
};

inline ChenSteinStudyResult
chen_stein_study(const NetworkSpec& spec, const RunConfig& base,
                 const std::vector<std::size_t>& m_list, double t,
                 std::size_t trials, std::size_t jobs = 1) {
    RunConfig run = base;
    run.horizon = t;
    // Source site 1 feeding (replica 0, site 0); any pair works by
    // exchangeability.
    ChenSteinStudyResult out;
    out.m_list = m_list;
    std::vector<double> xs, ys;
    for (std::size_t m : m_list) {
        RunConfig r = run;
        r.m_replicas = m;
        r.seed = Rng::derive(base.seed, {0x6373ull /* cs */, m});
        RmfStudySamples s =
            collect_rmf_samples(spec, r, t, trials, 0, 1, true, jobs);
        out.terms.push_back(chen_stein_terms(s.counts_at_source, s.arrivals));
        xs.push_back(double(m));
        ys.push_back(std::max(out.terms.back().term1 + out.terms.back().term2,
                              1e-12));
    }
    out.fit = fit_loglog(xs, ys);
    return out;
}

struct TailStudyResult {
    std::vector<TailCheck> checks;
    std::size_t n_samples = 0;
};

inline TailStudyResult tail_study(const NetworkSpec& spec, const RunConfig& base,
                                  double t, std::size_t trials,
                                  const std::vector<double>& l_list,
                                  std::size_t jobs = 1) {
    if (spec.dynamics.kind() != DynamicsKind::Quadratic)
        throw PreconditionError("tail bound study requires quadratic dynamics");
    RunConfig run = base;
    run.horizon = t;
    RmfStudySamples s = collect_rmf_samples(spec, run, t, trials, 0, 0, false,
                                            jobs);
    TailStudyResult out;
    out.checks = check_tail_bound(s.lambda_at_t, l_list);
    out.n_samples = s.lambda_at_t.size();
    return out;
}

} // namespace glfield

#endif
