#ifndef GLFIELD_RMF_HPP
#define GLFIELD_RMF_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "glfield/dynamics.hpp"
#include "glfield/errors.hpp"
#include "glfield/event_log.hpp"
#include "glfield/network.hpp"
#include "glfield/rng.hpp"

namespace glfield {

struct RmfOptions {
    bool record_events = true;
    bool record_routing = false;
    // Snapshot all intensities at multiples of dt_out.
    bool record_trajectories = false;
    // Extra snapshot times (need not be dt_out multiples).
    std::vector<double> sample_times;
    // Threshold C of the auxiliary dynamics; disabled when absent.
    std::optional<double> threshold;
};

struct RmfResult {
    EventLog log;
    std::vector<double> snapshot_times;
    // snapshots[time][m * K + x] = lambda_m(x, time)
    std::vector<std::vector<double>> snapshots;
    // Spike counts over the full horizon, counts[m][x].
    std::vector<std::vector<std::uint64_t>> counts;
    std::uint64_t total_spikes = 0;
    std::uint64_t total_threshold_resets = 0;
};

// Exact event-driven simulation of the M-replica-mean-field GL dynamics,
// with optional deterministic threshold resets (the auxiliary dynamics used
// by the coupling argument). Between events every intensity follows the
// closed-form autonomous flow; next spikes come from time-change sampling:
// draw E ~ Exp(1) and invert the integrated intensity. When a neuron's
// intensity jumps, its pending candidate is discarded and a fresh Exp(1)
// budget is drawn from the jump time, which is distributionally exact by
// memorylessness of the unit Poisson process in the time-changed scale.
class RmfEngine {
  public:
    RmfEngine(const NetworkSpec& spec, const RunConfig& run)
        : spec_(spec), run_(run), dyn_(spec.dynamics) {
        run.validate();
        sites_ = spec.sites(run.k_sites).grid(run.k_sites);
        k_ = sites_.size();
        m_ = run.m_replicas;
        weights_.assign(k_, std::vector<double>(k_, 0.0));
        for (std::size_t x = 0; x < k_; ++x)
            for (std::size_t y = 0; y < k_; ++y)
                weights_[x][y] = spec.kernel(sites_[x], sites_[y]);
        resets_.resize(k_);
        for (std::size_t x = 0; x < k_; ++x)
            resets_[x] = spec.reset(sites_[x]);
    }

    const std::vector<double>& sites() const { return sites_; }

    RmfResult run_trial(std::size_t trial, const RmfOptions& opts) const {
        if (opts.threshold) {
            double c = *opts.threshold;
            double max_r =
                *std::max_element(resets_.begin(), resets_.end());
            if (!(c > max_r))
                throw PreconditionError(
                    "threshold C must exceed the maximum reset value");
            if (!(c > spec_.initial.max_support()) &&
                spec_.initial.kind() != InitialKind::Exponential)
                throw PreconditionError(
                    "threshold C must exceed the initial-condition support");
        }

        const double horizon = run_.horizon;
        const std::size_t n = m_ * k_;
        const std::uint64_t trial_key =
            Rng::derive(run_.seed, {rng_tag::trial, trial});

        std::vector<double> lam(n), anchor(n, 0.0);
        std::vector<std::uint32_t> gen(n, 0), seq(n, 0);
        std::vector<Rng> streams;
        streams.reserve(n);
        for (std::size_t m = 0; m < m_; ++m)
            for (std::size_t x = 0; x < k_; ++x) {
                std::size_t i = m * k_ + x;
                streams.push_back(Rng(Rng::derive(trial_key, {rng_tag::neuron, m, x})));
                Rng init(Rng::derive(trial_key, {rng_tag::initial, m, x}));
                lam[i] = spec_.initial.sample(init);
                if (opts.threshold && lam[i] > *opts.threshold)
                    throw PreconditionError(
                        "threshold C must exceed all initial intensities");
            }

        struct HeapEntry {
            double t;
            std::uint32_t neuron;
            std::uint32_t gen;
            EventKind kind;
            bool operator>(const HeapEntry& o) const {
                if (t != o.t)
                    return t > o.t;
                if (neuron != o.neuron)
                    return neuron > o.neuron;
                return kind > o.kind;
            }
        };
        std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>
            heap;

        auto schedule = [&](std::size_t i) {
            double e = streams[i].next_exp();
            double dt = dyn_.invert_integrated_intensity(lam[i], e);
            heap.push({anchor[i] + dt, std::uint32_t(i), gen[i], EventKind::Spike});
            if (opts.threshold && lam[i] < *opts.threshold) {
                auto ht = dyn_.hitting_time(lam[i], *opts.threshold);
                if (ht)
                    heap.push({anchor[i] + *ht, std::uint32_t(i), gen[i],
                               EventKind::ThresholdReset});
            }
        };
        for (std::size_t i = 0; i < n; ++i)
            schedule(i);

        // Capture times, ascending: dt_out multiples plus explicit samples.
        std::vector<double> capture;
        if (opts.record_trajectories)
            for (double t = 0.0; t <= horizon + 1e-12; t += run_.dt_out)
                capture.push_back(std::min(t, horizon));
        for (double t : opts.sample_times) {
            if (t < 0.0 || t > horizon)
                throw DomainError("sample time outside [0, T]");
            capture.push_back(t);
        }
        std::sort(capture.begin(), capture.end());
        capture.erase(std::unique(capture.begin(), capture.end()), capture.end());

        RmfResult res;
        res.log.m_replicas = m_;
        res.log.k_sites = k_;
        res.counts.assign(m_, std::vector<std::uint64_t>(k_, 0));
        res.snapshot_times = capture;

        std::size_t next_capture = 0;
        auto emit_captures_until = [&](double t) {
            while (next_capture < capture.size() && capture[next_capture] <= t) {
                double tc = capture[next_capture];
                std::vector<double> snap(n);
                for (std::size_t i = 0; i < n; ++i)
                    snap[i] = dyn_.flow(lam[i], tc - anchor[i]);
                res.snapshots.push_back(std::move(snap));
                ++next_capture;
            }
        };

        auto guard = [&](double v) {
            if (!(v < 1e300))
                throw EngineInvariantViolation("intensity overflow outside a "
                                               "sanctioned event");
            return v;
        };

        while (!heap.empty()) {
            HeapEntry e = heap.top();
            heap.pop();
            if (e.gen != gen[e.neuron])
                continue; // stale candidate
            if (e.t > horizon)
                break;
            emit_captures_until(e.t);

            std::size_t i = e.neuron;
            std::uint32_t m = std::uint32_t(i / k_);
            std::uint32_t x = std::uint32_t(i % k_);

            if (e.kind == EventKind::Spike) {
                if (opts.record_events)
                    res.log.events.push_back({e.t, m, x, EventKind::Spike});
                ++res.counts[m][x];
                ++res.total_spikes;
                std::uint32_t spike_seq = seq[i]++;

                // One routing draw per postsynaptic site, from a substream
                // dedicated to this spike.
                Rng route(Rng::derive(trial_key,
                                      {rng_tag::routing, i, spike_seq}));
                for (std::size_t x2 = 0; x2 < k_; ++x2) {
                    if (x2 == x)
                        continue; // a neuron's own spikes only reset it
                    std::uint64_t v = route.next_below(m_ - 1);
                    if (v >= m)
                        ++v; // uniform on {0..M-1} \ {m}
                    if (opts.record_routing)
                        res.log.routing.push_back({e.t, m, x, std::uint32_t(v),
                                                   std::uint32_t(x2)});
                    std::size_t j = std::size_t(v) * k_ + x2;
                    lam[j] = guard(dyn_.flow(lam[j], e.t - anchor[j]) +
                                   weights_[x2][x] / double(k_ - 1));
                    anchor[j] = e.t;
                    ++gen[j];
                    if (opts.threshold && lam[j] > *opts.threshold) {
                        // A jump leapt over C: the indicator reset fires now.
                        if (opts.record_events)
                            res.log.events.push_back({e.t, std::uint32_t(v),
                                                      std::uint32_t(x2),
                                                      EventKind::ThresholdReset});
                        ++res.total_threshold_resets;
                        lam[j] = resets_[x2];
                    }
                    schedule(j);
                }

                lam[i] = resets_[x];
                anchor[i] = e.t;
                ++gen[i];
                schedule(i);
            } else {
                if (opts.record_events)
                    res.log.events.push_back({e.t, m, x, EventKind::ThresholdReset});
                ++res.total_threshold_resets;
                lam[i] = resets_[x];
                anchor[i] = e.t;
                ++gen[i];
                schedule(i);
            }
        }
        emit_captures_until(horizon);
        return res;
    }

  private:
    NetworkSpec spec_;
    RunConfig run_;
    AutonomousDynamics dyn_;
    std::vector<double> sites_;
    std::size_t k_ = 0, m_ = 0;
    std::vector<std::vector<double>> weights_; // weights_[x][y] = w(x, y)
    std::vector<double> resets_;
};

inline RmfResult simulate_rmf(const NetworkSpec& spec, const RunConfig& run,
                              std::size_t trial = 0,
                              RmfOptions opts = RmfOptions{}) {
    return RmfEngine(spec, run).run_trial(trial, opts);
}

inline RmfResult simulate_rmf_threshold(const NetworkSpec& spec,
                                        const RunConfig& run, double threshold,
                                        std::size_t trial = 0,
                                        RmfOptions opts = RmfOptions{}) {
    opts.threshold = threshold;
    return RmfEngine(spec, run).run_trial(trial, opts);
}

} // namespace glfield

#endif
