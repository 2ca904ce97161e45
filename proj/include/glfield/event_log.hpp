#ifndef GLFIELD_EVENT_LOG_HPP
#define GLFIELD_EVENT_LOG_HPP

#include <cstdint>
#include <vector>

#include "glfield/errors.hpp"

namespace glfield {

enum class EventKind : std::uint8_t { Spike, ThresholdReset };

struct Event {
    double t;
    std::uint32_t replica; // m, 0-based
    std::uint32_t site;    // index into the site grid
    EventKind kind;

    bool operator==(const Event&) const = default;
};

// One routing draw per postsynaptic site per spike.
struct RoutingRecord {
    double t;
    std::uint32_t source_replica;
    std::uint32_t source_site;
    std::uint32_t target_replica;
    std::uint32_t target_site;

    bool operator==(const RoutingRecord&) const = default;
};

// Globally ordered record of one trial.
struct EventLog {
    std::size_t m_replicas = 0;
    std::size_t k_sites = 0;
    std::vector<Event> events;           // strictly increasing t
    std::vector<RoutingRecord> routing;  // empty unless recording was enabled
};

struct SpikeCounts {
    // counts[m][x] = N_{m,x}([0, t))
    std::vector<std::vector<std::uint64_t>> counts;
    // arrivals[m][x][y] = number of routed arrivals into (m, x) whose source
    // spiked at site y before t (the A(y,x,t) of the Chen-Stein terms,
    // without the w(x,y) factor).
    std::vector<std::vector<std::vector<std::uint64_t>>> arrivals;
};

inline SpikeCounts spike_counts(const EventLog& log, double t) {
    if (t < 0.0)
        throw DomainError("spike_counts: t must be >= 0");
    SpikeCounts out;
    out.counts.assign(log.m_replicas,
                      std::vector<std::uint64_t>(log.k_sites, 0));
    out.arrivals.assign(
        log.m_replicas,
        std::vector<std::vector<std::uint64_t>>(
            log.k_sites, std::vector<std::uint64_t>(log.k_sites, 0)));
    for (const Event& e : log.events) {
        if (e.t >= t)
            break;
        if (e.kind == EventKind::Spike)
            ++out.counts[e.replica][e.site];
    }
    for (const RoutingRecord& r : log.routing) {
        if (r.t >= t)
            break;
        ++out.arrivals[r.target_replica][r.target_site][r.source_site];
    }
    return out;
}

} // namespace glfield

#endif
