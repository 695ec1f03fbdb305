#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nrt/error.hpp"

namespace nrt {

// A fixed unit of entries with the workers hosting its data locally. An
// empty location set means the data is remote for everyone.
struct PacketTask {
    int64_t id = 0;
    uint64_t entry_count = 1;
    std::set<int64_t> locations;
};

struct WorkerSim {
    int64_t id = 0;
    double speed = 1.0;          // entries per time unit on local data
    double remote_penalty = 2.0; // processing time multiplier off-node
};

enum class EventKind { request, assign, complete, finish };

const char* event_kind_name(EventKind kind);

struct TraceEvent {
    double time = 0.0;
    EventKind kind = EventKind::request;
    int64_t worker = -1;
    int64_t packet = -1;
    bool local = false;
};

// Master-side bookkeeping of the pull scheduler. Packets move pending ->
// in flight -> done, exactly once each. Worker response is tracked as an
// exponentially weighted mean of per-entry processing time (alpha = 0.5).
class MasterState {
public:
    MasterState(std::vector<WorkerSim> workers, std::vector<PacketTask> packets);

    // Picks a packet for an idle worker, preferring in order: the lowest-id
    // pending packet hosted by this worker; the lowest-id location-free
    // packet; stealing the lowest-id packet hosted elsewhere, but only when
    // every such packet's hosts are all busy or strictly slower than the
    // requester by response estimate. Returns nothing when the worker
    // should wait.
    std::optional<PacketTask> assign(int64_t worker, double now);

    void complete(int64_t worker, int64_t packet, double now);

    bool all_done() const { return done_.size() == total_packets_; }
    std::size_t pending_count() const { return pending_.size(); }
    std::optional<double> response(int64_t worker) const;

    struct Completion {
        int64_t packet;
        int64_t worker;
        double start;
        double finish;
        bool local;
    };
    const std::vector<Completion>& done() const { return done_; }
    const std::vector<WorkerSim>& workers() const { return workers_; }
    bool worker_busy(int64_t id) const { return in_flight_.count(id) != 0; }

private:
    struct InFlight {
        PacketTask packet;
        double start;
        bool local;
    };

    std::vector<WorkerSim> workers_;
    std::map<int64_t, const WorkerSim*> worker_by_id_;
    std::map<int64_t, PacketTask> pending_; // ordered by id
    std::map<int64_t, InFlight> in_flight_; // keyed by worker
    std::vector<Completion> done_;
    std::size_t total_packets_ = 0;
    std::map<int64_t, double> response_;
};

struct WorkerSummary {
    uint64_t packets = 0;
    uint64_t local = 0;
    uint64_t remote = 0;
    double busy_time = 0.0;
};

struct RunSummary {
    double makespan = 0.0;
    uint64_t packets = 0;
    uint64_t local = 0;
    uint64_t remote = 0;
    std::map<int64_t, WorkerSummary> per_worker;
};

struct RunResult {
    std::vector<TraceEvent> trace;
    RunSummary summary;
    std::vector<MasterState::Completion> completions;
};

// Deterministic event loop: all workers request at t = 0, an assignment
// takes entry_count / speed time units (times remote_penalty off-node), a
// completing worker re-requests immediately and waiting workers retry on
// every completion. Simultaneous events are ordered by (time, worker id,
// packet id). The seed does not enter the loop.
RunResult run(const std::vector<WorkerSim>& workers, const std::vector<PacketTask>& packets,
              uint64_t seed = 0);

// Seeded scenario builder: `locality_fraction` of the packets get exactly
// one random host. Speeds are 1.0 unless randomized into [0.5, 2.0].
std::pair<std::vector<WorkerSim>, std::vector<PacketTask>> scenario_gen(
    uint64_t seed, int n_workers, int n_packets, double locality_fraction,
    bool randomize_speeds = false, uint64_t entries_per_packet = 10);

// CSV with header "time,kind,worker,packet,local".
std::string trace_csv(const std::vector<TraceEvent>& trace);

// Line-oriented key=value text (tab-separated key/value pairs when tsv).
std::string summary_text(const RunSummary& summary, bool tsv = false);

} // namespace nrt
