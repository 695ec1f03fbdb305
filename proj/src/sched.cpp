#include "nrt/sched.hpp"

#include <algorithm>
#include <charconv>
#include <random>

namespace nrt {

const char* event_kind_name(EventKind kind) {
    switch (kind) {
    case EventKind::request: return "request";
    case EventKind::assign: return "assign";
    case EventKind::complete: return "complete";
    case EventKind::finish: return "finish";
    }
    return "?";
}

MasterState::MasterState(std::vector<WorkerSim> workers, std::vector<PacketTask> packets)
    : workers_(std::move(workers)) {
    for (const auto& w : workers_) worker_by_id_[w.id] = &w;
    for (auto& p : packets) {
        int64_t id = p.id;
        if (!pending_.emplace(id, std::move(p)).second)
            fail(Errc::duplicate_packet_ids, "packet id " + std::to_string(id) + " repeats");
    }
    total_packets_ = pending_.size();
}

std::optional<double> MasterState::response(int64_t worker) const {
    auto it = response_.find(worker);
    if (it == response_.end()) return std::nullopt;
    return it->second;
}

std::optional<PacketTask> MasterState::assign(int64_t worker, double now) {
    // (1) lowest-id pending packet hosted here
    for (auto& [id, p] : pending_) {
        if (p.locations.count(worker)) {
            PacketTask out = p;
            in_flight_[worker] = {out, now, true};
            pending_.erase(id);
            return out;
        }
    }
    // (2) lowest-id location-free packet
    for (auto& [id, p] : pending_) {
        if (p.locations.empty()) {
            PacketTask out = p;
            in_flight_[worker] = {out, now, false};
            pending_.erase(id);
            return out;
        }
    }
    // (3) work stealing, guarded: every remaining packet's hosts must all be
    // busy or strictly slower than the requester.
    if (pending_.empty()) return std::nullopt;
    auto requester_response = response(worker);
    for (const auto& [id, p] : pending_) {
        for (int64_t host : p.locations) {
            if (!worker_by_id_.count(host)) continue; // no such worker: cannot serve it
            if (worker_busy(host)) continue;
            auto host_response = response(host);
            bool strictly_slower =
                requester_response && host_response && *host_response > *requester_response;
            if (!strictly_slower) return std::nullopt; // an able host exists: wait
        }
    }
    auto it = pending_.begin();
    PacketTask out = it->second;
    in_flight_[worker] = {out, now, false};
    pending_.erase(it);
    return out;
}

void MasterState::complete(int64_t worker, int64_t packet, double now) {
    auto it = in_flight_.find(worker);
    if (it == in_flight_.end() || it->second.packet.id != packet)
        fail(Errc::not_in_flight, "packet " + std::to_string(packet) + " is not in flight on worker " +
                                      std::to_string(worker));
    const InFlight& f = it->second;
    done_.push_back({packet, worker, f.start, now, f.local});
    double per_entry = (now - f.start) / static_cast<double>(f.packet.entry_count);
    auto r = response_.find(worker);
    if (r == response_.end())
        response_[worker] = per_entry;
    else
        r->second = 0.5 * per_entry + 0.5 * r->second;
    in_flight_.erase(it);
}

RunResult run(const std::vector<WorkerSim>& workers, const std::vector<PacketTask>& packets,
              uint64_t /*seed*/) {
    MasterState master(workers, packets);
    RunResult result;

    std::map<int64_t, const WorkerSim*> worker_by_id;
    for (const auto& w : workers) worker_by_id[w.id] = &w;

    struct Pending {
        double time;
        int64_t worker;
        int64_t packet;
        bool local;
        bool operator<(const Pending& o) const {
            if (time != o.time) return time < o.time;
            if (worker != o.worker) return worker < o.worker;
            return packet < o.packet;
        }
    };
    std::set<Pending> completions;
    std::set<int64_t> waiting;

    auto request_round = [&](double now, const std::vector<int64_t>& requesters) {
        for (int64_t id : requesters) {
            result.trace.push_back({now, EventKind::request, id, -1, false});
            auto packet = master.assign(id, now);
            if (!packet) {
                waiting.insert(id);
                continue;
            }
            bool local = packet->locations.count(id) != 0;
            const WorkerSim& w = *worker_by_id.at(id);
            double duration = static_cast<double>(packet->entry_count) / w.speed;
            if (!local) duration *= w.remote_penalty;
            result.trace.push_back({now, EventKind::assign, id, packet->id, local});
            completions.insert({now + duration, id, packet->id, local});
        }
    };

    std::vector<int64_t> ids;
    for (const auto& w : workers) ids.push_back(w.id);
    std::sort(ids.begin(), ids.end());
    request_round(0.0, ids);

    double makespan = 0.0;
    while (!completions.empty()) {
        Pending ev = *completions.begin();
        completions.erase(completions.begin());
        master.complete(ev.worker, ev.packet, ev.time);
        result.trace.push_back({ev.time, EventKind::complete, ev.worker, ev.packet, ev.local});
        makespan = ev.time;

        std::vector<int64_t> requesters(waiting.begin(), waiting.end());
        if (!waiting.count(ev.worker)) requesters.push_back(ev.worker);
        std::sort(requesters.begin(), requesters.end());
        waiting.clear();
        request_round(ev.time, requesters);
    }
    if (!master.all_done()) fail(Errc::malformed, "event loop stalled with packets pending");

    result.trace.push_back({makespan, EventKind::finish, -1, -1, false});
    result.completions = master.done();

    RunSummary& s = result.summary;
    s.makespan = makespan;
    for (const auto& w : workers) s.per_worker[w.id] = {};
    for (const auto& c : master.done()) {
        s.packets += 1;
        auto& pw = s.per_worker[c.worker];
        pw.packets += 1;
        pw.busy_time += c.finish - c.start;
        if (c.local) {
            s.local += 1;
            pw.local += 1;
        } else {
            s.remote += 1;
            pw.remote += 1;
        }
    }
    return result;
}

std::pair<std::vector<WorkerSim>, std::vector<PacketTask>> scenario_gen(
    uint64_t seed, int n_workers, int n_packets, double locality_fraction, bool randomize_speeds,
    uint64_t entries_per_packet) {
    if (n_workers <= 0 || n_packets < 0) fail(Errc::malformed, "counts must be positive");
    if (locality_fraction < 0.0 || locality_fraction > 1.0)
        fail(Errc::malformed, "locality fraction must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::vector<WorkerSim> workers;
    workers.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) {
        WorkerSim w;
        w.id = i;
        // bounded modulo keeps the stream portable; bias is irrelevant here
        if (randomize_speeds) w.speed = 0.5 + static_cast<double>(rng() % 1501) / 1000.0;
        workers.push_back(w);
    }

    auto hosted = static_cast<int>(std::llround(locality_fraction * n_packets));
    std::vector<PacketTask> packets;
    packets.reserve(static_cast<std::size_t>(n_packets));
    for (int i = 0; i < n_packets; ++i) {
        PacketTask p;
        p.id = i;
        p.entry_count = entries_per_packet;
        if (i < hosted) p.locations.insert(static_cast<int64_t>(rng() % n_workers));
        packets.push_back(std::move(p));
    }
    return {std::move(workers), std::move(packets)};
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

std::string trace_csv(const std::vector<TraceEvent>& trace) {
    std::string out = "time,kind,worker,packet,local\n";
    for (const auto& e : trace) {
        out += fmt_double(e.time);
        out += ',';
        out += event_kind_name(e.kind);
        out += ',';
        out += std::to_string(e.worker);
        out += ',';
        out += std::to_string(e.packet);
        out += ',';
        out += e.local ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string summary_text(const RunSummary& summary, bool tsv) {
    const char sep = tsv ? '\t' : '=';
    std::string out;
    auto line = [&](const std::string& key, const std::string& value) {
        out += key;
        out += sep;
        out += value;
        out += '\n';
    };
    line("makespan", fmt_double(summary.makespan));
    line("packets", std::to_string(summary.packets));
    line("local", std::to_string(summary.local));
    line("remote", std::to_string(summary.remote));
    for (const auto& [id, w] : summary.per_worker) {
        std::string prefix = "worker." + std::to_string(id) + ".";
        line(prefix + "packets", std::to_string(w.packets));
        line(prefix + "local", std::to_string(w.local));
        line(prefix + "remote", std::to_string(w.remote));
        line(prefix + "busy", fmt_double(w.busy_time));
    }
    return out;
}

} // namespace nrt
