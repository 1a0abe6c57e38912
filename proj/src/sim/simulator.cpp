#include "fms/sim/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace fms::sim {

namespace {

[[noreturn]] void reject(const std::string& clause) {
    throw std::runtime_error("infeasible assignment: " + clause);
}

}  // namespace

Simulator::Simulator(LineConfig config) : config_(std::move(config)) {
    config_.validate();
    machines_count_ = config_.machine_count;
    types_ = config_.product_type_count;

    next_.assign(types_, std::vector<int>(machines_count_, -1));
    on_route_.assign(types_, std::vector<char>(machines_count_, 0));
    for (int l = 0; l < types_; ++l) {
        const auto& seq = config_.routes[l].machines;
        for (std::size_t k = 0; k < seq.size(); ++k) {
            on_route_[l][seq[k]] = 1;
            next_[l][seq[k]] = (k + 1 < seq.size()) ? seq[k + 1] : machines_count_;
        }
    }

    const int buffer_count = machines_count_ - 1;
    buffers_.assign(static_cast<std::size_t>(buffer_count) * types_, 0);
    if (!config_.initial_buffers.empty()) {
        for (int b = 0; b < buffer_count; ++b)
            for (int l = 0; l < types_; ++l)
                buffers_[b * types_ + l] = config_.initial_buffers[b][l];
    }
    reserved_.assign(std::max(buffer_count, 0), 0);
    up_.assign(machines_count_, 1);
    forced_down_.assign(machines_count_, 0);
    down_since_.assign(machines_count_, 0.0);
    downtime_.assign(machines_count_, 0.0);
    content_.assign(machines_count_, MachineContent{});
    assigned_.assign(machines_count_, 0);
    robots_.assign(config_.robot_count, RobotTask{});
    output_.assign(types_, 0);
    source_draws_.assign(types_, 0);
    processing_generation_.assign(machines_count_, 0);
}

void Simulator::push_event(double time, EventKind kind, int machine, int robot, double payload) {
    Event ev;
    ev.time = time;
    ev.kind = kind;
    ev.machine = machine;
    ev.robot = robot;
    ev.generation = (kind == EventKind::ProcessingComplete) ? processing_generation_[machine] : 0;
    ev.payload = payload;
    ev.seq = event_seq_++;
    queue_.push(ev);
}

void Simulator::schedule_disruptions(const std::vector<DisruptionEvent>& events) {
    if (!config_.failures_enabled && !events.empty())
        throw std::invalid_argument("failures are disabled for this line");
    // Overlap check per machine.
    std::vector<std::vector<std::pair<double, double>>> spans(machines_count_);
    for (const auto& e : events) {
        if (e.machine < 0 || e.machine >= machines_count_)
            throw std::invalid_argument("disruption machine out of range");
        if (e.duration <= 0) throw std::invalid_argument("disruption duration must be positive");
        if (e.start < clock_) throw std::invalid_argument("disruption starts in the past");
        spans[e.machine].push_back({e.start, e.start + e.duration});
    }
    for (auto& s : spans) {
        std::sort(s.begin(), s.end());
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k].first < s[k - 1].second)
                throw std::invalid_argument("disruption events on the same machine overlap");
    }
    for (const auto& e : events)
        push_event(e.start, EventKind::DisruptionStart, e.machine, -1, e.duration);
    disruptions_scheduled_ = true;
}

int Simulator::buffer_total(int buffer) const {
    int total = 0;
    for (int l = 0; l < types_; ++l) total += buffers_[buffer * types_ + l];
    return total;
}

double Simulator::downtime(int machine) const {
    double d = downtime_[machine];
    if (!up_[machine]) d += clock_ - down_since_[machine];
    return d;
}

long long Simulator::parts_in_buffers(int type) const {
    long long total = 0;
    for (int b = 0; b < machines_count_ - 1; ++b) total += buffers_[b * types_ + type];
    return total;
}

long long Simulator::parts_on_machines(int type) const {
    long long total = 0;
    for (const auto& c : content_)
        if (c.type == type) ++total;
    return total;
}

bool Simulator::feasible_entry(int robot, int machine, int type,
                               const std::vector<char>& claimed_machines,
                               const std::vector<int>& extra_reserved) const {
    const RobotTask& r = robots_[robot];
    if (r.phase != Phase::Idle) return false;
    if (assigned_[machine] || (!claimed_machines.empty() && claimed_machines[machine])) return false;
    if (!up_[machine]) return false;
    if (!on_route_[type][machine]) return false;

    const MachineContent& c = content_[machine];
    if (c.type >= 0) {
        if (!c.done) return false;
        const int nxt = next_[c.type][machine];
        if (nxt < machines_count_) {
            const int dest = nxt - 1;
            int pending = reserved_[dest] + (extra_reserved.empty() ? 0 : extra_reserved[dest]);
            if (buffer_total(dest) + pending >= config_.buffer_capacities[dest]) return false;
        }
    }

    if (machine > 0 && buffers_[(machine - 1) * types_ + type] <= 0) return false;
    return true;
}

FeasibleMask Simulator::feasible_mask() const {
    FeasibleMask mask;
    mask.robots = static_cast<int>(robots_.size());
    mask.machines = machines_count_;
    mask.types = types_;
    mask.bits.assign(static_cast<std::size_t>(mask.robots) * mask.machines * mask.types, 0);
    static const std::vector<char> no_claims;
    static const std::vector<int> no_reserved;
    for (int i = 0; i < mask.robots; ++i) {
        if (robots_[i].phase != Phase::Idle) continue;
        for (int j = 0; j < mask.machines; ++j)
            for (int l = 0; l < mask.types; ++l)
                if (feasible_entry(i, j, l, no_claims, no_reserved)) mask.at(i, j, l) = 1;
    }
    return mask;
}

void Simulator::dispatch(const std::vector<Assignment>& assignments) {
    if (terminal_) throw std::runtime_error("dispatch on a terminal simulation");

    std::vector<char> claimed(machines_count_, 0);
    std::vector<char> used_robot(robots_.size(), 0);
    std::vector<int> extra_reserved(std::max(machines_count_ - 1, 0), 0);

    for (const auto& a : assignments) {
        if (a.robot < 0 || a.robot >= static_cast<int>(robots_.size()))
            reject("robot index out of range");
        if (a.machine < 0 || a.machine >= machines_count_) reject("machine index out of range");
        if (a.type < 0 || a.type >= types_) reject("product type out of range");
        if (used_robot[a.robot]) reject("two assignments share a robot");
        if (robots_[a.robot].phase != Phase::Idle) reject("robot is busy");
        if (assigned_[a.machine] || claimed[a.machine])
            reject("machine already has an assigned robot");
        if (!up_[a.machine]) reject("machine is down");
        if (!on_route_[a.type][a.machine]) reject("product type is not routed through machine");

        const MachineContent& c = content_[a.machine];
        if (c.type >= 0) {
            if (!c.done) reject("machine is still processing");
            const int nxt = next_[c.type][a.machine];
            if (nxt < machines_count_) {
                const int dest = nxt - 1;
                if (buffer_total(dest) + reserved_[dest] + extra_reserved[dest] >=
                    config_.buffer_capacities[dest])
                    reject("destination buffer of the finished part is full");
            }
        }
        if (a.machine > 0 && buffers_[(a.machine - 1) * types_ + a.type] <= 0)
            reject("upstream buffer has no part of the requested type");

        used_robot[a.robot] = 1;
        claimed[a.machine] = 1;
        if (c.type >= 0) {
            const int nxt = next_[c.type][a.machine];
            if (nxt < machines_count_) extra_reserved[nxt - 1] += 1;
        }
    }

    // All validated; apply.
    for (const auto& a : assignments) {
        RobotTask& r = robots_[a.robot];
        const MachineContent& c = content_[a.machine];
        assigned_[a.machine] = 1;
        if (c.type >= 0) {
            const int nxt = next_[c.type][a.machine];
            if (nxt < machines_count_) reserved_[nxt - 1] += 1;
        }
        r.phase = Phase::Traveling;
        r.target_machine = a.machine;
        r.load_type = a.type;
        r.phase_end = clock_ + config_.travel_time(r.location, a.machine);
        push_event(r.phase_end, EventKind::RobotPhase, a.machine, a.robot);
        trace(clock_, "dispatch", a.machine, a.robot, a.type);
    }
}

void Simulator::deposit_finished_part(int machine, int robot_index) {
    MachineContent& c = content_[machine];
    const int part_type = c.type;
    const int nxt = next_[part_type][machine];
    if (nxt >= machines_count_) {
        output_[part_type] += 1;
        trace(clock_, "sink_deposit", machine, robot_index, part_type);
    } else {
        const int dest = nxt - 1;
        buffers_[dest * types_ + part_type] += 1;
        reserved_[dest] -= 1;
        assert(buffer_total(dest) <= config_.buffer_capacities[dest]);
        trace(clock_, "buffer_deposit", machine, robot_index, part_type,
              "buffer=" + std::to_string(dest + 1));
    }
    c = MachineContent{};
}

void Simulator::begin_processing(int machine, int type) {
    MachineContent& c = content_[machine];
    c.type = type;
    c.done = false;
    if (up_[machine]) {
        c.frozen = false;
        c.end_time = clock_ + config_.machines[machine].processing_time;
        processing_generation_[machine] += 1;
        push_event(c.end_time, EventKind::ProcessingComplete, machine, -1);
    } else {
        // Loaded onto a machine that is currently down: processing starts
        // frozen and resumes at repair.
        c.frozen = true;
        c.remaining = config_.machines[machine].processing_time;
    }
}

void Simulator::finish_robot_phase(int robot_index) {
    RobotTask& r = robots_[robot_index];
    const int j = r.target_machine;
    switch (r.phase) {
        case Phase::Traveling: {
            r.location = j;
            if (content_[j].type >= 0) {
                r.phase = Phase::Unloading;
                r.phase_end = clock_ + config_.machines[j].unload_time;
            } else {
                r.phase = Phase::Loading;
                r.phase_end = clock_ + config_.machines[j].load_time;
            }
            push_event(r.phase_end, EventKind::RobotPhase, j, robot_index);
            break;
        }
        case Phase::Unloading: {
            deposit_finished_part(j, robot_index);
            r.phase = Phase::Loading;
            r.phase_end = clock_ + config_.machines[j].load_time;
            push_event(r.phase_end, EventKind::RobotPhase, j, robot_index);
            break;
        }
        case Phase::Loading: {
            if (j == 0) {
                source_draws_[r.load_type] += 1;
            } else {
                buffers_[(j - 1) * types_ + r.load_type] -= 1;
                assert(buffers_[(j - 1) * types_ + r.load_type] >= 0);
            }
            begin_processing(j, r.load_type);
            trace(clock_, "load_complete", j, robot_index, r.load_type);
            assigned_[j] = 0;
            r.phase = Phase::Idle;
            r.target_machine = -1;
            r.load_type = -1;
            break;
        }
        case Phase::Idle:
            break;
    }
}

void Simulator::handle_event(const Event& ev) {
    switch (ev.kind) {
        case EventKind::DisruptionEnd: {
            const int j = ev.machine;
            if (forced_down_[j]) break;  // stays down in what-if mode
            up_[j] = 1;
            downtime_[j] += clock_ - down_since_[j];
            MachineContent& c = content_[j];
            if (c.type >= 0 && c.frozen) {
                c.frozen = false;
                c.end_time = clock_ + c.remaining;
                c.remaining = 0.0;
                processing_generation_[j] += 1;
                push_event(c.end_time, EventKind::ProcessingComplete, j, -1);
            }
            trace(clock_, "disruption_end", j, -1, -1);
            break;
        }
        case EventKind::DisruptionStart: {
            const int j = ev.machine;
            if (!up_[j]) break;  // already down (forced); ignore
            up_[j] = 0;
            down_since_[j] = clock_;
            MachineContent& c = content_[j];
            if (c.type >= 0 && !c.done && !c.frozen) {
                c.frozen = true;
                c.remaining = c.end_time - clock_;
                processing_generation_[j] += 1;  // cancels the scheduled completion
            }
            push_event(clock_ + ev.payload, EventKind::DisruptionEnd, j, -1);
            trace(clock_, "disruption_start", j, -1, -1, "duration=" + std::to_string(ev.payload));
            break;
        }
        case EventKind::ProcessingComplete: {
            const int j = ev.machine;
            if (ev.generation != processing_generation_[j]) break;  // stale
            MachineContent& c = content_[j];
            if (c.type < 0 || c.done || c.frozen) break;
            c.done = true;
            trace(clock_, "processing_complete", j, -1, c.type);
            break;
        }
        case EventKind::RobotPhase: {
            finish_robot_phase(ev.robot);
            break;
        }
        case EventKind::DemandArrival:
            break;
    }
}

bool Simulator::decision_possible() const {
    static const std::vector<char> no_claims;
    static const std::vector<int> no_reserved;
    for (int i = 0; i < static_cast<int>(robots_.size()); ++i) {
        if (robots_[i].phase != Phase::Idle) continue;
        for (int j = 0; j < machines_count_; ++j)
            for (int l = 0; l < types_; ++l)
                if (feasible_entry(i, j, l, no_claims, no_reserved)) return true;
    }
    return false;
}

DecisionContext Simulator::advance_to_next_decision() {
    if (terminal_) throw std::runtime_error("advance on a terminal simulation");
    const double t0 = clock_;

    for (;;) {
        if (queue_.empty() || queue_.top().time > horizon_) {
            clock_ = horizon_;
            terminal_ = true;
            trace(clock_, "horizon", -1, -1, -1);
            break;
        }
        const double batch_time = queue_.top().time;
        clock_ = batch_time;
        while (!queue_.empty() && queue_.top().time == batch_time) {
            Event ev = queue_.top();
            queue_.pop();
            handle_event(ev);
        }
        if (clock_ >= horizon_) {
            terminal_ = true;
            trace(clock_, "horizon", -1, -1, -1);
            break;
        }
        if (decision_possible()) break;
    }

    DecisionContext ctx;
    ctx.elapsed = clock_ - t0;
    ctx.terminal = terminal_;
    for (int i = 0; i < static_cast<int>(robots_.size()); ++i)
        if (robots_[i].phase == Phase::Idle) ctx.free_robots.push_back(i);
    ctx.mask = feasible_mask();
    return ctx;
}

Metrics Simulator::snapshot_metrics() const {
    Metrics m;
    m.clock = clock_;
    m.output = output_;
    m.downtime.resize(machines_count_);
    for (int j = 0; j < machines_count_; ++j) m.downtime[j] = downtime(j);
    m.buffer_levels = buffers_;
    m.machine_up = up_;
    m.robot_assigned = assigned_;
    m.source_draws = source_draws_;
    return m;
}

void Simulator::force_down(int machine) {
    if (up_[machine]) {
        up_[machine] = 0;
        down_since_[machine] = clock_;
        MachineContent& c = content_[machine];
        if (c.type >= 0 && !c.done && !c.frozen) {
            c.frozen = true;
            c.remaining = c.end_time - clock_;
            processing_generation_[machine] += 1;
        }
    }
    forced_down_[machine] = 1;
}

void Simulator::clear_pending_disruptions() {
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> kept;
    while (!queue_.empty()) {
        Event ev = queue_.top();
        queue_.pop();
        if (ev.kind != EventKind::DisruptionStart) kept.push(ev);
    }
    queue_ = std::move(kept);
}

void Simulator::trace(double t, const char* kind, int machine, int robot, int type,
                      const std::string& detail) const {
    if (!trace_) return;
    TraceRow row;
    row.t = t;
    row.event_kind = kind;
    row.machine = machine;
    row.robot = robot;
    row.product_type = type;
    row.detail = detail;
    trace_(row);
}

}  // namespace fms::sim
