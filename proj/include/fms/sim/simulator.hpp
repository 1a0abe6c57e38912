#pragma once

#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "fms/sim/line_config.hpp"

namespace fms::sim {

enum class Phase { Idle, Traveling, Unloading, Loading };

// Current task of one robot. At most one non-idle task per robot; at most one
// robot assigned to a machine at a time.
struct RobotTask {
    Phase phase = Phase::Idle;
    int target_machine = -1;
    int load_type = -1;
    double phase_end = 0.0;
    int location = 0;
};

// What sits on a machine: nothing (type == -1), a part in process, a finished
// part awaiting unload, or a part whose processing is frozen by a disruption.
struct MachineContent {
    int type = -1;
    bool done = false;
    bool frozen = false;
    double end_time = 0.0;   // scheduled completion while processing
    double remaining = 0.0;  // residual processing while frozen
};

// Binary feasibility tensor over (robot, machine, type).
struct FeasibleMask {
    int robots = 0, machines = 0, types = 0;
    std::vector<char> bits;

    char at(int robot, int machine, int type) const {
        return bits[(robot * machines + machine) * types + type];
    }
    char& at(int robot, int machine, int type) {
        return bits[(robot * machines + machine) * types + type];
    }
    bool any() const {
        for (char b : bits)
            if (b) return true;
        return false;
    }
};

struct Assignment {
    int robot = 0;
    int machine = 0;
    int type = 0;
};

// Read-only metric snapshot.
struct Metrics {
    double clock = 0.0;
    std::vector<long long> output;        // Y_l, parts deposited at the sink
    std::vector<double> downtime;         // cumulative disruption seconds per machine
    std::vector<int> buffer_levels;       // (M-1) x K, row-major
    std::vector<char> machine_up;         // theta
    std::vector<char> robot_assigned;     // g
    std::vector<long long> source_draws;  // raw parts pulled per type
};

struct DecisionContext {
    double elapsed = 0.0;
    bool terminal = false;
    std::vector<int> free_robots;
    FeasibleMask mask;
};

struct TraceRow {
    double t = 0.0;
    std::string event_kind;
    int machine = -1;  // 0-based, -1 when not applicable
    int robot = -1;
    int product_type = -1;
    std::string detail;
};

using TraceFn = std::function<void(const TraceRow&)>;

// Event-driven simulator of a multiproduct line served by mobile robots.
// Single-threaded per instance; instances are plain values and can be copied
// for what-if analysis. Identical (config, disruptions, action sequence)
// produce bit-identical trajectories.
class Simulator {
public:
    explicit Simulator(LineConfig config);

    // Pre-loads a downtime schedule. Must be called before any advance; events
    // on the same machine must not overlap.
    void schedule_disruptions(const std::vector<DisruptionEvent>& events);

    void set_horizon(double horizon) { horizon_ = horizon; }
    double horizon() const { return horizon_; }

    double clock() const { return clock_; }
    bool terminal() const { return terminal_; }

    FeasibleMask feasible_mask() const;

    // Entry (robot, machine, type) feasibility with explicit claim state; used
    // by sequential action decoding. `claimed_machines` and `extra_reserved`
    // describe assignments already accepted in the same decision epoch.
    bool feasible_entry(int robot, int machine, int type,
                        const std::vector<char>& claimed_machines,
                        const std::vector<int>& extra_reserved) const;

    // Applies a set of assignments (pairwise distinct robots and machines).
    // Each is validated sequentially against the updated claim state; an
    // infeasible assignment throws with the violated clause named.
    void dispatch(const std::vector<Assignment>& assignments);

    // Processes queued events in timestamp order (ties broken by fixed
    // category order, then machine index) until a decision is possible or the
    // horizon is reached. Always consumes at least one event batch.
    DecisionContext advance_to_next_decision();

    Metrics snapshot_metrics() const;

    // --- what-if support (perf-analysis) ---

    // Freezes a machine permanently: processing pauses, no dispatch possible.
    void force_down(int machine);
    // Drops all pending disruption events (used by deterministic what-ifs).
    void clear_pending_disruptions();

    void set_trace(TraceFn fn) { trace_ = std::move(fn); }

    const LineConfig& config() const { return config_; }

    // --- inspection ---
    int buffer_level(int buffer, int type) const { return buffers_[buffer * types_ + type]; }
    int buffer_total(int buffer) const;
    const MachineContent& machine_content(int machine) const { return content_[machine]; }
    bool machine_up(int machine) const { return up_[machine] != 0; }
    bool machine_assigned(int machine) const { return assigned_[machine] != 0; }
    const RobotTask& robot(int r) const { return robots_[r]; }
    const std::vector<long long>& output() const { return output_; }
    double downtime(int machine) const;
    // Next machine on `type`'s route after `machine`; machines() for the sink,
    // -1 if the route does not visit `machine`.
    int next_machine(int type, int machine) const { return next_[type][machine]; }
    int machines() const { return machines_count_; }
    int types() const { return types_; }
    int robots() const { return static_cast<int>(robots_.size()); }

    // Exact per-type part accounting; used by conservation checks.
    long long parts_in_buffers(int type) const;
    long long parts_on_machines(int type) const;

private:
    enum class EventKind : int {
        DisruptionEnd = 0,
        ProcessingComplete = 1,
        DisruptionStart = 2,
        RobotPhase = 3,
        DemandArrival = 4,  // reserved for wrappers; the core never enqueues it
    };

    struct Event {
        double time = 0.0;
        EventKind kind = EventKind::RobotPhase;
        int machine = -1;
        int robot = -1;
        long long generation = 0;  // stale-event filter for processing completions
        double payload = 0.0;      // disruption duration
        std::uint64_t seq = 0;

        bool operator>(const Event& other) const {
            if (time != other.time) return time > other.time;
            if (kind != other.kind) return kind > other.kind;
            if (machine != other.machine) return machine > other.machine;
            if (robot != other.robot) return robot > other.robot;
            return seq > other.seq;
        }
    };

    void push_event(double time, EventKind kind, int machine, int robot, double payload = 0.0);
    void handle_event(const Event& ev);
    void finish_robot_phase(int robot_index);
    void deposit_finished_part(int machine, int robot_index);
    void begin_processing(int machine, int type);
    bool decision_possible() const;
    void trace(double t, const char* kind, int machine, int robot, int type,
               const std::string& detail = {}) const;

    LineConfig config_;
    int machines_count_ = 0;
    int types_ = 0;

    // routing tables: next_[l][j] = machine after j on route l (machines() =
    // sink, -1 = not on route); on_route_[l][j]; accepts_[b][l] for buffers.
    std::vector<std::vector<int>> next_;
    std::vector<std::vector<char>> on_route_;

    double clock_ = 0.0;
    double horizon_ = 0.0;
    bool terminal_ = false;

    std::vector<int> buffers_;    // (M-1) x K
    std::vector<int> reserved_;   // per buffer: in-flight deposits
    std::vector<char> up_;        // per machine
    std::vector<char> forced_down_;
    std::vector<double> down_since_;
    std::vector<double> downtime_;
    std::vector<MachineContent> content_;
    std::vector<char> assigned_;  // per machine: a robot is en route / serving
    std::vector<RobotTask> robots_;
    std::vector<long long> output_;
    std::vector<long long> source_draws_;
    std::vector<long long> processing_generation_;

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
    std::uint64_t event_seq_ = 0;
    bool disruptions_scheduled_ = false;

    TraceFn trace_;
};

}  // namespace fms::sim
