#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fms::sim {

// One machine of the line. All durations in seconds.
struct MachineSpec {
    double processing_time = 0.0;
    double load_time = 0.0;
    double unload_time = 0.0;
    double mtbf = 1.0;  // mean up time between failures
    double mttr = 1.0;  // mean repair time

    // Machine cycle as seen by a robot standing at the machine.
    double effective_cycle() const { return processing_time + load_time + unload_time; }
};

// Ordered machine visits for one product type. Machine indices are 0-based in
// memory; configuration files use 1-based indices.
struct ProductRoute {
    std::vector<int> machines;
};

// Static description of a production line.
struct LineConfig {
    int machine_count = 0;
    std::vector<MachineSpec> machines;
    std::vector<int> buffer_capacities;             // size M-1, total parts per buffer
    std::vector<std::vector<int>> initial_buffers;  // (M-1) rows of K type counts; empty = all zero
    int product_type_count = 0;
    std::vector<ProductRoute> routes;  // one per product type
    int robot_count = 0;
    double unit_travel_time = 5.0;  // seconds per machine-to-machine hop
    bool failures_enabled = true;

    double travel_time(int from_machine, int to_machine) const {
        return std::abs(to_machine - from_machine) * unit_travel_time;
    }

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

// One downtime interval on a machine.
struct DisruptionEvent {
    int machine = 0;  // 0-based
    double start = 0.0;
    double duration = 0.0;
};

// Alternating exponential up/down intervals per machine, truncated at the
// horizon. Deterministic given the seed; each machine draws from its own
// substream so adding machines does not reshuffle existing ones.
std::vector<DisruptionEvent> sample_disruptions(std::uint64_t seed,
                                                const std::vector<MachineSpec>& machines,
                                                double horizon);

}  // namespace fms::sim
