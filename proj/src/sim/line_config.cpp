#include "fms/sim/line_config.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fms/rng.hpp"

namespace fms::sim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void LineConfig::validate() const {
    if (machine_count < 1) fail("machine_count must be at least 1");
    if (static_cast<int>(machines.size()) != machine_count)
        fail("machines list does not match machine_count");
    if (robot_count < 1) fail("robot_count must be at least 1");
    if (product_type_count < 1) fail("product_type_count must be at least 1");
    if (static_cast<int>(routes.size()) != product_type_count)
        fail("routes list does not match product_type_count");
    if (unit_travel_time < 0) fail("unit_travel_time must be nonnegative");

    for (int i = 0; i < machine_count; ++i) {
        const auto& m = machines[i];
        const std::string at = " (machine " + std::to_string(i + 1) + ")";
        if (m.processing_time <= 0) fail("processing_time must be positive" + at);
        if (m.load_time < 0) fail("load_time must be nonnegative" + at);
        if (m.unload_time < 0) fail("unload_time must be nonnegative" + at);
        if (m.mtbf <= 0) fail("mtbf must be positive" + at);
        if (m.mttr <= 0) fail("mttr must be positive" + at);
    }

    if (static_cast<int>(buffer_capacities.size()) != machine_count - 1)
        fail("buffer_capacities must have machine_count-1 entries");
    for (int b = 0; b < machine_count - 1; ++b)
        if (buffer_capacities[b] < 0)
            fail("buffer capacity must be nonnegative (buffer " + std::to_string(b + 1) + ")");

    if (!initial_buffers.empty()) {
        if (static_cast<int>(initial_buffers.size()) != machine_count - 1)
            fail("initial_buffers must have machine_count-1 rows");
        for (int b = 0; b < machine_count - 1; ++b) {
            if (static_cast<int>(initial_buffers[b].size()) != product_type_count)
                fail("initial_buffers row must have product_type_count entries (buffer " +
                     std::to_string(b + 1) + ")");
            int total = 0;
            for (int l = 0; l < product_type_count; ++l) {
                if (initial_buffers[b][l] < 0) fail("initial buffer level must be nonnegative");
                total += initial_buffers[b][l];
            }
            if (total > buffer_capacities[b])
                fail("initial buffer level exceeds capacity (buffer " + std::to_string(b + 1) + ")");
        }
    }

    std::vector<char> covered(machine_count, 0);
    for (int l = 0; l < product_type_count; ++l) {
        const auto& seq = routes[l].machines;
        const std::string at = " (product type " + std::to_string(l + 1) + ")";
        if (seq.empty()) fail("route must be non-empty" + at);
        if (seq.front() != 0) fail("route must start at first machine" + at);
        if (seq.back() != machine_count - 1) fail("route must end at last machine" + at);
        for (std::size_t k = 0; k < seq.size(); ++k) {
            if (seq[k] < 0 || seq[k] >= machine_count) fail("route machine out of range" + at);
            if (k > 0 && seq[k] <= seq[k - 1]) fail("route must be strictly increasing" + at);
            covered[seq[k]] = 1;
        }
    }
    for (int j = 0; j < machine_count; ++j)
        if (!covered[j])
            fail("machine " + std::to_string(j + 1) + " appears in no route");

    // Initial stock must respect buffer acceptance: buffer b may only hold
    // types whose route visits machine b+1.
    if (!initial_buffers.empty()) {
        for (int b = 0; b < machine_count - 1; ++b) {
            for (int l = 0; l < product_type_count; ++l) {
                if (initial_buffers[b][l] == 0) continue;
                const auto& seq = routes[l].machines;
                if (std::find(seq.begin(), seq.end(), b + 1) == seq.end())
                    fail("initial stock of type " + std::to_string(l + 1) + " in buffer " +
                         std::to_string(b + 1) + " is not routed through machine " +
                         std::to_string(b + 2));
            }
        }
    }
}

std::vector<DisruptionEvent> sample_disruptions(std::uint64_t seed,
                                                const std::vector<MachineSpec>& machines,
                                                double horizon) {
    std::vector<DisruptionEvent> events;
    for (int j = 0; j < static_cast<int>(machines.size()); ++j) {
        rng::Stream stream(rng::derive(seed, "disruptions", static_cast<std::uint64_t>(j)));
        double t = 0.0;
        for (;;) {
            const double up = stream.exponential(machines[j].mtbf);
            const double start = t + up;
            if (start >= horizon) break;
            const double down = stream.exponential(machines[j].mttr);
            const double duration = std::min(down, horizon - start);
            if (duration > 0.0) events.push_back({j, start, duration});
            t = start + duration;
        }
    }
    return events;
}

}  // namespace fms::sim
