#pragma once

#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

namespace coreplan {

// One scheduled item: which worker ran it and when (virtual time).
struct ScheduledItem {
    std::size_t worker = 0;
    double start = 0.0;
    double end = 0.0;
};

struct ScheduleResult {
    std::vector<ScheduledItem> items;        // parallel to input durations
    std::vector<double> worker_busy;         // total processing time per worker
    double makespan = 0.0;
};

// Greedy list scheduling: items are dispatched in order, each to the worker
// that frees up first (ties broken by lowest worker index). This is the
// dispatch rule a work-stealing pool realizes when grab order equals list
// order.
inline ScheduleResult list_schedule(const std::vector<double>& durations,
                                    std::size_t workers) {
    ScheduleResult res;
    res.items.resize(durations.size());
    res.worker_busy.assign(workers, 0.0);
    if (workers == 0) return res;

    using Slot = std::pair<double, std::size_t>;  // (available time, worker)
    std::priority_queue<Slot, std::vector<Slot>, std::greater<>> idle;
    for (std::size_t j = 0; j < workers; ++j) idle.emplace(0.0, j);

    for (std::size_t i = 0; i < durations.size(); ++i) {
        auto [avail, j] = idle.top();
        idle.pop();
        res.items[i] = {j, avail, avail + durations[i]};
        res.worker_busy[j] += durations[i];
        if (res.items[i].end > res.makespan) res.makespan = res.items[i].end;
        idle.emplace(res.items[i].end, j);
    }
    return res;
}

}  // namespace coreplan
