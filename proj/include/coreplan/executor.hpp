#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coreplan/errors.hpp"
#include "coreplan/planner.hpp"
#include "coreplan/schedule.hpp"
#include "coreplan/workload.hpp"

namespace coreplan {

enum class ExecMode { RealTime, VirtualTime };

// One row of the per-query trace; slot == -1 marks preprocessing.
struct TraceRow {
    std::size_t query = 0;
    long slot = -1;
    std::size_t worker = 0;
    double start = 0.0;
    double end = 0.0;
};

struct ExecutionReport {
    ExecMode mode = ExecMode::VirtualTime;
    double preprocessing_elapsed = 0.0;
    double t_pre = 0.0;            // sum of sample durations (Alg. 2 check input)
    double t_max_observed = 0.0;   // max sample duration (Alg. 1 check input)
    // Per-slot per-worker processing totals T_j within the slot.
    std::vector<std::vector<double>> per_slot;
    std::vector<double> worker_totals;  // T_j summed across slots
    double T_max = 0.0;
    double total_elapsed = 0.0;
    bool feasible = false;
    std::size_t cores_used = 0;  // peak concurrent slot workers
    unsigned retries = 0;
    std::size_t worker_cap = 0;  // real-mode thread cap actually applied (0 = k)
    std::vector<TraceRow> trace;

    nlohmann::json to_json() const {
        return {{"mode", mode == ExecMode::VirtualTime ? "virtual_time" : "real_time"},
                {"preprocessing_elapsed", preprocessing_elapsed},
                {"t_pre", t_pre},
                {"t_max_observed", t_max_observed},
                {"per_slot", per_slot},
                {"worker_totals", worker_totals},
                {"T_max", T_max},
                {"total_elapsed", total_elapsed},
                {"feasible", feasible},
                {"cores_used", cores_used},
                {"retries", retries},
                {"worker_cap", worker_cap}};
    }

    void write_trace_csv(std::ostream& out) const {
        out << "query,slot,worker,start,end\n";
        for (const auto& r : trace)
            out << r.query << ',' << r.slot << ',' << r.worker << ',' << r.start
                << ',' << r.end << '\n';
    }
};

struct SlotResult {
    std::vector<double> worker_totals;  // T_j within the slot
    double makespan = 0.0;
    std::vector<TraceRow> trace;
};

// ---------------------------------------------------------------------------
// Virtual-time simulation
// ---------------------------------------------------------------------------

namespace detail {

inline SlotResult simulate_slot(const std::vector<std::size_t>& queries,
                                const std::vector<double>& durations,
                                std::size_t k, long slot_index, double t0) {
    std::vector<double> slot_durations(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (queries[i] >= durations.size())
            throw ValidationError("missing duration for query index " +
                                  std::to_string(queries[i]));
        slot_durations[i] = durations[queries[i]];
    }
    ScheduleResult sched = list_schedule(slot_durations, k);
    SlotResult res;
    res.worker_totals = std::move(sched.worker_busy);
    res.makespan = sched.makespan;
    res.trace.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
        res.trace.push_back({queries[i], slot_index, sched.items[i].worker,
                             t0 + sched.items[i].start, t0 + sched.items[i].end});
    return res;
}

}  // namespace detail

// Deterministic virtual-time execution of a plan: list-schedule the s samples
// on c workers, then every slot on k workers, barrier-separated. `durations`
// must cover every query index (samples are indices [0, s)). Pure function of
// its inputs; no wall clock anywhere.
inline ExecutionReport simulate(const Plan& plan,
                                const std::vector<double>& durations,
                                std::size_t c, double deadline) {
    if (c < 1) throw ValidationError("preprocessing cores must be >= 1");
    if (durations.size() < plan.total_queries())
        throw ValidationError("durations cover " + std::to_string(durations.size()) +
                              " queries but the plan needs " +
                              std::to_string(plan.total_queries()));

    ExecutionReport rep;
    rep.mode = ExecMode::VirtualTime;

    std::vector<double> sample(durations.begin(),
                               durations.begin() + static_cast<long>(plan.s));
    for (double t : sample) {
        if (!(t > 0.0)) throw ValidationError("durations must be > 0");
        rep.t_pre += t;
        rep.t_max_observed = std::max(rep.t_max_observed, t);
    }
    ScheduleResult pre = list_schedule(sample, c);
    rep.preprocessing_elapsed = pre.makespan;
    for (std::size_t i = 0; i < plan.s; ++i)
        rep.trace.push_back(
            {i, -1, pre.items[i].worker, pre.items[i].start, pre.items[i].end});

    rep.worker_totals.assign(plan.k, 0.0);
    double clock = pre.makespan;
    for (std::size_t si = 0; si < plan.assignment.size(); ++si) {
        const auto& queries = plan.assignment[si];
        if (queries.empty()) continue;
        SlotResult slot = detail::simulate_slot(queries, durations, plan.k,
                                                static_cast<long>(si), clock);
        rep.per_slot.push_back(slot.worker_totals);
        for (std::size_t j = 0; j < plan.k; ++j)
            rep.worker_totals[j] += slot.worker_totals[j];
        rep.cores_used =
            std::max(rep.cores_used, std::min(plan.k, queries.size()));
        rep.trace.insert(rep.trace.end(), slot.trace.begin(), slot.trace.end());
        clock += slot.makespan;  // slot barrier
    }
    rep.total_elapsed = clock;
    rep.T_max = rep.worker_totals.empty()
                    ? 0.0
                    : *std::max_element(rep.worker_totals.begin(),
                                        rep.worker_totals.end());
    rep.feasible = plan.mode == PlanMode::Ideal
                       ? rep.t_max_observed + rep.T_max <= deadline
                       : rep.t_pre + rep.T_max <= deadline;
    return rep;
}

// ---------------------------------------------------------------------------
// Real-time slot execution
// ---------------------------------------------------------------------------

// Run one slot's queries on at most `workers` threads, greedy dispatch in slot
// order. Returns measured per-worker totals and a trace relative to `t0`
// (seconds since run start).
inline SlotResult run_slot(const std::vector<std::size_t>& queries,
                           std::size_t workers, QueryEngine& engine,
                           long slot_index, double t0,
                           std::chrono::steady_clock::time_point run_start) {
    if (queries.empty()) throw ValidationError("slot is empty");
    if (workers < 1) throw ValidationError("worker count must be >= 1");
    (void)t0;

    SlotResult res;
    res.worker_totals.assign(workers, 0.0);
    res.trace.resize(queries.size());

    const auto slot_start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::mutex err_mu;
    std::string err;

    auto body = [&](std::size_t j) {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= queries.size()) return;
                const auto q0 = std::chrono::steady_clock::now();
                const double dur = engine.execute(queries[i]);
                const auto q1 = std::chrono::steady_clock::now();
                res.worker_totals[j] += dur;
                res.trace[i] = {queries[i], slot_index, j,
                                std::chrono::duration<double>(q0 - run_start).count(),
                                std::chrono::duration<double>(q1 - run_start).count()};
                completed.fetch_add(1);
            }
        } catch (const std::exception& ex) {
            std::scoped_lock lock(err_mu);
            if (err.empty()) err = ex.what();
            next.store(queries.size());  // drain remaining work
        }
    };

    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t j = 0; j < workers; ++j) pool.emplace_back(body, j);
        for (auto& t : pool) t.join();
    }
    if (!err.empty())
        throw std::runtime_error("slot " + std::to_string(slot_index) +
                                 " aborted after " + std::to_string(completed.load()) +
                                 " completed queries: " + err);
    res.makespan =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - slot_start)
            .count();
    return res;
}

// ---------------------------------------------------------------------------
// End-to-end drivers
// ---------------------------------------------------------------------------

namespace detail {

// Shared slot-phase driver; fills everything downstream of preprocessing.
inline void execute_slots(const Plan& plan, QueryEngine& engine,
                          std::size_t worker_cap, ExecutionReport& rep,
                          std::chrono::steady_clock::time_point run_start) {
    // The thread cap constrains real machines only; virtual time models k cores.
    const std::size_t workers =
        !engine.is_virtual() && worker_cap > 0 ? std::min(plan.k, worker_cap)
                                               : plan.k;
    rep.worker_cap = workers < plan.k ? workers : 0;
    rep.worker_totals.assign(workers, 0.0);

    if (engine.is_virtual()) {
        std::vector<double> durations(engine.query_count());
        for (std::size_t i = 0; i < durations.size(); ++i)
            durations[i] = engine.duration(i);
        double clock = rep.preprocessing_elapsed;
        for (std::size_t si = 0; si < plan.assignment.size(); ++si) {
            const auto& queries = plan.assignment[si];
            if (queries.empty()) continue;
            SlotResult slot = detail::simulate_slot(queries, durations, workers,
                                                    static_cast<long>(si), clock);
            rep.per_slot.push_back(slot.worker_totals);
            for (std::size_t j = 0; j < workers; ++j)
                rep.worker_totals[j] += slot.worker_totals[j];
            rep.cores_used =
                std::max(rep.cores_used, std::min(workers, queries.size()));
            rep.trace.insert(rep.trace.end(), slot.trace.begin(), slot.trace.end());
            clock += slot.makespan;
        }
        rep.total_elapsed = clock;
    } else {
        for (std::size_t si = 0; si < plan.assignment.size(); ++si) {
            const auto& queries = plan.assignment[si];
            if (queries.empty()) continue;
            SlotResult slot = run_slot(queries, workers, engine,
                                       static_cast<long>(si), 0.0, run_start);
            rep.per_slot.push_back(slot.worker_totals);
            for (std::size_t j = 0; j < workers; ++j)
                rep.worker_totals[j] += slot.worker_totals[j];
            rep.cores_used =
                std::max(rep.cores_used, std::min(workers, queries.size()));
            rep.trace.insert(rep.trace.end(), slot.trace.begin(), slot.trace.end());
        }
        rep.total_elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          run_start)
                .count();
    }
    rep.T_max = rep.worker_totals.empty()
                    ? 0.0
                    : *std::max_element(rep.worker_totals.begin(),
                                        rep.worker_totals.end());
}

// Preprocessing trace rows are exact in virtual mode (re-derived from the
// list schedule); real mode records none, only the slot phase is traced.
inline void trace_preprocessing(QueryEngine& engine, const TimingStats& stats,
                                ExecutionReport& rep) {
    if (!engine.is_virtual()) return;
    ScheduleResult pre = list_schedule(stats.durations, stats.cores);
    for (std::size_t i = 0; i < stats.durations.size(); ++i)
        rep.trace.push_back(
            {i, -1, pre.items[i].worker, pre.items[i].start, pre.items[i].end});
}

}  // namespace detail

// Unbounded-core pipeline: preprocess s samples fully in parallel (exactly
// realizable only in virtual time; real mode uses min(s, worker_cap or
// hardware) threads and records the deviation via preprocessing cores in the
// stats), plan, execute, check t_max + T_max <= deadline, retry up to
// config.max_retries with fresh preprocessing each round. Retries exhausted
// yields a failure report, not an exception.
inline std::pair<Plan, ExecutionReport> run_ideal(const PlanConfig& config,
                                                  QueryEngine& engine,
                                                  std::size_t worker_cap = 0) {
    config.validate();
    const std::size_t s = config.resolve_sample_size();
    if (engine.query_count() < config.total_queries)
        throw ValidationError("engine holds fewer queries than the plan needs");

    Plan plan;
    ExecutionReport rep;
    for (unsigned round = 0; round <= config.max_retries; ++round) {
        engine.set_round(round);
        const auto run_start = std::chrono::steady_clock::now();
        std::size_t pre_cores = s;
        if (!engine.is_virtual()) {
            std::size_t hw = std::thread::hardware_concurrency();
            if (hw == 0) hw = 1;
            pre_cores = std::min(s, worker_cap > 0 ? std::min(worker_cap, hw) : hw);
        }
        TimingStats stats = preprocess(engine, s, pre_cores, config.t_hat_factor);

        plan = plan_ideal(config.total_queries, config.deadline, s, stats.t_max);
        plan.lemma1 = lemma1_bound(config.total_queries, config.deadline, stats.t_max);
        plan.hoeffding =
            hoeffding_baseline(config.total_queries, config.deadline, stats, config.p_f);

        rep = ExecutionReport{};
        rep.mode = engine.is_virtual() ? ExecMode::VirtualTime : ExecMode::RealTime;
        rep.retries = round;
        rep.t_pre = stats.t_pre;
        rep.t_max_observed = stats.t_max;
        rep.preprocessing_elapsed = stats.elapsed;
        detail::trace_preprocessing(engine, stats, rep);
        detail::execute_slots(plan, engine, worker_cap, rep, run_start);
        rep.feasible = rep.t_max_observed + rep.T_max <= config.deadline;
        if (rep.feasible) return {plan, rep};
    }
    return {plan, rep};  // feasible == false, retries == max_retries
}

// Bounded-core pipeline: preprocess with config.c workers, gate on the
// analytic bound vs c_max, plan with scaling factor d, execute once, check
// t_pre + T_max <= deadline. Gate and planning failures throw; a failed
// post-check comes back as feasible == false (CLI maps it to exit 4).
inline std::pair<Plan, ExecutionReport> run_real(const PlanConfig& config,
                                                 QueryEngine& engine,
                                                 std::size_t worker_cap = 0) {
    config.validate();
    const std::size_t s = config.resolve_sample_size();
    if (engine.query_count() < config.total_queries)
        throw ValidationError("engine holds fewer queries than the plan needs");

    engine.set_round(0);
    const auto run_start = std::chrono::steady_clock::now();
    TimingStats stats = preprocess(engine, s, config.c, config.t_hat_factor);
    Plan plan = plan_real(config, stats);

    ExecutionReport rep;
    rep.mode = engine.is_virtual() ? ExecMode::VirtualTime : ExecMode::RealTime;
    rep.t_pre = stats.t_pre;
    rep.t_max_observed = stats.t_max;
    rep.preprocessing_elapsed = stats.elapsed;
    detail::trace_preprocessing(engine, stats, rep);
    detail::execute_slots(plan, engine, worker_cap, rep, run_start);
    rep.feasible = rep.t_pre + rep.T_max <= config.deadline;
    return {plan, rep};
}

}  // namespace coreplan
