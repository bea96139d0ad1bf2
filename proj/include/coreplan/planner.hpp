#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coreplan/errors.hpp"
#include "coreplan/workload.hpp"

namespace coreplan {

// ---------------------------------------------------------------------------
// Closed-form pieces
// ---------------------------------------------------------------------------

// Cochran sample size: ceil(Z^2 p (1-p) / e^2).
inline std::size_t sample_size(double z, double p, double e) {
    if (!(z > 0.0)) throw ValidationError("z must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("p must be in (0,1)");
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("e must be in (0,1)");
    return static_cast<std::size_t>(std::ceil(z * z * p * (1.0 - p) / (e * e)));
}

// Standard normal z-scores for the usual confidence levels. Anything else:
// pass Z directly.
inline double z_for_confidence(int level) {
    switch (level) {
        case 90: return 1.645;
        case 95: return 1.960;
        case 99: return 2.576;
        default:
            throw ValidationError("unsupported confidence level " +
                                  std::to_string(level) +
                                  "; pass a z-score directly");
    }
}

// Analytic minimum core count: x * t_max / deadline. Unrounded; callers ceil
// when comparing against integer cores.
inline double lemma1_bound(std::size_t x, double deadline, double t_max) {
    if (!(t_max > 0.0)) throw ValidationError("t_max must be > 0");
    if (!(deadline > t_max))
        throw InfeasibleError("deadline " + std::to_string(deadline) +
                              " <= t_max " + std::to_string(t_max) +
                              ": even one query misses the deadline");
    return static_cast<double>(x) * t_max / deadline;
}

// Hoeffding-inequality core baseline:
//   (x / deadline) * (t_bar + sqrt(t_hat^2 ln(2/p_f) / (2k)))
// with k = number of sample timings. Unrounded.
inline double hoeffding_baseline(std::size_t x, double deadline,
                                 const TimingStats& stats, double p_f) {
    if (stats.durations.empty()) throw ValidationError("empty timing stats");
    if (!(p_f > 0.0 && p_f < 1.0)) throw ValidationError("p_f must be in (0,1)");
    if (!(deadline > 0.0)) throw ValidationError("deadline must be > 0");
    const double k = static_cast<double>(stats.durations.size());
    return static_cast<double>(x) / deadline *
           (stats.t_bar +
            std::sqrt(stats.t_hat * stats.t_hat * std::log(2.0 / p_f) / (2.0 * k)));
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

enum class SamplePolicy { Cochran, FixedFraction };
enum class PlanMode { Ideal, Real };

struct PlanConfig {
    std::size_t total_queries = 0;        // x
    double deadline = 0.0;                // seconds
    std::optional<std::size_t> c_max;     // absent = unbounded (ideal mode)
    double d = 1.0;                       // scaling factor, in (0,1]
    std::size_t c = 1;                    // preprocessing cores
    double z = 2.576;
    double p = 0.50;
    double e = 0.05;
    SamplePolicy sample_policy = SamplePolicy::Cochran;
    double sample_fraction = 0.05;        // fixed_fraction(f)
    double p_f = 0.05;                    // failure prob for the reported baseline
    unsigned max_retries = 3;             // bound on the ideal-mode retry loop
    double t_hat_factor = 2.0;

    void validate() const {
        if (total_queries < 1) throw ValidationError("total_queries must be >= 1");
        if (!(deadline > 0.0)) throw ValidationError("deadline must be > 0");
        if (!(d > 0.0 && d <= 1.0)) throw ValidationError("d must be in (0,1]");
        if (c < 1) throw ValidationError("c must be >= 1");
        if (!(z > 0.0)) throw ValidationError("z must be > 0");
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("p must be in (0,1)");
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("e must be in (0,1)");
        if (c_max && *c_max < 1) throw ValidationError("c_max must be >= 1");
        if (sample_policy == SamplePolicy::FixedFraction &&
            !(sample_fraction > 0.0 && sample_fraction < 1.0))
            throw ValidationError("sample fraction must be in (0,1)");
        if (!(p_f > 0.0 && p_f < 1.0)) throw ValidationError("p_f must be in (0,1)");
        if (!(t_hat_factor >= 1.0)) throw ValidationError("t_hat_factor must be >= 1");
    }

    std::size_t resolve_sample_size() const {
        std::size_t s = sample_policy == SamplePolicy::Cochran
                            ? sample_size(z, p, e)
                            : std::max<std::size_t>(
                                  1, static_cast<std::size_t>(std::ceil(
                                         sample_fraction *
                                         static_cast<double>(total_queries))));
        if (s >= total_queries)
            throw ValidationError(
                "sample size " + std::to_string(s) + " >= total queries " +
                std::to_string(total_queries) +
                "; use a fraction sample policy or more queries");
        return s;
    }
};

struct Plan {
    std::size_t s = 0;               // sample size used
    std::size_t ell = 0;             // slot count
    std::size_t k = 0;               // queries per slot = peak cores per slot
    std::size_t cores_required = 0;  // reported answer (max(k,s) in ideal mode)
    PlanMode mode = PlanMode::Ideal;
    double d = 1.0;
    // slot index -> global query indices; samples are indices [0, s).
    std::vector<std::vector<std::size_t>> assignment;
    double lemma1 = 0.0;     // analytic lower bound (0 when not computed)
    double hoeffding = 0.0;  // baseline cores (0 when not computed)

    std::size_t total_queries() const {
        std::size_t x = s;
        for (const auto& slot : assignment) x += slot.size();
        return x;
    }

    nlohmann::json to_json() const {
        return {{"s", s},
                {"ell", ell},
                {"k", k},
                {"cores_required", cores_required},
                {"mode", mode == PlanMode::Ideal ? "ideal" : "real"},
                {"d", d},
                {"assignment", assignment},
                {"bounds", {{"lemma1", lemma1}, {"hoeffding", hoeffding}}}};
    }

    static Plan from_json(const nlohmann::json& j) {
        Plan plan;
        plan.s = j.at("s").get<std::size_t>();
        plan.ell = j.at("ell").get<std::size_t>();
        plan.k = j.at("k").get<std::size_t>();
        plan.cores_required = j.at("cores_required").get<std::size_t>();
        plan.mode = j.at("mode").get<std::string>() == "ideal" ? PlanMode::Ideal
                                                               : PlanMode::Real;
        plan.d = j.at("d").get<double>();
        plan.assignment =
            j.at("assignment").get<std::vector<std::vector<std::size_t>>>();
        plan.lemma1 = j.at("bounds").at("lemma1").get<double>();
        plan.hoeffding = j.at("bounds").at("hoeffding").get<double>();
        return plan;
    }
};

// Deterministic contiguous partition: slot i gets indices[i*k, (i+1)*k).
inline std::vector<std::vector<std::size_t>> allocate(
    const std::vector<std::size_t>& query_indices, std::size_t ell, std::size_t k) {
    if (ell < 1 || k < 1) throw ValidationError("ell and k must be >= 1");
    const std::size_t used = (query_indices.size() + k - 1) / k;
    if (used > ell)
        throw std::logic_error("allocate: capacity ell*k exceeded (planner bug)");
    // Trailing slots beyond ceil(n/k) would be empty; don't materialize them
    // (ell can be enormous when sampled durations are tiny).
    std::vector<std::vector<std::size_t>> slots(used);
    for (std::size_t i = 0; i < query_indices.size(); ++i)
        slots[i / k].push_back(query_indices[i]);
    return slots;
}

namespace detail {
inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

inline std::vector<std::size_t> remaining_indices(std::size_t x, std::size_t s) {
    std::vector<std::size_t> idx(x - s);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = s + i;
    return idx;
}
}  // namespace detail

// Unbounded-core plan: ell = floor((deadline - t_max) / t_max) slots of
// k = ceil((x - s) / ell) queries. Preprocessing takes s cores in parallel, so
// when k < s the reported core requirement is s.
inline Plan plan_ideal(std::size_t x, double deadline, std::size_t s, double t_max) {
    if (!(t_max > 0.0)) throw ValidationError("t_max must be > 0");
    if (s < 1 || s >= x) throw ValidationError("need 1 <= s < x");
    if (!(deadline > t_max))
        throw InfeasibleError("deadline <= t_max: no slot fits after preprocessing");
    const auto ell = static_cast<std::size_t>(std::floor((deadline - t_max) / t_max));
    if (ell < 1)
        throw InfeasibleError("deadline admits no full slot after preprocessing");
    Plan plan;
    plan.mode = PlanMode::Ideal;
    plan.s = s;
    plan.ell = ell;
    plan.k = detail::ceil_div(x - s, ell);
    plan.cores_required = std::max(plan.k, s);
    plan.assignment = allocate(detail::remaining_indices(x, s), ell, plan.k);
    return plan;
}

// Bounded-core plan: gate on the analytic lower bound, then
// ell = floor((d * deadline - t_pre) / t_avg), k = ceil((x - s) / ell).
// Carries both bounds for reporting.
inline Plan plan_real(const PlanConfig& config, const TimingStats& stats) {
    config.validate();
    const std::size_t x = config.total_queries;
    const std::size_t s = stats.durations.size();
    if (s >= x) throw ValidationError("sample size must be < total queries");

    const double bound = lemma1_bound(x, config.deadline, stats.t_max);
    if (config.c_max && static_cast<double>(*config.c_max) < std::ceil(bound))
        throw ResourceError("available cores " + std::to_string(*config.c_max) +
                            " < required lower bound ceil(" + std::to_string(bound) +
                            ") = " + std::to_string(static_cast<std::size_t>(
                                         std::ceil(bound))));

    const double window = config.d * config.deadline - stats.t_pre;
    const auto ell_f = std::floor(window / stats.t_avg);
    if (!(ell_f >= 1.0))
        throw InfeasibleError(
            "no slot fits in the scaled remaining window (d*deadline - t_pre = " +
            std::to_string(window) + "); raise the deadline or d");
    const auto ell = static_cast<std::size_t>(ell_f);

    Plan plan;
    plan.mode = PlanMode::Real;
    plan.s = s;
    plan.d = config.d;
    plan.ell = ell;
    plan.k = detail::ceil_div(x - s, ell);
    plan.cores_required = plan.k;
    plan.assignment = allocate(detail::remaining_indices(x, s), ell, plan.k);
    plan.lemma1 = bound;
    plan.hoeffding = hoeffding_baseline(x, config.deadline, stats, config.p_f);
    return plan;
}

}  // namespace coreplan
