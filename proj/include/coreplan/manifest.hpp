#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coreplan/planner.hpp"
#include "coreplan/ppr.hpp"
#include "coreplan/workload.hpp"

namespace coreplan {

// Everything that determines a run. Two virtual-mode executions of the same
// manifest produce identical reports; all randomness flows from `seed` via
// named substreams.
struct RunManifest {
    std::string graph_path;
    bool directed = true;
    std::size_t query_count = 0;   // used when query_file is empty
    std::string query_file;
    PlanConfig plan;
    PprParams ppr;
    bool virtual_mode = false;
    bool ideal_mode = false;       // D&A vs D&A_Real
    std::string synthetic;         // distribution text, virtual mode only
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::vector<std::size_t> x_list;  // baseline sweeps

    // Named substreams off the manifest seed.
    std::uint64_t query_seed() const { return mix64(seed ^ 0x71u); }
    std::uint64_t walk_seed() const { return mix64(seed ^ 0x77u); }
    std::uint64_t synthetic_seed() const { return mix64(seed ^ 0x73u); }

    nlohmann::json to_json() const {
        return {{"graph", graph_path},
                {"directed", directed},
                {"query_count", query_count},
                {"query_file", query_file},
                {"deadline", plan.deadline},
                {"total_queries", plan.total_queries},
                {"c_max", plan.c_max ? nlohmann::json(*plan.c_max) : nlohmann::json()},
                {"d", plan.d},
                {"c", plan.c},
                {"z", plan.z},
                {"p", plan.p},
                {"e", plan.e},
                {"sample_policy",
                 plan.sample_policy == SamplePolicy::Cochran ? "cochran" : "fraction"},
                {"sample_fraction", plan.sample_fraction},
                {"max_retries", plan.max_retries},
                {"t_hat_factor", plan.t_hat_factor},
                {"alpha", ppr.alpha},
                {"epsilon", ppr.epsilon},
                {"delta", ppr.delta},
                {"p_f", ppr.p_f},
                {"virtual", virtual_mode},
                {"ideal", ideal_mode},
                {"synthetic", synthetic},
                {"seed", seed}};
    }
};

}  // namespace coreplan
