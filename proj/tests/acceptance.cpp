// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit on
// any failure. Criteria 1-9 exercise the library directly; 10-11 drive the
// CLI binary end to end.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coreplan/executor.hpp"
#include "coreplan/graph.hpp"
#include "coreplan/planner.hpp"
#include "coreplan/ppr.hpp"
#include "coreplan/workload.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coreplan;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

const std::string kCli = COREPLAN_CLI_PATH;

int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd =
        kCli + " " + args + " > " + stdout_file.string() + " 2>/dev/null";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
    std::stringstream ss;
    ss << std::ifstream(p).rdbuf();
    return ss.str();
}

// --------------------------------------------------------------------------

void criterion1_sample_size_exact() {
    require(sample_size(2.576, 0.50, 0.05) == 664,
            "sample_size(2.576, 0.50, 0.05) != 664");
}

void criterion2_formula_suite() {
    SplitMix64 rng(2026);
    for (int i = 0; i < 1000; ++i) {
        const auto x = 1 + rng.next_below(1000000);
        const double t_max = 1e-3 + 20.0 * rng.next_double();
        const double deadline = t_max * (1.0 + 1e-3 + 200.0 * rng.next_double());
        const long double l1 = static_cast<long double>(x) *
                               static_cast<long double>(t_max) /
                               static_cast<long double>(deadline);
        const double got1 = lemma1_bound(x, deadline, t_max);
        require(std::abs(got1 - static_cast<double>(l1)) <=
                    1e-12 * static_cast<double>(l1),
                "lemma1_bound off at trial " + std::to_string(i));

        const std::size_t k = 1 + rng.next_below(2000);
        const double t = 1e-3 + 5.0 * rng.next_double();
        const double factor = 1.0 + 4.0 * rng.next_double();
        const double p_f = 1e-4 + 0.9 * rng.next_double();
        auto stats = TimingStats::from_durations(std::vector<double>(k, t), 1,
                                                 t * static_cast<double>(k), factor);
        const long double lt = t;
        const long double lhat = static_cast<long double>(factor) * lt;
        const long double expect =
            static_cast<long double>(x) / static_cast<long double>(deadline) *
            (lt + sqrtl(lhat * lhat * logl(2.0L / static_cast<long double>(p_f)) /
                        (2.0L * static_cast<long double>(k))));
        const double got2 = hoeffding_baseline(x, deadline, stats, p_f);
        require(std::abs(got2 - static_cast<double>(expect)) <=
                    1e-12 * static_cast<double>(expect),
                "hoeffding_baseline off at trial " + std::to_string(i));
    }
}

void criterion3_planner_brute_force() {
    for (std::size_t x = 2; x <= 500; ++x)
        for (std::size_t s = 1; s < x; ++s)
            for (std::size_t ell = 1; ell <= 50; ++ell) {
                const std::size_t k = (x - s + ell - 1) / ell;
                require((k - 1) * ell < x - s && x - s <= k * ell,
                        "ceil minimality violated at x=" + std::to_string(x) +
                            " s=" + std::to_string(s) + " ell=" + std::to_string(ell));
            }
    // allocate partition check on a strided sub-grid
    for (std::size_t x = 2; x <= 500; x += 13)
        for (std::size_t s = 1; s < x; s += 11)
            for (std::size_t ell = 1; ell <= 50; ell += 7) {
                const std::size_t k = (x - s + ell - 1) / ell;
                std::vector<std::size_t> idx(x - s);
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = s + i;
                auto slots = allocate(idx, ell, k);
                std::set<std::size_t> seen;
                for (const auto& slot : slots) {
                    require(slot.size() <= k, "slot over capacity");
                    for (auto q : slot)
                        require(seen.insert(q).second, "duplicate query in allocation");
                }
                require(seen.size() == x - s, "allocation is not a partition");
            }
}

void criterion4_schedule_oracle() {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t x = 3 + rng.next_below(18);  // <= 20 queries
        const std::size_t s = 1 + rng.next_below(x - 2);
        const std::size_t ell = 1 + rng.next_below(6);
        const std::size_t k = (x - s + ell - 1) / ell;
        Plan plan;
        plan.mode = PlanMode::Real;
        plan.s = s;
        plan.ell = ell;
        plan.k = k;
        std::vector<std::size_t> idx(x - s);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = s + i;
        plan.assignment = allocate(idx, ell, k);
        std::vector<double> durations(x);
        for (auto& d : durations) d = 0.05 + 4.0 * rng.next_double();

        auto rep = simulate(plan, durations, 1, 1e12);
        std::vector<double> expect(k, 0.0);
        for (const auto& slot : plan.assignment) {
            if (slot.empty()) continue;
            std::vector<double> sd;
            for (auto q : slot) sd.push_back(durations[q]);
            auto brute = testing::brute_force_slot(sd, k);
            for (std::size_t j = 0; j < k; ++j) expect[j] += brute.worker_totals[j];
        }
        require(rep.worker_totals == expect,
                "simulate != brute-force simulator at trial " + std::to_string(trial));
    }
}

void criterion5_ideal_feasibility() {
    std::size_t planned = 0;
    for (std::size_t x : {10, 47, 100, 1000, 4242, 10000})
        for (double t : {0.1, 1.0, 3.5})
            for (double slack : {1.6, 2.1, 3.0, 7.7, 20.0, 55.0}) {
                PlanConfig cfg;
                cfg.total_queries = x;
                cfg.deadline = t * slack;
                cfg.sample_policy = SamplePolicy::FixedFraction;
                cfg.sample_fraction = 0.05;
                SyntheticEngine engine(
                    Distribution{Distribution::Kind::Constant, t}, x, 1);
                try {
                    auto [plan, rep] = run_ideal(cfg, engine);
                    ++planned;
                    require(rep.feasible, "ideal run infeasible at x=" +
                                              std::to_string(x) + " t=" +
                                              std::to_string(t));
                    require(rep.total_elapsed <= cfg.deadline + 1e-9,
                            "completion exceeded deadline");
                } catch (const InfeasibleError&) {
                    // planning legitimately failed (ell < 1); not covered
                }
            }
    require(planned >= 80, "grid produced too few successful plans");
}

void criterion6_alg2_worked_example() {
    PlanConfig cfg;
    cfg.total_queries = 110;
    cfg.deadline = 50.0;
    cfg.c = 1;
    cfg.d = 1.0;
    cfg.sample_policy = SamplePolicy::FixedFraction;
    cfg.sample_fraction = 10.0 / 110.0;  // s = 10
    SyntheticEngine engine(Distribution{Distribution::Kind::Constant, 2.0}, 110, 1);
    auto [plan, rep] = run_real(cfg, engine);
    require(plan.s == 10, "s != 10");
    require(plan.k == 7, "k != 7");
    require(plan.ell == 15, "ell != 15");
    require(rep.feasible, "worked example infeasible");
    require(rep.total_elapsed == 50.0, "virtual completion != 50 exactly");

    cfg.c_max = 4;
    SyntheticEngine engine2(Distribution{Distribution::Kind::Constant, 2.0}, 110, 1);
    try {
        run_real(cfg, engine2);
        throw Failure("c_max=4 did not trip the resource gate");
    } catch (const ResourceError&) {
    }
}

void criterion7_oracle_correctness() {
    Graph cycle = Graph::from_edges({{0, 1}, {1, 0}}, true);
    auto pi = power_iteration_ppr(cycle, 0, 0.2, 1e-12);
    require(std::abs(pi[0] - 5.0 / 9.0) <= 1e-6, "cycle pi(0,0) off");

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Graph g = testing::random_graph(5 + seed % 46, 3.0, 7000 + seed);
        auto p = power_iteration_ppr(g, 0, 0.2, 1e-10);
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        require(std::abs(total - 1.0) <= 1e-9,
                "oracle normalization off at seed " + std::to_string(seed));
    }
}

void criterion8_push_invariants() {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Graph g = testing::random_graph(5 + seed % 46, 3.0, 8000 + seed);
        const double r_max = 2e-3;
        auto st = forward_push(g, 0, 0.2, r_max, [&](const PushState& s) {
            const double mass = s.reserve_sum() + s.residue_sum();
            require(std::abs(mass - 1.0) <= 1e-12, "mass conservation violated");
        });
        for (std::size_t v = 0; v < g.order(); ++v) {
            const auto deg = g.out_degree(static_cast<VertexId>(v));
            if (deg > 0)
                require(st.residue[v] <= r_max * static_cast<double>(deg) + 1e-15,
                        "terminal residue above threshold");
        }
        if (seed % 5 == 0) {  // decomposition vs oracle on a fifth of the graphs
            std::vector<double> reconstructed = st.reserve;
            for (std::size_t v = 0; v < g.order(); ++v) {
                if (st.residue[v] == 0.0) continue;
                auto piv =
                    power_iteration_ppr(g, static_cast<VertexId>(v), 0.2, 1e-12);
                for (std::size_t t = 0; t < g.order(); ++t)
                    reconstructed[t] += st.residue[v] * piv[t];
            }
            auto pi = power_iteration_ppr(g, 0, 0.2, 1e-12);
            for (std::size_t t = 0; t < g.order(); ++t)
                require(std::abs(reconstructed[t] - pi[t]) <= 1e-6,
                        "decomposition identity violated");
        }
    }
}

void criterion9_fora_guarantee() {
    Graph g = testing::random_graph(50, 4.0, 999);
    PprParams p;
    p.alpha = 0.2;
    p.epsilon = 0.5;
    p.delta = 0.02;
    p.p_f = 0.05;
    p = derive_params(g, p);
    auto pi = power_iteration_ppr(g, 0, 0.2, 1e-12);
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto est = fora_query(g, 0, p, seed);
        for (std::size_t t = 0; t < g.order(); ++t)
            if (pi[t] >= p.delta &&
                std::abs(est.score(static_cast<VertexId>(t)) - pi[t]) >
                    p.epsilon * pi[t]) {
                ++failures;
                break;
            }
    }
    require(failures <= 20,
            "guarantee failed in " + std::to_string(failures) + "/200 runs");
}

void criterion10_scaled_reproduction() {
    const fs::path dir = fs::temp_directory_path() / "coreplan_acceptance_c10";
    fs::remove_all(dir);
    fs::create_directories(dir);
    // 10k-vertex synthetic graph
    Graph g = testing::random_graph(10000, 3.0, 1234, 0.1);
    {
        std::ofstream out(dir / "synth10k.txt");
        g.write_edge_list(out);
    }
    const std::string common =
        " --graph " + (dir / "synth10k.txt").string() +
        " --virtual --synthetic lognormal:0,0.5,6 --x-list 200,400,600"
        " --deadline 150 --sample-policy fraction=0.05 --t-hat-factor 2 --seed 17";

    auto parse_k = [](const fs::path& csv) {
        std::vector<std::pair<long, long>> rows;  // (k_danda, k_baseline)
        std::istringstream in(slurp(csv));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cols;
            std::istringstream ls(line);
            std::string col;
            while (std::getline(ls, col, ',')) cols.push_back(col);
            rows.emplace_back(std::stol(cols.at(2)), std::stol(cols.at(3)));
        }
        return rows;
    };

    require(run_cli("baseline --d 1.0" + common, dir / "d100.csv") == 0,
            "baseline sweep (d=1.00) failed");
    auto rows100 = parse_k(dir / "d100.csv");
    require(rows100.size() == 3, "expected 3 rows for d=1.00");
    for (const auto& [k, baseline] : rows100)
        require(k <= baseline, "D&A_Real k " + std::to_string(k) +
                                   " > baseline " + std::to_string(baseline));

    require(run_cli("baseline --d 0.85" + common, dir / "d085.csv") == 0,
            "baseline sweep (d=0.85) failed");
    auto rows085 = parse_k(dir / "d085.csv");
    require(rows085.size() == 3, "expected 3 rows for d=0.85");
    for (std::size_t i = 0; i < 3; ++i)
        require(rows085[i].first >= rows100[i].first,
                "k(0.85) < k(1.00) at row " + std::to_string(i));
}

void criterion11_determinism() {
    const fs::path dir = fs::temp_directory_path() / "coreplan_acceptance_c11";
    fs::remove_all(dir);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    const std::string common =
        "run --virtual --synthetic lognormal:0,0.5,6 --queries 300 --deadline 400"
        " --sample-policy fraction=0.05 --seed 4242 --out ";
    require(run_cli(common + (dir / "a").string(), dir / "a.out") == 0,
            "first virtual run failed");
    require(run_cli(common + (dir / "b").string(), dir / "b.out") == 0,
            "second virtual run failed");
    const std::string a = slurp(dir / "a" / "report.json");
    const std::string b = slurp(dir / "b" / "report.json");
    require(!a.empty() && a == b, "report JSON not byte-identical");
}

struct Criterion {
    std::string name;
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1 sample-size worked example (664, exact)", criterion1_sample_size_exact},
        {"2 formula suite vs high-precision eval (1e-12)", criterion2_formula_suite},
        {"3 planner ceil-minimality + allocation brute force", criterion3_planner_brute_force},
        {"4 virtual-schedule oracle equivalence (500 plans)", criterion4_schedule_oracle},
        {"5 ideal-mode feasibility on constant grids", criterion5_ideal_feasibility},
        {"6 bounded-core worked example end-to-end", criterion6_alg2_worked_example},
        {"7 PPR oracle correctness + normalization", criterion7_oracle_correctness},
        {"8 forward-push invariants + decomposition", criterion8_push_invariants},
        {"9 FORA statistical guarantee (200 seeds)", criterion9_fora_guarantee},
        {"10 scaled-down sweep: k vs baseline, d direction", criterion10_scaled_reproduction},
        {"11 virtual-mode byte determinism", criterion11_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body();
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            std::cout << "[PASS] criterion " << c.name << " (" << secs << "s)\n";
        } catch (const std::exception& ex) {
            ++failed;
            std::cout << "[FAIL] criterion " << c.name << ": " << ex.what() << "\n";
        }
    }
    std::cout << (failed == 0 ? "all criteria passed\n"
                              : std::to_string(failed) + " criteria failed\n");
    return failed == 0 ? 0 : 1;
}
