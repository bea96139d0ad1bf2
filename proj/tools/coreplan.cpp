// coreplan: size a core budget for a batch of personalized-PageRank queries
// under a wall-clock deadline, then execute the plan and report feasibility.
//
// Subcommands: plan, run, baseline, ppr, report. Machine-readable output
// (JSON/CSV) goes to stdout; human summaries go to stderr.
//
// Exit codes: 0 success, 1 usage/validation, 2 infeasible deadline,
// 3 resource gate, 4 deadline missed at execution.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coreplan/executor.hpp"
#include "coreplan/graph.hpp"
#include "coreplan/manifest.hpp"
#include "coreplan/planner.hpp"
#include "coreplan/ppr.hpp"
#include "coreplan/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coreplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitResourceGate = 3;
constexpr int kExitDeadlineMissed = 4;

std::size_t env_thread_cap() {
    const char* v = std::getenv("COREPLAN_THREADS");
    if (!v) return 0;
    const long n = std::strtol(v, nullptr, 10);
    return n > 0 ? static_cast<std::size_t>(n) : 0;
}

Graph load_graph(const RunManifest& m) {
    std::ifstream in(m.graph_path);
    if (!in) throw ValidationError("cannot open graph file " + m.graph_path);
    return Graph::load_edge_list(in, m.directed);
}

QuerySet resolve_queries(const RunManifest& m, const Graph& g, std::size_t count) {
    if (!m.query_file.empty()) {
        std::ifstream in(m.query_file);
        if (!in) throw ValidationError("cannot open query file " + m.query_file);
        QuerySet qs = read_queries(in, g);
        if (qs.sources.size() < count)
            throw ValidationError("query file holds " +
                                  std::to_string(qs.sources.size()) +
                                  " queries, need " + std::to_string(count));
        qs.sources.resize(count);
        return qs;
    }
    return generate_queries(g, count, m.query_seed());
}

struct EngineBundle {
    std::unique_ptr<Graph> graph;  // null for pure-synthetic runs
    std::unique_ptr<QueryEngine> engine;
    std::string dataset = "synthetic";
};

EngineBundle make_engine(const RunManifest& m, std::size_t count) {
    EngineBundle b;
    if (!m.graph_path.empty()) {
        b.graph = std::make_unique<Graph>(load_graph(m));
        b.dataset = fs::path(m.graph_path).stem().string();
    }
    if (m.virtual_mode) {
        if (m.synthetic.empty())
            throw ValidationError("virtual mode needs --synthetic DIST");
        b.engine = std::make_unique<SyntheticEngine>(Distribution::parse(m.synthetic),
                                                     count, m.synthetic_seed());
    } else {
        if (!b.graph) throw ValidationError("real mode needs --graph");
        PprParams params = derive_params(*b.graph, m.ppr);
        b.engine = std::make_unique<ForaEngine>(
            *b.graph, params, resolve_queries(m, *b.graph, count), m.walk_seed());
    }
    return b;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

json report_document(const RunManifest& m, const std::string& dataset,
                     const Plan& plan, const ExecutionReport& rep) {
    return {{"dataset", dataset},
            {"x", m.plan.total_queries},
            {"plan", plan.to_json()},
            {"execution", rep.to_json()},
            {"manifest", m.to_json()}};
}

void warn_c_vs_s(const RunManifest& m, std::size_t s) {
    if (m.plan.c * 10 > s)
        std::cerr << "warning: c = " << m.plan.c << " is not << s = " << s
                  << "; t_avg normalization assumes c << s\n";
}

void add_common_options(CLI::App* cmd, RunManifest& m) {
    cmd->add_option("--graph", m.graph_path, "edge-list graph file (SNAP format)");
    cmd->add_flag("--directed,!--undirected", m.directed,
                  "treat edges as directed (default)");
    cmd->add_option("--queries", m.query_count, "number of queries to generate");
    cmd->add_option("--query-file", m.query_file, "file with one source id per line");
    cmd->add_option("--deadline", m.plan.deadline, "wall-clock deadline T, seconds");
    cmd->add_option("--cmax", [&m](const std::vector<std::string>& vals) {
            m.plan.c_max = std::stoull(vals.at(0));
            return true;
        }, "available cores C_max (absent = unbounded)");
    cmd->add_option("--d", m.plan.d, "scaling factor d in (0,1]");
    cmd->add_option("--c", m.plan.c, "preprocessing cores (default 1)");
    cmd->add_option("--confidence", [&m](const std::vector<std::string>& vals) {
            m.plan.z = z_for_confidence(std::stoi(vals.at(0)));
            return true;
        }, "confidence level {90,95,99} for the sample-size z-score");
    cmd->add_option("--z", m.plan.z, "z-score (overrides --confidence)");
    cmd->add_option("--p", m.plan.p, "population proportion (default 0.5)");
    cmd->add_option("--e", m.plan.e, "acceptable sampling error (default 0.05)");
    cmd->add_option("--sample-policy", [&m](const std::vector<std::string>& vals) {
            const std::string& v = vals.at(0);
            if (v == "cochran") {
                m.plan.sample_policy = SamplePolicy::Cochran;
            } else if (v.rfind("fraction=", 0) == 0) {
                m.plan.sample_policy = SamplePolicy::FixedFraction;
                m.plan.sample_fraction = std::stod(v.substr(9));
            } else {
                throw CLI::ValidationError("--sample-policy",
                                           "expected cochran or fraction=F");
            }
            return true;
        }, "cochran | fraction=F (default cochran)");
    cmd->add_option("--alpha", m.ppr.alpha, "PPR stop probability (default 0.2)");
    cmd->add_option("--epsilon", m.ppr.epsilon, "PPR relative error (default 0.5)");
    cmd->add_option("--delta", m.ppr.delta, "PPR significance threshold (default 1/n)");
    cmd->add_option("--pf", [&m](const std::vector<std::string>& vals) {
            m.ppr.p_f = std::stod(vals.at(0));
            m.plan.p_f = m.ppr.p_f;
            return true;
        }, "failure probability (PPR default 1/n, baseline default 0.05)");
    cmd->add_option("--t-hat-factor", m.plan.t_hat_factor,
                    "t_hat = factor * observed t_max (default 2)");
    cmd->add_option("--seed", m.seed, "manifest seed (default 1)");
    cmd->add_flag("--virtual", m.virtual_mode, "deterministic virtual-time mode");
    cmd->add_flag("--ideal", m.ideal_mode, "unbounded-core pipeline (D&A)");
    cmd->add_option("--synthetic", m.synthetic,
                    "virtual workload: constant:t | uniform:lo,hi | lognormal:mu,sigma[,cap]");
    cmd->add_option("--max-retries", m.plan.max_retries,
                    "ideal-mode retry bound (default 3)");
    cmd->add_option("--out", m.out_dir, "output directory (default .)");
}

void finalize_manifest(RunManifest& m) {
    if (m.plan.total_queries == 0) m.plan.total_queries = m.query_count;
    if (m.query_count == 0) m.query_count = m.plan.total_queries;
}

// ---------------------------------------------------------------------------

int cmd_plan(RunManifest m) {
    finalize_manifest(m);
    m.plan.validate();
    const std::size_t s = m.plan.resolve_sample_size();
    warn_c_vs_s(m, s);

    EngineBundle b = make_engine(m, m.plan.total_queries);
    const std::size_t c = m.ideal_mode ? s : m.plan.c;
    TimingStats stats = preprocess(*b.engine, s, c, m.plan.t_hat_factor);

    Plan plan;
    if (m.ideal_mode) {
        plan = plan_ideal(m.plan.total_queries, m.plan.deadline, s, stats.t_max);
        plan.lemma1 = lemma1_bound(m.plan.total_queries, m.plan.deadline, stats.t_max);
        plan.hoeffding =
            hoeffding_baseline(m.plan.total_queries, m.plan.deadline, stats, m.plan.p_f);
    } else {
        plan = plan_real(m.plan, stats);
    }

    std::cerr << "s=" << plan.s << " t_max=" << stats.t_max << " t_pre=" << stats.t_pre
              << " t_avg=" << stats.t_avg << " ell=" << plan.ell << " k=" << plan.k
              << " cores_required=" << plan.cores_required
              << " lemma1=" << plan.lemma1 << " hoeffding=" << plan.hoeffding << '\n';

    const std::string text = plan.to_json().dump(2) + "\n";
    write_file(fs::path(m.out_dir) / "plan.json", text);
    std::cout << text;
    return kExitOk;
}

int cmd_run(RunManifest m, const std::string& plan_path) {
    finalize_manifest(m);
    m.plan.validate();
    EngineBundle b = make_engine(m, m.plan.total_queries);
    const std::size_t cap = env_thread_cap();

    Plan plan;
    ExecutionReport rep;
    if (!plan_path.empty()) {
        std::ifstream in(plan_path);
        if (!in) throw ValidationError("cannot open plan file " + plan_path);
        plan = Plan::from_json(json::parse(in));
        if (!b.engine->is_virtual())
            throw ValidationError("--plan execution is supported in virtual mode");
        std::vector<double> durations(b.engine->query_count());
        for (std::size_t i = 0; i < durations.size(); ++i)
            durations[i] = b.engine->duration(i);
        rep = simulate(plan, durations,
                       plan.mode == PlanMode::Ideal ? plan.s : m.plan.c,
                       m.plan.deadline);
    } else if (m.ideal_mode) {
        std::tie(plan, rep) = run_ideal(m.plan, *b.engine, cap);
    } else {
        std::tie(plan, rep) = run_real(m.plan, *b.engine, cap);
    }

    const json doc = report_document(m, b.dataset, plan, rep);
    write_file(fs::path(m.out_dir) / "report.json", doc.dump(2) + "\n");
    std::ostringstream trace;
    rep.write_trace_csv(trace);
    write_file(fs::path(m.out_dir) / "trace.csv", trace.str());

    std::cerr << (rep.feasible ? "feasible" : "DEADLINE MISSED") << ": k=" << plan.k
              << " T_max=" << rep.T_max << " total_elapsed=" << rep.total_elapsed
              << " deadline=" << m.plan.deadline << " retries=" << rep.retries << '\n';
    std::cout << doc.dump(2) << '\n';
    return rep.feasible ? kExitOk : kExitDeadlineMissed;
}

int cmd_baseline(RunManifest m) {
    if (m.x_list.empty()) throw ValidationError("--x-list is required");
    const std::size_t cap = env_thread_cap();
    std::cout << "dataset,x,k_danda,k_baseline,reduction_pct,processing_time\n";
    for (std::size_t x : m.x_list) {
        RunManifest row = m;
        row.plan.total_queries = x;
        row.query_count = x;
        EngineBundle b = make_engine(row, x);
        auto [plan, rep] = run_real(row.plan, *b.engine, cap);
        const auto baseline =
            static_cast<std::size_t>(std::ceil(plan.hoeffding));
        const double reduction =
            100.0 * (static_cast<double>(baseline) - static_cast<double>(plan.k)) /
            static_cast<double>(baseline);
        std::cout << b.dataset << ',' << x << ',' << plan.k << ',' << baseline << ','
                  << reduction << ',' << rep.total_elapsed << '\n';
        if (!rep.feasible) {
            std::cerr << "x=" << x << ": deadline missed\n";
            return kExitDeadlineMissed;
        }
    }
    return kExitOk;
}

int cmd_ppr(RunManifest m, long long source) {
    if (m.graph_path.empty()) throw ValidationError("--graph is required");
    Graph g = load_graph(m);
    if (source < 0 || static_cast<std::size_t>(source) >= g.order())
        throw ValidationError("source " + std::to_string(source) + " out of range");
    PprParams params = derive_params(g, m.ppr);
    PprEstimate est =
        fora_query(g, static_cast<VertexId>(source), params, m.walk_seed());

    std::vector<std::pair<VertexId, double>> top(est.scores.begin(), est.scores.end());
    std::stable_sort(top.begin(), top.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (top.size() > 20) top.resize(20);

    std::vector<double> oracle;
    if (g.order() <= 1000)
        oracle = power_iteration_ppr(g, static_cast<VertexId>(source), params.alpha,
                                     1e-12);
    std::cout << "target,score" << (oracle.empty() ? "" : ",oracle") << '\n';
    for (const auto& [v, score] : top) {
        std::cout << v << ',' << score;
        if (!oracle.empty()) std::cout << ',' << oracle[v];
        std::cout << '\n';
    }
    std::cerr << "walks_performed=" << est.walks_performed << " omega=" << params.omega
              << " r_max=" << params.r_max << '\n';
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& paths) {
    std::cout << "dataset,x,k_danda,k_baseline,reduction_pct,processing_time\n";
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open report " + path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& ex) {
            throw ParseError(path + ": " + ex.what());
        }
        for (const char* field : {"dataset", "x", "plan", "execution"})
            if (!doc.contains(field))
                throw ParseError(path + ": missing field \"" + field + "\"");
        const auto& plan = doc["plan"];
        for (const char* field : {"k", "bounds"})
            if (!plan.contains(field))
                throw ParseError(path + ": missing field \"plan." + field + "\"");
        const auto k = plan["k"].get<std::size_t>();
        const auto baseline = static_cast<std::size_t>(
            std::ceil(plan["bounds"]["hoeffding"].get<double>()));
        const double reduction =
            100.0 * (static_cast<double>(baseline) - static_cast<double>(k)) /
            static_cast<double>(baseline);
        std::cout << doc["dataset"].get<std::string>() << ','
                  << doc["x"].get<std::size_t>() << ',' << k << ',' << baseline << ','
                  << reduction << ','
                  << doc["execution"]["total_elapsed"].get<double>() << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"core-count planning for deadline-bound PPR query batches"};
    app.require_subcommand(1);

    RunManifest m;
    std::string plan_path;
    long long ppr_source = -1;
    std::vector<std::string> report_paths;

    auto* plan_cmd = app.add_subcommand("plan", "preprocess samples and emit plan.json");
    add_common_options(plan_cmd, m);

    auto* run_cmd = app.add_subcommand("run", "plan and execute, emit report.json + trace.csv");
    add_common_options(run_cmd, m);
    run_cmd->add_option("--plan", plan_path, "execute a previously saved plan.json");

    auto* baseline_cmd =
        app.add_subcommand("baseline", "sweep x values; CSV comparison vs the Hoeffding baseline");
    add_common_options(baseline_cmd, m);
    baseline_cmd->add_option("--x-list", m.x_list, "query counts to sweep")->delimiter(',');

    auto* ppr_cmd = app.add_subcommand("ppr", "single PPR query, top-20 scores");
    add_common_options(ppr_cmd, m);
    ppr_cmd->add_option("--source", ppr_source, "source vertex id")->required();

    auto* report_cmd = app.add_subcommand("report", "tidy CSV from report.json files");
    report_cmd->add_option("reports", report_paths, "report.json paths")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan_cmd->parsed()) return cmd_plan(m);
        if (run_cmd->parsed()) return cmd_run(m, plan_path);
        if (baseline_cmd->parsed()) return cmd_baseline(m);
        if (ppr_cmd->parsed()) return cmd_ppr(m, ppr_source);
        if (report_cmd->parsed()) return cmd_report(report_paths);
    } catch (const ResourceError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitResourceGate;
    } catch (const InfeasibleError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
