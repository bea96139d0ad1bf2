#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coreplan/errors.hpp"
#include "coreplan/graph.hpp"
#include "coreplan/ppr.hpp"
#include "coreplan/rng.hpp"
#include "coreplan/schedule.hpp"

namespace coreplan {

// ---------------------------------------------------------------------------
// Query sets
// ---------------------------------------------------------------------------

struct QuerySet {
    std::vector<VertexId> sources;
    std::uint64_t seed = 0;
};

// Sources drawn uniformly with replacement from [0, n), deterministic in seed.
inline QuerySet generate_queries(const Graph& g, std::size_t count,
                                 std::uint64_t seed) {
    if (count < 1) throw ValidationError("query count must be >= 1");
    if (g.order() == 0) throw ValidationError("empty graph");
    QuerySet qs;
    qs.seed = seed;
    qs.sources.reserve(count);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < count; ++i)
        qs.sources.push_back(static_cast<VertexId>(rng.next_below(g.order())));
    return qs;
}

// Query files: one source id per line.
inline void write_queries(std::ostream& out, const QuerySet& qs) {
    for (VertexId s : qs.sources) out << s << '\n';
}

inline QuerySet read_queries(std::istream& in, const Graph& g) {
    QuerySet qs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long v = -1;
        std::string extra;
        if (!(ls >> v) || v < 0 || (ls >> extra) ||
            static_cast<std::size_t>(v) >= g.order())
            throw ParseError("query file line " + std::to_string(lineno) +
                             ": bad source id \"" + line + "\"");
        qs.sources.push_back(static_cast<VertexId>(v));
    }
    if (qs.sources.empty()) throw ParseError("query file is empty");
    return qs;
}

// ---------------------------------------------------------------------------
// Timing statistics (preprocessing output)
// ---------------------------------------------------------------------------

// Per-query durations from the preprocessing phase plus the derived slot
// arithmetic inputs. t_avg = c * t_pre / s normalizes the sequential sum to
// the c-core preprocessing rate; t_hat is the configured a-priori upper
// bound, defaulting to 2 * observed max.
struct TimingStats {
    std::vector<double> durations;  // t_i, seconds
    double t_max = 0.0;             // max t_i
    double t_pre = 0.0;             // sum t_i
    double t_avg = 0.0;             // c * t_pre / s
    double t_bar = 0.0;             // mean t_i
    double t_hat = 0.0;             // upper bound, >= t_max
    std::size_t cores = 1;          // c used during preprocessing
    double elapsed = 0.0;           // wall (or virtual) time of the phase

    static TimingStats from_durations(std::vector<double> durations,
                                      std::size_t cores, double elapsed,
                                      double t_hat_factor = 2.0) {
        if (durations.empty()) throw ValidationError("no sample durations");
        if (cores < 1) throw ValidationError("cores must be >= 1");
        TimingStats ts;
        ts.durations = std::move(durations);
        for (double t : ts.durations) {
            if (!(t > 0.0)) throw ValidationError("durations must be > 0");
            if (t > ts.t_max) ts.t_max = t;
            ts.t_pre += t;
        }
        ts.cores = cores;
        ts.elapsed = elapsed;
        ts.t_bar = ts.t_pre / static_cast<double>(ts.durations.size());
        ts.t_avg = static_cast<double>(cores) * ts.t_pre /
                   static_cast<double>(ts.durations.size());
        ts.t_hat = t_hat_factor * ts.t_max;
        if (ts.t_hat < ts.t_max)
            throw ValidationError("t_hat factor must be >= 1 (t_hat >= t_max)");
        return ts;
    }
};

// ---------------------------------------------------------------------------
// Synthetic duration distributions
// ---------------------------------------------------------------------------

// constant(t), uniform(lo,hi), lognormal(mu,sigma) truncated above at
// truncate_at (0 = no truncation). Draw i depends only on (seed, i), never on
// draw order. Sampling is hand-rolled (Box-Muller for the normal) so the
// sequence is identical across standard libraries.
struct Distribution {
    enum class Kind { Constant, Uniform, Lognormal };
    Kind kind = Kind::Constant;
    double a = 1.0;            // t | lo | mu
    double b = 0.0;            // - | hi | sigma
    double truncate_at = 0.0;  // lognormal only

    double draw(std::uint64_t seed, std::uint64_t index) const {
        SplitMix64 rng = substream(seed, index);
        switch (kind) {
            case Kind::Constant:
                return a;
            case Kind::Uniform:
                return a + (b - a) * rng.next_double();
            case Kind::Lognormal: {
                // Box-Muller; u1 nudged away from 0.
                const double u1 = rng.next_double() + 1e-18;
                const double u2 = rng.next_double();
                const double z =
                    std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
                double t = std::exp(a + b * z);
                if (truncate_at > 0.0 && t > truncate_at) t = truncate_at;
                return t;
            }
        }
        return a;
    }

    // "constant:2", "uniform:1,3", "lognormal:0,0.5[,cap]"
    static Distribution parse(const std::string& text) {
        auto colon = text.find(':');
        if (colon == std::string::npos)
            throw ValidationError("bad distribution \"" + text +
                                  "\"; expected kind:params");
        const std::string kind = text.substr(0, colon);
        std::string rest = text.substr(colon + 1);
        for (char& ch : rest)
            if (ch == ',') ch = ' ';
        std::istringstream ps(rest);
        Distribution d;
        if (kind == "constant") {
            d.kind = Kind::Constant;
            if (!(ps >> d.a) || !(d.a > 0.0))
                throw ValidationError("constant distribution needs one positive value");
        } else if (kind == "uniform") {
            d.kind = Kind::Uniform;
            if (!(ps >> d.a >> d.b) || !(d.a > 0.0) || !(d.b >= d.a))
                throw ValidationError("uniform distribution needs 0 < lo <= hi");
        } else if (kind == "lognormal") {
            d.kind = Kind::Lognormal;
            if (!(ps >> d.a >> d.b) || !(d.b >= 0.0))
                throw ValidationError("lognormal distribution needs mu,sigma");
            ps >> d.truncate_at;
        } else {
            throw ValidationError("unknown distribution kind \"" + kind + "\"");
        }
        return d;
    }
};

// ---------------------------------------------------------------------------
// Query engines
// ---------------------------------------------------------------------------

// A batch of timed queries. Virtual engines expose exact per-query durations;
// real engines run the query and report measured wall time. set_round feeds
// the retry loop: stochastic durations redraw per round.
class QueryEngine {
public:
    virtual ~QueryEngine() = default;
    virtual std::size_t query_count() const = 0;
    virtual bool is_virtual() const = 0;
    virtual double duration(std::size_t index) const = 0;
    virtual double execute(std::size_t index) = 0;
    virtual void set_round(unsigned /*round*/) {}
};

class SyntheticEngine final : public QueryEngine {
public:
    SyntheticEngine(Distribution dist, std::size_t count, std::uint64_t seed)
        : dist_(dist), count_(count), seed_(seed) {}

    std::size_t query_count() const override { return count_; }
    bool is_virtual() const override { return true; }
    double duration(std::size_t index) const override {
        return dist_.draw(mix64(seed_ ^ mix64(round_)), index);
    }
    double execute(std::size_t index) override { return duration(index); }
    void set_round(unsigned round) override { round_ = round; }

private:
    Distribution dist_;
    std::size_t count_;
    std::uint64_t seed_;
    unsigned round_ = 0;
};

// Times real fora_query runs on a monotonic clock; estimates are discarded
// (planning needs only time). Query i of round r walks with
// substream(seed, r)-derived seeds, so re-preprocessing redraws the walks.
class ForaEngine final : public QueryEngine {
public:
    ForaEngine(const Graph& graph, PprParams params, QuerySet queries,
               std::uint64_t seed)
        : graph_(graph), params_(params), queries_(std::move(queries)), seed_(seed) {
        params_.validate();
    }

    std::size_t query_count() const override { return queries_.sources.size(); }
    bool is_virtual() const override { return false; }
    double duration(std::size_t) const override {
        throw ValidationError("real engine has no pre-known durations");
    }
    double execute(std::size_t index) override {
        const auto t0 = std::chrono::steady_clock::now();
        fora_query(graph_, queries_.sources.at(index), params_,
                   mix64(mix64(seed_ ^ mix64(round_)) ^ mix64(index)));
        const auto t1 = std::chrono::steady_clock::now();
        const auto ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        // Clamp to one tick: TimingStats requires strictly positive durations.
        return std::max<double>(static_cast<double>(ns), 1.0) * 1e-9;
    }
    void set_round(unsigned round) override { round_ = round; }

    const QuerySet& queries() const { return queries_; }

private:
    const Graph& graph_;
    PprParams params_;
    QuerySet queries_;
    std::uint64_t seed_;
    unsigned round_ = 0;
};

// Wall-clock time of one real query; the estimate itself is discarded.
inline double time_query(const Graph& g, VertexId source, const PprParams& params,
                         std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    fora_query(g, source, params, seed);
    const auto t1 = std::chrono::steady_clock::now();
    const auto ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    return std::max<double>(static_cast<double>(ns), 1.0) * 1e-9;
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

// Run the first `sample_size` queries of the engine on `cores` workers
// (cores=1 is strictly sequential) and collect TimingStats. In virtual mode
// elapsed is the exact c-worker list-scheduling makespan; in real mode it is
// measured wall time.
inline TimingStats preprocess(QueryEngine& engine, std::size_t sample_size,
                              std::size_t cores, double t_hat_factor = 2.0) {
    if (sample_size < 1) throw ValidationError("sample size must be >= 1");
    if (cores < 1) throw ValidationError("preprocessing cores must be >= 1");
    if (sample_size > engine.query_count())
        throw ValidationError("sample size exceeds query count");

    std::vector<double> durations(sample_size, 0.0);
    double elapsed = 0.0;
    if (engine.is_virtual()) {
        for (std::size_t i = 0; i < sample_size; ++i)
            durations[i] = engine.duration(i);
        elapsed = list_schedule(durations, cores).makespan;
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        if (cores == 1) {
            for (std::size_t i = 0; i < sample_size; ++i)
                durations[i] = engine.execute(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(cores);
            for (std::size_t w = 0; w < cores; ++w)
                pool.emplace_back([&] {
                    for (;;) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= sample_size) return;
                        durations[i] = engine.execute(i);
                    }
                });
            for (auto& t : pool) t.join();
        }
        const auto t1 = std::chrono::steady_clock::now();
        elapsed = std::chrono::duration<double>(t1 - t0).count();
    }
    return TimingStats::from_durations(std::move(durations), cores, elapsed,
                                       t_hat_factor);
}

}  // namespace coreplan
