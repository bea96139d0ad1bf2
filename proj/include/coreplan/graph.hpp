#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coreplan/errors.hpp"

namespace coreplan {

using VertexId = std::uint32_t;

// Immutable CSR adjacency. Vertex ids are dense 0-based; n = max id + 1 even
// when lower ids never appear in the input. Parallel edges and self-loops are
// kept; per-vertex neighbor order follows file order. Safe to share read-only
// across threads.
class Graph {
public:
    // edges in input order; for undirected graphs each {u,v} is stored both
    // ways and m counts each direction.
    static Graph from_edges(const std::vector<std::pair<VertexId, VertexId>>& edges,
                            bool directed) {
        if (edges.empty()) throw ValidationError("graph has no edges");
        VertexId max_id = 0;
        for (auto [u, v] : edges) max_id = std::max({max_id, u, v});
        const std::size_t n = static_cast<std::size_t>(max_id) + 1;

        std::vector<std::uint64_t> degree(n, 0);
        for (auto [u, v] : edges) {
            ++degree[u];
            if (!directed) ++degree[v];
        }
        Graph g;
        g.directed_ = directed;
        g.offsets_.assign(n + 1, 0);
        for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
        g.targets_.resize(g.offsets_[n]);

        std::vector<std::uint64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
        for (auto [u, v] : edges) {
            g.targets_[cursor[u]++] = v;
            if (!directed) g.targets_[cursor[v]++] = u;
        }
        return g;
    }

    // SNAP edge-list text: optional '#' comment lines, then "u<ws>v" per line.
    // LF or CRLF. Malformed lines raise ParseError naming the line number.
    static Graph load_edge_list(std::istream& in, bool directed) {
        std::vector<std::pair<VertexId, VertexId>> edges;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            long long u = -1, v = -1;
            std::string extra;
            if (!(ls >> u >> v) || u < 0 || v < 0 || (ls >> extra)) {
                throw ParseError("edge list line " + std::to_string(lineno) +
                                 ": expected two non-negative vertex ids, got \"" + line + "\"");
            }
            edges.emplace_back(static_cast<VertexId>(u), static_cast<VertexId>(v));
        }
        if (edges.empty()) throw ParseError("edge list is empty");
        return from_edges(edges, directed);
    }

    // Writer counterpart: LF line endings, no comments. For undirected graphs
    // every stored arc is written, so a reload with directed=true would double;
    // reload with the original directedness is not identity for undirected
    // inputs, hence the writer emits arcs and the reader of a round-trip must
    // use directed=true. Round-trip identity is guaranteed for directed graphs.
    void write_edge_list(std::ostream& out) const {
        for (std::size_t v = 0; v + 1 < offsets_.size(); ++v)
            for (std::uint64_t i = offsets_[v]; i < offsets_[v + 1]; ++i)
                out << v << ' ' << targets_[i] << '\n';
    }

    std::size_t order() const { return offsets_.size() - 1; }   // n
    std::size_t size() const { return targets_.size(); }        // m
    bool directed() const { return directed_; }

    std::size_t out_degree(VertexId v) const {
        check(v);
        return offsets_[v + 1] - offsets_[v];
    }

    std::span<const VertexId> out_neighbors(VertexId v) const {
        check(v);
        return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
    }

    const std::vector<std::uint64_t>& offsets() const { return offsets_; }
    const std::vector<VertexId>& targets() const { return targets_; }

    bool operator==(const Graph& other) const {
        return directed_ == other.directed_ && offsets_ == other.offsets_ &&
               targets_ == other.targets_;
    }

private:
    void check(VertexId v) const {
        if (static_cast<std::size_t>(v) >= order())
            throw ValidationError("vertex id " + std::to_string(v) + " out of range [0, " +
                                  std::to_string(order()) + ")");
    }

    std::vector<std::uint64_t> offsets_;
    std::vector<VertexId> targets_;
    bool directed_ = true;
};

}  // namespace coreplan
