#include "rnet/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace rnet {

std::string_view to_string(Ensemble kind) {
    switch (kind) {
        case Ensemble::ER: return "ER";
        case Ensemble::SW: return "SW";
        case Ensemble::BA: return "BA";
        case Ensemble::RG: return "RG";
    }
    return "?";
}

Ensemble parse_ensemble(std::string_view text) {
    if (text == "ER") return Ensemble::ER;
    if (text == "SW") return Ensemble::SW;
    if (text == "BA") return Ensemble::BA;
    if (text == "RG") return Ensemble::RG;
    throw std::invalid_argument("unknown ensemble '" + std::string(text) + "'");
}

// =============================================================================
// NetworkGraph
// =============================================================================

NetworkGraph::NetworkGraph(int node_count, std::vector<Edge> edges, Ensemble label)
    : node_count_(node_count), edges_(std::move(edges)), label_(label) {
    if (node_count_ <= 0) {
        throw std::invalid_argument("node count must be positive");
    }
    for (auto& e : edges_) {
        if (e.u > e.v) std::swap(e.u, e.v);
        if (e.u == e.v) throw std::invalid_argument("self-loop on node " + std::to_string(e.u));
        if (e.u < 0 || e.v >= node_count_) {
            throw std::invalid_argument("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                        ") out of range");
        }
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
        throw std::invalid_argument("duplicate edge");
    }
    adjacency_.assign(node_count_, {});
    for (const auto& e : edges_) {
        adjacency_[e.u].push_back(e.v);
        adjacency_[e.v].push_back(e.u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

namespace {

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[a] = b;
        return true;
    }

private:
    std::vector<int> parent_;
};

}  // namespace

bool NetworkGraph::is_connected() const {
    UnionFind uf(node_count_);
    int components = node_count_;
    for (const auto& e : edges_) {
        if (uf.unite(e.u, e.v)) --components;
    }
    return components == 1;
}

NetworkGraph NetworkGraph::path(int node_count) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < node_count; ++i) edges.push_back({i, i + 1});
    return NetworkGraph(node_count, std::move(edges));
}

NetworkGraph NetworkGraph::complete(int node_count) {
    std::vector<Edge> edges;
    for (int i = 0; i < node_count; ++i)
        for (int j = i + 1; j < node_count; ++j) edges.push_back({i, j});
    return NetworkGraph(node_count, std::move(edges));
}

// =============================================================================
// Ensembles
// =============================================================================

void EnsembleSpec::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (nodes < 1) fail("node count must be positive");
    switch (kind) {
        case Ensemble::ER:
            if (!(er_p > 0.0 && er_p <= 1.0)) fail("ER edge probability must be in (0,1]");
            break;
        case Ensemble::SW:
            if (sw_k < 2 || sw_k % 2 != 0) fail("SW ring degree k must be even and >= 2");
            if (sw_k >= nodes) fail("SW ring degree k must be < N");
            if (!(sw_beta >= 0.0 && sw_beta <= 1.0)) fail("SW rewiring probability must be in [0,1]");
            break;
        case Ensemble::BA:
            if (ba_m < 1 || ba_m >= nodes) fail("BA attachment count m must satisfy 1 <= m < N");
            break;
        case Ensemble::RG:
            if (!(rg_r > 0.0 && rg_r <= std::sqrt(2.0))) fail("RG radius must be in (0, sqrt 2]");
            break;
    }
}

EnsembleSpec EnsembleSpec::erdos_renyi(int n, double p) {
    EnsembleSpec s;
    s.kind = Ensemble::ER;
    s.nodes = n;
    s.er_p = p;
    return s;
}

EnsembleSpec EnsembleSpec::watts_strogatz(int n, int k, double beta) {
    EnsembleSpec s;
    s.kind = Ensemble::SW;
    s.nodes = n;
    s.sw_k = k;
    s.sw_beta = beta;
    return s;
}

EnsembleSpec EnsembleSpec::barabasi_albert(int n, int m) {
    EnsembleSpec s;
    s.kind = Ensemble::BA;
    s.nodes = n;
    s.ba_m = m;
    return s;
}

EnsembleSpec EnsembleSpec::random_geometric(int n, double r) {
    EnsembleSpec s;
    s.kind = Ensemble::RG;
    s.nodes = n;
    s.rg_r = r;
    return s;
}

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

int uniform_index(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

std::vector<Edge> sample_er(const EnsembleSpec& s, Rng& rng) {
    std::vector<Edge> edges;
    for (int i = 0; i < s.nodes; ++i)
        for (int j = i + 1; j < s.nodes; ++j)
            if (uniform01(rng) < s.er_p) edges.push_back({i, j});
    return edges;
}

// Ring lattice with k/2 neighbours per side; each lattice edge (u, u+j) is
// rewired to (u, w) with probability beta, w uniform among non-neighbours.
std::vector<Edge> sample_sw(const EnsembleSpec& s, Rng& rng) {
    const int n = s.nodes;
    std::vector<std::set<int>> adj(n);
    auto link = [&](int a, int b) {
        adj[a].insert(b);
        adj[b].insert(a);
    };
    for (int j = 1; j <= s.sw_k / 2; ++j)
        for (int u = 0; u < n; ++u) link(u, (u + j) % n);

    for (int j = 1; j <= s.sw_k / 2; ++j) {
        for (int u = 0; u < n; ++u) {
            const int v = (u + j) % n;
            if (uniform01(rng) >= s.sw_beta) continue;
            if (static_cast<int>(adj[u].size()) >= n - 1) continue;
            if (!adj[u].contains(v)) continue;  // already rewired away
            int w = uniform_index(rng, n);
            while (w == u || adj[u].contains(w)) w = uniform_index(rng, n);
            adj[u].erase(v);
            adj[v].erase(u);
            link(u, w);
        }
    }
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u)
        for (int w : adj[u])
            if (u < w) edges.push_back({u, w});
    return edges;
}

// Star seed on nodes 0..m, then every new node attaches to m distinct
// targets drawn proportionally to degree. E = m (N - m) for every seed.
std::vector<Edge> sample_ba(const EnsembleSpec& s, Rng& rng) {
    const int m = s.ba_m;
    std::vector<Edge> edges;
    std::vector<int> repeated;  // node id repeated once per incident edge end
    for (int leaf = 1; leaf <= m; ++leaf) {
        edges.push_back({0, leaf});
        repeated.push_back(0);
        repeated.push_back(leaf);
    }
    for (int source = m + 1; source < s.nodes; ++source) {
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < m) {
            targets.insert(repeated[uniform_index(rng, static_cast<int>(repeated.size()))]);
        }
        for (int t : targets) {
            edges.push_back({t, source});
            repeated.push_back(t);
            repeated.push_back(source);
        }
    }
    return edges;
}

std::vector<Edge> sample_rg(const EnsembleSpec& s, Rng& rng) {
    std::vector<double> x(s.nodes), y(s.nodes);
    for (int i = 0; i < s.nodes; ++i) {
        x[i] = uniform01(rng);
        y[i] = uniform01(rng);
    }
    const double r2 = s.rg_r * s.rg_r;
    std::vector<Edge> edges;
    for (int i = 0; i < s.nodes; ++i) {
        for (int j = i + 1; j < s.nodes; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx * dx + dy * dy <= r2) edges.push_back({i, j});
        }
    }
    return edges;
}

}  // namespace

NetworkGraph generate_graph(const EnsembleSpec& spec, Seed seed) {
    spec.validate();
    for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
        Rng rng = make_rng(seed + static_cast<Seed>(attempt));
        std::vector<Edge> edges;
        switch (spec.kind) {
            case Ensemble::ER: edges = sample_er(spec, rng); break;
            case Ensemble::SW: edges = sample_sw(spec, rng); break;
            case Ensemble::BA: edges = sample_ba(spec, rng); break;
            case Ensemble::RG: edges = sample_rg(spec, rng); break;
        }
        NetworkGraph graph(spec.nodes, std::move(edges), spec.kind);
        if (graph.is_connected()) {
            graph.set_resample_count(attempt);
            return graph;
        }
    }
    throw InfeasibleSpec("no connected " + std::string(to_string(spec.kind)) + " graph with N=" +
                         std::to_string(spec.nodes) + " after " + std::to_string(kMaxResamples) +
                         " resamples");
}

// =============================================================================
// Terminals
// =============================================================================

TerminalAssignment select_terminals(const NetworkGraph& graph, Seed seed) {
    const int n = graph.node_count();
    if (n < 3) throw std::invalid_argument("terminal selection needs at least 3 nodes");
    Rng rng = make_rng(seed);
    // Partial Fisher-Yates over node ids; roles follow draw order.
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < 3; ++i) {
        const int j = std::uniform_int_distribution<int>(i, n - 1)(rng);
        std::swap(ids[i], ids[j]);
    }
    return {ids[0], ids[1], ids[2]};
}

std::vector<int> bfs_distances(const NetworkGraph& graph, NodeId source) {
    std::vector<int> dist(graph.node_count(), -1);
    std::queue<NodeId> frontier;
    dist.at(source) = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop();
        for (NodeId w : graph.adjacency()[u]) {
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                frontier.push(w);
            }
        }
    }
    return dist;
}

std::optional<NodeId> select_output_at_distance(const NetworkGraph& graph, NodeId input_a,
                                                 NodeId input_b, int distance, Seed seed) {
    if (distance < 1) throw std::invalid_argument("output distance must be >= 1");
    const auto da = bfs_distances(graph, input_a);
    const auto db = bfs_distances(graph, input_b);
    std::vector<NodeId> candidates;
    for (NodeId o = 0; o < graph.node_count(); ++o) {
        int d = -1;
        if (da[o] >= 0 && db[o] >= 0) d = std::min(da[o], db[o]);
        else d = std::max(da[o], db[o]);
        if (d == distance) candidates.push_back(o);
    }
    if (candidates.empty()) return std::nullopt;
    Rng rng = make_rng(seed);
    return candidates[uniform_index(rng, static_cast<int>(candidates.size()))];
}

// =============================================================================
// Statistics
// =============================================================================

GraphStats graph_stats(const NetworkGraph& graph) {
    if (!graph.is_connected()) throw std::invalid_argument("graph_stats requires a connected graph");
    const int n = graph.node_count();
    GraphStats stats;
    stats.edge_count = graph.edge_count();

    if (n > 1) {
        double total = 0.0;
        for (NodeId s = 0; s < n; ++s) {
            const auto dist = bfs_distances(graph, s);
            for (NodeId t = s + 1; t < n; ++t) total += dist[t];
        }
        stats.mean_shortest_path = total / (0.5 * n * (n - 1));
    }

    const auto& adj = graph.adjacency();
    double clustering = 0.0;
    for (NodeId u = 0; u < n; ++u) {
        const auto& nbrs = adj[u];
        const auto k = static_cast<double>(nbrs.size());
        if (nbrs.size() < 2) continue;
        int links = 0;
        for (std::size_t a = 0; a < nbrs.size(); ++a)
            for (std::size_t b = a + 1; b < nbrs.size(); ++b)
                if (std::binary_search(adj[nbrs[a]].begin(), adj[nbrs[a]].end(), nbrs[b])) ++links;
        clustering += 2.0 * links / (k * (k - 1.0));
    }
    stats.clustering = clustering / n;

    double mean_deg = 2.0 * stats.edge_count / n;
    double var = 0.0;
    for (NodeId u = 0; u < n; ++u) {
        const double d = static_cast<double>(adj[u].size()) - mean_deg;
        var += d * d;
    }
    stats.degree_variance = var / n;
    return stats;
}

}  // namespace rnet
