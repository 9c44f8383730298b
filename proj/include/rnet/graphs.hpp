#pragma once

#include "rnet/random.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rnet {

using NodeId = int;

struct Edge {
    NodeId u = 0;  // u < v
    NodeId v = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class Ensemble { ER, SW, BA, RG };

std::string_view to_string(Ensemble kind);
Ensemble parse_ensemble(std::string_view text);

/// Thrown when a spec cannot produce a connected graph.
class InfeasibleSpec : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// =============================================================================
// NetworkGraph
// =============================================================================

/// Undirected simple graph with a canonically sorted edge list. Edge index k
/// is the position in edges() and is stable for a given (spec, seed).
class NetworkGraph {
public:
    /// Sorts and validates the edges; throws std::invalid_argument on
    /// self-loops, duplicates or out-of-range ids. Connectivity is not
    /// required here (see is_connected()).
    NetworkGraph(int node_count, std::vector<Edge> edges, Ensemble label = Ensemble::ER);

    int node_count() const noexcept { return node_count_; }
    int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    Ensemble label() const noexcept { return label_; }

    /// Neighbour lists, sorted ascending.
    const std::vector<std::vector<NodeId>>& adjacency() const noexcept { return adjacency_; }
    int degree(NodeId n) const { return static_cast<int>(adjacency_.at(n).size()); }

    bool is_connected() const;

    /// Number of disconnected samples discarded by generate_graph.
    int resample_count() const noexcept { return resamples_; }
    void set_resample_count(int n) noexcept { resamples_ = n; }

    static NetworkGraph path(int node_count);
    static NetworkGraph complete(int node_count);

private:
    int node_count_;
    std::vector<Edge> edges_;
    Ensemble label_;
    std::vector<std::vector<NodeId>> adjacency_;
    int resamples_ = 0;
};

// =============================================================================
// Ensembles
// =============================================================================

struct EnsembleSpec {
    Ensemble kind = Ensemble::ER;
    int nodes = 40;
    double er_p = 0.15;
    int sw_k = 6;
    double sw_beta = 0.2;
    int ba_m = 3;
    double rg_r = 0.17;

    /// Throws std::invalid_argument when parameters are invalid for kind.
    void validate() const;

    static EnsembleSpec erdos_renyi(int n, double p);
    static EnsembleSpec watts_strogatz(int n, int k, double beta);
    static EnsembleSpec barabasi_albert(int n, int m);
    static EnsembleSpec random_geometric(int n, double r);
};

inline constexpr int kMaxResamples = 1000;

/// Samples a connected graph. Disconnected samples are redrawn from the next
/// derived seed; after kMaxResamples redraws InfeasibleSpec is thrown.
NetworkGraph generate_graph(const EnsembleSpec& spec, Seed seed);

// =============================================================================
// Terminals
// =============================================================================

struct TerminalAssignment {
    NodeId input_a = 0;
    NodeId input_b = 1;
    NodeId output = 2;

    friend bool operator==(const TerminalAssignment&, const TerminalAssignment&) = default;
};

/// Uniform distinct triple (input_a, input_b, output). Requires N >= 3.
TerminalAssignment select_terminals(const NetworkGraph& graph, Seed seed);

/// Hop distances from source to every node (-1 when unreachable).
std::vector<int> bfs_distances(const NetworkGraph& graph, NodeId source);

/// Uniformly chosen node o with min(d(a,o), d(b,o)) == distance, or nullopt.
std::optional<NodeId> select_output_at_distance(const NetworkGraph& graph, NodeId input_a,
                                                 NodeId input_b, int distance, Seed seed);

// =============================================================================
// Statistics
// =============================================================================

struct GraphStats {
    int edge_count = 0;
    double mean_shortest_path = 0.0;
    double clustering = 0.0;
    double degree_variance = 0.0;
};

/// Throws std::invalid_argument for disconnected graphs.
GraphStats graph_stats(const NetworkGraph& graph);

}  // namespace rnet
