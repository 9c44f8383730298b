#pragma once

#include "rnet/graphs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnet {

/// Conductance floor added to every softplus conductance.
inline constexpr double kConductanceFloor = 1e-4;

/// Relative residual bound on the reduced Kirchhoff system.
inline constexpr double kResidualTolerance = 1e-10;

/// Raised when the reduced Laplacian cannot be factorised or the solve
/// residual exceeds kResidualTolerance.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

/// w_k = log(1 + exp(theta_k)) + floor, overflow-safe.
std::vector<double> softplus_conductance(std::span<const double> theta, double floor = kConductanceFloor);

struct ConductanceState {
    std::vector<double> theta;
    double floor = kConductanceFloor;

    std::vector<double> conductances() const { return softplus_conductance(theta, floor); }
};

struct BoundaryCondition {
    std::vector<NodeId> fixed_nodes;
    std::vector<double> fixed_voltages;
};

struct EquilibriumSolution {
    std::vector<double> voltages;  // length N, boundary entries exact
    double relative_residual = 0.0;

    double at(NodeId node) const { return voltages.at(node); }
};

// =============================================================================
// ReducedLaplacian
// =============================================================================

/// Cholesky factorisation of the free-node block L_II(w) for a fixed set of
/// boundary nodes. Immutable after construction; one factorisation serves
/// every boundary-voltage pattern and every adjoint solve on the same state.
class ReducedLaplacian {
public:
    ReducedLaplacian(const NetworkGraph& graph, std::span<const double> conductances,
                     std::span<const NodeId> fixed_nodes);

    int node_count() const noexcept { return static_cast<int>(free_index_.size()); }
    int free_count() const noexcept { return static_cast<int>(free_nodes_.size()); }
    bool is_fixed(NodeId n) const { return free_index_.at(n) < 0; }
    const std::vector<NodeId>& fixed_nodes() const noexcept { return fixed_nodes_; }

    /// Forward solve of L_II v_I = -L_IB v_B; voltages ordered as fixed_nodes().
    /// The reported residual is normwise: |r| / (|L_II| |v_I| + |rhs|) in the
    /// infinity norm.
    EquilibriumSolution solve(std::span<const double> fixed_voltages) const;

    /// Adjoint field: L_II lambda_I = e_output, lambda zero on boundary nodes.
    std::vector<double> adjoint(NodeId output) const;

private:
    struct Coupling {
        int free_row;
        int fixed_slot;
        double conductance;
    };

    Eigen::VectorXd solve_free(const Eigen::VectorXd& rhs, double* relative_residual) const;

    std::vector<NodeId> fixed_nodes_;
    std::vector<NodeId> free_nodes_;
    std::vector<int> free_index_;  // -1 for fixed nodes
    std::vector<Coupling> couplings_;  // free-fixed edges (the L_IB entries)
    Eigen::MatrixXd block_;            // L_II
    double block_norm_ = 0.0;          // infinity norm of L_II
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Solves the Dirichlet equilibrium problem for the given conductances.
EquilibriumSolution solve_equilibrium(const NetworkGraph& graph, std::span<const double> conductances,
                                      const BoundaryCondition& bc);

/// I_k = w_k |v_i - v_j| for edge k = (i, j).
std::vector<double> edge_currents(const NetworkGraph& graph, std::span<const double> conductances,
                                  std::span<const double> voltages);

/// dv_out/dw_k = -(lambda_i - lambda_j)(v_i - v_j).
std::vector<double> output_sensitivity(const NetworkGraph& graph, std::span<const double> voltages,
                                       std::span<const double> adjoint);

struct OutputGradient {
    double output_value = 0.0;
    std::vector<double> grad_theta;
};

/// Output voltage and its exact gradient with respect to theta (adjoint
/// method chained through dw/dtheta = sigmoid(theta)). Output must be free.
OutputGradient output_gradient(const NetworkGraph& graph, const ConductanceState& state,
                               const BoundaryCondition& bc, NodeId output);

}  // namespace rnet
