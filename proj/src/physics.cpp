#include "rnet/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rnet {

double softplus(double x) noexcept {
    // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softplus_conductance(std::span<const double> theta, double floor) {
    if (!(floor > 0.0)) throw std::invalid_argument("conductance floor must be positive");
    std::vector<double> w(theta.size());
    std::transform(theta.begin(), theta.end(), w.begin(), [floor](double t) { return softplus(t) + floor; });
    return w;
}

// =============================================================================
// ReducedLaplacian
// =============================================================================

ReducedLaplacian::ReducedLaplacian(const NetworkGraph& graph, std::span<const double> conductances,
                                   std::span<const NodeId> fixed_nodes)
    : fixed_nodes_(fixed_nodes.begin(), fixed_nodes.end()), free_index_(graph.node_count(), 0) {
    const int n = graph.node_count();
    if (static_cast<int>(conductances.size()) != graph.edge_count()) {
        throw std::invalid_argument("conductance vector length " + std::to_string(conductances.size()) +
                                    " != edge count " + std::to_string(graph.edge_count()));
    }
    if (fixed_nodes_.empty()) throw std::invalid_argument("at least one boundary node is required");

    std::vector<int> fixed_slot(n, -1);
    for (std::size_t s = 0; s < fixed_nodes_.size(); ++s) {
        const NodeId b = fixed_nodes_[s];
        if (b < 0 || b >= n) throw std::invalid_argument("boundary node " + std::to_string(b) + " out of range");
        if (fixed_slot[b] >= 0) throw std::invalid_argument("boundary node " + std::to_string(b) + " repeated");
        fixed_slot[b] = static_cast<int>(s);
        free_index_[b] = -1;
    }
    for (NodeId i = 0; i < n; ++i) {
        if (free_index_[i] < 0) continue;
        free_index_[i] = static_cast<int>(free_nodes_.size());
        free_nodes_.push_back(i);
    }

    const int m = free_count();
    block_ = Eigen::MatrixXd::Zero(m, m);
    const auto& edges = graph.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const double w = conductances[k];
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("conductance " + std::to_string(k) + " must be positive and finite");
        }
        const int a = free_index_[edges[k].u];
        const int b = free_index_[edges[k].v];
        if (a >= 0) block_(a, a) += w;
        if (b >= 0) block_(b, b) += w;
        if (a >= 0 && b >= 0) {
            block_(a, b) -= w;
            block_(b, a) -= w;
        } else if (a >= 0) {
            couplings_.push_back({a, fixed_slot[edges[k].v], w});
        } else if (b >= 0) {
            couplings_.push_back({b, fixed_slot[edges[k].u], w});
        }
    }
    if (m == 0) return;

    block_norm_ = block_.cwiseAbs().rowwise().sum().maxCoeff();
    factor_.compute(block_);
    if (factor_.info() != Eigen::Success) {
        const auto diag = block_.diagonal();
        std::ostringstream msg;
        msg << "reduced Laplacian is not positive definite (free nodes " << m << ", diagonal range ["
            << diag.minCoeff() << ", " << diag.maxCoeff() << "]); is every free node connected to the boundary?";
        throw SolverError(msg.str());
    }
}

Eigen::VectorXd ReducedLaplacian::solve_free(const Eigen::VectorXd& rhs, double* relative_residual) const {
    Eigen::VectorXd x = factor_.solve(rhs);
    auto backward_error = [&](const Eigen::VectorXd& sol) {
        const double r = (block_ * sol - rhs).lpNorm<Eigen::Infinity>();
        const double scale = block_norm_ * sol.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return scale > 0.0 ? r / scale : r;
    };
    double err = backward_error(x);
    if (!(err <= kResidualTolerance)) {
        x += factor_.solve(rhs - block_ * x);  // one step of iterative refinement
        err = backward_error(x);
    }
    if (!(err <= kResidualTolerance)) {
        std::ostringstream msg;
        msg << "equilibrium residual " << err << " exceeds tolerance " << kResidualTolerance
            << " (diagonal range [" << block_.diagonal().minCoeff() << ", " << block_.diagonal().maxCoeff() << "])";
        throw SolverError(msg.str());
    }
    if (relative_residual) *relative_residual = err;
    return x;
}

EquilibriumSolution ReducedLaplacian::solve(std::span<const double> fixed_voltages) const {
    if (fixed_voltages.size() != fixed_nodes_.size()) {
        throw std::invalid_argument("boundary voltage count does not match boundary node count");
    }
    EquilibriumSolution sol;
    sol.voltages.assign(free_index_.size(), 0.0);
    for (std::size_t s = 0; s < fixed_nodes_.size(); ++s) sol.voltages[fixed_nodes_[s]] = fixed_voltages[s];
    if (free_nodes_.empty()) return sol;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_count());
    for (const auto& c : couplings_) rhs[c.free_row] += c.conductance * fixed_voltages[c.fixed_slot];
    const Eigen::VectorXd x = solve_free(rhs, &sol.relative_residual);
    for (int i = 0; i < free_count(); ++i) sol.voltages[free_nodes_[i]] = x[i];
    return sol;
}

std::vector<double> ReducedLaplacian::adjoint(NodeId output) const {
    if (output < 0 || output >= node_count()) throw std::invalid_argument("output node out of range");
    if (is_fixed(output)) throw std::invalid_argument("output node " + std::to_string(output) + " is a boundary node");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(free_count());
    e[free_index_[output]] = 1.0;
    const Eigen::VectorXd lambda = solve_free(e, nullptr);
    std::vector<double> full(free_index_.size(), 0.0);
    for (int i = 0; i < free_count(); ++i) full[free_nodes_[i]] = lambda[i];
    return full;
}

// =============================================================================
// Free functions
// =============================================================================

EquilibriumSolution solve_equilibrium(const NetworkGraph& graph, std::span<const double> conductances,
                                      const BoundaryCondition& bc) {
    if (bc.fixed_nodes.size() != bc.fixed_voltages.size()) {
        throw std::invalid_argument("boundary node and voltage counts differ");
    }
    const ReducedLaplacian system(graph, conductances, bc.fixed_nodes);
    return system.solve(bc.fixed_voltages);
}

std::vector<double> edge_currents(const NetworkGraph& graph, std::span<const double> conductances,
                                  std::span<const double> voltages) {
    const auto& edges = graph.edges();
    if (conductances.size() != edges.size() || static_cast<int>(voltages.size()) != graph.node_count()) {
        throw std::invalid_argument("edge_currents: inconsistent vector lengths");
    }
    std::vector<double> current(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        current[k] = conductances[k] * std::abs(voltages[edges[k].u] - voltages[edges[k].v]);
    }
    return current;
}

std::vector<double> output_sensitivity(const NetworkGraph& graph, std::span<const double> voltages,
                                       std::span<const double> adjoint) {
    const auto& edges = graph.edges();
    std::vector<double> dw(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [i, j] = edges[k];
        dw[k] = -(adjoint[i] - adjoint[j]) * (voltages[i] - voltages[j]);
    }
    return dw;
}

OutputGradient output_gradient(const NetworkGraph& graph, const ConductanceState& state,
                               const BoundaryCondition& bc, NodeId output) {
    if (static_cast<int>(state.theta.size()) != graph.edge_count()) {
        throw std::invalid_argument("theta length does not match edge count");
    }
    const auto w = state.conductances();
    const ReducedLaplacian system(graph, w, bc.fixed_nodes);
    const auto lambda = system.adjoint(output);
    const auto sol = system.solve(bc.fixed_voltages);

    OutputGradient out;
    out.output_value = sol.voltages[output];
    out.grad_theta = output_sensitivity(graph, sol.voltages, lambda);
    for (std::size_t k = 0; k < out.grad_theta.size(); ++k) out.grad_theta[k] *= sigmoid(state.theta[k]);
    return out;
}

}  // namespace rnet
