#include "rnet/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rnet {

std::vector<double> initial_theta(int edge_count, Seed seed, double std_dev) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, std_dev);
    std::vector<double> theta(edge_count);
    for (auto& t : theta) t = normal(rng);
    return theta;
}

// =============================================================================
// Network response
// =============================================================================

double NetworkResponse::example_loss(const Task& task, std::size_t m) const {
    const double r = outputs[m] - task.targets[m];
    return r * r;
}

double NetworkResponse::loss(const Task& task) const {
    double sum = 0.0;
    for (std::size_t m = 0; m < Task::size(); ++m) sum += example_loss(task, m);
    return sum / static_cast<double>(Task::size());
}

std::vector<double> NetworkResponse::example_loss_gradient(const Task& task, std::size_t m) const {
    const auto& dv = output_gradients.at(m);
    const double scale = 2.0 * (outputs[m] - task.targets[m]);
    std::vector<double> g(dv.size());
    for (std::size_t k = 0; k < dv.size(); ++k) g[k] = scale * dv[k];
    return g;
}

std::vector<double> NetworkResponse::loss_gradient(const Task& task) const {
    const std::size_t e = output_gradients[0].size();
    std::vector<double> g(e, 0.0);
    const double inv_m = 1.0 / static_cast<double>(Task::size());
    for (std::size_t m = 0; m < Task::size(); ++m) {
        const double scale = 2.0 * (outputs[m] - task.targets[m]) * inv_m;
        const auto& dv = output_gradients[m];
        for (std::size_t k = 0; k < e; ++k) g[k] += scale * dv[k];
    }
    return g;
}

NetworkResponse network_response(const NetworkGraph& graph, const ConductanceState& state,
                                 const TerminalAssignment& terminals, bool with_gradient) {
    if (static_cast<int>(state.theta.size()) != graph.edge_count()) {
        throw std::invalid_argument("theta length does not match edge count");
    }
    const auto w = state.conductances();
    const std::array<NodeId, 2> inputs{terminals.input_a, terminals.input_b};
    const ReducedLaplacian system(graph, w, inputs);

    NetworkResponse response;
    std::array<std::vector<double>, 2> voltages;
    for (std::size_t m = 0; m < Task::size(); ++m) {
        voltages[m] = system.solve(kInputPatterns[m]).voltages;
        response.outputs[m] = voltages[m][terminals.output];
    }
    if (!with_gradient) return response;

    const auto lambda = system.adjoint(terminals.output);
    std::vector<double> dw_dtheta(state.theta.size());
    std::transform(state.theta.begin(), state.theta.end(), dw_dtheta.begin(), sigmoid);
    for (std::size_t m = 0; m < Task::size(); ++m) {
        auto g = output_sensitivity(graph, voltages[m], lambda);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] *= dw_dtheta[k];
        response.output_gradients[m] = std::move(g);
    }
    return response;
}

double task_loss(const NetworkGraph& graph, const ConductanceState& state, const TerminalAssignment& terminals,
                 const Task& task) {
    return network_response(graph, state, terminals, false).loss(task);
}

std::vector<double> task_loss_gradient(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals, const Task& task) {
    return network_response(graph, state, terminals, true).loss_gradient(task);
}

// =============================================================================
// Anchoring
// =============================================================================

std::string_view to_string(AnchorMode mode) {
    switch (mode) {
        case AnchorMode::None: return "none";
        case AnchorMode::Uniform: return "uniform";
        case AnchorMode::GradientWeighted: return "gw";
    }
    return "?";
}

AnchorMode parse_anchor_mode(std::string_view text) {
    if (text == "none") return AnchorMode::None;
    if (text == "uniform") return AnchorMode::Uniform;
    if (text == "gw" || text == "gradient_weighted") return AnchorMode::GradientWeighted;
    throw std::invalid_argument("unknown anchor mode '" + std::string(text) + "'");
}

AnchorSpec AnchorSpec::none() { return AnchorSpec{}; }

AnchorSpec AnchorSpec::uniform(double lambda, std::vector<double> theta_ref) {
    AnchorSpec a;
    a.mode = AnchorMode::Uniform;
    a.lambda = lambda;
    a.weights.assign(theta_ref.size(), 1.0);
    a.theta_ref = std::move(theta_ref);
    return a;
}

AnchorSpec AnchorSpec::gradient_weighted(double lambda, std::vector<double> theta_ref, std::vector<double> weights) {
    AnchorSpec a;
    a.mode = AnchorMode::GradientWeighted;
    a.lambda = lambda;
    a.theta_ref = std::move(theta_ref);
    a.weights = std::move(weights);
    return a;
}

void AnchorSpec::validate(std::size_t edge_count) const {
    if (mode == AnchorMode::None) return;
    if (!(lambda >= 0.0)) throw std::invalid_argument("anchor lambda must be >= 0");
    if (theta_ref.size() != edge_count) throw std::invalid_argument("anchor reference length != edge count");
    if (mode == AnchorMode::GradientWeighted) {
        if (weights.size() != edge_count) throw std::invalid_argument("anchor weight length != edge count");
        if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0); })) {
            throw std::invalid_argument("anchor weights must be nonnegative");
        }
    }
}

double AnchorSpec::penalty(std::span<const double> theta) const {
    if (!active()) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double d = theta[k] - theta_ref[k];
        sum += weight(k) * d * d;
    }
    return lambda * sum / static_cast<double>(theta.size());
}

std::vector<double> AnchorSpec::penalty_gradient(std::span<const double> theta) const {
    std::vector<double> g(theta.size(), 0.0);
    if (!active()) return g;
    const double scale = 2.0 * lambda / static_cast<double>(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) g[k] = scale * weight(k) * (theta[k] - theta_ref[k]);
    return g;
}

std::vector<double> importance_weights(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals, const Task& task, double eps_f) {
    const auto response = network_response(graph, state, terminals, true);
    std::vector<double> f(state.theta.size(), 0.0);
    for (std::size_t m = 0; m < Task::size(); ++m) {
        const auto g = response.example_loss_gradient(task, m);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += g[k] * g[k];
    }
    for (auto& v : f) v /= static_cast<double>(Task::size());
    if (f.empty()) return f;
    const double mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    for (auto& v : f) v /= mean + eps_f;
    return f;
}

double anchored_loss(const NetworkGraph& graph, const ConductanceState& state, const TerminalAssignment& terminals,
                     const Task& task, const AnchorSpec& anchor) {
    anchor.validate(state.theta.size());
    return task_loss(graph, state, terminals, task) + anchor.penalty(state.theta);
}

std::vector<double> anchored_loss_gradient(const NetworkGraph& graph, const ConductanceState& state,
                                           const TerminalAssignment& terminals, const Task& task,
                                           const AnchorSpec& anchor) {
    anchor.validate(state.theta.size());
    auto g = task_loss_gradient(graph, state, terminals, task);
    const auto p = anchor.penalty_gradient(state.theta);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += p[k];
    return g;
}

// =============================================================================
// Training
// =============================================================================

int TrainConfig::stride() const noexcept {
    if (checkpoint_stride > 0) return checkpoint_stride;
    return std::max(1, steps / 10);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning rate must be positive and finite");
    }
    if (steps < 0) throw std::invalid_argument("step count must be >= 0");
    if (checkpoint_stride < 0) throw std::invalid_argument("checkpoint stride must be >= 0");
}

void descent_step(std::span<double> theta, std::span<const double> task_gradient, double learning_rate,
                  const AnchorSpec& anchor) {
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= learning_rate * task_gradient[k];
    if (!anchor.active()) return;
    const double base = 2.0 * learning_rate * anchor.lambda / static_cast<double>(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double c = base * anchor.weight(k);
        theta[k] = (theta[k] + c * anchor.theta_ref[k]) / (1.0 + c);
    }
}

TrainRecord train(const NetworkGraph& graph, const ConductanceState& initial, const TerminalAssignment& terminals,
                  const Task& task, const TrainConfig& config, const AnchorSpec& anchor) {
    config.validate();
    if (static_cast<int>(initial.theta.size()) != graph.edge_count()) {
        throw std::invalid_argument("theta0 length does not match edge count");
    }
    anchor.validate(initial.theta.size());

    TrainRecord record;
    record.loss_history.reserve(config.steps);
    record.output_history.reserve(config.steps);
    ConductanceState state = initial;
    const int stride = config.stride();

    for (int step = 0; step < config.steps; ++step) {
        if (!std::all_of(state.theta.begin(), state.theta.end(), [](double x) { return std::isfinite(x); })) {
            throw TrainingDiverged("non-finite parameters at step " + std::to_string(step));
        }
        if (step % stride == 0) record.checkpoints.push_back({step, state.theta});
        const auto response = network_response(graph, state, terminals, true);
        const double loss = response.loss(task);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged("non-finite loss at step " + std::to_string(step));
        }
        const auto g = response.loss_gradient(task);
        if (!std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); })) {
            throw TrainingDiverged("non-finite gradient at step " + std::to_string(step));
        }
        record.loss_history.push_back(loss);
        record.output_history.push_back(response.outputs);
        descent_step(state.theta, g, config.learning_rate, anchor);
    }
    record.checkpoints.push_back({config.steps, state.theta});
    record.final_theta = std::move(state.theta);
    return record;
}

}  // namespace rnet
