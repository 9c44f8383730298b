#pragma once

#include "rnet/graphs.hpp"
#include "rnet/physics.hpp"
#include "rnet/tasks.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rnet {

/// Guard added to the mean importance before normalising.
inline constexpr double kImportanceEpsilon = 1e-12;

/// Standard deviation of the i.i.d. normal theta0 draw.
inline constexpr double kThetaInitStd = 0.5;

/// Raised when a loss or gradient becomes non-finite during training.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// theta0 ~ N(0, std^2) per edge.
std::vector<double> initial_theta(int edge_count, Seed seed, double std_dev = kThetaInitStd);

// =============================================================================
// Network response
// =============================================================================

/// Output voltage under each canonical input pattern, plus d v_out / d theta.
/// Both patterns share the boundary set, so one factorisation and one adjoint
/// solve serve both examples.
struct NetworkResponse {
    std::array<double, 2> outputs{};
    std::array<std::vector<double>, 2> output_gradients;  // empty unless requested

    double loss(const Task& task) const;
    double example_loss(const Task& task, std::size_t m) const;
    std::vector<double> loss_gradient(const Task& task) const;
    std::vector<double> example_loss_gradient(const Task& task, std::size_t m) const;
};

NetworkResponse network_response(const NetworkGraph& graph, const ConductanceState& state,
                                 const TerminalAssignment& terminals, bool with_gradient = true);

/// Mean over the task's examples of (v_out - target)^2.
double task_loss(const NetworkGraph& graph, const ConductanceState& state, const TerminalAssignment& terminals,
                 const Task& task);

std::vector<double> task_loss_gradient(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals, const Task& task);

// =============================================================================
// Anchoring
// =============================================================================

enum class AnchorMode { None, Uniform, GradientWeighted };

std::string_view to_string(AnchorMode mode);
/// Accepts none | uniform | gw | gradient_weighted.
AnchorMode parse_anchor_mode(std::string_view text);

struct AnchorSpec {
    AnchorMode mode = AnchorMode::None;
    double lambda = 0.0;
    std::vector<double> theta_ref;
    std::vector<double> weights;  // unit mean; ignored in uniform mode
    double eps_f = kImportanceEpsilon;

    static AnchorSpec none();
    static AnchorSpec uniform(double lambda, std::vector<double> theta_ref);
    static AnchorSpec gradient_weighted(double lambda, std::vector<double> theta_ref, std::vector<double> weights);

    bool active() const noexcept { return mode != AnchorMode::None && lambda > 0.0; }
    double weight(std::size_t k) const { return mode == AnchorMode::GradientWeighted ? weights[k] : 1.0; }

    /// Throws std::invalid_argument on length mismatch, negative lambda or
    /// negative weights.
    void validate(std::size_t edge_count) const;

    /// (lambda / E) sum_k w_k (theta_k - ref_k)^2; zero when inactive.
    double penalty(std::span<const double> theta) const;
    std::vector<double> penalty_gradient(std::span<const double> theta) const;
};

/// F_k = mean_m (d l_m / d theta_k)^2 at the given state, normalised by the
/// mean importance plus eps_f.
std::vector<double> importance_weights(const NetworkGraph& graph, const ConductanceState& state,
                                       const TerminalAssignment& terminals, const Task& task,
                                       double eps_f = kImportanceEpsilon);

double anchored_loss(const NetworkGraph& graph, const ConductanceState& state, const TerminalAssignment& terminals,
                     const Task& task, const AnchorSpec& anchor);

std::vector<double> anchored_loss_gradient(const NetworkGraph& graph, const ConductanceState& state,
                                           const TerminalAssignment& terminals, const Task& task,
                                           const AnchorSpec& anchor);

// =============================================================================
// Training
// =============================================================================

struct TrainConfig {
    double learning_rate = 0.1;
    int steps = 300;
    int checkpoint_stride = 0;  // 0 selects max(1, steps / 10)

    int stride() const noexcept;
    void validate() const;
};

struct Checkpoint {
    int step = 0;
    std::vector<double> theta;
};

struct TrainRecord {
    std::vector<double> final_theta;
    std::vector<double> loss_history;                  // task loss before each update
    std::vector<std::array<double, 2>> output_history;  // outputs before each update
    std::vector<Checkpoint> checkpoints;               // 0, stride multiples, and steps
};

/// One parameter update. The task-loss gradient takes an explicit step; the
/// quadratic anchor is then applied exactly:
///   theta_k <- (theta_k - lr g_k + c_k ref_k) / (1 + c_k),  c_k = 2 lr lambda w_k / E.
/// Fixed points coincide with those of gradient descent on the anchored loss.
void descent_step(std::span<double> theta, std::span<const double> task_gradient, double learning_rate,
                  const AnchorSpec& anchor);

/// Full-batch gradient descent on the anchored loss for config.steps steps.
TrainRecord train(const NetworkGraph& graph, const ConductanceState& initial, const TerminalAssignment& terminals,
                  const Task& task, const TrainConfig& config, const AnchorSpec& anchor = AnchorSpec::none());

}  // namespace rnet
