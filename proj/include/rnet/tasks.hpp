#pragma once

#include "rnet/random.hpp"

#include <array>
#include <optional>

namespace rnet {

/// Boundary voltages applied to (input_a, input_b).
using InputPattern = std::array<double, 2>;

/// The two canonical input patterns, in fixed order.
inline constexpr std::array<InputPattern, 2> kInputPatterns{{{1.0, 0.0}, {0.0, 1.0}}};

/// Two-example task: kInputPatterns[m] -> targets[m].
struct Task {
    std::array<double, 2> targets{};
    std::optional<double> alpha;  // set for members of the B_alpha family

    static constexpr std::size_t size() noexcept { return kInputPatterns.size(); }
    const InputPattern& input(std::size_t m) const { return kInputPatterns.at(m); }
    double y1() const noexcept { return targets[0]; }
    double y2() const noexcept { return targets[1]; }
};

/// (1,0) -> 1, (0,1) -> 0.
Task task_A();

/// (1,0) -> alpha, (0,1) -> 1 - alpha. alpha = 0 is the reversed task.
/// Throws std::invalid_argument outside [0, 1].
Task make_task_alpha(double alpha);

/// Targets drawn i.i.d. uniform on [0, 1].
Task sample_random_task(Seed seed);

/// c = y1 - y2.
double target_contrast(const Task& task) noexcept;

/// Mean squared difference of targets over the two examples.
double target_mse(const Task& a, const Task& b) noexcept;

}  // namespace rnet
