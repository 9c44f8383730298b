#include "rnet/tasks.hpp"

#include <stdexcept>
#include <string>

namespace rnet {

Task task_A() { return Task{{1.0, 0.0}, std::nullopt}; }

Task make_task_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0,1], got " + std::to_string(alpha));
    }
    return Task{{alpha, 1.0 - alpha}, alpha};
}

Task sample_random_task(Seed seed) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double y1 = u(rng);
    const double y2 = u(rng);
    return Task{{y1, y2}, std::nullopt};
}

double target_contrast(const Task& task) noexcept { return task.targets[0] - task.targets[1]; }

double target_mse(const Task& a, const Task& b) noexcept {
    double sum = 0.0;
    for (std::size_t m = 0; m < Task::size(); ++m) {
        const double d = a.targets[m] - b.targets[m];
        sum += d * d;
    }
    return sum / static_cast<double>(Task::size());
}

}  // namespace rnet
