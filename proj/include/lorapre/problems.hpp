#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lorapre/optimizers.hpp"

namespace lorapre {

// A deterministic differentiable objective with closed-form gradients.
// grads() takes the step index so opt-in gradient noise stays reproducible.
class Problem {
public:
    virtual ~Problem() = default;
    virtual const std::vector<ParamSpec>& param_specs() const = 0;
    virtual std::vector<Matrix> initial_params() const = 0;
    virtual double loss(const std::vector<Matrix>& params) const = 0;
    virtual std::vector<Matrix> grads(const std::vector<Matrix>& params,
                                      long step) const = 0;
};

// f(theta) = 1/2 <theta, H o theta> with entry-wise curvature H log-spaced
// in [1, condition]; gradient H o theta. Seeded random starting point.
std::unique_ptr<Problem> quadratic_problem(int p, int q, double condition,
                                           std::uint64_t seed);

// f(theta) = 1/2 |theta - M*|_F^2 with hidden M* of the given rank; gradient
// theta - M* plus optional seeded Gaussian noise. Starts from theta = 0, so
// the first gradient is exactly -M* (rank true_rank).
std::unique_ptr<Problem> low_rank_sensing_problem(int p, int q, int true_rank,
                                                  double noise_std, std::uint64_t seed);

// Two-layer network tanh(x W1) W2 with softmax cross-entropy on a seeded
// Gaussian-blob classification set; full-batch closed-form gradients.
std::unique_ptr<Problem> tiny_mlp_problem(int input_dim, int hidden_dim, int classes,
                                          int n_samples, std::uint64_t seed);

// The synthetic classification set behind tiny_mlp_problem (same seed gives
// the identical data the problem trains on). Labels are assigned round-robin.
struct MlpData {
    Matrix x; // n_samples x input_dim
    std::vector<int> labels;
};

MlpData tiny_mlp_dataset(int input_dim, int classes, int n_samples, std::uint64_t seed);

// Max relative error of grads() against central finite differences over
// n_points random points (probing a deterministic subset of coordinates).
double gradient_self_check(const Problem& problem, int n_points, std::uint64_t seed);

} // namespace lorapre
