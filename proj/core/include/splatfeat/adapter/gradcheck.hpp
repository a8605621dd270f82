#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace splatfeat::adapter {

struct GradcheckResult {
    std::string op;
    int trials = 0;
    /// Worst ||analytic - numeric|| / max(||analytic||, ||numeric||) over trials.
    double max_relative_error = 0;
};

/// Central-difference comparison for every adapter op with an analytic
/// backward pass (refine, project, feature_loss, naive_fuse, adaptive_fuse,
/// the toy objective). Each trial draws a random 4x4 instance in double
/// precision, reduces the op output to a scalar with a random projection
/// and checks the gradient w.r.t. every input and parameter entry.
std::vector<GradcheckResult> run_gradcheck(int trials, std::uint64_t seed, double step = 1e-6);

/// Relative error between two flattened gradients.
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

/// Numeric gradient of f at x by central differences.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step);

}  // namespace splatfeat::adapter
