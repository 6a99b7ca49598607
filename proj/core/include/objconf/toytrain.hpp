#pragma once

// Desk-scale experiment for regressing a [0, 1] target through a sigmoid:
// full-batch gradient descent on h = sigmoid(theta . x) under L1, L2 or
// cross-entropy, plus finite-difference checks of every analytic gradient.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objconf/loss_types.hpp"

namespace objconf {

/// Column 0 of `features` is a constant 1 (intercept); columns 1..d-1 are
/// standard normal. Targets are sigmoid(w* . x + noise) for a hidden w* whose
/// intercept is kToyTargetBias, so most targets sit near 0.
struct ToyDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;  // row-major n x d
  std::vector<double> targets;
  std::uint64_t seed = 0;

  std::span<const double> row(std::size_t i) const { return {features.data() + i * d, d}; }
};

inline constexpr double kToyTargetBias = -3.0;
inline constexpr double kToyWeightScale = 0.5;
inline constexpr double kToyNoiseStd = 0.1;

ToyDataset make_dataset(std::size_t n, std::size_t d, std::uint64_t seed);

enum class ToyInit { Zeros, SaturatedPositive, SaturatedNegative };

struct ToyTrainConfig {
  RegressionLoss loss = RegressionLoss::CE;
  double learning_rate = 1.0;
  std::size_t max_iters = 2000;
  ToyInit init = ToyInit::SaturatedPositive;
  /// Saturated inits put theta = +-z0 on the intercept, so every initial
  /// prediction is sigmoid(+-z0).
  double z0 = 7.0;
};

void validate(const ToyTrainConfig& cfg);

struct TraceRow {
  std::size_t iter = 0;
  double loss = 0.0;
  double mae = 0.0;
  double grad_norm = 0.0;
};

/// Row t describes theta before the t-th update.
struct TrainTrace {
  std::vector<TraceRow> rows;
  std::vector<double> final_theta;
  bool diverged = false;
};

std::vector<double> initial_theta(const ToyTrainConfig& cfg, std::size_t d);

/// Mean loss gradient over the dataset at theta.
std::vector<double> batch_gradient(RegressionLoss kind, const ToyDataset& data,
                                   std::span<const double> theta);

TrainTrace train(const ToyDataset& data, const ToyTrainConfig& cfg);

/// First iteration whose MAE is strictly below `threshold`.
std::optional<std::size_t> first_crossing(const TrainTrace& trace, double threshold);

/// CSV `iter,loss,mae,grad_norm`, then a `# diverged=true|false` footer.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

enum class GradcheckLoss { L1, L2, CE, Focal, GFocal, WeightedCE };

/// Accepts l1, l2, ce, focal, gfocal, wce.
std::optional<GradcheckLoss> parse_gradcheck_loss(const std::string& name);

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t trials = 0;
  /// L1 points rejected for lying within 1e-4 of the kink h == y.
  std::size_t skipped = 0;
};

inline constexpr long double kFiniteDiffStep = 1e-6L;

/// Compares each analytic gradient with central differences (step 1e-6) of
/// the same loss evaluated in extended precision, at `trials` seeded random
/// points with |z| <= 6. Per-trial error is ||a - n|| / max(||a||, ||n||).
/// L1/L2/CE check the theta-gradient of sigmoid_regression_grad; the others
/// check logit gradients of the batch losses.
GradcheckReport finite_diff_check(GradcheckLoss kind, std::size_t trials, std::uint64_t seed);

}  // namespace objconf
