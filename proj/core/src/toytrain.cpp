#include "objconf/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "objconf/analysis.hpp"
#include "objconf/detail/loss_kernels.hpp"
#include "objconf/losses.hpp"

namespace objconf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

template <std::floating_point T>
T regression_value(RegressionLoss kind, T y, T z) {
  switch (kind) {
    case RegressionLoss::L1: return detail::l1_prob(z, y);
    case RegressionLoss::L2: return detail::l2_prob(z, y);
    case RegressionLoss::CE: return detail::bce(z, y);
  }
  return T(0);
}

double relative_error(std::span<const double> analytic, std::span<const long double> numeric) {
  long double diff = 0.0L;
  long double na = 0.0L;
  long double nn = 0.0L;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const long double a = analytic[i];
    diff += (a - numeric[i]) * (a - numeric[i]);
    na += a * a;
    nn += numeric[i] * numeric[i];
  }
  const long double denom = std::sqrt(std::max(na, nn));
  if (denom == 0.0L) return 0.0;
  return static_cast<double>(std::sqrt(diff) / denom);
}

// One theta-gradient trial for L1/L2/CE. Returns nullopt for rejected points.
std::optional<double> regression_trial(RegressionLoss kind, std::mt19937_64& rng) {
  constexpr std::size_t kDim = 3;
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::uniform_real_distribution<double> utheta(-2.0, 2.0);
  std::uniform_real_distribution<double> uy(0.0, 1.0);
  std::vector<double> x(kDim);
  std::vector<double> theta(kDim);
  for (auto& v : x) v = ux(rng);
  for (auto& v : theta) v = utheta(rng);
  const double y = uy(rng);
  const double z = dot(theta, x);
  if (kind == RegressionLoss::L1 && std::abs(sigmoid(z) - y) < 1e-4) return std::nullopt;

  const std::vector<double> analytic = sigmoid_regression_grad(kind, y, z, x);

  std::vector<long double> numeric(kDim);
  for (std::size_t j = 0; j < kDim; ++j) {
    auto loss_at = [&](long double step) {
      long double zz = 0.0L;
      for (std::size_t k = 0; k < kDim; ++k) {
        const long double t = theta[k] + (k == j ? step : 0.0L);
        zz += t * static_cast<long double>(x[k]);
      }
      return regression_value<long double>(kind, y, zz);
    };
    numeric[j] = (loss_at(kFiniteDiffStep) - loss_at(-kFiniteDiffStep)) / (2.0L * kFiniteDiffStep);
  }
  return relative_error(analytic, numeric);
}

// One logit-gradient trial for a batch loss.
double batch_trial(GradcheckLoss kind, std::mt19937_64& rng) {
  constexpr std::size_t kBatch = 8;
  std::uniform_real_distribution<double> uz(-6.0, 6.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> logits(kBatch);
  std::vector<double> targets(kBatch);
  std::vector<SampleLabel> labels(kBatch);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < kBatch; ++i) {
    logits[i] = uz(rng);
    targets[i] = u01(rng);
    const double r = u01(rng);
    labels[i] = r < 0.45 ? SampleLabel::Positive : (r < 0.9 ? SampleLabel::Negative : SampleLabel::Ignore);
    n_pos += labels[i] == SampleLabel::Positive ? 1 : 0;
  }
  if (n_pos == 0) {
    labels[0] = SampleLabel::Positive;
    n_pos = 1;
  }

  std::vector<double> analytic;
  std::function<long double(std::span<const long double>)> value;
  std::vector<long double> targets_ld(targets.begin(), targets.end());

  if (kind == GradcheckLoss::Focal) {
    const FocalParams params{u01(rng), 3.0 * u01(rng)};
    analytic = focal_loss_grad(logits, labels, n_pos, params);
    value = [&, params](std::span<const long double> z) {
      return detail::focal_batch<long double>(z, labels, n_pos, params);
    };
  } else {
    const ConfLoss loss = kind == GradcheckLoss::GFocal ? ConfLoss::gfocal(2.0 + u01(rng))
                                                        : ConfLoss::weighted_ce(u01(rng));
    analytic = confidence_loss_grad(loss, logits, targets, labels, n_pos);
    value = [&, loss](std::span<const long double> z) {
      return detail::confidence_batch<long double>(loss, z, targets_ld, labels, n_pos);
    };
  }

  std::vector<long double> z(logits.begin(), logits.end());
  std::vector<long double> numeric(kBatch);
  for (std::size_t i = 0; i < kBatch; ++i) {
    const long double base = z[i];
    z[i] = base + kFiniteDiffStep;
    const long double up = value(z);
    z[i] = base - kFiniteDiffStep;
    const long double down = value(z);
    z[i] = base;
    numeric[i] = (up - down) / (2.0L * kFiniteDiffStep);
  }
  return relative_error(analytic, numeric);
}

}  // namespace

ToyDataset make_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("make_dataset: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> w_star(d);
  w_star[0] = kToyTargetBias;
  for (std::size_t j = 1; j < d; ++j) w_star[j] = kToyWeightScale * normal(rng);

  ToyDataset data;
  data.n = n;
  data.d = d;
  data.seed = seed;
  data.features.resize(n * d);
  data.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = data.features.data() + i * d;
    row[0] = 1.0;
    for (std::size_t j = 1; j < d; ++j) row[j] = normal(rng);
    const double z = dot(w_star, {row, d}) + kToyNoiseStd * normal(rng);
    data.targets[i] = std::clamp(sigmoid(z), 0.0, 1.0);
  }
  return data;
}

void validate(const ToyTrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("toy training needs learning_rate > 0");
  }
  if (cfg.max_iters < 1) throw std::invalid_argument("toy training needs max_iters >= 1");
  if (!std::isfinite(cfg.z0)) throw std::invalid_argument("toy training z0 must be finite");
}

std::vector<double> initial_theta(const ToyTrainConfig& cfg, std::size_t d) {
  std::vector<double> theta(d, 0.0);
  if (cfg.init == ToyInit::SaturatedPositive) theta[0] = cfg.z0;
  if (cfg.init == ToyInit::SaturatedNegative) theta[0] = -cfg.z0;
  return theta;
}

std::vector<double> batch_gradient(RegressionLoss kind, const ToyDataset& data,
                                   std::span<const double> theta) {
  std::vector<double> grad(data.d, 0.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto x = data.row(i);
    const auto g = sigmoid_regression_grad(kind, data.targets[i], dot(theta, x), x);
    for (std::size_t j = 0; j < data.d; ++j) grad[j] += g[j];
  }
  for (double& g : grad) g /= static_cast<double>(data.n);
  return grad;
}

TrainTrace train(const ToyDataset& data, const ToyTrainConfig& cfg) {
  validate(cfg);
  TrainTrace trace;
  std::vector<double> theta = initial_theta(cfg, data.d);
  trace.rows.reserve(cfg.max_iters);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    double loss = 0.0;
    double mae = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < data.n; ++i) {
      const double z = dot(theta, data.row(i));
      finite = std::isfinite(z);
      if (!finite) break;
      loss += sigmoid_regression_loss(cfg.loss, data.targets[i], z);
      mae += std::abs(data.targets[i] - sigmoid(z));
    }
    if (!finite) {
      trace.diverged = true;
      break;
    }
    loss /= static_cast<double>(data.n);
    mae /= static_cast<double>(data.n);
    const std::vector<double> grad = batch_gradient(cfg.loss, data, theta);
    const double gn = norm2(grad);
    if (!std::isfinite(loss) || !std::isfinite(gn)) {
      trace.diverged = true;
      break;
    }
    trace.rows.push_back({it, loss, mae, gn});
    for (std::size_t j = 0; j < data.d; ++j) theta[j] -= cfg.learning_rate * grad[j];
    if (!std::all_of(theta.begin(), theta.end(), [](double t) { return std::isfinite(t); })) {
      trace.diverged = true;
      break;
    }
  }
  trace.final_theta = std::move(theta);
  return trace;
}

std::optional<std::size_t> first_crossing(const TrainTrace& trace, double threshold) {
  for (const auto& row : trace.rows) {
    if (row.mae < threshold) return row.iter;
  }
  return std::nullopt;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "iter,loss,mae,grad_norm\n";
  for (const auto& r : trace.rows) {
    out << r.iter << ',' << format_number(r.loss) << ',' << format_number(r.mae) << ','
        << format_number(r.grad_norm) << '\n';
  }
  out << "# diverged=" << (trace.diverged ? "true" : "false") << '\n';
}

std::optional<GradcheckLoss> parse_gradcheck_loss(const std::string& name) {
  if (name == "l1") return GradcheckLoss::L1;
  if (name == "l2") return GradcheckLoss::L2;
  if (name == "ce") return GradcheckLoss::CE;
  if (name == "focal") return GradcheckLoss::Focal;
  if (name == "gfocal") return GradcheckLoss::GFocal;
  if (name == "wce") return GradcheckLoss::WeightedCE;
  return std::nullopt;
}

GradcheckReport finite_diff_check(GradcheckLoss kind, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradcheckReport report;
  while (report.trials < trials) {
    double err = 0.0;
    switch (kind) {
      case GradcheckLoss::L1:
      case GradcheckLoss::L2:
      case GradcheckLoss::CE: {
        const RegressionLoss rk = kind == GradcheckLoss::L1   ? RegressionLoss::L1
                                  : kind == GradcheckLoss::L2 ? RegressionLoss::L2
                                                              : RegressionLoss::CE;
        const auto e = regression_trial(rk, rng);
        if (!e) {
          ++report.skipped;
          continue;
        }
        err = *e;
        break;
      }
      default: err = batch_trial(kind, rng); break;
    }
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.trials;
  }
  return report;
}

}  // namespace objconf
