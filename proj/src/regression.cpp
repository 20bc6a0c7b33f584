#include "spinread/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinread/error.hpp"
#include "spinread/format.hpp"
#include "spinread/rabi.hpp"

namespace spinread {

namespace {

void require_dimension(const ReadoutModel& model, const TimeTrace& trace) {
  if (trace.size() != model.size()) {
    throw_shape("trace has " + std::to_string(trace.size()) + " bins, model expects " +
                std::to_string(model.size()));
  }
  if (trace.bin_width_ns() != model.bin_width_ns()) {
    throw_shape("trace bin width " + format_double(trace.bin_width_ns()) +
                " ns does not match model bin width " + format_double(model.bin_width_ns()) +
                " ns");
  }
}

void require_examples(const ReadoutModel& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) throw_domain("loss needs at least one training example");
  for (const auto& ex : examples) require_dimension(model, ex.trace);
}

// Training problem in normalized coordinates: features z = g * rate and
// weights W = A / g, so h = W.z + b is unchanged.
struct NormalizedProblem {
  std::size_t m = 0;
  std::size_t n = 0;
  double g = 1.0;
  double w = 1.0;
  std::vector<double> z;         // m x n, row-major
  std::vector<double> targets;   // m
  std::vector<double> var_diag;  // n; variance term = sum_k var_diag_k W_k^2

  std::span<const double> row(std::size_t j) const { return {z.data() + j * n, n}; }

  // Residuals r_j = W.z_j + b - q_j for x = (W, b).
  void residuals(std::span<const double> x, std::span<double> r) const {
    const double b = x[n];
    for (std::size_t j = 0; j < m; ++j) {
      const auto zj = row(j);
      double h = b;
      for (std::size_t k = 0; k < n; ++k) h += x[k] * zj[k];
      r[j] = h - targets[j];
    }
  }

  double value(std::span<const double> x, std::span<const double> r) const {
    double pred = 0.0;
    for (double v : r) pred += v * v;
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) var += var_diag[k] * x[k] * x[k];
    return w * pred + var;
  }

  void gradient(std::span<const double> x, std::span<const double> r,
                std::span<double> grad) const {
    for (std::size_t k = 0; k < n; ++k) grad[k] = 2.0 * var_diag[k] * x[k];
    double gb = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = 2.0 * w * r[j];
      const auto zj = row(j);
      for (std::size_t k = 0; k < n; ++k) grad[k] += s * zj[k];
      gb += s;
    }
    grad[n] = gb;
  }

  // Hessian-vector product; the loss is quadratic so this is exact everywhere.
  void hessian_apply(std::span<const double> v, std::span<double> out,
                     std::span<double> scratch) const {
    for (std::size_t j = 0; j < m; ++j) {
      const auto zj = row(j);
      double s = v[n];
      for (std::size_t k = 0; k < n; ++k) s += zj[k] * v[k];
      scratch[j] = s;
    }
    for (std::size_t k = 0; k < n; ++k) out[k] = 2.0 * var_diag[k] * v[k];
    double ob = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = 2.0 * w * scratch[j];
      const auto zj = row(j);
      for (std::size_t k = 0; k < n; ++k) out[k] += s * zj[k];
      ob += s;
    }
    out[n] = ob;
  }

  double lipschitz() const {
    const std::size_t d = n + 1;
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> hv(d), scratch(m);
    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
      hessian_apply(v, hv, scratch);
      double norm = 0.0;
      for (double e : hv) norm += e * e;
      norm = std::sqrt(norm);
      if (norm == 0.0) return 0.0;
      for (std::size_t i = 0; i < d; ++i) v[i] = hv[i] / norm;
      const bool settled = std::abs(norm - lambda) <= 1e-12 * norm;
      lambda = norm;
      if (settled) break;
    }
    return lambda;
  }
};

struct GatedInit {
  std::vector<double> weights;
  double intercept = 0.0;
  bool ok = false;
};

GatedInit gated_init(std::span<const TrainingExample> examples) {
  const auto [lo, hi] = std::minmax_element(
      examples.begin(), examples.end(),
      [](const TrainingExample& a, const TrainingExample& b) { return a.target < b.target; });
  const auto top = hi->trace.rates();
  const auto bottom = lo->trace.rates();
  const auto sweep = sweep_gate(top, bottom, 0, hi->trace.bin_width_ns());
  GatedInit init;
  init.weights.assign(top.size(), 0.0);
  if (!sweep.min_variance) return init;
  const auto& window = *sweep.min_variance;
  const double L0 = gate_sum(top, window);
  const double L1 = gate_sum(bottom, window);
  const double a = (hi->target - lo->target) / (L0 - L1);
  for (std::size_t i = window.start_bin; i < window.end_bin(); ++i) init.weights[i] = a;
  init.intercept = lo->target - a * L1;
  init.ok = true;
  return init;
}

[[noreturn]] void throw_training(const std::string& what) {
  throw Error(ErrorKind::DegenerateTraining, what);
}

}  // namespace

ReadoutModel::ReadoutModel(std::vector<double> weights, double intercept, double bin_width_ns,
                           double normalization, std::string trained_on,
                           LossBreakdown training_loss)
    : weights_(std::move(weights)),
      intercept_(intercept),
      bin_width_ns_(bin_width_ns),
      normalization_(normalization),
      trained_on_(std::move(trained_on)),
      training_loss_(training_loss) {
  if (weights_.empty()) throw_shape("a readout model needs at least one weight");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw_domain("weight " + std::to_string(i) + " must be finite and >= 0, got " +
                   format_double(weights_[i]));
    }
  }
  if (!std::isfinite(intercept_)) throw_domain("intercept must be finite");
  if (!(bin_width_ns_ > 0.0)) throw_domain("model bin width must be positive");
  if (!(normalization_ > 0.0) || !std::isfinite(normalization_)) {
    throw_domain("normalization factor must be positive");
  }
  if (trained_on_.find('\n') != std::string::npos) {
    throw_domain("provenance text must be a single line");
  }
}

TrainingExample::TrainingExample(TimeTrace trace_in, double target_in)
    : trace(std::move(trace_in)), target(target_in) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw_domain("training target must lie in [0, 1], got " + format_double(target));
  }
}

const char* to_string(InitKind init) noexcept {
  return init == InitKind::Zeros ? "zeros" : "gated-equal-weights";
}

void TrainConfig::validate() const {
  if (!(weight_factor >= 1.0) || !std::isfinite(weight_factor)) {
    throw_domain("weight_factor must be >= 1, got " + format_double(weight_factor));
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw_domain("learning_rate must be positive, got " + format_double(learning_rate));
  }
  if (!(relative_tolerance > 0.0)) throw_domain("relative_tolerance must be positive");
  if (window == 0) throw_domain("convergence window must be at least 1");
}

double predict(const ReadoutModel& model, const TimeTrace& trace) {
  require_dimension(model, trace);
  const auto a = model.weights();
  const auto c = trace.counts();
  const double r = static_cast<double>(trace.repetitions());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * static_cast<double>(c[i]);
  return s / r + model.intercept();
}

double prediction_variance(const ReadoutModel& model, const TimeTrace& trace) {
  require_dimension(model, trace);
  const auto a = model.weights();
  const auto c = trace.counts();
  const double r = static_cast<double>(trace.repetitions());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i] / r;
    s += ai * ai * static_cast<double>(c[i]);
  }
  return s;
}

LossBreakdown loss(const ReadoutModel& model, std::span<const TrainingExample> examples,
                   double weight_factor) {
  require_examples(model, examples);
  LossBreakdown out;
  for (const auto& ex : examples) {
    const double r = predict(model, ex.trace) - ex.target;
    out.prediction_term += r * r;
    out.variance_term += prediction_variance(model, ex.trace);
  }
  out.total = weight_factor * out.prediction_term + out.variance_term;
  return out;
}

Gradient loss_gradient(const ReadoutModel& model, std::span<const TrainingExample> examples,
                       double weight_factor) {
  require_examples(model, examples);
  Gradient g;
  g.weights.assign(model.size(), 0.0);
  const auto a = model.weights();
  for (const auto& ex : examples) {
    const double residual = predict(model, ex.trace) - ex.target;
    const double r = static_cast<double>(ex.trace.repetitions());
    const auto c = ex.trace.counts();
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double y = static_cast<double>(c[k]) / r;
      g.weights[k] += 2.0 * weight_factor * residual * y + 2.0 * a[k] * y / r;
    }
    g.intercept += 2.0 * weight_factor * residual;
  }
  return g;
}

Gradient projected_gradient(const ReadoutModel& model, std::span<const TrainingExample> examples,
                            double weight_factor) {
  auto g = loss_gradient(model, examples, weight_factor);
  const auto a = model.weights();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0 && g.weights[k] > 0.0) g.weights[k] = 0.0;
  }
  return g;
}

TrainResult train_detailed(std::span<const TrainingExample> examples, const TrainConfig& config,
                           std::string provenance) {
  config.validate();
  if (examples.size() < 2) throw_training("training needs at least two examples");
  const std::size_t n = examples.front().trace.size();
  const double bin_width = examples.front().trace.bin_width_ns();
  for (const auto& ex : examples) {
    if (ex.trace.size() != n || ex.trace.bin_width_ns() != bin_width) {
      throw_shape("training traces differ in shape");
    }
  }
  const auto [tmin, tmax] = std::minmax_element(
      examples.begin(), examples.end(),
      [](const TrainingExample& a, const TrainingExample& b) { return a.target < b.target; });
  if (!(tmax->target > tmin->target)) {
    throw_training("all training targets are identical (" + format_double(tmin->target) + ")");
  }

  NormalizedProblem prob;
  prob.m = examples.size();
  prob.n = n;
  prob.w = config.weight_factor;
  prob.z.resize(prob.m * n);
  prob.targets.resize(prob.m);
  double max_rate = 0.0;
  for (std::size_t j = 0; j < prob.m; ++j) {
    const auto rates = examples[j].trace.rates();
    std::copy(rates.begin(), rates.end(), prob.z.begin() + static_cast<std::ptrdiff_t>(j * n));
    max_rate = std::max(max_rate, *std::max_element(rates.begin(), rates.end()));
    prob.targets[j] = examples[j].target;
  }
  if (!(max_rate > 0.0)) throw_training("training traces contain no photons");
  prob.g = 1.0 / max_rate;
  for (auto& v : prob.z) v *= prob.g;
  prob.var_diag.assign(n, 0.0);
  for (std::size_t j = 0; j < prob.m; ++j) {
    const double scale = prob.g / static_cast<double>(examples[j].trace.repetitions());
    const auto zj = prob.row(j);
    for (std::size_t k = 0; k < n; ++k) prob.var_diag[k] += zj[k] * scale;
  }

  std::vector<double> x(n + 1, 0.0);
  std::vector<double> init_weights(n, 0.0);
  std::string init_note = "zeros";
  if (config.init == InitKind::GatedEqualWeights) {
    const auto init = gated_init(examples);
    if (init.ok) {
      init_weights = init.weights;
      for (std::size_t k = 0; k < n; ++k) x[k] = init.weights[k] / prob.g;
      x[n] = init.intercept;
      init_note = "gated-equal-weights";
    } else {
      init_note = "zeros (no valid gate window)";
    }
  }

  const double lipschitz = prob.lipschitz();
  const double step = lipschitz > 0.0 ? config.learning_rate / lipschitz : 0.0;

  std::vector<double> r_x(prob.m), r_new(prob.m), r_y(prob.m);
  std::vector<double> y = x, x_new(n + 1), grad(n + 1);
  prob.residuals(x, r_x);
  double f_x = prob.value(x, r_x);
  r_y = r_x;

  TrainResult result{ReadoutModel({1.0}, 0.0, 1.0), 0, false, 0, {}};
  result.loss_history.push_back(f_x);
  double momentum = 1.0;

  auto projected_step = [&](std::span<const double> from, std::span<const double> r_from) {
    prob.gradient(from, r_from, grad);
    for (std::size_t k = 0; k < n; ++k) x_new[k] = std::max(0.0, from[k] - step * grad[k]);
    x_new[n] = from[n] - step * grad[n];
    prob.residuals(x_new, r_new);
    return prob.value(x_new, r_new);
  };

  std::size_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    double f_new = projected_step(y, r_y);
    const double slack = 1e-12 * std::abs(f_x);
    if (!(f_new <= f_x) || !std::isfinite(f_new)) {
      // Momentum overshot: fall back to a plain projected step from x.
      f_new = projected_step(x, r_x);
      ++result.restarts;
      momentum = 1.0;
      if (!std::isfinite(f_new) || f_new > f_x + slack) {
        throw Error(ErrorKind::Divergence,
                    "loss increased from " + format_double(f_x) + " to " + format_double(f_new) +
                        " at iteration " + std::to_string(iter) +
                        "; use a smaller learning_rate (currently " +
                        format_double(config.learning_rate) + ")");
      }
      if (f_new > f_x) {
        // Within rounding of a stationary point.
        result.converged = true;
        break;
      }
      y = x_new;
      r_y = r_new;
    } else if (config.accelerate) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      for (std::size_t k = 0; k <= n; ++k) y[k] = x_new[k] + beta * (x_new[k] - x[k]);
      for (std::size_t j = 0; j < prob.m; ++j) r_y[j] = r_new[j] + beta * (r_new[j] - r_x[j]);
      momentum = next;
    } else {
      y = x_new;
      r_y = r_new;
    }
    x.swap(x_new);
    r_x.swap(r_new);
    f_x = f_new;
    result.loss_history.push_back(f_x);

    const std::size_t len = result.loss_history.size();
    if (len > config.window) {
      const double past = result.loss_history[len - 1 - config.window];
      if (past - f_x <= config.relative_tolerance * std::abs(past)) {
        result.converged = true;
        ++iter;
        break;
      }
    }
  }
  result.iterations = iter;

  // Without an accepted step the initialization comes back bit for bit.
  std::vector<double> weights = init_weights;
  if (result.loss_history.size() > 1) {
    for (std::size_t k = 0; k < n; ++k) weights[k] = x[k] * prob.g;
  }
  if (provenance.empty()) provenance = std::to_string(examples.size()) + " examples";
  provenance += "; init=" + init_note + "; w=" + format_double(config.weight_factor) +
                "; iterations=" + std::to_string(iter) +
                (result.converged ? "; converged" : "; iteration limit");
  ReadoutModel draft(weights, x[n], bin_width, prob.g);
  const auto final_loss = loss(draft, examples, config.weight_factor);
  result.model = ReadoutModel(std::move(weights), x[n], bin_width, prob.g, std::move(provenance),
                              final_loss);
  return result;
}

ReadoutModel train(std::span<const TrainingExample> examples, const TrainConfig& config) {
  return train_detailed(examples, config).model;
}

ReadoutModel train_boundary(const TimeTrace& bright, const TimeTrace& dark,
                            const TrainConfig& config) {
  if (bright.repetitions() == dark.repetitions() &&
      std::ranges::equal(bright.counts(), dark.counts())) {
    throw_training("boundary traces are identical");
  }
  const std::vector<TrainingExample> examples{{bright, 1.0}, {dark, 0.0}};
  return train_detailed(examples, config,
                        "boundary training at " + std::to_string(bright.repetitions()) + "/" +
                            std::to_string(dark.repetitions()) + " repetitions")
      .model;
}

ReadoutModel train_rabi(const RabiDataset& dataset, const TrainConfig& config) {
  if (!dataset.fit || !dataset.targets) {
    throw Error(ErrorKind::State,
                "Rabi dataset has no sinusoid fit or targets; run fit_rabi and assign_targets first");
  }
  const auto examples = training_examples(dataset);
  return train_detailed(examples, config,
                        "rabi training on " + std::to_string(examples.size()) + " points at " +
                            std::to_string(examples.front().trace.repetitions()) + " repetitions")
      .model;
}

ReadoutModel gated_equivalent(const GateCalibration& calibration, std::string label) {
  if (!(calibration.L0 > calibration.L1)) {
    throw_degenerate_boundary("gate calibration needs L0 > L1");
  }
  const double span = calibration.L0 - calibration.L1;
  std::vector<double> weights(calibration.bins, 0.0);
  const double a = static_cast<double>(calibration.repetitions) / span;
  for (std::size_t i = calibration.window.start_bin; i < calibration.window.end_bin(); ++i) {
    weights.at(i) = a;
  }
  if (label.empty()) {
    label = "gate [" + std::to_string(calibration.window.start_bin) + ", " +
            std::to_string(calibration.window.end_bin()) + ")";
  }
  return ReadoutModel(std::move(weights), -calibration.L1 / span, calibration.bin_width_ns, 1.0,
                      std::move(label));
}

double boundary_contrast(const TimeTrace& bright, const TimeTrace& dark) {
  const double b = static_cast<double>(bright.total()) / static_cast<double>(bright.repetitions());
  const double d = static_cast<double>(dark.total()) / static_cast<double>(dark.repetitions());
  if (!(b > 0.0)) throw_degenerate_boundary("bright trace has no photons");
  return (b - d) / b;
}

}  // namespace spinread
