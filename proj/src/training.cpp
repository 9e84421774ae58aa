// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/training.hpp"

#include "graft/metrics.hpp"
#include "graft/rotation.hpp"
#include "graft/synthetic.hpp"
#include "graft/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace graft {

double LossWeights::rotation_weight(int slot) const {
  if (slot == 0) return global_orient;
  if (slot < kLeftHandSlot) return body_pose;
  if (slot < kRightHandSlot) return left_hand;
  return right_hand;
}

namespace {

Points3 centered(const Points3& v) { return v.rowwise() - v.colwise().mean(); }

}  // namespace

LossTarget::LossTarget(const BodyModel& model, const HumanState& gt) : state(gt) {
  for (int i = 0; i < kStateJoints; ++i) rotations[i] = canonical_rot6d(gt.rotations[i]);
  vertices = forward(model, gt).vertices;
  centered_vertices = centered(vertices);
}

LossBreakdown step_loss(const std::vector<HumanState>& predicted, const LossTarget& target, const BodyModel& model,
                        const LossWeights& w) {
  if (predicted.empty()) fail(ErrorCode::DimensionMismatch, "loss needs at least one predicted step");
  if (target.vertices.rows() != model.num_vertices()) fail(ErrorCode::DimensionMismatch, "target does not match model");
  LossBreakdown out;
  for (const HumanState& p : predicted) {
    for (int i = 0; i < kStateJoints; ++i) {
      out.rotation += w.rotation_weight(i) * (canonical_rot6d(p.rotations[i]) - target.rotations[i]).squaredNorm();
    }
    const Points3 v = forward(model, p).vertices;
    out.vertex += w.vertex * (v - target.vertices).squaredNorm();
    out.centered += w.centered * (centered(v) - target.centered_vertices).squaredNorm();
  }
  out.total = out.rotation + out.vertex + out.centered;
  return out;
}

LossBreakdown step_loss(const std::vector<HumanState>& predicted, const HumanState& gt, const BodyModel& model,
                        const LossWeights& w) {
  return step_loss(predicted, LossTarget(model, gt), model, w);
}

PerturbationSpec PerturbationSpec::scaled(double factor) const {
  PerturbationSpec s = *this;
  s.translation_sigma *= factor;
  s.shape_sigma *= factor;
  s.joint_sigma_deg *= factor;
  s.global_sigma_deg *= factor;
  return s;
}

namespace {

Mat3 random_axis_rotation(Rng& rng, double sigma_deg) {
  const Vec3 axis = rng.unit_vector();
  const double angle = rng.normal(0.0, sigma_deg * M_PI / 180.0);
  return axis_angle_to_matrix(axis * angle);
}

}  // namespace

HumanState sample_query(const HumanState& gt, const PerturbationSpec& spec, Rng& rng) {
  if (rng.uniform() < spec.clean_probability) return gt;
  HumanState q = gt;
  if (spec.translation_sigma != 0.0) {
    for (int c = 0; c < 3; ++c) q.translation[c] += rng.normal(0.0, spec.translation_sigma);
  }
  if (spec.shape_sigma != 0.0) {
    for (int k = 0; k < kShapeDim; ++k) q.shape[k] += rng.normal(0.0, spec.shape_sigma);
  }
  // Each rotation is perturbed in its own local frame.
  for (int slot = 0; slot < kStateJoints; ++slot) {
    const double sigma = slot == 0 ? spec.global_sigma_deg : spec.joint_sigma_deg;
    if (sigma == 0.0) continue;
    q.rotations[slot] = matrix_to_rot6d(rot6d_to_matrix(gt.rotations[slot]) * random_axis_rotation(rng, sigma));
  }
  return q;
}

TrainSchedule TrainSchedule::scaled_to(int total) {
  TrainSchedule s;
  const double ratio = static_cast<double>(total) / s.total_iterations;
  s.total_iterations = total;
  s.warmup = std::max(1, static_cast<int>(std::lround(s.warmup * ratio)));
  s.rollout_switch = std::max(1, static_cast<int>(std::lround(s.rollout_switch * ratio)));
  return s;
}

void TrainSchedule::validate() const {
  if (total_iterations <= 0 || warmup < 0 || warmup >= total_iterations) {
    fail(ErrorCode::UsageError, "schedule needs 0 <= warmup < total iterations");
  }
  if (!(anchor_dropout >= 0.0 && anchor_dropout <= 1.0)) fail(ErrorCode::UsageError, "dropout must lie in [0, 1]");
  if (rollout_steps < 1 || batch_size < 1) fail(ErrorCode::UsageError, "rollout steps and batch size must be positive");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) fail(ErrorCode::UsageError, "invalid scale augmentation range");
}

double learning_rate(int k, const TrainSchedule& s) {
  if (k < s.warmup) return s.peak_lr * static_cast<double>(k) / s.warmup;
  const int decay = s.total_iterations - 1 - s.warmup;
  if (decay <= 0) return s.floor_lr;
  const double progress = std::min(1.0, static_cast<double>(k - s.warmup) / decay);
  return s.floor_lr + 0.5 * (s.peak_lr - s.floor_lr) * (1.0 + std::cos(M_PI * progress));
}

int rollout_supervised_steps(int k, const TrainSchedule& s) { return k < s.rollout_switch ? 1 : s.rollout_steps; }

void Adam::step(VecX& params, const VecX& g, double lr) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

VecX finite_difference_gradient(const std::function<double(const VecX&)>& loss, const VecX& params, double h) {
  VecX g(params.size());
  VecX x = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    x[i] = params[i] + h;
    const double up = loss(x);
    x[i] = params[i] - h;
    const double down = loss(x);
    x[i] = params[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

ParameterSelection::ParameterSelection(Weights& weights, const std::vector<std::string>& prefixes) {
  for (const auto& p : parameters(weights)) {
    for (const auto& prefix : prefixes) {
      if (p.name.rfind(prefix, 0) == 0) {
        spans_.push_back(p.values);
        size_ += static_cast<Eigen::Index>(p.values.size());
        break;
      }
    }
  }
  if (size_ == 0) fail(ErrorCode::UsageError, "no parameters match the trainable selection");
}

VecX ParameterSelection::gather() const {
  VecX out(size_);
  Eigen::Index i = 0;
  for (const auto& s : spans_) {
    for (double v : s) out[i++] = v;
  }
  return out;
}

void ParameterSelection::scatter(const VecX& values) const {
  Eigen::Index i = 0;
  for (const auto& s : spans_) {
    for (double& v : s) v = values[i++];
  }
}

TrainingTask make_training_task(const std::string& name, uint64_t seed) {
  if (name != "floor-contact" && name != "zero-noise") fail(ErrorCode::UsageError, "unknown training task '" + name + "'");
  ScenarioOptions options;
  options.seed = seed;
  SyntheticScenario sc = synthesize_scenario(options);
  TrainingTask task;
  task.name = name;
  task.model = std::move(sc.model);
  task.scene = std::move(sc.scene);
  task.gt_states = {sc.gt};
  return task;
}

RowMatrix first_step_features(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                              const TrainingSample& sample) {
  const SceneQuery query(index, sample.scale);
  const TokenProbes probes = compute_probes(task.model, forward(task.model, sample.query), query);
  return transformer_forward(weights, tokenize(weights, sample.query, probes), nullptr);
}

double rollout_loss(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                    const std::vector<TrainingSample>& samples, int steps, const LossWeights& loss_weights,
                    const std::vector<LossTarget>* targets, const std::vector<RowMatrix>* first_features) {
  const RefinementContext ctx{task.model, index, weights, nullptr};
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const TrainingSample& s = samples[i];
    StepOptions options;
    options.scene_scale = s.scale;
    std::vector<HumanState> sequence;
    HumanState state = s.query;
    for (int t = 0; t < steps; ++t) {
      if (t == 0 && first_features) {
        state = apply_update(state, decode(weights, (*first_features)[i]), task.model);
      } else {
        state = refine_step(ctx, state, options).state;
      }
      sequence.push_back(state);
    }
    const LossBreakdown l = targets ? step_loss(sequence, (*targets)[i], task.model, loss_weights)
                                    : step_loss(sequence, s.gt, task.model, loss_weights);
    total += l.total;
  }
  return total;
}

namespace {

TrainingSample draw_sample(const TrainingTask& task, Rng& rng, const MicroTrainConfig& config,
                           const TrainSchedule& schedule) {
  TrainingSample s;
  const HumanState& gt = task.gt_states[rng.below(task.gt_states.size())];
  if (task.name == "zero-noise") {
    s.query = gt;
  } else {
    const bool large = rng.uniform() < config.large_query_fraction;
    s.query = sample_query(gt, large ? config.perturbation.scaled(2.0) : config.perturbation, rng);
  }
  s.gt = gt;
  if (config.scale_augment) {
    s.scale = rng.uniform(schedule.scale_min, schedule.scale_max);
    s.gt = absorb_scale(s.gt, s.scale, task.model);
    s.query = absorb_scale(s.query, s.scale, task.model);
  }
  return s;
}

}  // namespace

MicroTrainResult micro_train(const TrainingTask& task, const MicroTrainConfig& config,
                             const std::function<void(const CurveRow&)>& on_iteration) {
  MicroTrainResult result;
  result.schedule = TrainSchedule::scaled_to(config.iterations);
  result.schedule.peak_lr = config.peak_lr;
  result.schedule.batch_size = config.batch_size;
  result.schedule.validate();
  const TrainSchedule& schedule = result.schedule;

  result.weights = Weights::random(ArchConfig::micro(), config.seed);
  const ParameterSelection selection(result.weights, config.trainable);
  VecX params = selection.gather();
  Adam adam(params.size());
  const SpatialIndex index(task.scene);
  Rng rng(config.seed ^ 0x0b5e55edULL);
  // Decoder parameters do not influence the first step's transformer output,
  // which is then computed once per batch instead of once per evaluation.
  const bool decoder_only = std::all_of(config.trainable.begin(), config.trainable.end(),
                                        [](const std::string& p) { return p.rfind("head.", 0) == 0; });

  for (int k = 0; k < schedule.total_iterations; ++k) {
    std::vector<TrainingSample> batch;
    std::vector<LossTarget> targets;
    for (int b = 0; b < schedule.batch_size; ++b) {
      batch.push_back(draw_sample(task, rng, config, schedule));
      targets.emplace_back(task.model, batch.back().gt);
    }
    // Geometry-only training has no visual context, so anchor dropout is
    // not drawn.
    const int steps = rollout_supervised_steps(k, schedule);
    std::vector<RowMatrix> features;
    if (decoder_only) {
      for (const TrainingSample& s : batch) features.push_back(first_step_features(task, index, result.weights, s));
    }
    auto loss_at = [&](const VecX& x) {
      selection.scatter(x);
      return rollout_loss(task, index, result.weights, batch, steps, config.loss, &targets,
                          decoder_only ? &features : nullptr) /
             schedule.batch_size;
    };
    const double loss = loss_at(params);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << k << " (rollout " << steps << ")";
      fail(ErrorCode::NonFiniteLoss, msg.str());
    }
    const double lr = learning_rate(k, schedule);
    // At an exact optimum the difference quotients are pure round-off, which
    // Adam would amplify into a drift; the gradient is zero there.
    if (loss != 0.0) {
      const VecX grad = finite_difference_gradient(loss_at, params, config.fd_step);
      if (!grad.allFinite()) fail(ErrorCode::NonFiniteLoss, "non-finite gradient at iteration " + std::to_string(k));
      adam.step(params, grad, lr);
    }
    selection.scatter(params);
    const CurveRow row{k, lr, steps, loss};
    result.curve.push_back(row);
    if (on_iteration) on_iteration(row);
  }
  return result;
}

std::vector<TrainingSample> evaluation_samples(const TrainingTask& task, int count, uint64_t seed,
                                               const PerturbationSpec& spec) {
  Rng rng(seed ^ 0xe7a1u);
  PerturbationSpec s = spec;
  s.clean_probability = 0.0;
  std::vector<TrainingSample> out;
  for (int i = 0; i < count; ++i) {
    TrainingSample sample;
    sample.gt = task.gt_states[rng.below(task.gt_states.size())];
    sample.query = task.name == "zero-noise" ? sample.gt : sample_query(sample.gt, s, rng);
    out.push_back(sample);
  }
  return out;
}

std::vector<double> f1_per_step(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                                const std::vector<TrainingSample>& samples, int steps, double tau) {
  const RefinementContext ctx{task.model, index, weights, nullptr};
  const SceneQuery query(index);
  std::vector<double> f1(steps + 1, 0.0);
  for (const TrainingSample& s : samples) {
    const auto gt_labels = contact_labels(task.model, forward(task.model, s.gt), query, tau);
    HumanState state = s.query;
    for (int t = 0; t <= steps; ++t) {
      if (t > 0) state = refine_step(ctx, state).state;
      f1[t] += contact_prf(contact_labels(task.model, forward(task.model, state), query, tau), gt_labels).f1;
    }
  }
  for (double& v : f1) v /= static_cast<double>(samples.size());
  return f1;
}

}  // namespace graft
