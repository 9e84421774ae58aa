// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/refine.hpp"
#include "graft/scene.hpp"
#include "graft/weights.hpp"

#include <functional>
#include <string>
#include <vector>

namespace graft {

struct LossWeights {
  double vertex = 7.0;
  double centered = 5.0;
  double global_orient = 5.0;
  double body_pose = 2.0;
  double left_hand = 0.5;
  double right_hand = 0.5;

  double rotation_weight(int slot) const;
};

/// Weighted loss terms summed over the supervised steps; total is their sum.
struct LossBreakdown {
  double rotation = 0.0;
  double vertex = 0.0;
  double centered = 0.0;
  double total = 0.0;
};

/// Ground-truth quantities reused across loss evaluations.
struct LossTarget {
  HumanState state;
  std::array<Vec6, kStateJoints> rotations;  // canonical 6D
  Points3 vertices;
  Points3 centered_vertices;

  LossTarget(const BodyModel& model, const HumanState& gt);
};

/// Rotations enter as canonical 6D vectors (the 6D of the rotation each block
/// decodes to); vertices as squared distances summed over all vertices.
LossBreakdown step_loss(const std::vector<HumanState>& predicted, const LossTarget& target, const BodyModel& model,
                        const LossWeights& weights);
LossBreakdown step_loss(const std::vector<HumanState>& predicted, const HumanState& gt, const BodyModel& model,
                        const LossWeights& weights);

struct PerturbationSpec {
  double translation_sigma = 0.1;  // m, per axis
  double shape_sigma = 0.03;
  double joint_sigma_deg = 7.0;
  double global_sigma_deg = 3.0;
  double clean_probability = 0.2;

  PerturbationSpec scaled(double factor) const;
};

/// Perturbed copy of `gt`, or `gt` itself with probability clean_probability.
HumanState sample_query(const HumanState& gt, const PerturbationSpec& spec, Rng& rng);

struct TrainSchedule {
  int total_iterations = 150000;
  int warmup = 2000;
  double peak_lr = 1e-4;
  double floor_lr = 2e-7;
  int rollout_switch = 10000;
  int rollout_steps = 3;
  double scale_min = 0.85;
  double scale_max = 1.15;
  double anchor_dropout = 0.35;
  int batch_size = 16;

  /// Shortened schedule: warmup and rollout switch shrink in proportion to
  /// the iteration count (minimum 1).
  static TrainSchedule scaled_to(int total_iterations);
  void validate() const;
};

/// Linear warmup from 0 to peak at iteration `warmup`, then cosine decay to
/// floor at the final iteration.
double learning_rate(int iteration, const TrainSchedule& schedule);

/// Supervised rollout length: 1 before the switch iteration, T afterwards.
int rollout_supervised_steps(int iteration, const TrainSchedule& schedule);

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  VecX m, v;
  int t = 0;

  explicit Adam(Eigen::Index n) : m(VecX::Zero(n)), v(VecX::Zero(n)) {}
  /// params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(VecX& params, const VecX& gradient, double lr);
};

/// Central finite differences of `loss` with respect to `params`.
VecX finite_difference_gradient(const std::function<double(const VecX&)>& loss, const VecX& params, double h = 1e-4);

/// The subset of parameters updated by micro training, flattened in
/// parameters() order.
class ParameterSelection {
 public:
  ParameterSelection(Weights& weights, const std::vector<std::string>& prefixes);
  VecX gather() const;
  void scatter(const VecX& values) const;
  Eigen::Index size() const { return size_; }

 private:
  std::vector<std::span<double>> spans_;
  Eigen::Index size_ = 0;
};

struct TrainingSample {
  HumanState query;
  HumanState gt;
  double scale = 1.0;  // joint scale of scene, query and ground truth
};

/// Scene plus ground-truth placements for the seeded micro tasks.
struct TrainingTask {
  std::string name;
  BodyModel model;
  ScenePointCloud scene;
  std::vector<HumanState> gt_states;
};

/// "floor-contact": the standing scenario synthesized from `seed`; training
/// queries are perturbations of its ground truth. "zero-noise": the same with
/// queries equal to the ground truth.
TrainingTask make_training_task(const std::string& name, uint64_t seed);

struct MicroTrainConfig {
  int iterations = 200;
  uint64_t seed = 0;
  int batch_size = 4;
  double peak_lr = 1e-2;
  // Output layers of the translation and body-pose heads (153 parameters).
  std::vector<std::string> trainable{"head.translation.fc2", "head.body.fc2"};
  bool scale_augment = true;
  PerturbationSpec perturbation;
  // Share of training queries drawn at twice the perturbation scale.
  double large_query_fraction = 0.5;
  LossWeights loss;
  double fd_step = 1e-4;
};

struct CurveRow {
  int iteration = 0;
  double lr = 0.0;
  int rollout = 1;
  double loss = 0.0;
};

struct MicroTrainResult {
  Weights weights;
  std::vector<CurveRow> curve;
  TrainSchedule schedule;
};

/// Finite-difference Adam training of a micro network on `task`.
MicroTrainResult micro_train(const TrainingTask& task, const MicroTrainConfig& config,
                             const std::function<void(const CurveRow&)>& on_iteration = {});

/// Geometry-only transformer output for the sample's query state.
RowMatrix first_step_features(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                              const TrainingSample& sample);

/// Loss of a T-step rollout of `weights` on each sample, summed. When
/// `first_features` is given, entry i replaces the first step's transformer
/// output for sample i.
double rollout_loss(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                    const std::vector<TrainingSample>& samples, int steps, const LossWeights& loss_weights,
                    const std::vector<LossTarget>* targets = nullptr,
                    const std::vector<RowMatrix>* first_features = nullptr);

/// Held-out queries for a task, drawn from a seed disjoint from training.
std::vector<TrainingSample> evaluation_samples(const TrainingTask& task, int count, uint64_t seed,
                                               const PerturbationSpec& spec);

/// Mean contact F1 against the ground truth after each of `steps` refinement
/// steps; entry 0 is the unrefined query.
std::vector<double> f1_per_step(const TrainingTask& task, const SpatialIndex& index, const Weights& weights,
                                const std::vector<TrainingSample>& samples, int steps, double tau);

}  // namespace graft
