// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/cli.hpp"

#include "graft/metrics.hpp"
#include "graft/ply.hpp"
#include "graft/refine.hpp"
#include "graft/state_io.hpp"
#include "graft/synthetic.hpp"
#include "graft/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace graft {

ScenePointCloud load_scene(const std::filesystem::path& path, int normals_k) {
  PlyCloud ply = read_ply(path);
  if (ply.points.rows() == 0) fail(ErrorCode::EmptyCloud, "'" + path.string() + "' has no points");
  Points3 normals = ply.normals ? *ply.normals : estimate_normals(ply.points, normals_k);
  return ScenePointCloud(std::move(ply.points), std::move(normals));
}

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json prf_json(const PrfResult& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"precision_undefined", p.precision_undefined}, {"recall_undefined", p.recall_undefined}};
}

json report_json(const EvalReport& r) {
  json j = prf_json(r.prf);
  j["tau_m"] = r.tau;
  j["v2s_mm"] = r.v2s_mm;
  j["d2s_deg"] = r.d2s_defined ? json(r.d2s_deg) : json(nullptr);
  j["pa_mpjpe_mm"] = r.pa_mpjpe_mm;
  return j;
}

BodyModel load_model(const fs::path& path) { return BodyModel::from_container(TensorContainer::load(path)); }

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

struct SynthArgs {
  uint64_t seed = 0;
  std::string out;
  double difficulty = 1.0;
  std::string placement = "standing";
  bool no_wall = false;
  std::string grids = "none";
  double patch = 14.0;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  ScenarioOptions o;
  o.seed = a.seed;
  o.difficulty = a.difficulty;
  o.placement = a.placement == "seated" ? Placement::Seated : Placement::Standing;
  o.wall = !a.no_wall;
  const SyntheticScenario sc = synthesize_scenario(o);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_ply(dir / "scene.ply", sc.scene.points(), &sc.scene.normals());
  sc.model.to_container().save(dir / "model.grft");
  save_state_document(dir / "gt.json", {{sc.gt}, sc.intrinsics});
  save_state_document(dir / "init.json", {{sc.init}, sc.intrinsics});
  json files = {"scene.ply", "model.grft", "gt.json", "init.json"};
  if (a.grids != "none") {
    const ArchConfig arch = a.grids == "micro" ? ArchConfig::micro() : ArchConfig::standard();
    random_feature_grids(arch, sc.intrinsics, a.patch, a.seed).to_container().save(dir / "grids.grft");
    files.push_back("grids.grft");
  }
  out << json{{"out", dir.string()}, {"files", files}}.dump() << "\n";
}

struct RefineArgs {
  std::string model, scene, init, weights, grids, gt, out, align_cloud;
  int iters = 3;
  bool geometry_only = false;
  bool align = false;
  int max_points = 0;
  int normals_k = kDefaultNormalNeighbors;
  double tau = kDefaultContactTau;
};

void cmd_refine(const RefineArgs& a, std::ostream& out) {
  const BodyModel model = load_model(a.model);
  const ScenePointCloud scene = load_scene(a.scene, a.normals_k);
  StateDocument init = load_state_document(a.init);
  const Weights weights = Weights::load(a.weights);
  std::optional<FeatureGrids> grids;
  if (!a.grids.empty()) grids = FeatureGrids::load(a.grids);

  RefinementConfig config;
  config.iterations = a.iters;
  config.geometry_only = a.geometry_only;
  config.max_points = a.max_points;
  const SpatialIndex index = build_index(scene, config);

  json align_info = json::array();
  if (a.align) {
    std::optional<CameraIntrinsics> k = init.intrinsics;
    if (!k && grids) k = grids->intrinsics;
    if (!k) fail(ErrorCode::UsageError, "--align needs intrinsics in the init document or the grid file");
    const ScenePointCloud cloud = a.align_cloud.empty() ? scene : load_scene(a.align_cloud, a.normals_k);
    for (HumanState& h : init.humans) {
      const AlignResult r = metric_align(model, h, cloud, *k);
      h = r.state;
      align_info.push_back(r.scale);
    }
  }

  const RefinementContext ctx{model, index, weights, grids ? &*grids : nullptr};
  const auto results = refine(ctx, init.humans, config);

  std::optional<StateDocument> gt;
  if (!a.gt.empty()) {
    gt = load_state_document(a.gt);
    if (gt->humans.size() != init.humans.size()) fail(ErrorCode::LengthMismatch, "gt and init differ in human count");
  }
  const SceneQuery query(index);
  std::ostringstream csv;
  csv << "human,step,mean_probe_dist_mm,scale," << (gt ? "f1_vs_gt," : "") << "wall_ms\n" << std::setprecision(10);
  StateDocument refined{{}, init.intrinsics};
  for (size_t i = 0; i < results.size(); ++i) {
    refined.humans.push_back(results[i].state);
    std::vector<bool> gt_labels;
    if (gt) gt_labels = contact_labels(model, forward(model, gt->humans[i]), query, a.tau);
    for (size_t t = 0; t < results[i].trajectory.size(); ++t) {
      const TrajectoryEntry& e = results[i].trajectory[t];
      csv << i << "," << t << "," << 1000.0 * e.mean_probe_distance << "," << e.scale << ",";
      if (gt) csv << contact_prf(contact_labels(model, forward(model, e.state), query, a.tau), gt_labels).f1 << ",";
      csv << e.wall_ms << "\n";
    }
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_state_document(dir / "refined.json", refined);
  write_text_file(dir / "trajectory.csv", csv.str());
  json summary = {{"out", dir.string()}, {"humans", results.size()}, {"iterations", a.iters},
                  {"geometry_only", !grids || a.geometry_only}};
  if (a.align) summary["align_scales"] = align_info;
  out << summary.dump() << "\n";
}

struct EvalArgs {
  std::string model, pred, gt, scene, gt_scene, out, csv;
  bool shared_scene = false;
  double tau = kDefaultContactTau;
  int normals_k = kDefaultNormalNeighbors;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const BodyModel model = load_model(a.model);
  const StateDocument pred = load_state_document(a.pred);
  const StateDocument gt = load_state_document(a.gt);
  if (pred.humans.size() != gt.humans.size()) fail(ErrorCode::LengthMismatch, "pred and gt differ in human count");
  const SpatialIndex pred_index(load_scene(a.scene, a.normals_k));
  std::optional<SpatialIndex> gt_index;
  if (!a.gt_scene.empty() && !a.shared_scene) gt_index.emplace(load_scene(a.gt_scene, a.normals_k));
  const SceneQuery pred_query(pred_index);
  const SceneQuery gt_query(gt_index ? *gt_index : pred_index);

  json humans = json::array();
  std::ostringstream csv;
  csv << std::setprecision(17);
  for (size_t i = 0; i < pred.humans.size(); ++i) {
    const EvalReport r = evaluate(model, pred.humans[i], pred_query, gt.humans[i], gt_query, a.tau);
    humans.push_back(report_json(r));
    csv << i << "," << a.tau << "," << r.prf.precision << "," << r.prf.recall << "," << r.prf.f1 << "," << r.v2s_mm
        << ",";
    if (r.d2s_defined) csv << r.d2s_deg;
    csv << "," << r.pa_mpjpe_mm << "\n";
  }
  const json report = {{"tau_m", a.tau}, {"humans", humans}};
  if (!a.out.empty()) {
    write_json(a.out, report);
  } else {
    out << report.dump(2) << "\n";
  }
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv);
    std::ofstream f(a.csv, std::ios::app);
    if (!f) fail(ErrorCode::IoError, "cannot write '" + a.csv + "'");
    if (fresh) f << "human,tau_m,precision,recall,f1,v2s_mm,d2s_deg,pa_mpjpe_mm\n";
    f << csv.str();
  }
}

struct ProbeArgs {
  std::string model, scene, state, out;
  int human = -1;
  int normals_k = kDefaultNormalNeighbors;
};

void cmd_probe_dump(const ProbeArgs& a, std::ostream& out) {
  const BodyModel model = load_model(a.model);
  const SpatialIndex index(load_scene(a.scene, a.normals_k));
  const StateDocument doc = load_state_document(a.state);
  const SceneQuery query(index);
  json humans = json::array();
  for (size_t i = 0; i < doc.humans.size(); ++i) {
    if (a.human >= 0 && static_cast<int>(i) != a.human) continue;
    const TokenProbes probes = compute_probes(model, forward(model, doc.humans[i]), query);
    json tokens = json::array();
    for (int k = 0; k < kNumTokens; ++k) {
      json records = json::array();
      for (const ProbeRecord& r : probes.probes[k]) {
        records.push_back({{"anchor", vec3_json(r.anchor)}, {"nearest", vec3_json(r.nearest)},
                           {"offset", vec3_json(r.offset)}, {"normal", vec3_json(r.normal)},
                           {"body_relative", vec3_json(r.body_relative)}, {"point_id", r.point_id}});
      }
      const char* kind = k < kBodyJoints ? "body" : (k < kFullBodyToken ? "hand" : "full_body");
      tokens.push_back({{"token", k}, {"kind", kind}, {"probes", records}});
    }
    humans.push_back({{"human", i}, {"tokens", tokens}});
  }
  if (a.human >= static_cast<int>(doc.humans.size())) fail(ErrorCode::UsageError, "--human out of range");
  const json j = {{"humans", humans}};
  if (!a.out.empty()) {
    write_json(a.out, j);
  } else {
    out << j.dump(2) << "\n";
  }
}

struct InitArgs {
  uint64_t seed = 0;
  std::string out;
  std::string arch = "standard";
  bool zero = false;
  bool random_decoder = false;
};

void cmd_init_weights(const InitArgs& a, std::ostream& out) {
  const ArchConfig arch = a.arch == "micro" ? ArchConfig::micro() : ArchConfig::standard();
  Weights::InitOptions options;
  options.zero_decoder_outputs = !a.random_decoder;
  const Weights w = a.zero ? Weights::zeros(arch) : Weights::random(arch, a.seed, options);
  w.save(a.out);
  out << json{{"out", a.out}, {"arch", a.arch}, {"parameters", w.parameter_count()}}.dump() << "\n";
}

struct TrainArgs {
  std::string task = "floor-contact";
  int iters = 200;
  uint64_t seed = 0;
  std::string out, curve;
  int batch = 0;
  double lr = 0.0;
  bool no_scale_augment = false;
  std::vector<std::string> trainable;
};

void cmd_train_micro(const TrainArgs& a, std::ostream& out) {
  const TrainingTask task = make_training_task(a.task, a.seed);
  MicroTrainConfig config;
  config.iterations = a.iters;
  config.seed = a.seed;
  if (a.batch > 0) config.batch_size = a.batch;
  if (a.lr > 0) config.peak_lr = a.lr;
  if (a.no_scale_augment) config.scale_augment = false;
  if (!a.trainable.empty()) config.trainable = a.trainable;
  const auto start = std::chrono::steady_clock::now();
  const MicroTrainResult r = micro_train(task, config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.weights.save(a.out);
  if (!a.curve.empty()) {
    std::ostringstream csv;
    csv << "iteration,lr,rollout_steps,loss\n" << std::setprecision(17);
    for (const CurveRow& row : r.curve) csv << row.iteration << "," << row.lr << "," << row.rollout << "," << row.loss << "\n";
    write_text_file(a.curve, csv.str());
  }
  out << json{{"out", a.out},
              {"iterations", a.iters},
              {"initial_loss", r.curve.front().loss},
              {"final_loss", r.curve.back().loss},
              {"seconds", seconds}}
             .dump()
      << "\n";
}

struct CurveArgs {
  std::string model, scene, init, gt, weights, grids, out;
  int iters = 10;
  bool geometry_only = false;
  double tau = kDefaultContactTau;
  int normals_k = kDefaultNormalNeighbors;
};

void cmd_curve(const CurveArgs& a, std::ostream& out) {
  const BodyModel model = load_model(a.model);
  const SpatialIndex index(load_scene(a.scene, a.normals_k));
  const StateDocument init = load_state_document(a.init);
  const StateDocument gt = load_state_document(a.gt);
  if (gt.humans.size() != init.humans.size()) fail(ErrorCode::LengthMismatch, "gt and init differ in human count");
  const Weights weights = Weights::load(a.weights);
  std::optional<FeatureGrids> grids;
  if (!a.grids.empty()) grids = FeatureGrids::load(a.grids);
  RefinementConfig config;
  config.iterations = a.iters;
  config.geometry_only = a.geometry_only;
  const RefinementContext ctx{model, index, weights, grids ? &*grids : nullptr};
  const auto results = refine(ctx, init.humans, config);

  const SceneQuery query(index);
  const auto n = static_cast<double>(results.size());
  std::ostringstream csv;
  csv << "step,f1,mean_probe_dist_mm,wall_ms\n" << std::setprecision(10);
  for (int t = 0; t <= a.iters; ++t) {
    double f1 = 0.0, dist = 0.0, ms = 0.0;
    for (size_t i = 0; i < results.size(); ++i) {
      const TrajectoryEntry& e = results[i].trajectory[t];
      const auto gt_labels = contact_labels(model, forward(model, gt.humans[i]), query, a.tau);
      f1 += contact_prf(contact_labels(model, forward(model, e.state), query, a.tau), gt_labels).f1 / n;
      dist += 1000.0 * e.mean_probe_distance / n;
      ms += e.wall_ms;
    }
    csv << t << "," << f1 << "," << dist << "," << ms << "\n";
  }
  write_text_file(a.out, csv.str());
  out << json{{"out", a.out}, {"iterations", a.iters}}.dump() << "\n";
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"graft: scene-grounded refinement of parametric human states"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic scenario");
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out)->required();
  s->add_option("--difficulty", synth.difficulty)->check(CLI::NonNegativeNumber);
  s->add_option("--placement", synth.placement)->check(CLI::IsMember({"standing", "seated"}));
  s->add_flag("--no-wall", synth.no_wall);
  s->add_option("--grids", synth.grids, "Also write random feature grids")->check(CLI::IsMember({"none", "micro", "standard"}));
  s->add_option("--patch-size", synth.patch)->check(CLI::PositiveNumber);

  RefineArgs ref;
  auto* r = app.add_subcommand("refine", "Refine human states against a scene");
  r->add_option("--model", ref.model)->required();
  r->add_option("--scene", ref.scene)->required();
  r->add_option("--init", ref.init)->required();
  r->add_option("--weights", ref.weights)->required();
  r->add_option("--grids", ref.grids);
  r->add_option("--gt", ref.gt, "Ground truth for the f1_vs_gt column");
  r->add_option("--out", ref.out)->required();
  r->add_option("--iters", ref.iters)->check(CLI::NonNegativeNumber);
  r->add_flag("--geometry-only", ref.geometry_only);
  r->add_flag("--align", ref.align, "Depth-ratio alignment before refinement");
  r->add_option("--align-cloud", ref.align_cloud, "Cloud containing the human (defaults to --scene)");
  r->add_option("--max-points", ref.max_points)->check(CLI::NonNegativeNumber);
  r->add_option("--normals-k", ref.normals_k)->check(CLI::Range(3, 1000000));
  r->add_option("--contact-tau", ref.tau)->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Contact, V2S, D2S and PA-MPJPE metrics");
  e->add_option("--model", ev.model)->required();
  e->add_option("--pred", ev.pred)->required();
  e->add_option("--gt", ev.gt)->required();
  e->add_option("--scene", ev.scene)->required();
  e->add_option("--gt-scene", ev.gt_scene, "Scene paired with the ground truth (defaults to --scene)");
  e->add_flag("--shared-scene", ev.shared_scene, "Evaluate both states against --scene");
  e->add_option("--contact-tau", ev.tau)->check(CLI::PositiveNumber);
  e->add_option("--out", ev.out);
  e->add_option("--csv", ev.csv);
  e->add_option("--normals-k", ev.normals_k)->check(CLI::Range(3, 1000000));

  ProbeArgs pd;
  auto* p = app.add_subcommand("probe-dump", "Print per-token probe records");
  p->add_option("--model", pd.model)->required();
  p->add_option("--scene", pd.scene)->required();
  p->add_option("--state", pd.state)->required();
  p->add_option("--human", pd.human);
  p->add_option("--out", pd.out);
  p->add_option("--normals-k", pd.normals_k)->check(CLI::Range(3, 1000000));

  InitArgs in;
  auto* i = app.add_subcommand("init-weights", "Write a seeded weight container");
  i->add_option("--seed", in.seed);
  i->add_option("--out", in.out)->required();
  i->add_option("--arch", in.arch)->check(CLI::IsMember({"standard", "micro"}));
  i->add_flag("--zero", in.zero, "All parameters zero");
  i->add_flag("--random-decoder", in.random_decoder, "Do not zero the decoder output layers");

  TrainArgs tr;
  auto* t = app.add_subcommand("train-micro", "Finite-difference training of a micro network");
  t->add_option("--task", tr.task)->check(CLI::IsMember({"floor-contact", "zero-noise"}));
  t->add_option("--iters", tr.iters)->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed);
  t->add_option("--out", tr.out)->required();
  t->add_option("--curve", tr.curve);
  t->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.lr, "Peak learning rate")->check(CLI::PositiveNumber);
  t->add_flag("--no-scale-augment", tr.no_scale_augment);
  t->add_option("--trainable", tr.trainable, "Parameter name prefixes to train")->delimiter(',');

  CurveArgs cv;
  auto* c = app.add_subcommand("curve", "F1 and runtime per refinement iteration");
  c->add_option("--model", cv.model)->required();
  c->add_option("--scene", cv.scene)->required();
  c->add_option("--init", cv.init)->required();
  c->add_option("--gt", cv.gt)->required();
  c->add_option("--weights", cv.weights)->required();
  c->add_option("--grids", cv.grids);
  c->add_option("--out", cv.out)->required();
  c->add_option("--iters", cv.iters)->check(CLI::NonNegativeNumber);
  c->add_flag("--geometry-only", cv.geometry_only);
  c->add_option("--contact-tau", cv.tau)->check(CLI::PositiveNumber);
  c->add_option("--normals-k", cv.normals_k)->check(CLI::Range(3, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& ex) {
    report_error(err, error_code_name(ErrorCode::UsageError), ex.what());
    return 2;
  }

  try {
    if (s->parsed()) cmd_synth(synth, out);
    if (r->parsed()) cmd_refine(ref, out);
    if (e->parsed()) cmd_eval(ev, out);
    if (p->parsed()) cmd_probe_dump(pd, out);
    if (i->parsed()) cmd_init_weights(in, out);
    if (t->parsed()) cmd_train_micro(tr, out);
    if (c->parsed()) cmd_curve(cv, out);
  } catch (const Error& ex) {
    report_error(err, ex.code_name(), ex.what());
    return ex.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& ex) {
    report_error(err, "InternalError", ex.what());
    return 1;
  }
  return 0;
}

}  // namespace graft
