// Copyright 2026 The partlift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// partlift command-line front end.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "partlift/eval/iou.hpp"
#include "partlift/pipeline/pipeline.hpp"
#include "partlift/pipeline/prepare_db.hpp"
#include "partlift/synth/dataset.hpp"

namespace {

namespace fs = std::filesystem;
using namespace partlift;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct RunArgs {
  std::string config_path;
  PipelineConfig cfg;
  std::string metric = "standard";
  std::string search = "coarse_to_fine";
  int resolution = 0;
};

// Registers one flag per config field. Values parsed from the command line
// land in `args.cfg` only for flags the user actually passed (see apply_flags).
void add_run_command(CLI::App& app, RunArgs& args, std::vector<CLI::Option*>& flags) {
  auto* run = app.add_subcommand("run", "Label a point cloud from its rendered views");
  auto& c = args.cfg;
  run->add_option("--config", args.config_path, "JSON config document; explicit flags override it");
  flags = {
      run->add_option("--database-dir", c.database_dir, "Labeled database directory"),
      run->add_option("--views-dir", c.views_dir, "Query views directory"),
      run->add_option("--output-dir", c.output_dir, "Where labels.tbt, metrics.json and labels.ply go"),
      run->add_option("--views", c.views, "Number of views to use"),
      run->add_option("--width", c.width, "Render width in pixels"),
      run->add_option("--height", c.height, "Render height in pixels"),
      run->add_option("--resolution", args.resolution, "Sets width and height"),
      run->add_option("--k-samples", c.k_samples, "Sampled pixels per mask"),
      run->add_option("--cutoff", c.cutoff, "Dominance cutoff for every vote"),
      run->add_option("--conflict-tolerance", c.conflict_tolerance, "Allowed conflicting pairs per mask"),
      run->add_option("--min-shared-points", c.min_shared_points, "Shared points needed for a graph edge"),
      run->add_option("--coarse-ratio", c.coarse_ratio, "Coarse/fine stride ratio for pooled grids"),
      run->add_option("--window", c.window, "Coarse-to-fine window in coarse cells (odd)"),
      run->add_option("--splat-radius", c.splat_radius, "Point splat radius in pixels"),
      run->add_option("--graph-depth", c.graph_depth, "Neighborhood depth for label aggregation"),
      run->add_option("--seed", c.seed, "Sampling seed"),
      run->add_option("--metric", args.metric, "standard or partnete"),
      run->add_option("--search", args.search, "coarse_to_fine or brute_force"),
      run->add_option("--threads", c.threads, "Worker threads (0 = all cores)"),
      run->add_flag("--debug-graph", c.debug_graph, "Also write graph.json"),
      run->add_option("--cache", c.cache_dir, "Cache directory for mask labels"),
  };
}

PipelineConfig resolve_config(const RunArgs& args, const std::vector<CLI::Option*>& flags) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg.merge_json(PipelineConfig::load_document(args.config_path));
  const auto given = [&](const char* name) {
    for (auto* o : flags)
      if (o->check_lname(name) && o->count() > 0) return true;
    return false;
  };
  const auto& c = args.cfg;
  if (given("database-dir")) cfg.database_dir = c.database_dir;
  if (given("views-dir")) cfg.views_dir = c.views_dir;
  if (given("output-dir")) cfg.output_dir = c.output_dir;
  if (given("views")) cfg.views = c.views;
  if (given("resolution")) cfg.width = cfg.height = args.resolution;
  if (given("width")) cfg.width = c.width;
  if (given("height")) cfg.height = c.height;
  if (given("k-samples")) cfg.k_samples = c.k_samples;
  if (given("cutoff")) cfg.cutoff = c.cutoff;
  if (given("conflict-tolerance")) cfg.conflict_tolerance = c.conflict_tolerance;
  if (given("min-shared-points")) cfg.min_shared_points = c.min_shared_points;
  if (given("coarse-ratio")) cfg.coarse_ratio = c.coarse_ratio;
  if (given("window")) cfg.window = c.window;
  if (given("splat-radius")) cfg.splat_radius = c.splat_radius;
  if (given("graph-depth")) cfg.graph_depth = c.graph_depth;
  if (given("seed")) cfg.seed = c.seed;
  if (given("metric")) cfg.metric = parse_metric_mode(args.metric);
  if (given("search")) cfg.search = PipelineConfig::parse_search_mode(args.search);
  if (given("threads")) cfg.threads = c.threads;
  if (given("debug-graph")) cfg.debug_graph = c.debug_graph;
  if (given("cache")) cfg.cache_dir = c.cache_dir;
  cfg.validate();
  return cfg;
}

int cmd_run(const RunArgs& args, const std::vector<CLI::Option*>& flags) {
  const auto cfg = resolve_config(args, flags);
  const auto res = run_pipeline(cfg);
  std::cout << "labeled " << res.counters.points_labeled << "/" << res.counters.points << " points";
  if (res.standard) {
    std::printf(", mIoU standard %.4f partnete %.4f", res.standard->category_miou, res.partnete->category_miou);
  }
  std::cout << "\nwrote " << (cfg.output_dir / kOutputMetrics).string() << "\n";
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& gt, const std::string& vocab, const std::string& metric) {
  const auto p = labels_from(load_tensor(pred), pred);
  const auto g = labels_from(load_tensor(gt), gt);
  const auto v = PartVocabulary::load(vocab);
  const auto parts = all_parts(v);
  nlohmann::json out;
  const auto emit = [&](MetricMode m) { return object_report(p, g, parts, m).to_json(&v); };
  if (metric == "both") {
    out = {{"standard", emit(MetricMode::kStandard)}, {"partnete", emit(MetricMode::kPartNetE)}};
  } else {
    out = emit(parse_metric_mode(metric));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_export_ply(const std::string& cloud_path, const std::string& labels_path, const std::string& out_path) {
  PointCloud cloud;
  cloud.positions = PointCloud::positions_from(load_tensor(cloud_path));
  const auto labels = labels_from(load_tensor(labels_path), labels_path);
  const auto text = export_ply(cloud, labels);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + out_path, 0);
  return 0;
}

struct PrepareArgs {
  std::string image, mask, labels, out;
  std::vector<int> bbox;
  PrepareOptions opts;
};

int cmd_prepare_db(const PrepareArgs& a) {
  const Tensor image = load_tensor(a.image);
  const Tensor mask = load_tensor(a.mask);
  expect_tensor(mask, DType::kU8, 2, a.mask);
  const auto labels = load_tensor(a.labels);
  expect_tensor(labels, DType::kI32, 2, a.labels);
  if (a.bbox.size() != 4) throw ValidationError("--bbox needs x0,y0,x1,y1");
  const BoundingBox box{a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]};
  const auto mask_v = mask.values<std::uint8_t>();
  const auto label_v = labels.values<std::int32_t>();
  const auto outcome = prepare_database_image(image, mask_v, label_v, box, a.opts);
  if (!outcome.prepared) {
    std::cout << "rejected: " << outcome.reject_reason << "\n";
    return 0;
  }
  const auto& p = *outcome.prepared;
  fs::create_directories(a.out);
  save_tensor(p.image, fs::path(a.out) / "image.tbt");
  save_tensor(Tensor::from<std::int32_t>({static_cast<std::uint32_t>(p.window.height),
                                          static_cast<std::uint32_t>(p.window.width)},
                                         p.labels),
              fs::path(a.out) / layout::kLabels);
  std::ofstream crop(fs::path(a.out) / "crop.json", std::ios::trunc);
  crop << nlohmann::json{{"x", p.window.x}, {"y", p.window.y}, {"width", p.window.width}, {"height", p.window.height}}
              .dump()
       << "\n";
  std::cout << "crop " << p.window.width << "x" << p.window.height << " at (" << p.window.x << ", " << p.window.y
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partlift: multi-view part label lifting for point clouds"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::vector<CLI::Option*> run_flags;
  add_run_command(app, run_args, run_flags);

  synth::DatasetOptions synth_opts;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic stacked-box dataset");
  synth_cmd->add_option("--out", synth_out, "Output root (gets database/ and query/)")->required();
  synth_cmd->add_option("--parts", synth_opts.parts, "Number of stacked parts");
  synth_cmd->add_option("--views", synth_opts.views, "Query views");
  synth_cmd->add_option("--database-views", synth_opts.database_views, "Database images");
  synth_cmd->add_option("--resolution", synth_opts.resolution, "Square render size");
  synth_cmd->add_option("--points", synth_opts.points, "Cloud size");
  synth_cmd->add_option("--channels", synth_opts.channels, "Feature channels");
  synth_cmd->add_option("--sigma", synth_opts.sigma, "Feature noise level");
  synth_cmd->add_option("--fine-stride", synth_opts.fine_stride, "Feature grid stride in pixels");
  synth_cmd->add_option("--seed", synth_opts.seed, "Scene seed");

  std::string pred, gt, vocab, metric = "both";
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted point labels");
  eval_cmd->add_option("--pred", pred, "Predicted labels (i32 TBT1)")->required();
  eval_cmd->add_option("--gt", gt, "Ground-truth labels (i32 TBT1)")->required();
  eval_cmd->add_option("--vocab", vocab, "vocabulary.json")->required();
  eval_cmd->add_option("--metric", metric, "standard, partnete or both");

  std::string ply_cloud, ply_labels, ply_out;
  auto* ply_cmd = app.add_subcommand("export-ply", "Write a label-colored ASCII PLY");
  ply_cmd->add_option("--cloud", ply_cloud, "Positions (f32 [N,3] TBT1)")->required();
  ply_cmd->add_option("--labels", ply_labels, "Labels (i32 [N] TBT1)")->required();
  ply_cmd->add_option("--out", ply_out, "Output .ply path")->required();

  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare-db", "Crop and mask one annotated database image");
  prep_cmd->add_option("--image", prep.image, "u8 [H,W,C] TBT1")->required();
  prep_cmd->add_option("--mask", prep.mask, "u8 [H,W] object mask")->required();
  prep_cmd->add_option("--labels", prep.labels, "i32 [H,W] part labels")->required();
  prep_cmd->add_option("--bbox", prep.bbox, "x0,y0,x1,y1 (half-open)")->required()->delimiter(',');
  prep_cmd->add_option("--pad", prep.opts.pad, "Padding on each side");
  prep_cmd->add_option("--min-area", prep.opts.min_area_fraction, "Minimum mask area as image fraction");
  prep_cmd->add_option("--out", prep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_args, run_flags);
    if (synth_cmd->parsed()) {
      const auto paths = synth::write_dataset(synth_out, synth_opts);
      std::cout << "database " << paths.database_dir.string() << "\nquery " << paths.views_dir.string() << "\n";
      return 0;
    }
    if (eval_cmd->parsed()) return cmd_eval(pred, gt, vocab, metric);
    if (ply_cmd->parsed()) return cmd_export_ply(ply_cloud, ply_labels, ply_out);
    if (prep_cmd->parsed()) return cmd_prepare_db(prep);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
