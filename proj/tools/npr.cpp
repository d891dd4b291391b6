// npr: hybrid neural point renderer CLI.
//
// Subcommands: synth | ingest | render | bench | verify
// Exit codes: 0 ok, 1 verification failure, 2 usage, 3 I/O or bad input.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "npr/clouds.hpp"
#include "npr/config.hpp"
#include "npr/fusion.hpp"
#include "npr/gaussians.hpp"
#include "npr/losses.hpp"
#include "npr/pipeline.hpp"
#include "npr/raster.hpp"
#include "npr/scene.hpp"
#include "npr/stq.hpp"
#include "npr/verify.hpp"
#include "npr/volume.hpp"
#include "npr/weights_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) npr::raise(npr::Errc::io_error, "cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) npr::raise(npr::Errc::io_error, "cannot open " + path + " for writing");
  os << text;
}

struct CommonArgs {
  std::string config_path;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

npr::EngineConfig load_config(const CommonArgs& args) {
  npr::EngineConfig cfg;
  if (!args.config_path.empty()) cfg = npr::EngineConfig::load(args.config_path);
  if (args.threads > 0) cfg.threads = args.threads;
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

npr::Pose resolve_pose(const std::string& pose_arg, const npr::SceneSpec* scene) {
  if (pose_arg.empty()) npr::raise(npr::Errc::invalid_spec, "--pose is required");
  const bool is_index = pose_arg.find_first_not_of("0123456789") == std::string::npos;
  if (is_index) {
    if (!scene) npr::raise(npr::Errc::invalid_spec, "--pose index needs --scene");
    const size_t idx = std::stoul(pose_arg);
    if (idx >= scene->trajectory.size()) {
      npr::raise(npr::Errc::invalid_spec, "pose index out of range");
    }
    return npr::Pose::from_position_yaw(scene->trajectory[idx].position,
                                        scene->trajectory[idx].base_yaw);
  }
  return npr::Pose::from_json(read_file(pose_arg));
}

// ---- subcommands -------------------------------------------------------

int cmd_synth(const std::string& out_dir, const CommonArgs& common, int steps, int resolution,
              double gauss_scale) {
  npr::EngineConfig cfg = load_config(common);
  fs::create_directories(out_dir);
  const npr::SceneSpec scene = npr::make_default_scene(cfg.seed, steps, resolution);
  write_file(out_dir + "/scene.json", scene.to_json());

  // Size the selection to the ingest spacing: peak-only selection
  // (tau = 1 silences the quantile filter) with a radius near the
  // densest spacing resamples the overlapping panorama views uniformly
  // without starving distant surfaces.
  if (common.config_path.empty()) npr::tune_selection(cfg, scene);
  cfg.save(out_dir + "/config.toml");
  npr::save_pipeline(out_dir + "/weights.tnw",
                     npr::default_render_weights(cfg, scene, gauss_scale));

  // analytic ground-truth renders for the trajectory poses
  fs::create_directories(out_dir + "/gt");
  const npr::CameraIntrinsics intr = cfg.intrinsics();
  for (size_t s = 0; s < scene.trajectory.size(); ++s) {
    npr::Image rgb, depth;
    const npr::Pose pose = npr::Pose::from_position_yaw(scene.trajectory[s].position,
                                                        scene.trajectory[s].base_yaw);
    npr::render_ground_truth(scene, intr, pose, rgb, depth);
    char name[64];
    std::snprintf(name, sizeof(name), "/gt/step%03zu.ppm", s);
    npr::write_ppm(out_dir + name, rgb);
  }
  std::cout << "scene: " << out_dir << "/scene.json (" << scene.trajectory.size() << " steps, "
            << scene.primitives.size() << " primitives)\n";
  std::cout << "weights: " << out_dir << "/weights.tnw\n";
  return 0;
}

int cmd_ingest(const std::string& scene_path, const std::string& out_dir,
               const CommonArgs& common) {
  const npr::EngineConfig cfg = load_config(common);
  const npr::SceneSpec scene = npr::SceneSpec::from_json(read_file(scene_path));
  const npr::IngestResult result = npr::ingest_scene(scene, cfg);
  fs::create_directories(out_dir);
  npr::save_cloud(out_dir + "/points.npcd", result.points);
  npr::save_cloud(out_dir + "/features.npcd", result.features);

  json manifest{{"points", result.points.size()},
                {"features", result.features.size()},
                {"feature_dim", result.features.dim},
                {"steps", scene.trajectory.size()},
                {"resolution", scene.resolution},
                {"ingest_ms", result.millis}};
  write_file(out_dir + "/ingest.json", manifest.dump(2));
  std::cout << "ingested " << result.points.size() << " points, " << result.features.size()
            << " feature entries -> " << out_dir << "\n";
  return 0;
}

struct RenderInputs {
  npr::PointCloudB points;
  npr::FeatureCloudM features;
  std::optional<npr::SceneSpec> scene;
};

RenderInputs load_render_inputs(const std::string& scene_path, const std::string& cloud_dir,
                                const npr::EngineConfig& cfg) {
  RenderInputs in;
  if (!cloud_dir.empty()) {
    in.points = npr::load_point_cloud(cloud_dir + "/points.npcd");
    in.features = npr::load_feature_cloud(cloud_dir + "/features.npcd");
    if (!scene_path.empty()) in.scene = npr::SceneSpec::from_json(read_file(scene_path));
  } else if (!scene_path.empty()) {
    in.scene = npr::SceneSpec::from_json(read_file(scene_path));
    npr::IngestResult r = npr::ingest_scene(*in.scene, cfg);
    in.points = std::move(r.points);
    in.features = std::move(r.features);
  } else {
    npr::raise(npr::Errc::invalid_spec, "render needs --cloud or --scene");
  }
  return in;
}

int cmd_render(const std::string& scene_path, const std::string& cloud_dir,
               const std::string& weights_path, const std::string& pose_arg,
               const std::string& mode, const std::string& out_dir, const CommonArgs& common) {
  npr::EngineConfig cfg = load_config(common);
  cfg.raster.threads = cfg.threads;
  fs::create_directories(out_dir);

  const RenderInputs in = load_render_inputs(scene_path, cloud_dir, cfg);
  const npr::PipelineWeights weights = npr::load_pipeline(weights_path);
  if (weights.feature_dim != in.features.dim && in.features.size() > 0 && mode != "splat") {
    npr::raise(npr::Errc::dim_mismatch, "weights feature dim does not match the feature cloud");
  }
  const npr::Pose pose = resolve_pose(pose_arg, in.scene ? &*in.scene : nullptr);
  const npr::CameraIntrinsics intr = cfg.intrinsics();

  json manifest{{"mode", mode},
                {"points", in.points.size()},
                {"features", in.features.size()},
                {"config", json::parse("{}")}};
  manifest["config"]["width"] = cfg.width;
  manifest["config"]["height"] = cfg.height;
  manifest["config"]["k"] = cfg.sampling.k;
  manifest["config"]["samples_per_ray"] = cfg.sampling.samples_per_ray;
  manifest["config"]["tau"] = cfg.sampling.tau;
  manifest["config"]["radius"] = cfg.sampling.radius;

  npr::Image splat_image;
  std::vector<double> fused;

  if (mode == "splat" || mode == "stu") {
    const auto t0 = Clock::now();
    const npr::SelectedPoints sel = npr::density_peak_select(in.points, cfg.sampling);
    manifest["selected"] = sel.size();
    manifest["select_ms"] = ms_since(t0);

    const auto t1 = Clock::now();
    const std::vector<double> desc =
        npr::point_descriptor(sel.positions, sel.colors, weights.descriptor);
    const auto [img_set, feat_set] = npr::make_gaussians(sel, desc, weights.heads);
    manifest["gaussians"] = img_set.size();
    manifest["regress_ms"] = ms_since(t1);

    const auto t2 = Clock::now();
    const std::vector<float> bg(3, 0.0f);
    const npr::RenderedView view = npr::rasterize(img_set, pose, intr, bg, cfg.raster);
    manifest["splat_ms"] = ms_since(t2);
    manifest["skipped_singular"] = view.skipped_singular;
    splat_image = view.pixels;
    npr::write_ppm(out_dir + "/image.ppm", view.pixels);

    if (mode == "stu") {
      const std::vector<float> bgf(feat_set.payload_dim, 0.0f);
      const npr::RenderedView fview = npr::rasterize(feat_set, pose, intr, bgf, cfg.raster);
      npr::write_fmap(out_dir + "/fmap_splat.bin", fview.pixels);
      const std::vector<double> f_g_rf =
          npr::fuse_stu(view.pixels, fview.pixels, weights.encoder_image,
                        weights.encoder_feature, weights.fuse, cfg.patch);

      const npr::Image f_f =
          npr::render_feature_view(pose, cfg.grid_intrinsics(), in.features, cfg.sampling,
                                   npr::volume_nets(weights), cfg.threads);
      npr::write_fmap(out_dir + "/fmap_volume.bin", f_f);
      const std::vector<double> f_n_f = npr::encode_nerf_feature(f_f, weights.encoder_nerf);
      const npr::ViewEmbedding combined = npr::combine_view(f_g_rf, f_n_f);
      fused = combined.combined;
      json emb{{"embedding", combined.combined},
               {"f_g_rf", combined.splat},
               {"f_n_f", combined.nerf},
               {"dim", combined.combined.size()}};
      write_file(out_dir + "/embedding.json", emb.dump());
      manifest["embedding_dim"] = combined.combined.size();
    }
  } else if (mode == "volume") {
    const auto t0 = Clock::now();
    const npr::Image f_f =
        npr::render_feature_view(pose, cfg.grid_intrinsics(), in.features, cfg.sampling,
                                 npr::volume_nets(weights), cfg.threads);
    manifest["volume_ms"] = ms_since(t0);
    npr::write_fmap(out_dir + "/fmap.bin", f_f);
  } else {
    npr::raise(npr::Errc::invalid_spec, "unknown mode " + mode);
  }

  // analytic reference and loss report when the scene is available
  if (in.scene && (mode == "splat" || mode == "stu")) {
    npr::Image gt_rgb, gt_depth;
    npr::render_ground_truth(*in.scene, intr, pose, gt_rgb, gt_depth);
    npr::write_ppm(out_dir + "/gt.ppm", gt_rgb);
    manifest["psnr_db"] = npr::psnr(splat_image, gt_rgb);

    npr::LossReport losses;
    losses.l1_r = npr::l1_loss(splat_image, gt_rgb);
    losses.l2_r = npr::l2_loss(splat_image, gt_rgb);
    losses.ssim_r = 1.0 - npr::ssim(splat_image, gt_rgb);
    if (mode == "stu") {
      // feature term: fused embedding against the encoded analytic image
      const std::vector<double> gt_tokens =
          npr::encode_tokens(gt_rgb, cfg.patch, weights.encoder_image);
      const int d = weights.encoder_image.out_dim();
      const int n = static_cast<int>(gt_tokens.size()) / d;
      std::vector<double> gt_embed(d, 0.0);
      for (int t = 0; t < n; ++t) {
        for (int c = 0; c < d; ++c) gt_embed[c] += gt_tokens[static_cast<size_t>(t) * d + c];
      }
      for (double& v : gt_embed) v /= n;
      losses.l2_f = npr::cosine_feature_loss(fused, gt_embed);
    }
    losses.pretrain_total =
        npr::pretrain_total({losses.l1_r, losses.l2_r, losses.ssim_r, losses.l2_f});
    write_file(out_dir + "/losses.json", losses.to_json());
  }

  write_file(out_dir + "/manifest.json", manifest.dump(2));
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

int cmd_bench(const std::string& scene_path, const std::string& out_path,
              const CommonArgs& common, int runs, int warmup) {
  npr::EngineConfig cfg = load_config(common);
  if (runs > 0) cfg.bench_runs = runs;
  if (warmup > 0) cfg.bench_warmup = warmup;

  // fixed scene: 3 panoramic steps at 53x53 give 12*53^2*3 ~= 1e5 points
  const npr::SceneSpec scene = scene_path.empty()
                                   ? npr::make_default_scene(cfg.seed, 3, 53)
                                   : npr::SceneSpec::from_json(read_file(scene_path));
  const npr::BenchReport report = npr::run_render_benchmark(cfg, scene);
  const std::string text = report.to_json();
  if (!out_path.empty()) write_file(out_path, text);
  std::cout << text << "\n";
  return 0;
}

int cmd_verify(const std::string& out_dir, const CommonArgs& common) {
  const npr::EngineConfig cfg = load_config(common);
  const std::string scratch = out_dir.empty() ? "verify_scratch" : out_dir;
  const npr::VerifyReport report = npr::run_verify_suite(scratch, cfg.threads);
  for (const npr::CheckResult& r : report.results) {
    std::printf("[%s] %-36s (%.1f ms)%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.millis, r.passed ? "" : " ", r.detail.c_str());
  }
  write_file(scratch + "/verify_report.xml", npr::junit_xml(report));
  std::printf("%zu checks, %d failures\n", report.results.size(), report.failures());
  return report.failures() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"npr: hybrid neural point renderer"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonArgs common;
  app.add_option("--config", common.config_path, "TOML config file")->capture_default_str();
  app.add_option("--threads", common.threads, "worker threads (0 = all cores)");
  auto* seed_opt = app.add_option("--seed", common.seed, "RNG seed");

  std::string out_dir = "out", scene_path, cloud_dir, weights_path, pose_arg, mode = "splat";
  std::string bench_out;
  int steps = 5, resolution = 64, runs = 0, warmup = 0;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene + weights");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--steps", steps, "trajectory steps");
  synth->add_option("--res", resolution, "ingest view resolution");
  double gauss_scale = 0.3;
  synth->add_option("--gauss-scale", gauss_scale,
                    "Gaussian footprint as a multiple of the point spacing")
      ->capture_default_str();

  CLI::App* ingest = app.add_subcommand("ingest", "build point/feature clouds from a scene");
  ingest->add_option("--scene", scene_path, "scene json")->required();
  ingest->add_option("--out", out_dir, "output directory")->required();

  CLI::App* render = app.add_subcommand("render", "render a pose from the clouds");
  render->add_option("--scene", scene_path, "scene json (ingests on the fly)");
  render->add_option("--cloud", cloud_dir, "directory with points.npcd/features.npcd");
  render->add_option("--weights", weights_path, "TNW1 weight bundle")->required();
  render->add_option("--pose", pose_arg, "trajectory index or pose json file")->required();
  render->add_option("--mode", mode, "splat | volume | stu")->capture_default_str();
  render->add_option("--out", out_dir, "output directory")->required();

  CLI::App* bench = app.add_subcommand("bench", "splat vs volume frame-time benchmark");
  bench->add_option("--scene", scene_path, "scene json (default: built-in 1e5-point scene)");
  bench->add_option("--out", bench_out, "report json path");
  bench->add_option("--runs", runs, "measured runs (min 10)");
  bench->add_option("--warmup", warmup, "warmup runs (min 3)");

  CLI::App* verify = app.add_subcommand("verify", "run the reference-oracle self checks");
  verify->add_option("--out", out_dir, "scratch/report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  common.seed_set = seed_opt->count() > 0;

  try {
    if (synth->parsed()) return cmd_synth(out_dir, common, steps, resolution, gauss_scale);
    if (ingest->parsed()) return cmd_ingest(scene_path, out_dir, common);
    if (render->parsed()) {
      return cmd_render(scene_path, cloud_dir, weights_path, pose_arg, mode, out_dir, common);
    }
    if (bench->parsed()) return cmd_bench(scene_path, bench_out, common, runs, warmup);
    if (verify->parsed()) return cmd_verify(out_dir, common);
  } catch (const npr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
