// Acceptance suite: one criterion per check, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "npr/fusion.hpp"
#include "npr/gaussians.hpp"
#include "npr/losses.hpp"
#include "npr/pipeline.hpp"
#include "npr/raster.hpp"
#include "npr/reference.hpp"
#include "npr/stq.hpp"
#include "npr/volume.hpp"

using namespace npr;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string name;
  std::function<std::string()> run;  // returns "" on pass, reason on failure
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

GaussianSet random_gaussians(std::uint64_t seed, int m) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.5, 1.5);
  std::uniform_real_distribution<double> uz(2.0, 6.0);
  std::uniform_real_distribution<double> us(0.05, 0.4);
  std::uniform_real_distribution<double> ua(0.1, 0.95);
  std::normal_distribution<double> n(0.0, 1.0);
  GaussianSet set;
  set.payload_dim = 3;
  for (int i = 0; i < m; ++i) {
    set.positions.insert(set.positions.end(),
                         {static_cast<float>(ux(rng)), static_cast<float>(ux(rng)),
                          static_cast<float>(uz(rng))});
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    set.rotations.insert(set.rotations.end(), {q.w(), q.x(), q.y(), q.z()});
    for (int c = 0; c < 3; ++c) set.scales.push_back(us(rng));
    set.opacities.push_back(ua(rng));
    for (int c = 0; c < 3; ++c) set.payload.push_back(static_cast<float>(ua(rng)));
  }
  return set;
}

std::string criterion_rasterizer_oracle() {
  const auto t0 = Clock::now();
  const GaussianSet set = random_gaussians(1001, 100);
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const std::vector<float> bg = {0.15f, 0.25f, 0.35f};
  const RasterOptions exact = RasterOptions::exact_oracle();
  const RenderedView tiled = rasterize(set, Pose{}, intr, bg, exact);
  const RenderedView naive = naive_rasterize(set, Pose{}, intr, bg, exact);
  double worst = 0.0;
  for (size_t i = 0; i < tiled.pixels.data.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(tiled.pixels.data[i]) -
                                     naive.pixels.data[i]));
  }
  const double elapsed = seconds_since(t0);
  std::printf("    max |tile - naive| = %.3g, %.2f s\n", worst, elapsed);
  if (worst >= 1e-9) return "channel diff " + std::to_string(worst);
  if (elapsed >= 5.0) return "took " + std::to_string(elapsed) + " s";
  return "";
}

std::string criterion_knn_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::vector<float> pts(3 * 10000);
  for (float& v : pts) v = static_cast<float>(u(rng));
  const OccupancyTree tree = OccupancyTree::build(pts);
  for (int q = 0; q < 1000; ++q) {
    const Vec3 query(u(rng), u(rng), u(rng));
    const auto mine = tree.knn(query, 16, 1.0);
    const auto ref = reference::knn_bruteforce(pts, query, 16, 1.0);
    if (mine.size() != ref.size()) return "hit count differs at query " + std::to_string(q);
    for (size_t i = 0; i < mine.size(); ++i) {
      if (mine[i].index != ref[i].index || mine[i].distance != ref[i].distance) {
        return "hit list differs at query " + std::to_string(q);
      }
    }
  }
  const double elapsed = seconds_since(t0);
  std::printf("    10^4 points, 10^3 queries identical, %.2f s\n", elapsed);
  if (elapsed >= 10.0) return "took " + std::to_string(elapsed) + " s";
  return "";
}

std::string criterion_projection_roundtrip() {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(224, 224, M_PI / 2.0);
  if (std::abs(intr.fx - 112.0) > 1e-9) {
    return "fx = " + std::to_string(intr.fx) + " for 224 px / 90 deg";
  }
  std::mt19937_64 rng(1003);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> up(0.0, 224.0);
  std::uniform_real_distribution<double> ud(0.05, 9.5);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Quat q(n(rng), n(rng), n(rng), n(rng));
    while (q.norm() < 1e-6) q = Quat(n(rng), n(rng), n(rng), n(rng));
    const Pose pose(q, Vec3(n(rng), n(rng), n(rng)));
    const PixelCoord px{up(rng), up(rng)};
    const double depth = ud(rng);
    const Projection back =
        project_point(intr, pose, unproject_pixel(intr, pose, px, depth));
    worst = std::max({worst, std::abs(back.pixel.h - px.h), std::abs(back.pixel.w - px.w)});
  }
  std::printf("    fx = %.12f, max round-trip error %.3g px\n", intr.fx, worst);
  if (worst >= 1e-6) return "round-trip error " + std::to_string(worst);
  return "";
}

std::string criterion_volume_quadrature() {
  const int dim = 3;
  const double sigma = 0.31, r0 = 0.9, length = 10.0;
  VolumeNets nets;
  nets.phi1 = make_bias_mlp(dim + 3, std::vector<double>(dim, 0.4));
  nets.phi2 = make_bias_mlp(dim + 2, std::vector<double>(dim, r0));
  nets.phi3 = make_bias_mlp(dim, {std::log(std::expm1(sigma))}, Activation::softplus);

  FeatureCloudM cloud;
  cloud.dim = dim;
  for (double t = 0.0; t <= 10.0; t += 0.25) {
    cloud.positions.insert(cloud.positions.end(), {0.0f, 0.0f, static_cast<float>(t)});
    for (int c = 0; c < dim; ++c) cloud.features.push_back(0.5f);
    cloud.directions.push_back(0.0f);
    cloud.scales.push_back(1.0f);
  }
  const OccupancyTree tree = OccupancyTree::build(cloud.positions);
  SamplingConfig cfg;
  const Ray ray{Vec3(0, 0, 0), Vec3(0, 0, 1)};
  const std::vector<double> out = render_feature_ray(ray, cloud, tree, cfg, nets);
  const double sigma_f = std::log1p(std::exp(static_cast<double>(
      static_cast<float>(std::log(std::expm1(sigma))))));  // f32-quantized head bias
  const double want = r0 * (1.0 - std::exp(-sigma_f * length));
  double rel = 0.0;
  for (double v : out) rel = std::max(rel, std::abs(v - want) / want);

  // explicit weight-sum bookkeeping
  const RaySamples samples = sample_ray_points(ray, cfg);
  double transmittance = 1.0, wsum = 0.0;
  for (const Vec3& p : samples.positions) {
    const AggregatedFeature agg = aggregate_point_feature(p, cloud, tree, cfg, nets.phi1);
    if (agg.empty) continue;
    const RadianceDensity rd = regress_radiance_density(agg, 0.0, nets.phi2, nets.phi3);
    const double absorb = std::exp(-rd.sigma * samples.delta);
    wsum += transmittance * (1.0 - absorb);
    transmittance *= absorb;
  }
  const double sum_err = std::abs(wsum - (1.0 - transmittance));
  std::printf("    quadrature rel err %.3g, weight-sum err %.3g\n", rel, sum_err);
  if (rel >= 1e-3) return "quadrature rel err " + std::to_string(rel);
  if (sum_err >= 1e-9) return "weight sum err " + std::to_string(sum_err);
  return "";
}

std::string criterion_blend_conservation() {
  const GaussianSet set = random_gaussians(1005, 150);
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const auto prims = project_gaussians(set, Pose{}, intr, RasterOptions::exact_oracle());
  std::mt19937_64 rng(1006);
  std::uniform_int_distribution<int> up(0, 63);
  for (int t = 0; t < 1000; ++t) {
    const double px = up(rng) + 0.5, py = up(rng) + 0.5;
    double transmittance = 1.0;
    for (const ProjectedGaussian& g : prims) {
      const double du = px - g.u, dv = py - g.v;
      const double eff = g.alpha * std::exp(-0.5 * (g.inv_a * du * du +
                                                    2 * g.inv_b * du * dv + g.inv_c * dv * dv));
      const double next = transmittance * (1.0 - eff);
      if (next > transmittance) return "transmittance increased";
      transmittance = next;
    }
    if (transmittance < 0.0 || transmittance > 1.0) return "alpha out of range";
  }

  // hand case: two coincident pixel-centered gaussians, alpha 0.5
  const CameraIntrinsics small = CameraIntrinsics::explicit_kmatrix(33, 33, 33, 33, 16.5, 16.5);
  GaussianSet two;
  two.payload_dim = 3;
  two.positions = {0, 0, 2, 0, 0, 3};
  two.rotations = {1, 0, 0, 0, 1, 0, 0, 0};
  two.scales = {0.4, 0.4, 0.4, 0.6, 0.6, 0.6};
  two.opacities = {0.5, 0.5};
  two.payload = {1, 0, 0, 0, 1, 0};
  const std::vector<float> bg = {0, 0, 1};
  const RenderedView v = rasterize(two, Pose{}, small, bg, RasterOptions::exact_oracle());
  const double e0 = std::abs(v.pixels.at(16, 16, 0) - 0.5);
  const double e1 = std::abs(v.pixels.at(16, 16, 1) - 0.25);
  const double e2 = std::abs(v.pixels.at(16, 16, 2) - 0.25);
  std::printf("    1000 traces monotone, hand-case err (%.2g, %.2g, %.2g)\n", e0, e1, e2);
  if (e0 >= 1e-9 || e1 >= 1e-9 || e2 >= 1e-9) return "hand blend case off";
  return "";
}

std::string criterion_covariance_math() {
  std::mt19937_64 rng(1007);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> us(0.1, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    Vec3 s(us(rng), us(rng), us(rng));
    const Mat3 cov = covariance3d(q, s);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 want = s.array().square();
    std::sort(want.data(), want.data() + 3);
    worst = std::max(worst, (eig.eigenvalues() - want).cwiseAbs().maxCoeff());
  }

  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const double s = 0.27, z = 3.5;
  const Eigen::Matrix2d flat =
      project_covariance(covariance3d(Quat(1, 0, 0, 0), Vec3(s, s, s)), Pose{}, intr,
                         Vec3(0, 0, z), 0.0);
  const double want = std::pow(intr.fx * s / z, 2);
  const double on_axis_err =
      std::max({std::abs(flat(0, 0) - want), std::abs(flat(1, 1) - want), std::abs(flat(0, 1))});
  std::printf("    eigenvalue err %.3g, on-axis closed-form err %.3g\n", worst, on_axis_err);
  if (worst >= 1e-9) return "eigenvalues off by " + std::to_string(worst);
  if (on_axis_err >= 1e-9) return "on-axis projection off";
  return "";
}

std::string criterion_speed_ordering() {
  EngineConfig cfg;
  cfg.bench_warmup = 3;
  cfg.bench_runs = 10;
  const SceneSpec scene = make_default_scene(7, 3, 53);  // 12 * 53^2 * 3 ~= 1e5 points
  const BenchReport report = run_render_benchmark(cfg, scene);
  std::printf("    %zu primitives, splat %.1f ms vs volume %.1f ms, ratio %.1fx\n",
              report.primitives, report.splat_ms_median, report.volume_ms_median,
              report.speed_ratio);
  if (report.primitives < 90000) return "scene too small";
  if (report.speed_ratio < 5.0) {
    return "ratio " + std::to_string(report.speed_ratio) + " below 5";
  }
  return "";
}

std::string criterion_loss_suite() {
  Image x(16, 16, 1);
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (float& v : x.data) v = static_cast<float>(u(rng));
  const double ssim_err = std::abs(ssim(x, x) - 1.0);

  const int n = 9;
  std::vector<double> flat(n, 0.4), uniform(n, 1.0 / n);
  const double ce_err = std::abs(nav_ce_loss(flat, uniform) - std::log(n));

  const PretrainParts parts{0.11, 0.23, 0.31, 0.35};
  const double sum_err = std::abs(pretrain_total(parts) - (0.11 + 0.23 + 0.31 + 0.35));

  std::vector<double> scores(n), target(n);
  double tsum = 0.0;
  for (int i = 0; i < n; ++i) {
    scores[i] = 3.0 * u(rng) - 1.5;
    target[i] = u(rng) + 0.01;
    tsum += target[i];
  }
  for (double& t : target) t /= tsum;
  const std::vector<double> grad = nav_ce_gradient(scores, target);
  const double grad_err = finite_diff_check(
      [&](std::span<const double> s) { return nav_ce_loss(s, target); }, scores, grad);

  std::printf("    ssim err %.3g, CE uniform err %.3g, sum err %.3g, grad rel err %.3g\n",
              ssim_err, ce_err, sum_err, grad_err);
  if (ssim_err >= 1e-9) return "ssim(x,x) != 1";
  if (ce_err >= 1e-9) return "uniform CE != log n";
  if (sum_err >= 1e-12) return "pretrain sum off";
  if (grad_err >= 1e-4) return "CE gradient mismatch";
  return "";
}

std::string criterion_selection_fixpoint() {
  std::mt19937_64 rng(1009);
  SamplingConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 3.0 + trial);
    PointCloudB cloud;
    const int count = 150 + 40 * trial;
    for (int i = 0; i < count; ++i) {
      for (int c = 0; c < 3; ++c) {
        // snap to a 2^-12 grid so the translated coordinates below stay
        // exactly representable and distances are bit-identical
        cloud.positions.push_back(
            static_cast<float>(std::round(u(rng) * 4096.0) / 4096.0));
        cloud.colors.push_back(0.5f);
      }
    }
    const SelectedPoints first = density_peak_select(cloud, cfg);
    PointCloudB again{first.positions, first.colors};
    const SelectedPoints second = density_peak_select(again, cfg);
    if (second.size() != first.size()) {
      return "not a fixpoint on cloud " + std::to_string(trial);
    }
    for (size_t i = 0; i < second.size(); ++i) {
      if (second.source_indices[i] != static_cast<int>(i)) return "fixpoint reordered";
    }

    PointCloudB moved = cloud;
    for (size_t i = 0; i < moved.positions.size(); i += 3) {
      moved.positions[i] += 64.0f;
      moved.positions[i + 1] += 32.0f;
      moved.positions[i + 2] += 16.0f;
    }
    if (density_peak_select(moved, cfg).source_indices != first.source_indices) {
      return "selection not translation-equivariant on cloud " + std::to_string(trial);
    }
  }
  std::printf("    10 random clouds: fixpoint and translation equivariance hold\n");
  return "";
}

std::string criterion_end_to_end_fidelity() {
  EngineConfig cfg;
  const SceneSpec scene = make_default_scene(7, 5, 128);
  tune_selection(cfg, scene);
  const PipelineWeights weights = default_render_weights(cfg, scene, 0.3);

  const IngestResult in = ingest_scene(scene, cfg);
  const SelectedPoints sel = density_peak_select(in.points, cfg.sampling);
  const std::vector<double> desc = point_descriptor(sel.positions, sel.colors,
                                                    weights.descriptor);
  const auto [img_set, feat_set] = make_gaussians(sel, desc, weights.heads);

  // held-out pose: midpoint of trajectory steps 2 and 3
  const Vec3 mid = 0.5 * (scene.trajectory[2].position + scene.trajectory[3].position);
  const Pose pose = Pose::from_position_yaw(mid, 0.0);
  const CameraIntrinsics intr = cfg.intrinsics();
  const std::vector<float> bg(3, 0.0f);
  const RenderedView view = rasterize(img_set, pose, intr, bg, cfg.raster);

  Image gt_rgb, gt_depth;
  render_ground_truth(scene, intr, pose, gt_rgb, gt_depth);
  const double db = psnr(view.pixels, gt_rgb);
  std::printf("    %zu points -> %zu gaussians, held-out PSNR %.2f dB\n", in.points.size(),
              img_set.size(), db);
  if (db < 25.0) return "PSNR " + std::to_string(db) + " dB below 25";
  return "";
}

std::string criterion_navigation_masking() {
  std::mt19937_64 rng(1010);
  const MlpWeights ffn = make_random_mlp(1011, {5, 7, 1}, {Activation::tanh, Activation::none});
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> un(2, 8);
  for (int t = 0; t < 1000; ++t) {
    NodeSet nodes;
    const int n = un(rng);
    for (int i = 0; i < n; ++i) {
      std::vector<double> e(5);
      for (double& x : e) x = u(rng);
      nodes.embeddings.push_back(e);
      nodes.visited.push_back(0);
      nodes.kinds.push_back(i % 2 ? "future" : "candidate");
    }
    std::vector<double> raw(n);
    for (int i = 0; i < n; ++i) raw[i] = mlp_forward(ffn, nodes.embeddings[i])[0];
    const int top = static_cast<int>(std::max_element(raw.begin(), raw.end()) - raw.begin());
    nodes.visited[top] = 1;
    const PathScores out = score_paths(nodes, ffn);
    if (out.best_index == top || nodes.visited[out.best_index]) {
      return "visited node selected at trial " + std::to_string(t);
    }
    // shift invariance of the masked argmax
    std::vector<double> shifted = out.scores;
    for (int i = 0; i < n; ++i) {
      if (!nodes.visited[i]) shifted[i] += 77.7;
    }
    if (masked_argmax(shifted, nodes.visited) != out.best_index) {
      return "constant shift changed the argmax at trial " + std::to_string(t);
    }
  }
  std::printf("    1000 node sets: the visited top scorer is never selected\n");
  return "";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1 rasterizer oracle equivalence", criterion_rasterizer_oracle},
      {"2 knn exactness", criterion_knn_exactness},
      {"3 projection round-trip", criterion_projection_roundtrip},
      {"4 volume quadrature", criterion_volume_quadrature},
      {"5 blend conservation", criterion_blend_conservation},
      {"6 covariance math", criterion_covariance_math},
      {"7 speed ordering", criterion_speed_ordering},
      {"8 loss suite", criterion_loss_suite},
      {"9 selection fixpoint", criterion_selection_fixpoint},
      {"10 end-to-end fidelity", criterion_end_to_end_fidelity},
      {"11 navigation masking", criterion_navigation_masking},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string reason;
    try {
      reason = c.run();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    if (reason.empty()) {
      std::printf("[PASS] criterion %s\n", c.name.c_str());
    } else {
      std::printf("[FAIL] criterion %s: %s\n", c.name.c_str(), reason.c_str());
      ++failures;
    }
  }
  std::printf("%zu criteria, %d failures\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
