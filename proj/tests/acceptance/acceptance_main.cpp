// Integration acceptance suite: one pass/fail line per criterion, nonzero
// exit if any fail. Tolerances are fixed here, not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "nsdf/shading/shading.hpp"
#include "nsdf/trainer/trainer.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace nsdf;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

bool approx_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// --------------------------------------------------------------------------
// 1. Analytic gradients vs central finite differences across architectures.
// --------------------------------------------------------------------------
bool criterion_gradients(std::string& detail) {
  const double h = 1e-4;
  const int points = 1000;
  double worst_overall = 0;
  for (auto arch : {mlp::Architecture{16, 1, 3}, {64, 1, 3}, {256, 1, 3}, {256, 3, 3}}) {
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed * 7919 + arch.width);
      auto net = mlp::random_init(arch, 30.0, rng);
      tensor::Matrix<double> pts = oracles::random_matrix<double>(3, points, rng);
      tensor::Matrix<double> grad = mlp::gradient_batch(net, pts);

      // Batched central differences, one axis at a time.
      tensor::Matrix<double> fd(3, points);
      for (int c = 0; c < 3; ++c) {
        tensor::Matrix<double> hi = pts, lo = pts;
        for (int j = 0; j < points; ++j) {
          hi(c, j) += h;
          lo(c, j) -= h;
        }
        auto up = mlp::forward_batch(net, hi);
        auto dn = mlp::forward_batch(net, lo);
        for (int j = 0; j < points; ++j) fd(c, j) = (up(0, j) - dn(0, j)) / (2 * h);
      }
      for (int j = 0; j < points; ++j) {
        double dx = grad(0, j) - fd(0, j), dy = grad(1, j) - fd(1, j), dz = grad(2, j) - fd(2, j);
        double err = std::sqrt(dx * dx + dy * dy + dz * dz);
        double scale = std::max(std::sqrt(fd(0, j) * fd(0, j) + fd(1, j) * fd(1, j) +
                                          fd(2, j) * fd(2, j)),
                                1e-9);
        worst_overall = std::max(worst_overall, err / scale);
      }
    }
  }
  std::ostringstream os;
  os << "max relative error " << worst_overall << " (tolerance 1e-4)";
  detail = os.str();
  return worst_overall < 1e-4;
}

// --------------------------------------------------------------------------
// 2. Hadamard commutation identity behind the cheap gradient form.
// --------------------------------------------------------------------------
bool criterion_commutation(std::string& detail) {
  Rng rng(1234);
  tensor::ActivationSpec spec = tensor::ActivationSpec::sine(30.0);
  double worst = 0;
  for (int iter = 0; iter < 100; ++iter) {
    int n = 2 + int(rng.next_u64() % 63);
    int k = 1 + int(rng.next_u64() % 32);
    auto w = oracles::random_matrix<double>(n, n, rng);
    auto g = oracles::random_matrix<double>(n, k, rng);
    auto a = oracles::random_matrix<double>(n, 1, rng);
    tensor::Matrix<double> a_cols(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a_cols(i, j) = a(i, 0);
    auto lhs = tensor::gemm(tensor::hadamard(w, tensor::activate(a_cols, spec, true)), g);
    auto rhs = tensor::scale_rows(tensor::activate(a, spec, true), tensor::gemm(w, g));
    worst = std::max(worst, oracles::max_rel_error(lhs, rhs));
  }
  std::ostringstream os;
  os << "max relative error " << worst << " over 100 instances (tolerance 1e-10)";
  detail = os.str();
  return worst < 1e-10;
}

// --------------------------------------------------------------------------
// 3. Threshold recurrences against hand-computed tables.
// --------------------------------------------------------------------------
bool criterion_thresholds(std::string& detail) {
  bool ok = true;
  auto p2 = fields::thresholds_prop2({0.01, 0.02, 0.03});
  ok &= approx_equal(p2[0], 0.13, 1e-15) && approx_equal(p2[1], 0.10, 1e-15) &&
        approx_equal(p2[2], 0.05, 1e-15);

  auto p1 = fields::thresholds_prop1({0.02, 0.03});
  ok &= approx_equal(p1[2], 0.03, 1e-15) && approx_equal(p1[1], 0.06, 1e-15) &&
        approx_equal(p1[0], 0.08, 1e-15);
  auto p1e = fields::thresholds_prop1({0.01, 0.01, 0.01});
  for (size_t i = 0; i < p1e.size(); ++i) ok &= approx_equal(p1e[i], 0.01 * (4 - i), 1e-15);

  auto p3 = fields::thresholds_prop3({0.05}, 0.01);
  ok &= approx_equal(p3[1], 0.01, 1e-15) && approx_equal(p3[0], 0.08, 1e-15);

  detail = "prop2(0.01,0.02,0.03) -> (" + std::to_string(p2[0]) + "," + std::to_string(p2[1]) +
           "," + std::to_string(p2[2]) + ")";
  return ok;
}

// --------------------------------------------------------------------------
// 4. Empirical nesting certification on the exact concentric pair.
// --------------------------------------------------------------------------
bool criterion_nesting(std::string& detail) {
  fields::NestedSequence seq;
  seq.entries.push_back({std::make_shared<fields::SphereField>(Vec3{0, 0, 0}, 1.0), {}, "r1", 0});
  seq.entries.push_back(
      {std::make_shared<fields::SphereField>(Vec3{0, 0, 0}, 0.95), {}, "r095", 0});
  seq.deltas = fields::thresholds_prop1({0.05});

  fields::VerifyConfig cfg;
  cfg.samples = 1000000;
  cfg.seed = 99;
  auto good = verify_nesting(seq, cfg);
  auto good_again = verify_nesting(seq, cfg);

  fields::NestedSequence bad = seq;
  bad.deltas[0] *= 0.5;  // below the exact containment bound
  bad.deltas[1] = std::min(bad.deltas[1], bad.deltas[0] * 0.98);
  auto violated = verify_nesting(bad, cfg);

  std::ostringstream os;
  os << "certified pair: " << good.violation_count << " violations / " << good.checked
     << " checked; halved threshold: " << violated.violation_count << " violations";
  detail = os.str();
  return good.violation_count == 0 && violated.violation_count >= 1 &&
         good.checked == good_again.checked &&
         good.violation_count == good_again.violation_count;
}

// --------------------------------------------------------------------------
// 5. Multiscale tracing agrees with single-field fine tracing on the fitted
//    torus pair.
// --------------------------------------------------------------------------
bool criterion_multiscale_equivalence(std::string& detail) {
  if (!scenes::asset_exists("torus.nest")) {
    detail = "missing asset torus.nest (run assets/build_assets.sh)";
    return false;
  }
  auto manifest = scenes::load_asset_manifest("torus.nest");
  const auto& seq = manifest.sequence;
  tracer::Camera cam = scenes::standard_camera(256, 256);
  const float eps_stop = 1e-3f;

  tracer::TraceConfig multi;
  multi.budgets = {30, 30};
  multi.eps_stop = eps_stop;
  auto ms = trace_image(seq, cam, multi);

  fields::NestedSequence fine_only;
  fine_only.entries.push_back(seq.entries[1]);
  fine_only.deltas = {seq.deltas[1]};
  tracer::TraceConfig single;
  single.budgets = {60};
  single.eps_stop = eps_stop;
  auto fs_rec = trace_image(fine_only, cam, single);

  size_t both = 0, agree = 0, mask_diff = 0;
  for (size_t i = 0; i < ms.size(); ++i) {
    if (ms[i].hit != fs_rec[i].hit) ++mask_diff;
    if (ms[i].hit && fs_rec[i].hit) {
      ++both;
      float dx = ms[i].point.x - fs_rec[i].point.x;
      float dy = ms[i].point.y - fs_rec[i].point.y;
      float dz = ms[i].point.z - fs_rec[i].point.z;
      if (std::sqrt(double(dx) * dx + double(dy) * dy + double(dz) * dz) <= 2.0 * eps_stop)
        ++agree;
    }
  }

  // Mask disagreements must hug the silhouette: compare against a dense ray
  // march of the analytic torus (the fitted fine field deviates from it by
  // well under a pixel).
  fields::TorusField torus(0.6, 0.3);
  auto rays = generate_rays(cam);
  std::vector<uint8_t> oracle_mask(rays.size());
  const size_t chunk = 4096;
  size_t chunks = (rays.size() + chunk - 1) / chunk;
  parallel_chunks(int(chunks), [&](int ci) {
    size_t lo = size_t(ci) * chunk, hi = std::min(rays.size(), lo + chunk);
    for (size_t i = lo; i < hi; ++i)
      oracle_mask[i] = oracles::dense_ray_march(torus, rays[i].origin.to_double(),
                                                rays[i].direction.to_double(), 1e-4, 8.0,
                                                1e-3) >= 0;
  });
  auto near_silhouette = [&](size_t idx) {
    int x = int(idx % cam.width), y = int(idx / cam.width);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= cam.width || ny >= cam.height) continue;
        if (oracle_mask[size_t(ny) * cam.width + nx] != oracle_mask[idx]) return true;
      }
    return false;
  };
  size_t off_silhouette = 0;
  for (size_t i = 0; i < ms.size(); ++i)
    if (ms[i].hit != fs_rec[i].hit && !near_silhouette(i)) ++off_silhouette;

  double agree_rate = both ? double(agree) / double(both) : 0.0;
  std::ostringstream os;
  os << "endpoint agreement " << agree_rate * 100 << "% of " << both << " common hits; "
     << mask_diff << " mask differences, " << off_silhouette << " away from the silhouette";
  detail = os.str();
  return agree_rate >= 0.99 && off_silhouette == 0;
}

// --------------------------------------------------------------------------
// 6. Fidelity ordering of normal mapping and fine-level iterations.
// --------------------------------------------------------------------------
bool criterion_fidelity_trend(std::string& detail) {
  struct Scene {
    std::string manifest;
    std::string label;
  };
  std::vector<Scene> scenes_list = {{"sphere.nest", "sphere"},
                                    {"torus.nest", "torus"},
                                    {"box.nest", "box"},
                                    {"blend4d.nest", "blend"}};
  std::ostringstream os;
  bool ok = true;
  for (const auto& scene : scenes_list) {
    if (!scenes::asset_exists(scene.manifest)) {
      detail = "missing asset " + scene.manifest + " (run assets/build_assets.sh)";
      return false;
    }
    auto manifest = scenes::load_asset_manifest(scene.manifest);
    fields::NestedSequence seq =
        manifest.time_dependent ? manifest.animated.slice(0.5) : manifest.sequence;
    tracer::Camera cam = scenes::standard_camera(256, 256);

    auto render_with = [&](std::vector<int> budgets, shading::NormalSource src) {
      shading::RenderConfig config;
      config.trace.budgets = std::move(budgets);
      config.normal_source = src;
      config.shade.material.specular = 0.3f;
      return shading::render(seq, cam, config);
    };

    fields::NestedSequence fine_only;
    fine_only.entries.push_back(seq.entries.back());
    fine_only.deltas = {seq.deltas.back()};
    shading::RenderConfig base_cfg;
    base_cfg.trace.budgets = {40};
    base_cfg.shade.material.specular = 0.3f;
    shading::ImageBuffer baseline = shading::render(fine_only, cam, base_cfg);

    fields::NestedSequence coarse_only;
    coarse_only.entries.push_back(seq.entries.front());
    coarse_only.deltas = {seq.deltas.front()};
    shading::ImageBuffer coarse = shading::render(coarse_only, cam, base_cfg);

    shading::ImageBuffer mapped = render_with({40, 0}, shading::NormalSource::mapped);
    shading::ImageBuffer it_30_10 = render_with({30, 10}, shading::NormalSource::own);
    shading::ImageBuffer it_30_30 = render_with({30, 30}, shading::NormalSource::own);

    double mse_coarse = shading::image_mse(coarse, baseline);
    double mse_mapped = shading::image_mse(mapped, baseline);
    double mse_30_10 = shading::image_mse(it_30_10, baseline);
    double mse_30_30 = shading::image_mse(it_30_30, baseline);

    bool scene_ok = mse_mapped <= 0.9 * mse_coarse && mse_30_30 < mse_30_10 &&
                    mse_30_30 < mse_mapped;
    ok &= scene_ok;
    os << scene.label << ": coarse " << mse_coarse << " mapped " << mse_mapped << " (30,10) "
       << mse_30_10 << " (30,30) " << mse_30_30 << (scene_ok ? "" : " [ORDERING VIOLATED]")
       << "; ";
  }
  detail = os.str();
  return ok;
}

// --------------------------------------------------------------------------
// 7. Coarse-first configurations are faster; wall-time ratio floor.
// --------------------------------------------------------------------------
bool criterion_speed_trend(std::string& detail) {
  if (!scenes::asset_exists("torus.nest")) {
    detail = "missing asset torus.nest (run assets/build_assets.sh)";
    return false;
  }
  auto manifest = scenes::load_asset_manifest("torus.nest");
  const auto& seq = manifest.sequence;
  tracer::Camera cam = scenes::standard_camera(256, 256);

  auto time_render = [&](const fields::NestedSequence& s, std::vector<int> budgets) {
    shading::RenderConfig config;
    config.trace.budgets = std::move(budgets);
    shading::render(s, cam, config);  // warm-up
    auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 3; ++rep) shading::render(s, cam, config);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 3;
  };

  fields::NestedSequence coarse_only, fine_only;
  coarse_only.entries.push_back(seq.entries[0]);
  coarse_only.deltas = {seq.deltas[0]};
  fine_only.entries.push_back(seq.entries[1]);
  fine_only.deltas = {seq.deltas[1]};

  double t_coarse = time_render(coarse_only, {40});
  double t_fine = time_render(fine_only, {40});
  double t_multi = time_render(seq, {30, 30});
  double t_fine_60 = time_render(fine_only, {60});

  std::ostringstream os;
  os << "coarse@40 " << t_coarse << "s, fine@40 " << t_fine << "s (ratio "
     << t_fine / t_coarse << ", floor 4), multiscale(30,30) " << t_multi << "s vs fine@60 "
     << t_fine_60 << "s";
  detail = os.str();
  return t_fine >= 4.0 * t_coarse && t_multi < t_fine_60;
}

// --------------------------------------------------------------------------
// 8. Trainer quality and byte determinism on the sphere fit.
// --------------------------------------------------------------------------
bool criterion_trainer(std::string& detail) {
  fields::SphereField sphere({0, 0, 0}, 0.7);
  trainer::SampleConfig sc;
  sc.n_uniform = 20000;
  sc.n_surface = 20000;
  sc.seed = 404;
  trainer::TrainingSet set = sample_training_set(sphere, sc);

  trainer::TrainConfig tc;
  tc.arch = {64, 1, 3};
  tc.epochs = 900;
  tc.learning_rate = 2e-4;
  tc.seed = 405;

  trainer::FitResult a = fit_mlp(tc, set);
  trainer::FitResult b = fit_mlp(tc, set);

  fs::path dir = fs::temp_directory_path();
  fs::path fa = dir / "nsdf_acc_a.sdfnet", fb = dir / "nsdf_acc_b.sdfnet";
  mlp::save_params(a.params, fa);
  mlp::save_params(b.params, fb);
  std::ifstream ia(fa, std::ios::binary), ib(fb, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(ia)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(ib)), std::istreambuf_iterator<char>());
  fs::remove(fa);
  fs::remove(fb);

  std::ostringstream os;
  os << "validation max |error| " << a.report.validation_max_error << " (tolerance 5e-3), "
     << (sa == sb ? "byte-identical reruns" : "RERUN DIFFERS");
  detail = os.str();
  return a.report.validation_max_error < 5e-3 && sa == sb && !sa.empty();
}

// --------------------------------------------------------------------------
// 9. Animated sequence: per-slice certification and endpoint fidelity.
// --------------------------------------------------------------------------
bool criterion_animation(std::string& detail) {
  if (!scenes::asset_exists("blend4d.nest")) {
    detail = "missing asset blend4d.nest (run assets/build_assets.sh)";
    return false;
  }
  auto manifest = scenes::load_asset_manifest("blend4d.nest");
  if (!manifest.time_dependent) {
    detail = "blend4d.nest is not time-dependent";
    return false;
  }
  const auto& anim = manifest.animated;

  size_t violations = 0;
  fields::VerifyConfig vc;
  vc.samples = 200000;
  vc.seed = 31337;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto report = verify_nesting(anim.slice(t), vc);
    violations += report.violation_count;
  }

  // Endpoint frames against analytic-endpoint renders.
  tracer::Camera cam = scenes::standard_camera(256, 256);
  shading::RenderConfig config;
  config.trace.budgets = {30, 30};

  auto analytic_render = [&](fields::FieldPtr field, double delta) {
    fields::NestedSequence s;
    s.entries.push_back({std::move(field), {}, "analytic", 0});
    s.deltas = {delta};
    shading::RenderConfig c;
    c.trace.budgets = {60};
    return shading::render(s, cam, c);
  };

  auto frame0 = shading::render(anim.slice(0.0), cam, config);
  auto frame1 = shading::render(anim.slice(1.0), cam, config);
  auto sphere_ref = analytic_render(std::make_shared<fields::SphereField>(Vec3{0, 0, 0}, 0.7),
                                    anim.deltas.back());
  auto torus_ref =
      analytic_render(std::make_shared<fields::TorusField>(0.6, 0.3), anim.deltas.back());

  double mse0 = shading::image_mse(frame0, sphere_ref);
  double mse1 = shading::image_mse(frame1, torus_ref);

  std::ostringstream os;
  os << violations << " per-slice violations; endpoint MSE t=0: " << mse0 << ", t=1: " << mse1
     << " (tolerance 1e-3)";
  detail = os.str();
  return violations == 0 && mse0 < 1e-3 && mse1 < 1e-3;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"analytic gradients match finite differences (4 architectures x 10 seeds)",
       criterion_gradients},
      {"Hadamard commutation identity to 1e-10", criterion_commutation},
      {"threshold recurrences reproduce hand tables", criterion_thresholds},
      {"nesting certification: zero violations, sharp below the bound", criterion_nesting},
      {"multiscale tracing matches fine-field tracing on the fitted torus",
       criterion_multiscale_equivalence},
      {"normal mapping and fine iterations reduce MSE in order", criterion_fidelity_trend},
      {"coarse-first tracing is faster; fine/coarse wall-time ratio >= 4",
       criterion_speed_trend},
      {"trainer reaches 5e-3 validation error, byte-deterministic", criterion_trainer},
      {"animated sequence certifies per slice and matches endpoints", criterion_animation},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %zu: %s (%.1fs)\n    %s\n", ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name.c_str(), secs, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  else std::printf("all %zu criteria passed\n", criteria.size());
  return failures == 0 ? 0 : 1;
}
