#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsdf/shading/shading.hpp"

// End-to-end checks of the command-line surface: flags, exit codes, files.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  fs::path log = workdir / "cli_output.txt";
  std::string cmd = "cd " + workdir.string() + " && " + NSDF_CLI_PATH + " " + args + " > " +
                    log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::string output((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {code, output};
}

fs::path make_workdir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("nsdf_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("train: tiny run produces weights, manifest, report; same seed, same bytes") {
  fs::path dir = make_workdir("train");
  std::string flags =
      "train --shape sphere --archs 8x1,16x1 --seed 7 --epochs 80 --omega0 10 --sigma 0.25"
      " --uniform 2000 --surface 2000 --sup-uniform 3000 --sup-surface 3000"
      " --verify-samples 100000 --out-dir . --name tiny";
  RunResult r = run_cli(flags, dir);
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir / "tiny_8x1.sdfnet"));
  CHECK(fs::exists(dir / "tiny_16x1.sdfnet"));
  CHECK(fs::exists(dir / "tiny.nest"));
  CHECK(fs::exists(dir / "tiny_8x1.report.txt"));
  CHECK(r.output.find("command = train") != std::string::npos);

  std::string first = slurp(dir / "tiny_8x1.sdfnet");
  fs::path dir2 = make_workdir("train_repeat");
  RunResult r2 = run_cli(flags, dir2);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir2 / "tiny_8x1.sdfnet") == first);

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("train: missing --shape is a usage error") {
  fs::path dir = make_workdir("usage");
  RunResult r = run_cli("train --archs 8x1", dir);
  CHECK(r.exit_code == 1);
  RunResult bad_arch = run_cli("train --shape sphere --archs 8q1", dir);
  CHECK(bad_arch.exit_code == 1);
  CHECK(bad_arch.output.find("WxK") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("nest: analytic pair certifies, halved threshold fails with points listed") {
  fs::path dir = make_workdir("nest");
  RunResult good = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 1 --eps 0.05 --samples 150000 --seed 3"
      " --out pair.nest",
      dir);
  CAPTURE(good.output);
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("violations 0") != std::string::npos);
  CHECK(fs::exists(dir / "pair.nest"));

  RunResult bad = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 1 --eps 0.05 --samples 150000 --seed 3"
      " --scale-delta1 0.5",
      dir);
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("violation at (") != std::string::npos);

  RunResult tolerated = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 1 --eps 0.05 --samples 150000 --seed 3"
      " --scale-delta1 0.5 --allow-violations",
      dir);
  CHECK(tolerated.exit_code == 0);

  RunResult too_few = run_cli("nest --fields sphere:r=1 --prop 1 --eps 0.05", dir);
  CHECK(too_few.exit_code == 1);

  // The report names the recurrence that produced the thresholds.
  RunResult prop3 = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 3 --eps 0.05 --approx 0.01"
      " --samples 150000",
      dir);
  CHECK(prop3.output.find("proposition 3") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("render: analytic manifest produces a filled-disc image and echoes config") {
  fs::path dir = make_workdir("render");
  RunResult nest = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 1 --eps 0.05 --samples 150000"
      " --out pair.nest",
      dir);
  REQUIRE(nest.exit_code == 0);

  RunResult r = run_cli(
      "render --manifest pair.nest --budgets 40,40 --width 96 --height 96 --out disc.ppm", dir);
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "disc.ppm"));
  CHECK(fs::exists(dir / "disc.ppm.config"));

  nsdf::shading::ImageBuffer img = nsdf::shading::read_ppm(dir / "disc.ppm");
  CHECK(img.width == 96);
  // A filled disc: the center pixel is lit, the corners are background.
  auto at = [&](int x, int y) { return img.rgb[(size_t(y) * img.width + x) * 3]; };
  CHECK(at(48, 48) > 0.05f);
  CHECK(at(0, 0) == 0.0f);

  RunResult missing = run_cli("render --manifest nope.nest", dir);
  CHECK(missing.exit_code == 2);

  RunResult png = run_cli(
      "render --manifest pair.nest --budgets 40,40 --width 32 --height 32 --out disc.png", dir);
  CHECK(png.exit_code == 0);
  CHECK(fs::exists(dir / "disc.png"));
  fs::remove_all(dir);
}

TEST_CASE("bench: csv columns, baseline row, memory accounting") {
  fs::path dir = make_workdir("bench");
  RunResult nest = run_cli(
      "nest --fields sphere:r=1,sphere:r=0.95 --prop 1 --eps 0.05 --samples 150000"
      " --out pair.nest",
      dir);
  REQUIRE(nest.exit_code == 0);

  RunResult r = run_cli(
      "bench --manifest pair.nest --width 64 --height 64"
      " --row \"nets=1;iters=40;normals=own;baseline\""
      " --row \"nets=0;iters=40;normals=own\""
      " --row \"nets=0,1;iters=20,20;normals=own\""
      " --out bench.csv",
      dir);
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp(dir / "bench.csv");
  CAPTURE(csv);
  CHECK(csv.find("nets,iters,time_s,mem_kb,mse,speedup") == 0);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  std::getline(lines, line);  // baseline
  // Baseline: empty mse field, speedup 1.
  CHECK(line.find(",,1") != std::string::npos);

  RunResult no_baseline = run_cli(
      "bench --manifest pair.nest --row \"nets=inner;iters=40;normals=own\" --out b.csv", dir);
  CHECK(no_baseline.exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("map-normals: analytic sphere vs icosphere-ish mesh, round trip") {
  fs::path dir = make_workdir("mapnormals");
  // Octahedron on the unit sphere, normals deliberately wrong.
  {
    std::ofstream obj(dir / "octa.obj");
    obj << "v 1 0 0\nv -1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nv 0 0 -1\n";
    for (int i = 0; i < 6; ++i) obj << "vn 0 1 0\n";
    obj << "f 1//1 3//3 5//5\nf 3//3 2//2 5//5\nf 2//2 4//4 5//5\nf 4//4 1//1 5//5\n"
        << "f 3//3 1//1 6//6\nf 2//2 3//3 6//6\nf 4//4 2//2 6//6\nf 1//1 4//4 6//6\n";
  }
  RunResult r = run_cli(
      "map-normals --mesh octa.obj --fine sphere:r=1 --delta 0.05 --out mapped.obj", dir);
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("mapped 6 of 6") != std::string::npos);

  nsdf::shading::Mesh mesh = nsdf::shading::load_obj(dir / "mapped.obj");
  REQUIRE(mesh.normals.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    nsdf::Vec3 want = mesh.vertices[i].normalized();
    CHECK((mesh.normals[i] - want).norm() < 2e-2);
  }

  RunResult bad = run_cli("map-normals --mesh none.obj --fine sphere:r=1 --out x.obj", dir);
  CHECK(bad.exit_code == 2);
  fs::remove_all(dir);
}
