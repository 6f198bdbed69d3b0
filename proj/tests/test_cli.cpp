#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stbp/config.hpp"
#include "stbp/io.hpp"
#include "stbp/phantom.hpp"
#include "stbp/runner.hpp"

#ifdef __unix__
#include <sys/wait.h>
#endif

using namespace stbp;
namespace fs = std::filesystem;

namespace {

Eigen::VectorXd time_grid(int J, double t_max = 1.0) {
  Eigen::VectorXd t(J);
  for (int j = 0; j < J; ++j) t[j] = (j + 1) * t_max / J;
  return t;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("stbp_tests_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmokeConfig =
    "experiment = annulus-regression\n"
    "seed = 5\n"
    "[grid]\n"
    "nx = 8\n"
    "ny = 8\n"
    "[time]\n"
    "steps = 3\n"
    "[prior]\n"
    "q = 1\n"
    "truncation = 16\n"
    "[map]\n"
    "max_iter = 60\n"
    "[mcmc]\n"
    "samples = 0\n";

#ifdef STBP_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(STBP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
#ifdef __unix__
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  return status;
#endif
}
#endif

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("annulus phantom takes the indicator values") {
  // The 17-point side puts a cell center exactly at the origin, where
  // sin(pi * 0) = 0 falls short of every positive level.
  SpatialGrid grid = build_grid(17, 17, {-1.0, 1.0, -1.0, 1.0});
  Eigen::VectorXd t(1);
  t << 0.5;
  SpaceTimeField f = phantom_annulus(grid, t);
  CHECK(f.values(grid.flat(8, 8), 0) == 0.0);

  // A 2-by-3 grid hits (0.5, 0) exactly; sin(pi/2) = 1 >= 0.9 keeps it lit.
  SpatialGrid tiny = build_grid(2, 3, {-1.0, 1.0, -1.0, 1.0});
  Eigen::VectorXd t9(1);
  t9 << 0.9;
  SpaceTimeField g = phantom_annulus(tiny, t9);
  CHECK(g.values(tiny.flat(1, 1), 0) == 0.9);
}

TEST_CASE("annulus frames hold only zero and the frame level") {
  SpatialGrid grid = build_grid(32, 32, {-1.0, 1.0, -1.0, 1.0});
  SpaceTimeField f = phantom_annulus(grid, time_grid(5));
  for (int j = 0; j < 5; ++j) {
    const double t = f.t_grid[j];
    for (int i = 0; i < grid.size(); ++i) {
      const double v = f.values(i, j);
      CHECK((v == 0.0 || v == t));
    }
  }
}

TEST_CASE("annulus support shrinks as the level rises") {
  SpatialGrid grid = build_grid(128, 128, {-1.0, 1.0, -1.0, 1.0});
  // Stay below level 1.0: the unit level keeps only the exact mid-radius
  // circle, which pixel centers never hit.
  SpaceTimeField f = phantom_annulus(grid, time_grid(10, 0.95));
  int prev = grid.size() + 1;
  for (int j = 0; j < 10; ++j) {
    const int lit = static_cast<int>((f.values.col(j).array() != 0.0).count());
    CHECK(lit > 0);
    CHECK(lit < prev);
    prev = lit;
  }
}

TEST_CASE("static scene repeats the same frame") {
  SpatialGrid grid = build_grid(48, 48, {-1.0, 1.0, -1.0, 1.0});
  MovingShape s;
  s.kind = MovingShape::Kind::disk;
  s.cx = 0.1;
  s.cy = -0.2;
  s.radius = 0.3;
  SpaceTimeField f = phantom_dynamic_ct(grid, time_grid(4), {s});
  for (int j = 1; j < 4; ++j)
    CHECK((f.values.col(j) - f.values.col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("moving disk drifts by velocity times the frame spacing") {
  SpatialGrid grid = build_grid(128, 128, {-1.0, 1.0, -1.0, 1.0});
  MovingShape s;
  s.kind = MovingShape::Kind::disk;
  s.cx = -0.2;
  s.cy = 0.1;
  s.vx = 0.3;
  s.vy = -0.15;
  s.radius = 0.3;
  Eigen::VectorXd t(4);
  t << 0.2, 0.4, 0.6, 0.8;
  SpaceTimeField f = phantom_dynamic_ct(grid, t, {s});

  auto centroid = [&](int j) {
    double mass = 0.0, mx = 0.0, my = 0.0;
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        const double v = f.values(grid.flat(ix, iy), j);
        mass += v;
        mx += v * grid.x(ix);
        my += v * grid.y(iy);
      }
    return std::pair{mx / mass, my / mass};
  };
  for (int j = 1; j < 4; ++j) {
    auto [ax, ay] = centroid(j - 1);
    auto [bx, by] = centroid(j);
    CHECK(bx - ax == doctest::Approx(s.vx * 0.2).epsilon(0.05));
    CHECK(by - ay == doctest::Approx(s.vy * 0.2).epsilon(0.05));
  }
}

TEST_CASE("rigid motion keeps each shape's lit area nearly constant") {
  // Shapes are checked one at a time: the default pair overlaps late in the
  // sweep, which legitimately shrinks the union.
  SpatialGrid grid = build_grid(256, 256, {-1.0, 1.0, -1.0, 1.0});
  for (const MovingShape& s : default_ct_shapes()) {
    SpaceTimeField f = phantom_dynamic_ct(grid, time_grid(6), {s});
    Eigen::VectorXd counts(6);
    for (int j = 0; j < 6; ++j)
      counts[j] = static_cast<double>((f.values.col(j).array() != 0.0).count());
    const double mean = counts.mean();
    for (int j = 0; j < 6; ++j) CHECK(std::abs(counts[j] - mean) < 0.04 * mean);
  }
}

TEST_CASE("overlapping shapes keep the larger value") {
  SpatialGrid grid = build_grid(64, 64, {-1.0, 1.0, -1.0, 1.0});
  MovingShape dim;
  dim.radius = 0.4;
  dim.value = 0.5;
  MovingShape bright;
  bright.cx = 0.2;
  bright.radius = 0.3;
  bright.value = 1.0;
  SpaceTimeField f = phantom_dynamic_ct(grid, time_grid(1), {dim, bright});
  // A point inside both disks takes the brighter value.
  CHECK(f.values(grid.flat(36, 32), 0) == 1.0);
  // A point only in the dim disk keeps its own.
  CHECK(f.values(grid.flat(22, 32), 0) == 0.5);
}

TEST_CASE("config text parses into sections and typed values") {
  ConfigMap map = ConfigMap::parse_string(
      "top = 1\n"
      "[a.b]\n"
      "x = 2.5  # trailing comment\n"
      "flag = yes\n"
      "; full-line comment\n"
      "name = hello\n");
  CHECK(map.get_int("top", 0) == 1);
  CHECK(map.get_double("a.b.x", 0.0) == 2.5);
  CHECK(map.get_bool("a.b.flag", false));
  CHECK(map.get_string("a.b.name", "") == "hello");
  CHECK(map.get_int("absent", 42) == 42);
  CHECK_NOTHROW(map.require_all_consumed());
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(ConfigMap::parse_string("novalue\n"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::parse_string("[unterminated\n"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::parse_string("a = 1\na = 2\n"), ConfigError);
  ConfigMap bad_type = ConfigMap::parse_string("x = abc\n");
  CHECK_THROWS_AS(bad_type.get_double("x", 0.0), ConfigError);
}

TEST_CASE("experiment config rejects unknown keys by name") {
  try {
    load_experiment_config_string("experiment = annulus\nmystery_knob = 3\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("mystery_knob") != std::string::npos);
  }
}

TEST_CASE("experiment config wires every block") {
  ExperimentConfig c = load_experiment_config_string(
      "experiment = dynamic-ct\n"
      "seed = 11\n"
      "model = stbp\n"
      "[grid]\n"
      "nx = 32\n"
      "ny = 24\n"
      "[time]\n"
      "steps = 6\n"
      "t_max = 2\n"
      "[prior]\n"
      "q = 1.4\n"
      "s = 1.5\n"
      "kappa = 0.01\n"
      "truncation = 100\n"
      "[kernel]\n"
      "nu = 1.5\n"
      "rho = 0.25\n"
      "[forward]\n"
      "op = radon\n"
      "angles = 13\n"
      "detectors = 33\n"
      "noise_relative = 0.02\n"
      "[phantom.shape1]\n"
      "kind = rect\n"
      "cx = 0.1\n"
      "hx = 0.3\n"
      "value = 0.8\n"
      "[map]\n"
      "max_iter = 200\n"
      "jacobian = true\n"
      "[mcmc]\n"
      "samples = 50\n"
      "variant = mmala\n"
      "beta = 0.5\n"
      "[metrics]\n"
      "rle_norm = infty-1\n"
      "frames = 0, 5\n");
  CHECK(c.experiment == "dynamic-ct");
  CHECK(c.seed == 11);
  CHECK(c.nx == 32);
  CHECK(c.ny == 24);
  CHECK(c.time_steps == 6);
  CHECK(c.t_max == 2.0);
  CHECK(c.q == 1.4);
  CHECK(c.s == 1.5);
  CHECK(c.kappa == 0.01);
  CHECK_FALSE(c.kappa_auto);
  CHECK(c.truncation == 100);
  CHECK(c.nu == 1.5);
  CHECK(c.rho == 0.25);
  CHECK(c.op == "radon");
  CHECK(c.n_angles == 13);
  CHECK(c.n_det == 33);
  CHECK(c.noise_relative == 0.02);
  REQUIRE(c.shapes.size() == 1);
  CHECK(c.shapes[0].kind == MovingShape::Kind::rect);
  CHECK(c.shapes[0].cx == 0.1);
  CHECK(c.shapes[0].hx == 0.3);
  CHECK(c.shapes[0].value == 0.8);
  CHECK(c.map_max_iter == 200);
  CHECK(c.map_jacobian);
  CHECK(c.mcmc_samples == 50);
  CHECK(c.mcmc_variant == "mmala");
  CHECK(c.mcmc_beta == 0.5);
  CHECK(c.rle_norm == "infty-1");
  CHECK(c.snapshot_frames == std::vector<int>{0, 5});
}

TEST_CASE("kappa accepts the auto marker and models pin their parameters") {
  ExperimentConfig c = load_experiment_config_string("[prior]\nkappa = auto\n");
  CHECK(c.kappa_auto);

  ExperimentConfig stgp = load_experiment_config_string("model = stgp\n[prior]\nq = 1\n");
  CHECK(stgp.q == 2.0);

  ExperimentConfig iid = load_experiment_config_string("model = iid-time\n");
  CHECK(iid.kernel_identity);

  CHECK_THROWS_AS(load_experiment_config_string("[prior]\nq = 3\n"), ConfigError);
}

TEST_CASE("problem construction honors the model override") {
  ExperimentConfig c = load_experiment_config_string(kSmokeConfig);
  apply_model(c, "iid-time");
  Problem p = build_problem(c);
  CHECK(p.prior.kernel.cov.isApprox(c.kappa * Eigen::MatrixXd::Identity(3, 3)));
  CHECK(p.truth.values.rows() == 64);
  CHECK(p.truth.values.cols() == 3);
  CHECK(p.obs.frames() == 3);
}

TEST_CASE("experiment pipeline produces finite metrics at smoke scale") {
  ExperimentConfig c = load_experiment_config_string(kSmokeConfig);
  ExperimentResult r = run_experiment(c, false);
  CHECK(r.estimate.values.rows() == 64);
  CHECK(r.estimate.values.cols() == 3);
  CHECK(r.metrics.rle > 0.0);
  CHECK(r.metrics.rle < 1.5);
  CHECK(std::isfinite(r.metrics.psnr));
  CHECK(r.metrics.ssim > -1.0);
  CHECK(r.kappa_used == c.kappa);
  const std::string header = "model,I,J,rle,psnr,ssim,loglik,seed\n";
  CHECK(r.metrics_csv.rfind(header, 0) == 0);
  CHECK(r.metrics_csv.find("stbp,") == header.size());
  CHECK_FALSE(r.map.objective_trace.empty());
}

TEST_CASE("identical runs emit identical metric rows") {
  ExperimentConfig c = load_experiment_config_string(kSmokeConfig);
  ExperimentResult a = run_experiment(c, false);
  ExperimentResult b = run_experiment(c, false);
  CHECK(a.metrics_csv == b.metrics_csv);
  CHECK((a.estimate.values - b.estimate.values).cwiseAbs().maxCoeff() == 0.0);

  ExperimentConfig other = c;
  other.seed = 6;
  ExperimentResult d = run_experiment(other, false);
  CHECK(a.metrics_csv != d.metrics_csv);
  CHECK(a.metrics.rle != d.metrics.rle);
}

TEST_CASE("array files round trip bit for bit") {
  fs::path dir = scratch_dir("io");
  Array a;
  a.dims = {3, 4, 2};
  a.data.resize(24);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    a.data[i] = std::sin(static_cast<double>(i)) * 1e3;
  write_stba(dir / "a.stba", a);
  Array b = read_stba(dir / "a.stba");
  CHECK(b.dims == a.dims);
  REQUIRE(b.data.size() == a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(b.data[i] == a.data[i]);

  Eigen::MatrixXd m(2, 3);
  m << 1.5, -2.25, 3.0, 0.0, 1e-300, -7.125;
  write_stba(dir / "m.stba", m);
  Eigen::MatrixXd back = read_stba_matrix(dir / "m.stba");
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("array file header bytes follow the format") {
  fs::path dir = scratch_dir("io_header");
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  write_stba(dir / "h.stba", m);

  std::ifstream in(dir / "h.stba", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 8 + 6 * 8);
  CHECK(bytes[0] == 'S');
  CHECK(bytes[1] == 'T');
  CHECK(bytes[2] == 'B');
  CHECK(bytes[3] == 'A');
  CHECK(bytes[4] == 1);  // version
  CHECK(bytes[5] == 2);  // ndim
  // Little-endian extents 2 and 3.
  CHECK(bytes[6] == 2);
  for (int i = 7; i < 14; ++i) CHECK(bytes[i] == 0);
  CHECK(bytes[14] == 3);
  // Row-major payload starts with 1.0.
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 22, sizeof(double));
  CHECK(first == 1.0);

  std::ofstream(dir / "bad.stba", std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(read_stba(dir / "bad.stba"), std::runtime_error);
}

TEST_CASE("pgm emission maps the value range linearly") {
  fs::path dir = scratch_dir("pgm");

  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 2, 4.2);
  write_pgm(dir / "flat.pgm", flat);
  std::ifstream fin(dir / "flat.pgm", std::ios::binary);
  std::string magic, w, h, maxval;
  fin >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == "3");
  CHECK(h == "2");
  CHECK(maxval == "255");
  fin.get();  // single whitespace after the header
  std::vector<unsigned char> pix((std::istreambuf_iterator<char>(fin)),
                                 std::istreambuf_iterator<char>());
  REQUIRE(pix.size() == 6);
  for (unsigned char p : pix) CHECK(static_cast<int>(p) == 128);

  Eigen::MatrixXd ramp(2, 2);
  ramp << 0.0, 2.0, 1.0, 3.0;
  write_pgm(dir / "ramp.pgm", ramp);
  std::ifstream rin(dir / "ramp.pgm", std::ios::binary);
  rin >> magic >> w >> h >> maxval;
  rin.get();
  std::vector<unsigned char> rp((std::istreambuf_iterator<char>(rin)),
                                std::istreambuf_iterator<char>());
  REQUIRE(rp.size() == 4);
  // Raster marches ix fastest within each iy: (0,0), (1,0), (0,1), (1,1).
  CHECK(static_cast<int>(rp[0]) == 0);
  CHECK(static_cast<int>(rp[1]) == 85);
  CHECK(static_cast<int>(rp[2]) == 170);
  CHECK(static_cast<int>(rp[3]) == 255);
}

#ifdef STBP_CLI_PATH

TEST_CASE("command line binary runs the pipeline and reports failure codes") {
  fs::path dir = scratch_dir("cli_bin");
  {
    std::ofstream cfg(dir / "smoke.cfg");
    cfg << kSmokeConfig;
  }

  CHECK(run_cli("run --config " + (dir / "smoke.cfg").string() + " --out " +
                (dir / "out").string() + " --quiet") == 0);
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "truth.stba"));
  CHECK(fs::exists(dir / "out" / "map.stba"));

  CHECK(run_cli("phantom --config " + (dir / "smoke.cfg").string() + " --out " +
                (dir / "phantom_out").string() + " --quiet") == 0);
  CHECK(fs::exists(dir / "phantom_out" / "truth.stba"));
  CHECK(fs::exists(dir / "phantom_out" / "truth_frame000.pgm"));

  {
    std::ofstream cfg(dir / "broken.cfg");
    cfg << "experiment = annulus\nwhatisthis = 1\n";
  }
  CHECK(run_cli("run --config " + (dir / "broken.cfg").string() + " --quiet") == 2);
  CHECK(run_cli("run --config " + (dir / "missing.cfg").string() + " --quiet") == 2);
  CHECK(run_cli("") != 0);
}

#endif  // STBP_CLI_PATH

}  // TEST_SUITE
