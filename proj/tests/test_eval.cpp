#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "unpiv/config.hpp"
#include "unpiv/eval.hpp"
#include "unpiv/io.hpp"
#include "unpiv/synth.hpp"

using namespace unpiv;

namespace {

FlowField random_flow(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 2.0);
  FlowField f(w, h);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = n(rng);
    f.v[i] = n(rng);
  }
  return f;
}

void write_pair(const std::filesystem::path& dir, const std::string& id,
                const synth::AnalyticFlow& flow, std::uint64_t seed, bool with_truth = true) {
  synth::ParticleConfig pc;
  pc.image_size = 64;
  pc.seed = seed;
  const synth::SyntheticPair p = synth::render_pair(flow, pc);
  io::write_image(dir / (id + "_img1.png"), p.first);
  io::write_image(dir / (id + "_img2.png"), p.second);
  if (with_truth) io::write_flo(dir / (id + "_flow.flo"), p.truth);
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("aee examples") {
  const FlowField t = random_flow(10, 7, 1);
  CHECK(aee(t, t) == 0.0);
  FlowField e = t;
  for (std::size_t i = 0; i < e.size(); ++i) e.u[i] += 1.0;
  CHECK(aee(e, t) == doctest::Approx(1.0));
  CHECK(per_100px(aee(e, t)) == doctest::Approx(100.0));
  e = t;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e.u[i] += 3.0;
    e.v[i] += 4.0;
  }
  CHECK(aee(e, t) == doctest::Approx(5.0));
  CHECK_THROWS_AS(aee(FlowField(3, 3), FlowField(3, 4)), DimensionMismatch);
}

TEST_CASE("aee is a metric on random fields") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const FlowField f = random_flow(12, 9, 3 * s);
    const FlowField g = random_flow(12, 9, 3 * s + 1);
    const FlowField h = random_flow(12, 9, 3 * s + 2);
    CHECK(aee(f, g) == aee(g, f));
    CHECK(aee(f, g) >= 0.0);
    CHECK(aee(f, h) <= aee(f, g) + aee(g, h) + 1e-12);
  }
}

TEST_CASE("method expansion and ablation params") {
  auto runs = expand_methods({"unsup", "hs", "xcorr"}, false);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].loss_config == "PSC");
  CHECK(runs[1].loss_config == "-");
  runs = expand_methods({"unsup"}, true);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].loss_config == "PSC");
  CHECK(runs[1].loss_config == "PS");
  CHECK(runs[2].loss_config == "PC");
  CHECK_THROWS_AS(expand_methods({"raft"}, false), InvalidInput);

  const LossParams base;
  const LossParams ps = ablation_params(base, "PS");
  CHECK(ps.lambda_c == 0.0);
  CHECK(ps.lambda_s == base.lambda_s);
  const LossParams pc = ablation_params(base, "PC");
  CHECK(pc.lambda_s == 0.0);
  CHECK(pc.lambda_c == base.lambda_c);
  const LossParams psc = ablation_params(base, "PSC");
  CHECK(psc.lambda_s == base.lambda_s);
  CHECK(psc.lambda_c == base.lambda_c);
  CHECK_THROWS_AS(ablation_params(base, "SC"), InvalidInput);
}

TEST_CASE("dataset discovery") {
  testing::TempDir dir;
  CHECK(Dataset::open(dir.path()).empty());
  write_pair(dir.path(), "uniform_b", synth::AnalyticFlow::uniform(1, 0), 1);
  write_pair(dir.path(), "uniform_a", synth::AnalyticFlow::uniform(1, 0), 2);
  write_pair(dir.path(), "shear_c", synth::AnalyticFlow::shear(0.02), 3, false);
  io::write_image(dir / "lonely_img1.png", GrayImage(8, 8, 0.5));
  io::write_image(dir / "odd_img1.png", GrayImage(64, 64, 0.5));
  io::write_image(dir / "odd_img2.png", GrayImage(32, 64, 0.5));

  std::ostringstream warn;
  const Dataset ds = Dataset::open(dir.path(), &warn);
  REQUIRE(ds.size() == 4);
  CHECK(ds.files(0).id == "odd");
  CHECK(ds.files(1).id == "shear_c");
  CHECK(ds.files(2).id == "uniform_a");
  CHECK(ds.files(3).id == "uniform_b");
  CHECK(ds.files(2).flow_kind == "uniform");
  CHECK_FALSE(ds.files(1).truth);
  CHECK(ds.files(2).truth);
  CHECK(warn.str().find("lonely") != std::string::npos);

  CHECK_THROWS_AS(ds.load(0), DimensionMismatch);
  const ImagePair p = ds.load(2);
  CHECK(p.truth);
  CHECK(p.first.width() == 64);
  CHECK_FALSE(ds.load(1).truth);

  CHECK_THROWS(Dataset::open(dir / "missing"));
  CHECK(flow_kind_from_id("vortex_0003") == "vortex");
  CHECK(flow_kind_from_id("plain") == "plain");
}

TEST_CASE("benchmark report") {
  testing::TempDir dir;
  write_pair(dir.path(), "uniform_0", synth::AnalyticFlow::uniform(2, 1), 4);
  write_pair(dir.path(), "uniform_1", synth::AnalyticFlow::uniform(-1, 2), 5);
  write_pair(dir.path(), "rotation_0", synth::AnalyticFlow::solid_rotation(0.03), 6);
  write_pair(dir.path(), "notruth_0", synth::AnalyticFlow::uniform(1, 1), 7, false);
  io::write_image(dir / "bad_img1.png", GrayImage(64, 64, 0.5));
  io::write_image(dir / "bad_img2.png", GrayImage(40, 64, 0.5));
  const Dataset ds = Dataset::open(dir.path());

  BenchOptions opt;
  opt.methods = {"hs", "xcorr"};
  opt.strict = true;
  const EvalReport rep = run_benchmark(ds, opt);
  REQUIRE(rep.rows.size() == 10);

  int scored = 0;
  for (const ReportRow& r : rep.rows) {
    CHECK_FALSE(r.seconds);
    if (r.pair_id == "bad") {
      CHECK(r.status.rfind("failed: ", 0) == 0);
      CHECK_FALSE(r.aee_px);
    } else if (r.pair_id == "notruth_0") {
      CHECK(r.status == "no_truth");
      CHECK_FALSE(r.aee_px);
    } else {
      CHECK(r.status == "ok");
      REQUIRE(r.aee_px);
      CHECK(*r.aee_px >= 0.0);
      CHECK(*r.aee_px < 1.0);
      ++scored;
    }
  }
  CHECK(scored == 6);

  // aggregates agree with a recomputation from the rows
  for (const ReportAggregate& a : rep.aggregates) {
    double sum = 0.0;
    int n = 0;
    for (const ReportRow& r : rep.rows) {
      if (!r.aee_px || r.method != a.method || r.loss_config != a.loss_config) continue;
      if (a.flow_kind != "all" && r.flow_kind != a.flow_kind) continue;
      sum += *r.aee_px;
      ++n;
    }
    CHECK(n == a.count);
    CHECK(std::abs(sum / n - a.mean_aee_px) <= 1e-12);
  }

  // CSV and JSON carry the same numbers
  const auto csv = split_csv(report_csv(rep));
  const auto json = nlohmann::json::parse(report_json(rep));
  REQUIRE(csv.size() == rep.rows.size() + 1);
  CHECK(csv[0] == std::vector<std::string>{"pair_id", "flow_kind", "method", "loss_config",
                                           "aee_px", "aee_per100px", "seconds", "status"});
  REQUIRE(json["rows"].size() == rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& c = csv[i + 1];
    const auto& j = json["rows"][i];
    REQUIRE(c.size() == 8);
    CHECK(c[0] == j["pair_id"].get<std::string>());
    CHECK(c[2] == j["method"].get<std::string>());
    if (j["aee_px"].is_null()) {
      CHECK(c[4].empty());
      CHECK(c[5].empty());
    } else {
      CHECK(std::stod(c[4]) == j["aee_px"].get<double>());
      CHECK(std::stod(c[5]) == j["aee_per100px"].get<double>());
      CHECK(std::stod(c[5]) == doctest::Approx(100.0 * std::stod(c[4])).epsilon(1e-12));
    }
    CHECK(c[6].empty());
    CHECK(j["seconds"].is_null());
  }
  CHECK(json["config"].get<std::string>() == format_config(opt.config));

  // strict runs repeat exactly
  CHECK(report_json(run_benchmark(ds, opt)) == report_json(rep));

  opt.strict = false;
  const EvalReport timed = run_benchmark(ds, opt);
  for (const ReportRow& r : timed.rows) {
    if (r.status == "ok" || r.status == "no_truth") CHECK(r.seconds);
  }
}

TEST_CASE("report with no ground truth") {
  testing::TempDir dir;
  write_pair(dir.path(), "a", synth::AnalyticFlow::uniform(1, 0), 8, false);
  BenchOptions opt;
  opt.methods = {"hs"};
  const EvalReport rep = run_benchmark(Dataset::open(dir.path()), opt);
  REQUIRE(rep.rows.size() == 1);
  CHECK_FALSE(rep.rows[0].aee_px);
  CHECK(rep.rows[0].seconds);
  CHECK(rep.aggregates.empty());
  const auto json = nlohmann::json::parse(report_json(rep));
  CHECK(json["rows"][0]["aee_px"].is_null());
}
