#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "support.hpp"
#include "unpiv/io.hpp"

using namespace unpiv;
namespace fs = std::filesystem;

namespace {

using Run = testing::ShellRun;

Run run(const std::string& args, bool strict = false) {
  return testing::run_shell(std::string(strict ? "UNPIV_STRICT=1 " : "") + "'" UNPIV_CLI_PATH "' " +
                            args);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("help on every subcommand") {
  CHECK(run("--help").code == 0);
  for (const char* sub : {"estimate", "generate", "bench", "viz"}) {
    const Run r = run(std::string(sub) + " --help");
    CAPTURE(sub);
    CHECK(r.code == 0);
    CHECK(r.output.find("--out") != std::string::npos);
  }
  const Run e = run("estimate --help");
  for (const char* flag : {"--a", "--b", "--method", "--config", "--set", "--trace", "--viz"}) {
    CHECK(e.output.find(flag) != std::string::npos);
  }
}

TEST_CASE("usage errors exit 2") {
  testing::TempDir dir;
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("generate --flow uniform:1,1 --out " + q(dir.path()) + " --bogus").code == 2);
  CHECK(run("estimate --a x.png --b y.png --method hs").code == 2);
  CHECK(run("estimate --a x.png --b y.png --method lk --out f.flo").code == 2);
  const Run bad = run("generate --flow spiral:1 --out " + q(dir / "g"));
  CHECK(bad.code == 2);
  CHECK(bad.output.find("uniform:DX,DY") != std::string::npos);
}

TEST_CASE("generate, estimate and visualise") {
  testing::TempDir dir;
  const fs::path g = dir / "g";
  REQUIRE(run("generate --flow uniform:2,1 --size 64 --seed 7 --out " + q(g)).code == 0);
  for (const char* f : {"pair_a.png", "pair_b.png", "truth.flo", "metadata.json"}) {
    CHECK(fs::exists(g / f));
  }
  const std::string a = q(g / "pair_a.png");
  const std::string b = q(g / "pair_b.png");

  for (const char* m : {"hs", "xcorr"}) {
    const fs::path out = dir / (std::string(m) + ".flo");
    const Run r = run(std::string("estimate --a ") + a + " --b " + b + " --method " + m +
                      " --out " + q(out));
    CAPTURE(r.output);
    REQUIRE(r.code == 0);
    const FlowField f = io::read_flo(out);
    CHECK(f.width() == 64);
    CHECK(f.height() == 64);
  }

  const fs::path trace = dir / "t.json";
  const Run u = run("estimate --a " + a + " --b " + b + " --method unsup --set iters_per_level=20 " +
                    "--out " + q(dir / "u.flo") + " --trace " + q(trace) + " --viz " +
                    q(dir / "u.png"));
  CAPTURE(u.output);
  REQUIRE(u.code == 0);
  const auto doc = nlohmann::json::parse(testing::read_file(trace));
  CHECK(doc["levels"].is_array());
  CHECK(doc["levels"][0]["losses"][0].contains("total"));
  CHECK(doc["final_flow"].get<std::string>().find("u.flo") != std::string::npos);
  CHECK(doc["lambda"]["smoothness"] == 3.0);
  CHECK(io::read_rgb_png(dir / "u.png").width == 64);

  const fs::path csv = dir / "s.csv";
  REQUIRE(run("estimate --a " + a + " --b " + b + " --method xcorr --out " + q(dir / "x.flo") +
              " --sparse-csv " + q(csv))
              .code == 0);
  CHECK(testing::read_file(csv).rfind("x,y,u,v,peak,valid\n", 0) == 0);

  // viz of zero flow and of a zero error map are all white
  io::write_flo(dir / "zero.flo", FlowField(9, 4));
  REQUIRE(run("viz --flow " + q(dir / "zero.flo") + " --out " + q(dir / "z.png")).code == 0);
  for (std::uint8_t c : io::read_rgb_png(dir / "z.png").rgb) CHECK(c == 255);
  REQUIRE(run("viz --flow " + q(g / "truth.flo") + " --truth " + q(g / "truth.flo") + " --out " +
              q(dir / "e.png"))
              .code == 0);
  for (std::uint8_t c : io::read_rgb_png(dir / "e.png").rgb) CHECK(c == 255);
  CHECK(run("viz --flow " + q(g / "truth.flo") + " --out " + q(dir / "m.png") + " --max-mag 2.5")
            .code == 0);
}

TEST_CASE("runtime failures exit 1") {
  testing::TempDir dir;
  const Run missing = run("estimate --a " + q(dir / "nope.png") + " --b " + q(dir / "nope.png") +
                          " --method hs --out " + q(dir / "f.flo"));
  CHECK(missing.code == 1);
  CHECK(missing.output.find("nope.png") != std::string::npos);

  io::write_image(dir / "a.png", testing::random_texture(32, 32, 1));
  io::write_image(dir / "b.png", testing::random_texture(40, 32, 2));
  CHECK(run("estimate --a " + q(dir / "a.png") + " --b " + q(dir / "b.png") +
            " --method hs --out " + q(dir / "f.flo"))
            .code == 1);
  CHECK_FALSE(fs::exists(dir / "f.flo"));

  {
    std::ofstream out(dir / "bad.flo", std::ios::binary);
    out << "JUNKJUNKJUNKJUNK";
  }
  const Run viz = run("viz --flow " + q(dir / "bad.flo") + " --out " + q(dir / "v.png"));
  CHECK(viz.code == 1);
  CHECK(viz.output.find("not a flow file") != std::string::npos);

  fs::create_directories(dir / "empty");
  const Run bench = run("bench --dataset " + q(dir / "empty") + " --out " + q(dir / "r.json"));
  CHECK(bench.code == 1);
  CHECK(bench.output.find("no image pairs") != std::string::npos);
}

TEST_CASE("generate determinism and warnings") {
  testing::TempDir dir;
  REQUIRE(run("generate --flow uniform:3,1 --size 48 --seed 7 --out " + q(dir / "a")).code == 0);
  REQUIRE(run("generate --flow uniform:3,1 --size 48 --seed 7 --out " + q(dir / "b")).code == 0);
  for (const char* f : {"pair_a.png", "pair_b.png", "truth.flo", "metadata.json"}) {
    CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
  }
  const Run far = run("generate --flow uniform:9,0 --size 48 --out " + q(dir / "c"));
  CHECK(far.code == 0);
  CHECK(far.output.find("warning") != std::string::npos);
  CHECK(fs::exists(dir / "c" / "pair_b.png"));

  REQUIRE(run("generate --flow uniform:0,0 --size 48 --out " + q(dir / "d")).code == 0);
  CHECK(io::read_image(dir / "d" / "pair_a.png") == io::read_image(dir / "d" / "pair_b.png"));
}

TEST_CASE("bench rows and strict determinism") {
  testing::TempDir dir;
  const fs::path ds = dir / "ds";
  REQUIRE(run("generate --flow uniform:1,1 --size 48 --seed 3 --pairs 2 --out " + q(ds)).code == 0);

  const std::string common = "bench --dataset " + q(ds) + " --set iters_per_level=10 ";
  REQUIRE(run(common + "--ablation --out " + q(dir / "r1.json"), true).code == 0);
  REQUIRE(run(common + "--ablation --out " + q(dir / "r2.json"), true).code == 0);
  CHECK(testing::read_file(dir / "r1.json") == testing::read_file(dir / "r2.json"));
  CHECK(testing::read_file(dir / "r1.csv") == testing::read_file(dir / "r2.csv"));

  const auto doc = nlohmann::json::parse(testing::read_file(dir / "r1.json"));
  CHECK(doc["rows"].size() == 2 * (2 + 3));
  for (const auto& a : doc["aggregates"]) {
    if (a["flow_kind"] != "all") continue;
    double sum = 0.0;
    int n = 0;
    for (const auto& r : doc["rows"]) {
      if (r["method"] == a["method"] && r["loss_config"] == a["loss_config"]) {
        sum += r["aee_px"].get<double>();
        ++n;
      }
    }
    CHECK(n == a["count"].get<int>());
    CHECK(std::abs(sum / n - a["mean_aee_px"].get<double>()) < 1e-12);
  }

  REQUIRE(run("bench --dataset " + q(ds) + " --methods hs --out " + q(dir / "h.json")).code == 0);
  const auto hs = nlohmann::json::parse(testing::read_file(dir / "h.json"));
  CHECK(hs["rows"].size() == 2);
  for (const auto& r : hs["rows"]) CHECK(r["method"] == "hs");
  CHECK(run("bench --dataset " + q(ds) + " --methods hs,lk --out " + q(dir / "x.json")).code == 2);
}

TEST_CASE("strict estimate is byte stable") {
  testing::TempDir dir;
  REQUIRE(run("generate --flow rotation:0.02 --size 48 --seed 5 --out " + q(dir.path())).code == 0);
  const std::string base = "estimate --a " + q(dir / "pair_a.png") + " --b " +
                           q(dir / "pair_b.png") + " --method unsup --set iters_per_level=15 ";
  for (int k : {1, 2}) {
    const std::string s = std::to_string(k);
    REQUIRE(run(base + "--out " + q(dir / ("f" + s + ".flo")) + " --trace " +
                    q(dir / ("t" + s + ".json")),
                true)
                .code == 0);
  }
  CHECK(testing::read_file(dir / "f1.flo") == testing::read_file(dir / "f2.flo"));
  // traces name their own output file, so compare everything else
  auto t1 = nlohmann::json::parse(testing::read_file(dir / "t1.json"));
  auto t2 = nlohmann::json::parse(testing::read_file(dir / "t2.json"));
  t1.erase("final_flow");
  t2.erase("final_flow");
  CHECK(t1.dump() == t2.dump());
}
