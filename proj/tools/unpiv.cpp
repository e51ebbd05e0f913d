// unpiv: command-line front end.
//
//   unpiv estimate --a p1.png --b p2.png --method unsup|hs|xcorr --out flow.flo
//   unpiv generate --flow uniform:3,1 --size 256 --seed 7 --out dir/
//   unpiv bench    --dataset dir/ --methods unsup,hs,xcorr --ablation --out report.json
//   unpiv viz      --flow flow.flo [--truth truth.flo] --out flow.png
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unpiv/color.hpp"
#include "unpiv/config.hpp"
#include "unpiv/eval.hpp"
#include "unpiv/horn_schunck.hpp"
#include "unpiv/io.hpp"
#include "unpiv/synth.hpp"
#include "unpiv/variational.hpp"
#include "unpiv/xcorr.hpp"

namespace fs = std::filesystem;
using namespace unpiv;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Raised for semantic usage problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool strict_mode() {
  const char* env = std::getenv("UNPIV_STRICT");
  return env != nullptr && std::string(env) == "1";
}

EstimatorConfig resolve_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
  EstimatorConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::optional<double> parse_max_mag(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0 && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--max-mag expects 'auto' or a positive number, got '" + text + "'");
}

struct EstimateArgs {
  std::string a, b, method, out, config, trace, viz, sparse_csv;
  std::vector<std::string> overrides;
};

int cmd_estimate(const EstimateArgs& args) {
  const EstimatorConfig cfg = resolve_config(args.config, args.overrides);
  const GrayImage i1 = normalize(io::read_image(args.a));
  const GrayImage i2 = normalize(io::read_image(args.b));
  require_same_shape(i1, i2, "input images");

  FlowField flow;
  if (args.method == "unsup") {
    const SolveTrace trace = estimate_unsupervised(i1, i2, cfg.loss, cfg.solver);
    flow = trace.forward;
    if (!args.trace.empty()) {
      io::write_text_atomic(args.trace, solve_trace_json(trace, args.out));
    }
    std::cerr << solve_trace_text(trace);
  } else if (args.method == "hs") {
    flow = estimate_horn_schunck(i1, i2, cfg.hs);
  } else {
    const XcorrResult r = estimate_multipass(i1, i2, cfg.xcorr);
    flow = r.dense;
    if (!args.sparse_csv.empty()) io::write_text_atomic(args.sparse_csv, sparse_flow_csv(r.sparse));
  }
  io::write_flo(args.out, flow);
  if (!args.viz.empty()) io::write_rgb_png(args.viz, flow_to_color(flow));
  return 0;
}

struct GenerateArgs {
  std::string flow, out;
  int size = 256;
  std::uint64_t seed = 0;
  int particles = 0;
  double sigma = 1.0;
  double peak = 1.0;
  double background = 0.0;
  int pairs = 1;
  bool dataset = false;
};

void write_pair(const fs::path& dir, const std::string& prefix, bool dataset_layout,
                const synth::AnalyticFlow& flow, const synth::ParticleConfig& pc) {
  const synth::SyntheticPair pair = synth::render_pair(flow, pc);
  if (dataset_layout) {
    io::write_image(dir / (prefix + "_img1.png"), pair.first);
    io::write_image(dir / (prefix + "_img2.png"), pair.second);
    io::write_flo(dir / (prefix + "_flow.flo"), pair.truth);
    io::write_text_atomic(dir / (prefix + "_metadata.json"), synth::metadata_json(flow, pc));
  } else {
    io::write_image(dir / "pair_a.png", pair.first);
    io::write_image(dir / "pair_b.png", pair.second);
    io::write_flo(dir / "truth.flo", pair.truth);
    io::write_text_atomic(dir / "metadata.json", synth::metadata_json(flow, pc));
  }
}

int cmd_generate(const GenerateArgs& args) {
  synth::AnalyticFlow flow;
  try {
    flow = synth::parse_flow_spec(args.flow);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  synth::ParticleConfig pc;
  pc.image_size = args.size;
  pc.particle_count = args.particles;
  pc.particle_sigma = args.sigma;
  pc.peak_intensity = args.peak;
  pc.background = args.background;
  pc.validate();

  const synth::FlowStats stats = synth::flow_stats(flow, args.size);
  if (stats.max_magnitude > 5.0) {
    std::cerr << "warning: max displacement " << stats.max_magnitude
              << " px is outside the |dx| in [0, 5] px regime of standard PIV benchmarks\n";
  }
  fs::create_directories(args.out);
  const bool layout = args.dataset || args.pairs > 1;
  for (int i = 0; i < args.pairs; ++i) {
    pc.seed = args.seed + static_cast<std::uint64_t>(i);
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "%s_%04d", flow.kind_name().c_str(), i);
    write_pair(args.out, prefix, layout, flow, pc);
  }
  return 0;
}

struct BenchArgs {
  std::string dataset, methods = "unsup,hs,xcorr", out, config;
  std::vector<std::string> overrides;
  bool ablation = false;
};

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_bench(const BenchArgs& args) {
  BenchOptions opt;
  opt.config = resolve_config(args.config, args.overrides);
  opt.methods = split_csv_list(args.methods);
  opt.ablation = args.ablation;
  opt.strict = strict_mode();
  opt.progress = &std::cerr;
  try {
    (void)expand_methods(opt.methods, opt.ablation);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  const Dataset ds = Dataset::open(args.dataset, &std::cerr);
  if (ds.empty()) {
    throw Error("dataset " + args.dataset +
                " contains no image pairs (expected <id>_img1.png, <id>_img2.png, <id>_flow.flo)");
  }
  const EvalReport report = run_benchmark(ds, opt);
  fs::path json_path = args.out;
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  if (csv_path == json_path) csv_path += ".csv";
  io::write_text_atomic(json_path, report_json(report));
  io::write_text_atomic(csv_path, report_csv(report));
  for (const ReportAggregate& a : report.aggregates) {
    if (a.flow_kind != "all") continue;
    std::cerr << a.method << " [" << a.loss_config << "]: mean AEE " << a.mean_aee_px << " px ("
              << per_100px(a.mean_aee_px) << " per 100 px) over " << a.count << " pairs\n";
  }
  return 0;
}

struct VizArgs {
  std::string flow, truth, out, max_mag = "auto";
};

int cmd_viz(const VizArgs& args) {
  const std::optional<double> max_mag = parse_max_mag(args.max_mag);
  const FlowField flow = io::read_flo(args.flow);
  if (!args.truth.empty()) {
    const FlowField truth = io::read_flo(args.truth);
    io::write_rgb_png(args.out, error_map(flow, truth, max_mag));
  } else {
    io::write_rgb_png(args.out, flow_to_color(flow, max_mag));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised-loss PIV flow estimation toolkit"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate a dense flow between two images");
  estimate->add_option("--a", est.a, "First frame (.png or .pgm)")->required();
  estimate->add_option("--b", est.b, "Second frame (.png or .pgm)")->required();
  estimate->add_option("--method", est.method, "Estimator: unsup, hs or xcorr")
      ->required()
      ->check(CLI::IsMember({"unsup", "hs", "xcorr"}));
  estimate->add_option("--out", est.out, "Output .flo path")->required();
  estimate->add_option("--config", est.config, "key = value configuration file");
  estimate->add_option("--set", est.overrides, "Override one config key (key=value), repeatable");
  estimate->add_option("--trace", est.trace, "Write the solver trace JSON (unsup only)");
  estimate->add_option("--viz", est.viz, "Write a colour-coded flow PNG");
  estimate->add_option("--sparse-csv", est.sparse_csv,
                       "Write window vectors as CSV: x,y,u,v,peak,valid (xcorr only)");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Render a synthetic particle image pair");
  generate
      ->add_option("--flow", gen.flow,
                   std::string("Flow spec kind:params, one of ") + synth::kFlowSpecGrammar)
      ->required();
  generate->add_option("--size", gen.size, "Image side length in pixels")->capture_default_str();
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--particles", gen.particles,
                       "Particles per frame (0 = 5% of the pixel count)")
      ->capture_default_str();
  generate->add_option("--sigma", gen.sigma, "Particle Gaussian sigma, pixels")->capture_default_str();
  generate->add_option("--peak", gen.peak, "Particle peak intensity in (0, 1]")->capture_default_str();
  generate->add_option("--background", gen.background, "Background intensity")->capture_default_str();
  generate->add_option("--pairs", gen.pairs, "Number of pairs (seeds seed, seed+1, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  generate->add_flag("--dataset", gen.dataset,
                     "Use the <id>_img1.png/<id>_img2.png/<id>_flow.flo layout (implied by --pairs > 1)");

  BenchArgs bench;
  auto* benchcmd = app.add_subcommand("bench", "Score estimators on a dataset directory");
  benchcmd->add_option("--dataset", bench.dataset, "Directory of <id>_img1/_img2/_flow.flo files")
      ->required();
  benchcmd->add_option("--methods", bench.methods, "Comma-separated subset of unsup,hs,xcorr")
      ->capture_default_str();
  benchcmd->add_flag("--ablation", bench.ablation,
                     "Run unsup with the P+S+C, P+S and P+C loss configurations");
  benchcmd->add_option("--out", bench.out, "Report JSON path (CSV written alongside)")->required();
  benchcmd->add_option("--config", bench.config, "key = value configuration file");
  benchcmd->add_option("--set", bench.overrides, "Override one config key (key=value), repeatable");

  VizArgs viz;
  auto* vizcmd = app.add_subcommand("viz", "Colour-code a flow file or its error against truth");
  vizcmd->add_option("--flow", viz.flow, "Input .flo")->required();
  vizcmd->add_option("--truth", viz.truth, "Ground-truth .flo; renders the endpoint-error map");
  vizcmd->add_option("--out", viz.out, "Output PNG")->required();
  vizcmd->add_option("--max-mag", viz.max_mag, "Saturation scale: auto (99th percentile) or a value")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*estimate) return cmd_estimate(est);
    if (*generate) return cmd_generate(gen);
    if (*benchcmd) return cmd_bench(bench);
    if (*vizcmd) return cmd_viz(viz);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
