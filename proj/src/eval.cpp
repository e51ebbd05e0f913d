#include "unpiv/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <tuple>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "unpiv/horn_schunck.hpp"
#include "unpiv/io.hpp"
#include "unpiv/variational.hpp"
#include "unpiv/xcorr.hpp"

namespace unpiv {

namespace fs = std::filesystem;

double aee(const FlowField& estimate, const FlowField& truth) {
  require_same_shape(estimate, truth, "aee");
  if (estimate.size() == 0) throw InvalidInput("aee of empty flow fields");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += std::hypot(estimate.u[i] - truth.u[i], estimate.v[i] - truth.v[i]);
  }
  return sum / static_cast<double>(estimate.size());
}

std::string flow_kind_from_id(const std::string& id) {
  const auto us = id.find('_');
  return us == std::string::npos ? id : id.substr(0, us);
}

namespace {

bool readable(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return false;
  std::ifstream in(p, std::ios::binary);
  return static_cast<bool>(in);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Dataset Dataset::open(const fs::path& root, std::ostream* warnings) {
  if (!fs::is_directory(root)) throw Error("dataset directory " + root.string() + " not found");
  struct Found {
    std::optional<fs::path> img1, img2, flow;
  };
  std::map<std::string, Found> by_id;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string stem = entry.path().stem().string();
    const std::string ext = entry.path().extension().string();
    if (ends_with(stem, "_img1")) {
      by_id[stem.substr(0, stem.size() - 5)].img1 = entry.path();
    } else if (ends_with(stem, "_img2")) {
      by_id[stem.substr(0, stem.size() - 5)].img2 = entry.path();
    } else if (ends_with(stem, "_flow") && ext == ".flo") {
      by_id[stem.substr(0, stem.size() - 5)].flow = entry.path();
    }
  }
  std::vector<PairFiles> pairs;
  for (const auto& [id, f] : by_id) {
    if (!f.img1 || !f.img2) {
      if (warnings) *warnings << "warning: pair '" << id << "' is missing an image, skipped\n";
      continue;
    }
    if (!readable(*f.img1) || !readable(*f.img2)) {
      if (warnings) *warnings << "warning: pair '" << id << "' has an unreadable image, skipped\n";
      continue;
    }
    std::optional<fs::path> truth = f.flow;
    if (truth && !readable(*truth)) {
      if (warnings) *warnings << "warning: flow file of '" << id << "' is unreadable, skipped\n";
      continue;
    }
    pairs.push_back({id, flow_kind_from_id(id), *f.img1, *f.img2, truth});
  }
  return Dataset(std::move(pairs));
}

ImagePair Dataset::load(std::size_t i) const {
  const PairFiles& f = pairs_.at(i);
  ImagePair pair{f.id, f.flow_kind, normalize(io::read_image(f.first)),
                 normalize(io::read_image(f.second)), std::nullopt};
  require_same_shape(pair.first, pair.second, ("pair " + f.id).c_str());
  if (f.truth) {
    pair.truth = io::read_flo(*f.truth);
    require_same_shape(pair.first, *pair.truth, ("ground truth of " + f.id).c_str());
  }
  return pair;
}

std::vector<MethodRun> expand_methods(const std::vector<std::string>& methods, bool ablation) {
  std::vector<MethodRun> runs;
  for (const std::string& m : methods) {
    if (m == "unsup") {
      if (ablation) {
        for (const char* tag : {"PSC", "PS", "PC"}) runs.push_back({m, tag});
      } else {
        runs.push_back({m, "PSC"});
      }
    } else if (m == "hs" || m == "xcorr") {
      runs.push_back({m, "-"});
    } else {
      throw InvalidInput("unknown method '" + m + "' (expected unsup, hs, xcorr)");
    }
  }
  return runs;
}

LossParams ablation_params(const LossParams& base, const std::string& tag) {
  LossParams p = base;
  if (tag == "PSC") return p;
  if (tag == "PS") {
    p.lambda_c = 0.0;
  } else if (tag == "PC") {
    p.lambda_s = 0.0;
  } else {
    throw InvalidInput("unknown loss configuration '" + tag + "'");
  }
  return p;
}

FlowField run_method(const MethodRun& run, const ImagePair& pair, const EstimatorConfig& config) {
  if (run.method == "unsup") {
    return estimate_unsupervised(pair.first, pair.second,
                                 ablation_params(config.loss, run.loss_config), config.solver)
        .forward;
  }
  if (run.method == "hs") return estimate_horn_schunck(pair.first, pair.second, config.hs);
  if (run.method == "xcorr") return estimate_multipass(pair.first, pair.second, config.xcorr).dense;
  throw InvalidInput("unknown method '" + run.method + "'");
}

namespace {

std::vector<ReportRow> evaluate_pair(const Dataset& ds, std::size_t index,
                                     const std::vector<MethodRun>& runs, const BenchOptions& opt) {
  std::vector<ReportRow> rows;
  const PairFiles& files = ds.files(index);
  std::optional<ImagePair> pair;
  std::string load_error;
  try {
    pair = ds.load(index);
  } catch (const std::exception& e) {
    load_error = e.what();
  }
  for (const MethodRun& run : runs) {
    ReportRow row{files.id, files.flow_kind, run.method, run.loss_config, {}, {}, "ok"};
    if (!pair) {
      row.status = "failed: " + load_error;
      rows.push_back(std::move(row));
      continue;
    }
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const FlowField est = run_method(run, *pair, opt.config);
      const auto t1 = std::chrono::steady_clock::now();
      if (!opt.strict) row.seconds = std::chrono::duration<double>(t1 - t0).count();
      if (pair->truth) {
        row.aee_px = aee(est, *pair->truth);
      } else {
        row.status = "no_truth";
      }
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ReportAggregate> aggregate_rows(const std::vector<ReportRow>& rows) {
  struct Acc {
    double sum = 0.0;
    int count = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Acc> acc;
  for (const ReportRow& r : rows) {
    if (!r.aee_px) continue;
    for (const std::string& kind : {r.flow_kind, std::string("all")}) {
      Acc& a = acc[{r.method, r.loss_config, kind}];
      a.sum += *r.aee_px;
      ++a.count;
    }
  }
  std::vector<ReportAggregate> out;
  for (const auto& [key, a] : acc) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), a.sum / a.count, a.count});
  }
  return out;
}

EvalReport run_benchmark(const Dataset& dataset, const BenchOptions& options) {
  options.config.validate();
  const std::vector<MethodRun> runs = expand_methods(options.methods, options.ablation);
  std::vector<std::vector<ReportRow>> per_pair(dataset.size());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      options.strict ? 1 : std::min<std::size_t>(hw, std::max<std::size_t>(dataset.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      per_pair[i] = evaluate_pair(dataset, i, runs, options);
      if (options.progress) {
        *options.progress << "[" << i + 1 << "/" << dataset.size() << "] "
                          << dataset.files(i).id << '\n';
      }
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < dataset.size(); i += workers) {
          per_pair[i] = evaluate_pair(dataset, i, runs, options);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  for (auto& rows : per_pair) {
    for (auto& r : rows) report.rows.push_back(std::move(r));
  }
  report.aggregates = aggregate_rows(report.rows);
  report.config_text = format_config(options.config);
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_number(const std::optional<double>& v, double scale = 1.0) {
  return v ? format_double(*v * scale) : std::string();
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "pair_id,flow_kind,method,loss_config,aee_px,aee_per100px,seconds,status\n";
  for (const ReportRow& r : report.rows) {
    out << csv_field(r.pair_id) << ',' << csv_field(r.flow_kind) << ',' << r.method << ','
        << r.loss_config << ',' << opt_number(r.aee_px) << ',' << opt_number(r.aee_px, 100.0)
        << ',' << opt_number(r.seconds) << ',' << csv_field(r.status) << '\n';
  }
  return out.str();
}

std::string report_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v, double scale = 1.0) {
    return v ? ordered_json(*v * scale) : ordered_json(nullptr);
  };
  ordered_json doc;
  doc["rows"] = ordered_json::array();
  for (const ReportRow& r : report.rows) {
    doc["rows"].push_back({{"pair_id", r.pair_id},
                           {"flow_kind", r.flow_kind},
                           {"method", r.method},
                           {"loss_config", r.loss_config},
                           {"aee_px", opt(r.aee_px)},
                           {"aee_per100px", opt(r.aee_px, 100.0)},
                           {"seconds", opt(r.seconds)},
                           {"status", r.status}});
  }
  doc["aggregates"] = ordered_json::array();
  for (const ReportAggregate& a : report.aggregates) {
    doc["aggregates"].push_back({{"method", a.method},
                                 {"loss_config", a.loss_config},
                                 {"flow_kind", a.flow_kind},
                                 {"mean_aee_px", a.mean_aee_px},
                                 {"mean_aee_per100px", 100.0 * a.mean_aee_px},
                                 {"count", a.count}});
  }
  doc["config"] = report.config_text;
  return doc.dump(2) + "\n";
}

}  // namespace unpiv
