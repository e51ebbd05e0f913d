#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "unpiv/config.hpp"
#include "unpiv/grid.hpp"

namespace unpiv {

/// Mean over pixels of the endpoint distance |F_est - F_truth|, in pixels.
double aee(const FlowField& estimate, const FlowField& truth);
inline double per_100px(double pixels) { return 100.0 * pixels; }

/// Files of one image pair discovered on disk.
struct PairFiles {
  std::string id;
  std::string flow_kind;
  std::filesystem::path first;
  std::filesystem::path second;
  std::optional<std::filesystem::path> truth;
};

struct ImagePair {
  std::string id;
  std::string flow_kind;
  GrayImage first;   // normalized to [0, 1]
  GrayImage second;
  std::optional<FlowField> truth;
};

/// Pairs found under a directory by the `<id>_img1.<ext>`, `<id>_img2.<ext>`,
/// optional `<id>_flow.flo` convention, in lexicographic id order. Images are
/// loaded on demand.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<PairFiles> pairs) : pairs_(std::move(pairs)) {}

  /// Incomplete or unreadable pairs are reported to `warnings` and skipped.
  static Dataset open(const std::filesystem::path& root, std::ostream* warnings = nullptr);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const PairFiles& files(std::size_t i) const { return pairs_[i]; }
  /// Throws (e.g. DimensionMismatch) when the pair cannot be used.
  ImagePair load(std::size_t i) const;

 private:
  std::vector<PairFiles> pairs_;
};

/// Flow kind from a pair id: the text before the first '_' (whole id if none).
std::string flow_kind_from_id(const std::string& id);

struct MethodRun {
  std::string method;       // unsup | hs | xcorr
  std::string loss_config;  // PSC | PS | PC for unsup, "-" otherwise
};

/// Expands method names into runs; with `ablation`, unsup becomes the three
/// loss configurations P+S+C, P+S and P+C.
std::vector<MethodRun> expand_methods(const std::vector<std::string>& methods, bool ablation);

/// Loss params for an ablation tag: PSC keeps all terms, PS zeroes lambda_c,
/// PC zeroes lambda_s.
LossParams ablation_params(const LossParams& base, const std::string& tag);

struct ReportRow {
  std::string pair_id;
  std::string flow_kind;
  std::string method;
  std::string loss_config;
  std::optional<double> aee_px;
  std::optional<double> seconds;
  std::string status;  // ok | no_truth | failed: <reason>
};

struct ReportAggregate {
  std::string method;
  std::string loss_config;
  std::string flow_kind;  // "all" for the per-method summary
  double mean_aee_px = 0.0;
  int count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<ReportAggregate> aggregates;
  std::string config_text;
};

struct BenchOptions {
  EstimatorConfig config;
  std::vector<std::string> methods{"unsup", "hs", "xcorr"};
  bool ablation = false;
  /// Sequential evaluation and no wall-clock fields, so reports are byte-stable.
  bool strict = false;
  std::ostream* progress = nullptr;
};

/// Runs one estimator on a pair; throws on failure.
FlowField run_method(const MethodRun& run, const ImagePair& pair, const EstimatorConfig& config);

EvalReport run_benchmark(const Dataset& dataset, const BenchOptions& options);
std::vector<ReportAggregate> aggregate_rows(const std::vector<ReportRow>& rows);

/// CSV columns: pair_id, flow_kind, method, loss_config, aee_px, aee_per100px,
/// seconds, status. Missing values are empty fields.
std::string report_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace unpiv
