#include "unpiv/config.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "unpiv/io.hpp"

namespace unpiv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw InvalidInput("invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                     "'");
}

double to_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text);
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  text = trim(text);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text);
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  bad_value(key, text);
}

std::array<double, 6> to_weights(std::string_view key, std::string_view text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    values.push_back(to_double(key, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (values.size() != 6) {
    throw InvalidInput("layer_weights needs exactly 6 values, got " +
                       std::to_string(values.size()));
  }
  std::array<double, 6> out{};
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

void apply_loss_setting(LossParams& p, std::string_view key, std::string_view value, bool& handled) {
  handled = true;
  if (key == "gamma") p.gamma = to_double(key, value);
  else if (key == "epsilon") p.epsilon = to_double(key, value);
  else if (key == "lambda_p") p.lambda_p = to_double(key, value);
  else if (key == "lambda_s") p.lambda_s = to_double(key, value);
  else if (key == "lambda_c") p.lambda_c = to_double(key, value);
  else if (key == "layer_weights") p.layer_weights = to_weights(key, value);
  else handled = false;
}

template <typename Fn>
void for_each_setting(std::string_view text, Fn&& fn) {
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    fn(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string join_weights(const std::array<double, 6>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += format_double(w[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void EstimatorConfig::validate() const {
  loss.validate();
  solver.validate();
  hs.validate();
  xcorr.validate();
}

void apply_setting(EstimatorConfig& c, std::string_view key, std::string_view value) {
  bool handled = false;
  apply_loss_setting(c.loss, key, value, handled);
  if (handled) return;
  if (key == "pyramid_levels") c.solver.pyramid_levels = to_int(key, value);
  else if (key == "iters_per_level") c.solver.iters_per_level = to_int(key, value);
  else if (key == "step_size") c.solver.step_size = to_double(key, value);
  else if (key == "adam_beta1") c.solver.adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") c.solver.adam_beta2 = to_double(key, value);
  else if (key == "adam_eps") c.solver.adam_eps = to_double(key, value);
  else if (key == "convergence_tol") c.solver.convergence_tol = to_double(key, value);
  else if (key == "report_multiscale") c.solver.report_multiscale = to_bool(key, value);
  else if (key == "grad_smoothing") c.solver.grad_smoothing = to_int(key, value);
  else if (key == "grad_smoothing_fraction") c.solver.grad_smoothing_fraction = to_double(key, value);
  else if (key == "step_smoothing") c.solver.step_smoothing = to_int(key, value);
  else if (key == "final_step_fraction") c.solver.final_step_fraction = to_double(key, value);
  else if (key == "hs_alpha") c.hs.alpha = to_double(key, value);
  else if (key == "hs_iterations") c.hs.iterations = to_int(key, value);
  else if (key == "hs_multiscale") c.hs.use_multiscale = to_bool(key, value);
  else if (key == "hs_levels") c.hs.levels = to_int(key, value);
  else if (key == "hs_warps") c.hs.warps_per_level = to_int(key, value);
  else if (key == "window_size") c.xcorr.window_size = to_int(key, value);
  else if (key == "search_radius") c.xcorr.search_radius = to_int(key, value);
  else if (key == "passes") c.xcorr.passes = to_int(key, value);
  else if (key == "grid_step") c.xcorr.grid_step = to_int(key, value);
  else if (key == "refine_radius") c.xcorr.refine_radius = to_int(key, value);
  else if (key == "min_peak") c.xcorr.min_peak = to_double(key, value);
  else if (key == "subpixel") {
    if (value == "none") c.xcorr.subpixel = SubpixelFit::none;
    else if (value == "gaussian3") c.xcorr.subpixel = SubpixelFit::gaussian3;
    else bad_value(key, value);
  } else {
    throw InvalidInput("unknown config key '" + std::string(key) + "'");
  }
}

EstimatorConfig parse_config(std::string_view text, EstimatorConfig base) {
  for_each_setting(text, [&](std::string_view k, std::string_view v) { apply_setting(base, k, v); });
  base.validate();
  return base;
}

EstimatorConfig load_config(const std::filesystem::path& path, EstimatorConfig base) {
  const auto bytes = io::read_bytes(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                      std::move(base));
}

LossParams parse_loss_params(std::string_view text) {
  LossParams p;
  for_each_setting(text, [&](std::string_view k, std::string_view v) {
    bool handled = false;
    apply_loss_setting(p, k, v, handled);
    if (!handled) throw InvalidInput("unknown loss key '" + std::string(k) + "'");
  });
  p.validate();
  return p;
}

std::string format_loss_params(const LossParams& p) {
  std::ostringstream out;
  out << "gamma = " << format_double(p.gamma) << '\n'
      << "epsilon = " << format_double(p.epsilon) << '\n'
      << "lambda_p = " << format_double(p.lambda_p) << '\n'
      << "lambda_s = " << format_double(p.lambda_s) << '\n'
      << "lambda_c = " << format_double(p.lambda_c) << '\n'
      << "layer_weights = " << join_weights(p.layer_weights) << '\n';
  return out.str();
}

std::string format_config(const EstimatorConfig& c) {
  std::ostringstream out;
  out << "# loss\n" << format_loss_params(c.loss);
  out << "# unsupervised solver\n"
      << "pyramid_levels = " << c.solver.pyramid_levels << '\n'
      << "iters_per_level = " << c.solver.iters_per_level << '\n'
      << "step_size = " << format_double(c.solver.step_size) << '\n'
      << "adam_beta1 = " << format_double(c.solver.adam_beta1) << '\n'
      << "adam_beta2 = " << format_double(c.solver.adam_beta2) << '\n'
      << "adam_eps = " << format_double(c.solver.adam_eps) << '\n'
      << "convergence_tol = " << format_double(c.solver.convergence_tol) << '\n'
      << "report_multiscale = " << (c.solver.report_multiscale ? "true" : "false") << '\n'
      << "grad_smoothing = " << c.solver.grad_smoothing << '\n'
      << "grad_smoothing_fraction = " << format_double(c.solver.grad_smoothing_fraction) << '\n'
      << "step_smoothing = " << c.solver.step_smoothing << '\n'
      << "final_step_fraction = " << format_double(c.solver.final_step_fraction) << '\n';
  out << "# horn-schunck\n"
      << "hs_alpha = " << format_double(c.hs.alpha) << '\n'
      << "hs_iterations = " << c.hs.iterations << '\n'
      << "hs_multiscale = " << (c.hs.use_multiscale ? "true" : "false") << '\n'
      << "hs_levels = " << c.hs.levels << '\n'
      << "hs_warps = " << c.hs.warps_per_level << '\n';
  out << "# cross-correlation\n"
      << "window_size = " << c.xcorr.window_size << '\n'
      << "search_radius = " << c.xcorr.search_radius << '\n'
      << "passes = " << c.xcorr.passes << '\n'
      << "subpixel = " << (c.xcorr.subpixel == SubpixelFit::none ? "none" : "gaussian3") << '\n'
      << "grid_step = " << c.xcorr.grid_step << '\n'
      << "refine_radius = " << c.xcorr.refine_radius << '\n'
      << "min_peak = " << format_double(c.xcorr.min_peak) << '\n';
  return out.str();
}

}  // namespace unpiv
