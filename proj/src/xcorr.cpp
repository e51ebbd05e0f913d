#include "unpiv/xcorr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "unpiv/config.hpp"
#include "unpiv/warp.hpp"

namespace unpiv {

void XcorrConfig::validate() const {
  if (window_size < 5 || window_size % 2 == 0) {
    throw InvalidInput("window_size must be odd and >= 5");
  }
  if (search_radius < 1) throw InvalidInput("search_radius must be >= 1");
  if (refine_radius < 1) throw InvalidInput("refine_radius must be >= 1");
  if (passes < 1) throw InvalidInput("passes must be >= 1");
  if (grid_step < 1) throw InvalidInput("grid_step must be >= 1");
}

double zncc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DimensionMismatch("zncc patches differ in size");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // a constant patch leaves roundoff-sized variance, not an exact zero
  const auto flat = [n](double ss, double m) { return ss <= 1e-24 * n * (1.0 + m * m); };
  if (flat(saa, ma) || flat(sbb, mb)) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> gaussian3_offset(double c_minus, double c0, double c_plus) {
  if (!(c_minus > 0.0 && c0 > 0.0 && c_plus > 0.0)) return std::nullopt;
  const double lm = std::log(c_minus);
  const double l0 = std::log(c0);
  const double lp = std::log(c_plus);
  const double denom = 2.0 * lm - 4.0 * l0 + 2.0 * lp;
  if (!(denom < 0.0)) return std::nullopt;
  const double delta = (lm - lp) / denom;
  if (!(std::abs(delta) < 1.0)) return std::nullopt;
  return delta;
}

WindowMatch correlate_window(const GrayImage& i1, const GrayImage& i2, Point center,
                             const XcorrConfig& config) {
  return correlate_window(i1, i2, center, config.window_size, config.search_radius,
                          config.subpixel);
}

WindowMatch correlate_window(const GrayImage& i1, const GrayImage& i2, Point center,
                             int window_size, int search_radius, SubpixelFit subpixel) {
  require_same_shape(i1, i2, "correlate_window");
  WindowMatch m;
  const int half = window_size / 2;
  // One extra ring beyond the search range feeds the subpixel fit.
  const int reach = half + search_radius + 1;
  if (center.x - reach < 0 || center.y - reach < 0 || center.x + reach >= i1.width() ||
      center.y + reach >= i1.height()) {
    m.status = WindowStatus::out_of_bounds;
    return m;
  }

  const std::size_t n = static_cast<std::size_t>(window_size) * window_size;
  std::vector<double> tmpl;
  tmpl.reserve(n);
  double mean = 0.0;
  for (int y = -half; y <= half; ++y) {
    for (int x = -half; x <= half; ++x) {
      tmpl.push_back(i1(center.x + x, center.y + y));
      mean += tmpl.back();
    }
  }
  mean /= static_cast<double>(n);
  double norm2 = 0.0;
  for (double& t : tmpl) {
    t -= mean;
    norm2 += t * t;
  }
  if (norm2 <= 1e-24 * static_cast<double>(n) * (1.0 + mean * mean)) {
    m.status = WindowStatus::undefined_correlation;
    return m;
  }

  const int span = 2 * (search_radius + 1) + 1;
  std::vector<double> table(static_cast<std::size_t>(span) * span,
                            std::numeric_limits<double>::quiet_NaN());
  auto cell = [&](int dx, int dy) -> double& {
    return table[static_cast<std::size_t>(dy + search_radius + 1) * span +
                 static_cast<std::size_t>(dx + search_radius + 1)];
  };
  for (int dy = -search_radius - 1; dy <= search_radius + 1; ++dy) {
    for (int dx = -search_radius - 1; dx <= search_radius + 1; ++dx) {
      // Template is zero-mean, so sum(t * b) needs no mean correction of b.
      double sb = 0.0, sbb = 0.0, stb = 0.0;
      std::size_t k = 0;
      for (int y = -half; y <= half; ++y) {
        const int yy = center.y + dy + y;
        for (int x = -half; x <= half; ++x, ++k) {
          const double b = i2(center.x + dx + x, yy);
          sb += b;
          sbb += b * b;
          stb += tmpl[k] * b;
        }
      }
      const double var = sbb - sb * sb / static_cast<double>(n);
      if (var > 1e-12 * static_cast<double>(n)) {
        cell(dx, dy) = std::clamp(stb / std::sqrt(norm2 * var), -1.0, 1.0);
      }
    }
  }

  int best_x = 0, best_y = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int dy = -search_radius; dy <= search_radius; ++dy) {
    for (int dx = -search_radius; dx <= search_radius; ++dx) {
      const double c = cell(dx, dy);
      if (c > best) {
        best = c;
        best_x = dx;
        best_y = dy;
      }
    }
  }
  if (!std::isfinite(best)) {
    m.status = WindowStatus::undefined_correlation;
    return m;
  }
  m.peak = best;
  m.du = best_x;
  m.dv = best_y;
  m.at_search_edge = std::abs(best_x) == search_radius || std::abs(best_y) == search_radius;
  // An exact match means an integer shift; fitting the lopsided flanks of the
  // peak would only add a bogus fraction.
  const bool exact = best >= 1.0 - 1e-12;
  if (subpixel == SubpixelFit::gaussian3 && !exact) {
    if (auto d = gaussian3_offset(cell(best_x - 1, best_y), best, cell(best_x + 1, best_y))) {
      m.du += *d;
    }
    if (auto d = gaussian3_offset(cell(best_x, best_y - 1), best, cell(best_x, best_y + 1))) {
      m.dv += *d;
    }
  }
  return m;
}

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Fills samples still invalid after median replacement from the nearest valid
// sample (grid distance, first found in row-major order on ties).
void fill_from_nearest(SparseFlow& f) {
  std::vector<std::size_t> valid_idx;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.valid[i]) valid_idx.push_back(i);
  }
  if (valid_idx.empty()) throw EstimationFailed("no valid correlation windows");
  if (valid_idx.size() == f.size()) return;
  const SparseFlow snapshot = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (snapshot.valid[i]) continue;
    const int r = static_cast<int>(i) / f.cols, c = static_cast<int>(i) % f.cols;
    std::size_t best = valid_idx.front();
    long best_d = std::numeric_limits<long>::max();
    for (std::size_t j : valid_idx) {
      const long dr = static_cast<int>(j) / f.cols - r, dc = static_cast<int>(j) % f.cols - c;
      const long d = dr * dr + dc * dc;
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    f.u[i] = snapshot.u[best];
    f.v[i] = snapshot.v[best];
  }
}

SparseFlow make_grid(int width, int height, const XcorrConfig& cfg) {
  const int margin = cfg.window_size / 2 + std::max(cfg.search_radius, cfg.refine_radius) + 1;
  SparseFlow f;
  f.origin_x = margin;
  f.origin_y = margin;
  f.step = cfg.grid_step;
  for (int y = margin; y < height - margin; y += cfg.grid_step) ++f.rows;
  for (int x = margin; x < width - margin; x += cfg.grid_step) ++f.cols;
  if (f.rows == 0 || f.cols == 0) {
    throw EstimationFailed("image too small for a " + std::to_string(cfg.window_size) +
                           "px window with search radius " + std::to_string(cfg.search_radius));
  }
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      f.positions.push_back({margin + c * cfg.grid_step, margin + r * cfg.grid_step});
    }
  }
  const std::size_t n = f.positions.size();
  f.u.assign(n, 0.0);
  f.v.assign(n, 0.0);
  f.peak.assign(n, 0.0);
  f.valid.assign(n, false);
  return f;
}

}  // namespace

int replace_outliers(SparseFlow& f) {
  const SparseFlow snapshot = f;
  int replaced = 0;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * f.cols + c;
      if (snapshot.valid[i]) continue;
      std::vector<double> us, vs;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= f.rows || cc >= f.cols) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * f.cols + cc;
          if (!snapshot.valid[j]) continue;
          us.push_back(snapshot.u[j]);
          vs.push_back(snapshot.v[j]);
        }
      }
      if (us.empty()) continue;
      f.u[i] = median(us);
      f.v[i] = median(vs);
      f.valid[i] = true;
      ++replaced;
    }
  }
  return replaced;
}

FlowField densify(const SparseFlow& f, int width, int height) {
  if (f.size() == 0 || f.size() != static_cast<std::size_t>(f.rows) * f.cols) {
    throw InvalidInput("densify: malformed sample grid");
  }
  FlowField dense(width, height);
  auto coord = [&](int p, int origin, int count, int& i0, double& t) {
    const double g = std::clamp(static_cast<double>(p - origin) / f.step, 0.0,
                                static_cast<double>(count - 1));
    i0 = std::min(static_cast<int>(g), std::max(count - 2, 0));
    t = count > 1 ? g - i0 : 0.0;
  };
  for (int y = 0; y < height; ++y) {
    int r0;
    double ty;
    coord(y, f.origin_y, f.rows, r0, ty);
    const int r1 = std::min(r0 + 1, f.rows - 1);
    for (int x = 0; x < width; ++x) {
      int c0;
      double tx;
      coord(x, f.origin_x, f.cols, c0, tx);
      const int c1 = std::min(c0 + 1, f.cols - 1);
      auto at = [&](const std::vector<double>& g, int r, int c) {
        return g[static_cast<std::size_t>(r) * f.cols + c];
      };
      auto lerp2 = [&](const std::vector<double>& g) {
        const double top = (1.0 - tx) * at(g, r0, c0) + tx * at(g, r0, c1);
        const double bot = (1.0 - tx) * at(g, r1, c0) + tx * at(g, r1, c1);
        return (1.0 - ty) * top + ty * bot;
      };
      dense.u(x, y) = lerp2(f.u);
      dense.v(x, y) = lerp2(f.v);
    }
  }
  return dense;
}

XcorrResult estimate_multipass(const GrayImage& i1, const GrayImage& i2, const XcorrConfig& config) {
  config.validate();
  require_same_shape(i1, i2, "estimate_multipass");
  SparseFlow sparse = make_grid(i1.width(), i1.height(), config);
  FlowField dense(i1.width(), i1.height());

  for (int pass = 0; pass < config.passes; ++pass) {
    const bool first = pass == 0;
    const int radius = first ? config.search_radius : config.refine_radius;
    GrayImage target = i2;
    if (!first) target = backwarp(i2, dense).warped;
    for (std::size_t i = 0; i < sparse.size(); ++i) {
      const Point p = sparse.positions[i];
      const WindowMatch m = correlate_window(i1, target, p, config.window_size, radius,
                                             config.subpixel);
      const double base_u = first ? 0.0 : dense.u(p.x, p.y);
      const double base_v = first ? 0.0 : dense.v(p.x, p.y);
      sparse.peak[i] = m.status == WindowStatus::ok ? m.peak : 0.0;
      sparse.valid[i] =
          m.status == WindowStatus::ok && m.peak >= config.min_peak && !m.at_search_edge;
      sparse.u[i] = base_u + (m.status == WindowStatus::ok ? m.du : 0.0);
      sparse.v[i] = base_v + (m.status == WindowStatus::ok ? m.dv : 0.0);
    }
    replace_outliers(sparse);
    fill_from_nearest(sparse);
    dense = densify(sparse, i1.width(), i1.height());
  }
  return {std::move(sparse), std::move(dense)};
}

std::string sparse_flow_csv(const SparseFlow& f) {
  std::ostringstream out;
  out << "x,y,u,v,peak,valid\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    out << f.positions[i].x << ',' << f.positions[i].y << ',' << format_double(f.u[i]) << ','
        << format_double(f.v[i]) << ',' << format_double(f.peak[i]) << ','
        << (f.valid[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace unpiv
