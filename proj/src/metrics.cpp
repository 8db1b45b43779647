#include "spr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "spr/errors.hpp"
#include "spr/serialize.hpp"
#include "spr/threading.hpp"

namespace spr {

namespace fs = std::filesystem;

ComplexVolume central_roi(const ComplexVolume& x, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("central_roi: fraction must be in (0, 1]");
  const Shape3 s = x.shape();
  const int rx = static_cast<int>(std::floor(fraction * s.nx));
  const int ry = static_cast<int>(std::floor(fraction * s.ny));
  if (rx < 1 || ry < 1) throw std::invalid_argument("central_roi: crop has zero size");
  if (rx == s.nx && ry == s.ny) return x;
  const int x0 = (s.nx - rx) / 2;
  const int y0 = (s.ny - ry) / 2;
  ComplexVolume out(Shape3{rx, ry, s.nt});
  for (int t = 0; t < s.nt; ++t)
    for (int i = 0; i < rx; ++i)
      for (int j = 0; j < ry; ++j) out.at(i, j, t) = x.at(x0 + i, y0 + j, t);
  return out;
}

namespace {

void check_pair(const ComplexVolume& x, const ComplexVolume& ref) {
  if (x.shape() != ref.shape())
    throw std::invalid_argument("metrics: shape mismatch");
}

std::vector<double> magnitude(const ComplexVolume& x) {
  std::vector<double> m(x.size());
  auto src = x.flat();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(src[i]);
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Mean windowed similarity over fully interior positions of every frame.
// The window weights sum to one; uiq mode drops the stabilizers and handles
// the degenerate denominators via the factored luminance/structure limits.
double windowed_similarity(const ComplexVolume& xv, const ComplexVolume& rv, int win,
                           const std::vector<double>& weights, double c1, double c2,
                           bool uiq_mode) {
  const Shape3 s = xv.shape();
  if (s.nx < win || s.ny < win)
    throw std::invalid_argument("metrics: image smaller than the window");
  const std::vector<double> xm = magnitude(xv);
  const std::vector<double> rm = magnitude(rv);

  double total = 0.0;
  std::size_t count = 0;
  for (int t = 0; t < s.nt; ++t) {
    const std::size_t base = static_cast<std::size_t>(t) * s.frame_size();
    for (int i = 0; i + win <= s.nx; ++i)
      for (int j = 0; j + win <= s.ny; ++j) {
        double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
        std::size_t w = 0;
        for (int a = 0; a < win; ++a) {
          const std::size_t row = base + static_cast<std::size_t>(i + a) * s.ny + j;
          for (int b = 0; b < win; ++b, ++w) {
            const double xs = xm[row + b];
            const double ys = rm[row + b];
            const double wt = weights[w];
            mx += wt * xs;
            my += wt * ys;
            xx += wt * xs * xs;
            yy += wt * ys * ys;
            xy += wt * xs * ys;
          }
        }
        const double vx = xx - mx * mx;
        const double vy = yy - my * my;
        const double cov = xy - mx * my;

        double value;
        if (!uiq_mode) {
          value = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                  ((mx * mx + my * my + c1) * (vx + vy + c2));
        } else {
          const double lum_den = mx * mx + my * my;
          const double str_den = vx + vy;
          if (str_den == 0.0 && lum_den == 0.0) {
            value = 1.0;  // both windows exactly zero
          } else if (str_den == 0.0) {
            value = (2.0 * mx * my) / lum_den;
          } else if (lum_den == 0.0) {
            value = (2.0 * cov) / str_den;
          } else {
            value = ((2.0 * mx * my) * (2.0 * cov)) / (lum_den * str_den);
          }
        }
        total += value;
        ++count;
      }
  }
  return total / static_cast<double>(count);
}

}  // namespace

double psnr(const ComplexVolume& x, const ComplexVolume& ref) {
  check_pair(x, ref);
  const std::vector<double> xm = magnitude(x);
  const std::vector<double> rm = magnitude(ref);
  double se = 0.0;
  for (std::size_t i = 0; i < xm.size(); ++i) {
    const double d = xm[i] - rm[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double rmse = std::sqrt(se / static_cast<double>(xm.size()));
  return 20.0 * std::log10(max_abs(rm) / rmse);
}

double nrmse(const ComplexVolume& x, const ComplexVolume& ref) {
  check_pair(x, ref);
  const std::vector<double> xm = magnitude(x);
  const std::vector<double> rm = magnitude(ref);
  double se = 0.0, rn = 0.0;
  for (std::size_t i = 0; i < xm.size(); ++i) {
    const double d = xm[i] - rm[i];
    se += d * d;
    rn += rm[i] * rm[i];
  }
  if (rn == 0.0) throw std::invalid_argument("nrmse: reference is identically zero");
  return std::sqrt(se / rn);
}

double ssim(const ComplexVolume& x, const ComplexVolume& ref) {
  check_pair(x, ref);
  constexpr int win = 11;
  constexpr double sigma = 1.5;
  std::vector<double> weights(win * win);
  double sum = 0.0;
  for (int a = 0; a < win; ++a)
    for (int b = 0; b < win; ++b) {
      const double da = a - win / 2;
      const double db = b - win / 2;
      const double w = std::exp(-(da * da + db * db) / (2.0 * sigma * sigma));
      weights[static_cast<std::size_t>(a) * win + b] = w;
      sum += w;
    }
  for (auto& w : weights) w /= sum;

  const double level = max_abs(magnitude(ref));
  const double c1 = (0.01 * level) * (0.01 * level);
  const double c2 = (0.03 * level) * (0.03 * level);
  return windowed_similarity(x, ref, win, weights, c1, c2, false);
}

double uiq(const ComplexVolume& x, const ComplexVolume& ref) {
  check_pair(x, ref);
  constexpr int win = 8;
  const std::vector<double> weights(win * win, 1.0 / (win * win));
  return windowed_similarity(x, ref, win, weights, 0.0, 0.0, true);
}

namespace {

Aggregate aggregate(std::vector<double> values) {
  Aggregate agg;
  const std::size_t n = values.size();
  if (n == 0) return agg;
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - agg.mean) * (v - agg.mean);
  agg.stddev = std::sqrt(var / static_cast<double>(n));
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double idx = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = idx - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  agg.q1 = quantile(0.25);
  agg.median = quantile(0.5);
  agg.q3 = quantile(0.75);
  return agg;
}

}  // namespace

EvalReport evaluate(const fs::path& recon_dir, const fs::path& reference_dir,
                    double roi_fraction) {
  if (!fs::is_directory(recon_dir))
    throw MissingInputError("not a reconstruction directory: " + recon_dir.string());
  if (!fs::is_directory(reference_dir))
    throw MissingInputError("not a reference directory: " + reference_dir.string());

  std::vector<fs::path> recs;
  for (const auto& entry : fs::directory_iterator(recon_dir))
    if (entry.is_directory() && entry.path().filename().string().starts_with("rec_"))
      recs.push_back(entry.path());
  std::sort(recs.begin(), recs.end());
  if (recs.empty())
    throw MissingInputError("no rec_* entries under " + recon_dir.string());

  EvalReport report;
  report.roi_fraction = roi_fraction;
  report.rows.resize(recs.size());
  parallel_for(static_cast<int>(recs.size()), [&](int i) {
    const std::string id = recs[i].filename().string();
    const fs::path ref_path = reference_dir / id / "x_f.spt";
    if (!fs::exists(ref_path))
      throw MissingInputError("missing reference record: " + ref_path.string());
    const ComplexVolume recon = central_roi(load_volume(recs[i] / "recon.spt"), roi_fraction);
    const ComplexVolume ref = central_roi(load_volume(ref_path), roi_fraction);
    RecordMetrics row;
    row.id = id;
    row.psnr_db = psnr(recon, ref);
    row.nrmse = nrmse(recon, ref);
    row.ssim = ssim(recon, ref);
    row.uiq = uiq(recon, ref);
    report.rows[i] = row;
  });

  std::vector<double> ps, nr, ss, ui;
  for (const auto& row : report.rows) {
    ps.push_back(row.psnr_db);
    nr.push_back(row.nrmse);
    ss.push_back(row.ssim);
    ui.push_back(row.uiq);
  }
  report.aggregates["psnr_db"] = aggregate(ps);
  report.aggregates["nrmse"] = aggregate(nr);
  report.aggregates["ssim"] = aggregate(ss);
  report.aggregates["uiq"] = aggregate(ui);
  return report;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const EvalReport& report, const fs::path& path) {
  std::string text = "record_id,psnr_db,nrmse,ssim,uiq\n";
  for (const auto& row : report.rows) {
    text += row.id;
    text += ',';
    text += format_value(row.psnr_db);
    text += ',';
    text += format_value(row.nrmse);
    text += ',';
    text += format_value(row.ssim);
    text += ',';
    text += format_value(row.uiq);
    text += '\n';
  }
  atomic_write_bytes(path, {text.data(), text.size()});
}

void write_report_json(const EvalReport& report, const fs::path& path) {
  nlohmann::json j;
  j["roi_fraction"] = report.roi_fraction;
  j["n_records"] = report.rows.size();
  for (const auto& [name, agg] : report.aggregates) {
    j["aggregates"][name] = {{"mean", agg.mean},
                             {"stddev", agg.stddev},
                             {"median", agg.median},
                             {"q1", agg.q1},
                             {"q3", agg.q3}};
  }
  save_json(path, j);
}

void write_magnitude_pgm(const ComplexVolume& x, int frame, const fs::path& path) {
  const Shape3 s = x.shape();
  if (frame < 0 || frame >= s.nt)
    throw std::invalid_argument("write_magnitude_pgm: frame out of range");
  auto f = x.frame(frame);
  double peak = 0.0;
  for (const auto& v : f) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) peak = 1.0;

  std::string text = "P5\n" + std::to_string(s.ny) + " " + std::to_string(s.nx) + "\n255\n";
  std::vector<char> bytes(text.begin(), text.end());
  for (std::size_t p = 0; p < f.size(); ++p) {
    const double g = std::abs(f[p]) / peak * 255.0;
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(g))));
  }
  atomic_write_bytes(path, bytes);
}

}  // namespace spr
