#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spr/tensor.hpp"

namespace spr {

/// Central floor(fraction*nx) x floor(fraction*ny) crop, all frames.
ComplexVolume central_roi(const ComplexVolume& x, double fraction);

/// All four measures compare magnitude images. psnr returns +infinity for
/// identical inputs; nrmse throws when the reference is identically zero.
double psnr(const ComplexVolume& x, const ComplexVolume& ref);
double nrmse(const ComplexVolume& x, const ComplexVolume& ref);

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = max |ref| over the input,
/// evaluated per frame over fully interior windows and averaged.
double ssim(const ComplexVolume& x, const ComplexVolume& ref);

/// Universal image quality index: the same construction with an 8x8 uniform
/// window and no stabilizing constants; degenerate windows fall back to the
/// defined luminance/structure factor limits.
double uiq(const ComplexVolume& x, const ComplexVolume& ref);

struct RecordMetrics {
  std::string id;
  double psnr_db = 0.0;
  double nrmse = 0.0;
  double ssim = 0.0;
  double uiq = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct EvalReport {
  std::vector<RecordMetrics> rows;  // ordered by record id
  std::map<std::string, Aggregate> aggregates;
  double roi_fraction = 1.0;
};

/// Pairs rec_* entries of the two directories by id (recon.spt against
/// x_f.spt), computes the four metrics over the central ROI, and aggregates.
EvalReport evaluate(const std::filesystem::path& recon_dir,
                    const std::filesystem::path& reference_dir, double roi_fraction);

/// CSV columns: record_id,psnr_db,nrmse,ssim,uiq.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
void write_report_json(const EvalReport& report, const std::filesystem::path& path);

/// 8-bit binary PGM of one frame's magnitude, scaled so the frame maximum
/// maps to 255.
void write_magnitude_pgm(const ComplexVolume& x, int frame,
                         const std::filesystem::path& path);

}  // namespace spr
