#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace stbp {

enum class RleNorm { frobenius, infty_1 };

// Relative error ||est - truth|| / ||truth||; infty_1 takes the max over
// pixels of the absolute row sum across time.
double rle(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
           RleNorm norm = RleNorm::frobenius);

// 10 log10(max|truth|^2 / total squared error); +inf for identical inputs.
double psnr(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth);

// Single global window; dynamic range defaults to max(truth) - min(truth).
double ssim(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
            std::optional<double> dynamic_range = std::nullopt);

struct MetricReport {
  double rle = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double log_likelihood = 0.0;
  bool psnr_infinite = false;
};

MetricReport evaluate_metrics(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                              double log_likelihood, RleNorm norm = RleNorm::frobenius);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& model, Eigen::Index I, Eigen::Index J,
                            const MetricReport& report, std::uint64_t seed);

}  // namespace stbp
