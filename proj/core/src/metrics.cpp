#include "stbp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "stbp/errors.hpp"

namespace stbp {

namespace {

void check_shapes(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw undefined_metric_error("metrics: estimate/truth shape mismatch");
  if (est.size() == 0) throw undefined_metric_error("metrics: empty fields");
}

}  // namespace

double rle(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth, RleNorm norm) {
  check_shapes(est, truth);
  double num = 0.0, den = 0.0;
  if (norm == RleNorm::frobenius) {
    num = (est - truth).norm();
    den = truth.norm();
  } else {
    num = (est - truth).cwiseAbs().rowwise().sum().maxCoeff();
    den = truth.cwiseAbs().rowwise().sum().maxCoeff();
  }
  if (den == 0.0) throw undefined_metric_error("rle: zero-norm truth");
  return num / den;
}

double psnr(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  check_shapes(est, truth);
  const double peak = truth.cwiseAbs().maxCoeff();
  if (peak == 0.0) throw undefined_metric_error("psnr: zero truth");
  const double err2 = (est - truth).squaredNorm();
  if (err2 == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err2);
}

double ssim(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
            std::optional<double> dynamic_range) {
  check_shapes(est, truth);
  if (est == truth) return 1.0;  // constant truth has no usable default range
  const double range =
      dynamic_range ? *dynamic_range : truth.maxCoeff() - truth.minCoeff();
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  const double n = static_cast<double>(est.size());
  const double mu_e = est.mean(), mu_t = truth.mean();
  const double var_e = (est.array() - mu_e).square().sum() / n;
  const double var_t = (truth.array() - mu_t).square().sum() / n;
  const double cov = ((est.array() - mu_e) * (truth.array() - mu_t)).sum() / n;

  return (2.0 * mu_e * mu_t + c1) * (2.0 * cov + c2) /
         ((mu_e * mu_e + mu_t * mu_t + c1) * (var_e + var_t + c2));
}

MetricReport evaluate_metrics(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                              double log_likelihood, RleNorm norm) {
  MetricReport report;
  report.rle = rle(est, truth, norm);
  report.psnr = psnr(est, truth);
  report.psnr_infinite = std::isinf(report.psnr);
  report.ssim = ssim(est, truth);
  report.log_likelihood = log_likelihood;
  return report;
}

std::string metrics_csv_header() { return "model,I,J,rle,psnr,ssim,loglik,seed"; }

std::string metrics_csv_row(const std::string& model, Eigen::Index I, Eigen::Index J,
                            const MetricReport& report, std::uint64_t seed) {
  char row[256];
  std::snprintf(row, sizeof row, "%s,%lld,%lld,%.12g,%.12g,%.12g,%.12g,%llu",
                model.c_str(), static_cast<long long>(I), static_cast<long long>(J), report.rle,
                report.psnr, report.ssim, report.log_likelihood,
                static_cast<unsigned long long>(seed));
  return row;
}

}  // namespace stbp
