#pragma once

#include <string>
#include <vector>

#include "cato/types.hpp"

namespace cato {

// One measured point: compression ratio omega and a normalized execution
// time (or quality score) y.
struct FitSample {
  double omega = 1.0;
  double y = 0.0;
};

// Fitted parameters and errors for the three model families compared by the
// benchmark: power law y = g1*x^g2 + g3, linear y = b1*x + b2, and
// exponential y = e1*(exp(e2*x) - exp(e2)).
struct FitReport {
  CompressionModel power;
  double power_rmse = 0.0;
  double lin_b1 = 0.0;
  double lin_b2 = 0.0;
  double linear_rmse = 0.0;
  double exp_e1 = 0.0;
  double exp_e2 = 0.0;
  double exp_rmse = 0.0;
};

// Fits y = g1*x^g2 + g3 with g1, g3 >= 0 by profiled least squares over the
// exponent (multistart grid + golden-section refine + damped Newton polish).
// Requires >= 4 samples with >= 3 distinct omega values. The returned model
// has gamma0 = 1 and its omega box set to the sample range. Ties in the
// residual are broken toward the smallest exponent; data with no omega
// dependence comes back as g1 = 0, g2 = 1, g3 = mean(y).
CompressionModel fit_power_law(const std::vector<FitSample>& samples);

// Fits all three families on the same samples and reports the RMSE of each.
FitReport fit_comparison_models(const std::vector<FitSample>& samples);

// Root mean square error of the model's raw curve g0*(g1*x^g2 + g3) against
// the samples; the model's omega box is not enforced here so that fits can
// be scored on foreign sample sets.
double rmse(const CompressionModel& model, const std::vector<FitSample>& samples);

// Reads whitespace-separated "omega y" pairs; '#' starts a comment.
std::vector<FitSample> load_samples(const std::string& path);
std::vector<FitSample> parse_samples(const std::string& text);

}  // namespace cato
