#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rulenav {

struct ScoreSample {
  std::string id;
  double score = 0.0;
};

struct GmmConfig {
  int max_iter = 200;
  double tol = 1e-8;
  /// σ floor as a fraction of the data range (absolute when the range is 0).
  double sigma_floor_rel = 1e-4;
  /// Accepted for interface symmetry with the other stochastic stages; the
  /// median-split initialization makes the fit itself seed-free.
  std::uint64_t seed = 7;
};

struct GmmComponent {
  double weight = 0.5;
  double mean = 0.0;
  double stdev = 1.0;
};

/// Two-component 1-D Gaussian mixture. components[0] has the lower mean.
struct GmmModel {
  std::array<GmmComponent, 2> components;
  double log_likelihood = 0.0;
  int iterations = 0;
  double sigma_floor = 0.0;
  /// Log-likelihood after initialization and after every EM iteration.
  std::vector<double> log_likelihood_trace;

  /// Posterior of each component for one score; sums to 1.
  std::array<double, 2> responsibilities(double score) const;
  double high_responsibility(double score) const { return responsibilities(score)[1]; }
  double log_density(double score) const;
};

/// EM fit. Throws Error(kTooFewSamples) below 4 finite samples and
/// Error(kValidation) for non-finite scores.
GmmModel fit_gmm(std::span<const double> scores, const GmmConfig& config);
GmmModel fit_gmm(std::span<const ScoreSample> samples, const GmmConfig& config);

struct FilterResult {
  std::vector<ScoreSample> accepted;
  std::vector<ScoreSample> rejected;
};

/// Accepts a sample iff the higher-mean component's posterior is ≥ 0.5.
FilterResult filter(std::span<const ScoreSample> samples, const GmmModel& model);

struct FilterFileSummary {
  GmmModel model;
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t invalid = 0;
};

/// Reads `id,score` CSV, fits, writes `id,score,responsibility,accepted`.
/// Rows with non-finite scores are excluded from the fit, written as
/// rejected and reported on `diag`. The model summary goes to `log`.
FilterFileSummary filter_file(const std::filesystem::path& in_path,
                              const std::filesystem::path& out_path, const GmmConfig& config,
                              std::ostream& log, std::ostream& diag);

}  // namespace rulenav
