#include "rulenav/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rulenav/error.hpp"
#include "rulenav/json_util.hpp"

namespace rulenav {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2π))
constexpr double kMinWeight = 1e-12;

double log_normal(double x, double mean, double stdev) {
  const double z = (x - mean) / stdev;
  return -kLogSqrtTwoPi - std::log(stdev) - 0.5 * z * z;
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Joint log terms log π_k + log N(x | μ_k, σ_k).
std::array<double, 2> joint_logs(const std::array<GmmComponent, 2>& comps, double x) {
  return {std::log(comps[0].weight) + log_normal(x, comps[0].mean, comps[0].stdev),
          std::log(comps[1].weight) + log_normal(x, comps[1].mean, comps[1].stdev)};
}

double total_log_likelihood(const std::array<GmmComponent, 2>& comps,
                            std::span<const double> xs) {
  double ll = 0.0;
  for (double x : xs) {
    const auto j = joint_logs(comps, x);
    ll += log_sum_exp(j[0], j[1]);
  }
  return ll;
}

double stdev_of(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return xs.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(xs.size()));
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

}  // namespace

std::array<double, 2> GmmModel::responsibilities(double score) const {
  const auto j = joint_logs(components, score);
  // r_high = 1 / (1 + exp(j_low − j_high)), written to stay finite.
  const double d = j[0] - j[1];
  double high;
  if (d > 0) {
    const double e = std::exp(-d);
    high = e / (1.0 + e);
  } else {
    high = 1.0 / (1.0 + std::exp(d));
  }
  return {1.0 - high, high};
}

double GmmModel::log_density(double score) const {
  const auto j = joint_logs(components, score);
  return log_sum_exp(j[0], j[1]);
}

GmmModel fit_gmm(std::span<const double> scores, const GmmConfig& config) {
  if (config.max_iter < 1) throw Error(ErrorCode::kValidation, "max_iter must be >= 1");
  if (!(config.tol >= 0.0)) throw Error(ErrorCode::kValidation, "tol must be >= 0");
  if (!(config.sigma_floor_rel > 0.0)) {
    throw Error(ErrorCode::kValidation, "sigma floor must be positive");
  }
  for (double x : scores) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kValidation, "non-finite score");
  }
  if (scores.size() < 4) {
    throw Error(ErrorCode::kTooFewSamples,
                "need at least 4 samples, got " + std::to_string(scores.size()));
  }
  const std::size_t n = scores.size();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  const double floor = range > 0.0 ? config.sigma_floor_rel * range : config.sigma_floor_rel;

  // Median split: lower half seeds the low component, upper half the high.
  const std::size_t half = n / 2;
  std::span<const double> lower(sorted.data(), half);
  std::span<const double> upper(sorted.data() + half, n - half);
  GmmModel model;
  model.sigma_floor = floor;
  model.components[0] = {0.5, mean_of(lower), std::max(floor, stdev_of(lower, mean_of(lower)))};
  model.components[1] = {0.5, mean_of(upper), std::max(floor, stdev_of(upper, mean_of(upper)))};

  double ll = total_log_likelihood(model.components, scores);
  model.log_likelihood_trace.push_back(ll);
  std::vector<double> resp_high(n);
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) resp_high[i] = model.high_responsibility(scores[i]);

    std::array<double, 2> mass{0.0, 0.0};
    std::array<double, 2> sum{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      mass[0] += 1.0 - resp_high[i];
      mass[1] += resp_high[i];
      sum[0] += (1.0 - resp_high[i]) * scores[i];
      sum[1] += resp_high[i] * scores[i];
    }
    std::array<GmmComponent, 2> next = model.components;
    for (int k = 0; k < 2; ++k) {
      if (mass[k] <= 0.0) continue;  // collapsed component keeps its shape
      next[k].mean = sum[k] / mass[k];
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = k == 1 ? resp_high[i] : 1.0 - resp_high[i];
        ss += r * (scores[i] - next[k].mean) * (scores[i] - next[k].mean);
      }
      next[k].stdev = std::max(floor, std::sqrt(ss / mass[k]));
    }
    const double w1 = std::clamp(mass[1] / static_cast<double>(n), kMinWeight, 1.0 - kMinWeight);
    next[0].weight = 1.0 - w1;
    next[1].weight = w1;

    const double next_ll = total_log_likelihood(next, scores);
    // EM cannot lower the likelihood; allow only rounding-level slack.
    if (next_ll < ll - 1e-9 * std::max(1.0, std::abs(ll))) {
      throw Error(ErrorCode::kInvariant, "EM log-likelihood decreased at iteration " +
                                             std::to_string(iter));
    }
    model.components = next;
    model.iterations = iter;
    model.log_likelihood_trace.push_back(next_ll);
    const double gain = next_ll - ll;
    ll = next_ll;
    if (gain < config.tol) break;
  }
  model.log_likelihood = ll;
  if (model.components[0].mean > model.components[1].mean) {
    std::swap(model.components[0], model.components[1]);
  }
  return model;
}

GmmModel fit_gmm(std::span<const ScoreSample> samples, const GmmConfig& config) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const ScoreSample& s : samples) xs.push_back(s.score);
  return fit_gmm(std::span<const double>(xs), config);
}

FilterResult filter(std::span<const ScoreSample> samples, const GmmModel& model) {
  FilterResult out;
  for (const ScoreSample& s : samples) {
    if (std::isfinite(s.score) && model.high_responsibility(s.score) >= 0.5) {
      out.accepted.push_back(s);
    } else {
      out.rejected.push_back(s);
    }
  }
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

struct CsvRow {
  std::string id;
  std::string score_text;
  double score = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
};

}  // namespace

FilterFileSummary filter_file(const std::filesystem::path& in_path,
                              const std::filesystem::path& out_path, const GmmConfig& config,
                              std::ostream& log, std::ostream& diag) {
  std::istringstream in(read_text_file(in_path));
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      std::string header;
      for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) header.push_back(c);
      }
      if (header != "id,score") {
        throw Error(ErrorCode::kParse, in_path.string() + " line " + std::to_string(line_no) +
                                           ": expected header 'id,score'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::kParse, in_path.string() + " line " + std::to_string(line_no) +
                                         ": expected two columns");
    }
    CsvRow row;
    row.id = trim(line.substr(0, comma));
    row.score_text = trim(line.substr(comma + 1));
    try {
      std::size_t used = 0;
      row.score = std::stod(row.score_text, &used);
      row.valid = used == row.score_text.size() && std::isfinite(row.score);
    } catch (const std::exception&) {
      row.valid = false;
    }
    if (!row.valid) {
      diag << "line " << line_no << ": score '" << row.score_text << "' for id '" << row.id
           << "' is not a finite number; row rejected\n";
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen || rows.empty()) {
    throw Error(ErrorCode::kParse, in_path.string() + ": no data rows");
  }

  std::vector<double> scores;
  for (const CsvRow& r : rows) {
    if (r.valid) scores.push_back(r.score);
  }
  FilterFileSummary summary;
  summary.model = fit_gmm(std::span<const double>(scores), config);
  summary.rows = rows.size();

  std::ostringstream out;
  out << "id,score,responsibility,accepted\n";
  char buf[64];
  for (const CsvRow& r : rows) {
    double resp = 0.0;
    bool accepted = false;
    if (r.valid) {
      resp = summary.model.high_responsibility(r.score);
      accepted = resp >= 0.5;
    } else {
      ++summary.invalid;
    }
    if (accepted) ++summary.accepted;
    std::snprintf(buf, sizeof buf, "%.12f", resp);
    out << r.id << ',' << r.score_text << ',' << buf << ',' << (accepted ? "true" : "false")
        << '\n';
  }
  write_text_file(out_path, out.str());

  const auto& m = summary.model;
  log << "gmm: iterations=" << m.iterations << " log_likelihood=" << m.log_likelihood << "\n";
  for (int k = 0; k < 2; ++k) {
    log << "  component " << k << ": weight=" << m.components[static_cast<std::size_t>(k)].weight
        << " mean=" << m.components[static_cast<std::size_t>(k)].mean
        << " stdev=" << m.components[static_cast<std::size_t>(k)].stdev << "\n";
  }
  log << "  accepted " << summary.accepted << " of " << summary.rows << " rows ("
      << summary.invalid << " invalid)\n";
  return summary;
}

}  // namespace rulenav
