#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadbird {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with df degrees of freedom.
double students_t_cdf(double t, double df);

/// Survival function of the asymptotic Kolmogorov distribution,
/// 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), truncated at 100 terms with
/// absolute tolerance 1e-10 and clamped to [0, 1].
double kolmogorov_sf(double x);

/// Two-sided Welch two-sample t-test p-value. Requires at least two values
/// per sample. Degenerate zero-variance samples yield 1 for equal means and
/// 0 otherwise.
double two_sample_t_test(std::span<const double> a, std::span<const double> b);

/// Largest ECDF gap between two samples.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Two-sample Kolmogorov-Smirnov p-value: the asymptotic Kolmogorov
/// distribution applied to the max ECDF gap scaled by sqrt(n*m/(n+m)).
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// The five goodness-of-fit measures over paired samples. The error sign
/// convention is simulated - observed, so a positive ME means
/// over-prediction.
struct GofReport {
  double me = 0.0;     // mean error, same unit as the samples
  double mae = 0.0;    // mean absolute error
  double rmse = 0.0;   // root mean square error
  double mape = 0.0;   // mean absolute percentage error, %
  double rmspe = 0.0;  // root mean square percentage error, %
};

GofReport goodness_of_fit(std::span<const double> observed,
                          std::span<const double> simulated);

/// One observed or simulated travel-time record.
struct TravelTimeSample {
  std::string route;
  std::string direction;
  std::string vehicle_type;
  std::string regime;  // low / medium / high
  double value_min = 0.0;
};

/// CSV: route,direction,vehicle_type,regime,value_min with a header row.
std::vector<TravelTimeSample> read_travel_time_csv(
    const std::filesystem::path& file);

struct ValidationCell {
  std::string route;
  std::string direction;
  std::string vehicle_type;
  std::string regime;
  std::size_t n_observed = 0;
  std::size_t n_simulated = 0;
  double p_t = 0.0;
  double p_ks = 0.0;
  GofReport gof;
};

/// Group both sample sets by (route, direction, vehicle_type, regime), run
/// the unpaired tests on raw values and the goodness-of-fit measures on
/// index-paired values truncated to the shorter side.
std::vector<ValidationCell> validate_travel_times(
    std::span<const TravelTimeSample> observed,
    std::span<const TravelTimeSample> simulated);

void write_validation_csv(std::span<const ValidationCell> cells,
                          const std::filesystem::path& file);

}  // namespace roadbird
