#include "roadbird/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

namespace roadbird {

namespace {

// Lentz's algorithm for the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double students_t_cdf(double t, double df) {
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double kolmogorov_sf(double x) {
  if (!(x > 1e-8)) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-10) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double two_sample_t_test(std::span<const double> a,
                         std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw StatsError("t-test requires at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);

  const double se2 = va / na + vb / nb;
  if (se2 <= 0.0) return ma == mb ? 1.0 : 0.0;

  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) +
                                 (vb / nb) * (vb / nb) / (nb - 1.0));
  return 2.0 * (1.0 - students_t_cdf(std::fabs(t), df));
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw StatsError("K-S test requires non-empty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  while (ia < sa.size() && ib < sb.size()) {
    const double x = std::min(sa[ia], sb[ib]);
    while (ia < sa.size() && sa[ia] <= x) ++ia;
    while (ib < sb.size() && sb[ib] <= x) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                              static_cast<double>(ib) / nb));
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const double d = ks_statistic(a, b);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  const double effective = n * m / (n + m);
  return kolmogorov_sf(std::sqrt(effective) * d);
}

GofReport goodness_of_fit(std::span<const double> observed,
                          std::span<const double> simulated) {
  if (observed.size() != simulated.size())
    throw StatsError("goodness_of_fit requires paired samples");
  if (observed.empty()) throw StatsError("goodness_of_fit requires data");

  GofReport r;
  double se = 0.0, spe = 0.0;
  const double n = static_cast<double>(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(observed[i] > 0.0))
      throw StatsError("observed values must be positive");
    const double err = simulated[i] - observed[i];
    const double perr = err / observed[i];
    r.me += err;
    r.mae += std::fabs(err);
    se += err * err;
    r.mape += std::fabs(perr);
    spe += perr * perr;
  }
  r.me /= n;
  r.mae /= n;
  r.rmse = std::sqrt(se / n);
  r.mape = r.mape / n * 100.0;
  r.rmspe = std::sqrt(spe / n) * 100.0;
  return r;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}
}  // namespace

std::vector<TravelTimeSample> read_travel_time_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw StatsError(fmt::format("cannot open {}", file.string()));
  std::vector<TravelTimeSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("route,", 0) == 0) continue;  // header
    const auto fields = split_csv_line(line);
    if (fields.size() != 5)
      throw StatsError(fmt::format("{}:{}: expected 5 fields", file.string(),
                                   line_no));
    TravelTimeSample s;
    s.route = fields[0];
    s.direction = fields[1];
    s.vehicle_type = fields[2];
    s.regime = fields[3];
    try {
      s.value_min = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw StatsError(
          fmt::format("{}:{}: bad value '{}'", file.string(), line_no,
                      fields[4]));
    }
    if (!(s.value_min > 0.0))
      throw StatsError(fmt::format("{}:{}: travel time must be positive",
                                   file.string(), line_no));
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<ValidationCell> validate_travel_times(
    std::span<const TravelTimeSample> observed,
    std::span<const TravelTimeSample> simulated) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> cells;
  for (const TravelTimeSample& s : observed)
    cells[{s.route, s.direction, s.vehicle_type, s.regime}].first.push_back(
        s.value_min);
  for (const TravelTimeSample& s : simulated)
    cells[{s.route, s.direction, s.vehicle_type, s.regime}].second.push_back(
        s.value_min);

  std::vector<ValidationCell> out;
  for (const auto& [key, pair] : cells) {
    const auto& [obs, sim] = pair;
    if (obs.size() < 2 || sim.size() < 2)
      throw StatsError(fmt::format(
          "cell ({}, {}, {}, {}) needs at least two observed and two "
          "simulated values",
          std::get<0>(key), std::get<1>(key), std::get<2>(key),
          std::get<3>(key)));
    ValidationCell cell;
    cell.route = std::get<0>(key);
    cell.direction = std::get<1>(key);
    cell.vehicle_type = std::get<2>(key);
    cell.regime = std::get<3>(key);
    cell.n_observed = obs.size();
    cell.n_simulated = sim.size();
    cell.p_t = two_sample_t_test(obs, sim);
    cell.p_ks = ks_two_sample(obs, sim);
    // Pair by collection index, truncating to the shorter side.
    const std::size_t n = std::min(obs.size(), sim.size());
    cell.gof = goodness_of_fit(std::span(obs).first(n), std::span(sim).first(n));
    out.push_back(std::move(cell));
  }
  return out;
}

void write_validation_csv(std::span<const ValidationCell> cells,
                          const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw StatsError(fmt::format("cannot write {}", file.string()));
  out << "route,direction,vehicle_type,regime,n_observed,n_simulated,"
         "p_t,p_ks,me_min,mae_min,rmse_min,mape_pct,rmspe_pct\n";
  for (const ValidationCell& c : cells) {
    out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},"
                       "{:.6f},{:.6f}\n",
                       c.route, c.direction, c.vehicle_type, c.regime,
                       c.n_observed, c.n_simulated, c.p_t, c.p_ks, c.gof.me,
                       c.gof.mae, c.gof.rmse, c.gof.mape, c.gof.rmspe);
  }
}

}  // namespace roadbird
