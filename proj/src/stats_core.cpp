#include "epibg/stats_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace epibg {

namespace {

using SeriesArray = std::array<double, kMaxSeriesOrder + 1>;

constexpr int kBinomialRows = 2 * kMaxSeriesOrder + 1;

// Pascal's triangle up to n = 2 * kMaxSeriesOrder; entries stay exact in
// double up to C(64, 32) ~ 1.8e18 within 2^-53 relative.
constexpr auto kBinomial = [] {
  std::array<std::array<double, kBinomialRows>, kBinomialRows> t{};
  for (int n = 0; n < kBinomialRows; ++n) {
    t[n][0] = 1.0;
    for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0.0);
  }
  return t;
}();

constexpr auto kFactorial = [] {
  std::array<double, kMaxSeriesOrder + 1> f{};
  f[0] = 1.0;
  for (int n = 1; n <= kMaxSeriesOrder; ++n) f[n] = f[n - 1] * n;
  return f;
}();

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

// Central moments of the fitted Gamma up to order n_max into `central`,
// via the product formula for raw moments and the binomial expansion.
void gamma_central_moments(double alpha, double theta, int n_max,
                           SeriesArray& central) {
  SeriesArray raw{};
  raw[0] = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    raw[n] = raw[n - 1] * theta * (alpha + n - 1);
  }
  const double mean = raw[1];
  central[0] = 1.0;
  if (n_max >= 1) central[1] = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    double acc = 0.0;
    double neg_mean_pow = 1.0;  // (-mean)^(n-j), built from j = n downwards
    for (int j = n; j >= 0; --j) {
      acc += binomial(n, j) * neg_mean_pow * raw[j];
      neg_mean_pow *= -mean;
    }
    central[n] = acc;
  }
}

}  // namespace

RayleighPrior RayleighPrior::from_sigma(double sigma) {
  require_positive(sigma, "Rayleigh sigma");
  return RayleighPrior(sigma, 1.0 / (2.0 * sigma * sigma));
}

RayleighPrior RayleighPrior::from_lambda(double lambda) {
  require_positive(lambda, "exponential rate lambda");
  return RayleighPrior(std::sqrt(1.0 / (2.0 * lambda)), lambda);
}

double shift_eta(ShiftRole role, double noise_power, double own_gain,
                 double own_power) {
  switch (role) {
    case ShiftRole::inter:
      return own_gain * own_gain * own_power + noise_power;
    case ShiftRole::intra:
      return noise_power;
  }
  return noise_power;
}

GammaInterferenceModel GammaInterferenceModel::with_eta(double new_eta) const {
  GammaInterferenceModel copy = *this;
  copy.eta = new_eta;
  return copy;
}

GammaInterferenceModel fit_gamma_mme(std::span<const double> powers,
                                     double lambda) {
  if (powers.empty()) throw std::invalid_argument("no interferers");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double p : powers) {
    require_positive(p, "interferer power");
    sum += p;
    sum_sq += p * p;
  }
  GammaInterferenceModel model = fit_gamma_mme_sums(sum, sum_sq, lambda);
  model.powers.assign(powers.begin(), powers.end());
  return model;
}

GammaInterferenceModel fit_gamma_mme_sums(double sum, double sum_sq,
                                          double lambda) {
  require_positive(lambda, "exponential rate lambda");
  if (!(sum > 0.0) || !(sum_sq > 0.0)) {
    throw std::invalid_argument("no interferers");
  }
  GammaInterferenceModel model;
  model.alpha_hat = sum * sum / sum_sq;
  model.theta_hat = sum_sq / (lambda * sum);
  model.lambda = lambda;
  return model;
}

double gamma_raw_moment(const GammaInterferenceModel& model, int n) {
  if (n < 0) throw std::invalid_argument("moment order must be >= 0");
  double m = 1.0;
  for (int kappa = 1; kappa <= n; ++kappa) {
    m *= model.theta_hat * (model.alpha_hat + kappa - 1);
  }
  return m;
}

MomentVector MomentVector::from_raw(std::vector<double> raw) {
  return raw_to_central(std::move(raw));
}

MomentVector raw_to_central(std::vector<double> raw) {
  if (raw.size() < 2) {
    throw std::invalid_argument("raw_to_central needs k_max >= 1");
  }
  const int k_max = static_cast<int>(raw.size()) - 1;
  if (k_max > kMaxSeriesOrder) {
    throw std::invalid_argument("moment order above supported maximum");
  }
  const double mean = raw[1];
  std::vector<double> central(raw.size(), 0.0);
  central[0] = 1.0;
  for (int n = 2; n <= k_max; ++n) {
    double acc = 0.0;
    double neg_mean_pow = 1.0;
    for (int j = n; j >= 0; --j) {
      acc += binomial(n, j) * neg_mean_pow * raw[static_cast<std::size_t>(j)];
      neg_mean_pow *= -mean;
    }
    central[static_cast<std::size_t>(n)] = acc;
  }
  MomentVector out;
  out.raw_ = std::move(raw);
  out.central_ = std::move(central);
  return out;
}

MomentVector gamma_moments(const GammaInterferenceModel& model, int k_max) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  std::vector<double> raw(static_cast<std::size_t>(k_max) + 1);
  for (int n = 0; n <= k_max; ++n) {
    raw[static_cast<std::size_t>(n)] = gamma_raw_moment(model, n);
  }
  return raw_to_central(std::move(raw));
}

SeriesResult inverse_shifted_moment(const GammaInterferenceModel& model, int k,
                                    int truncation) {
  if (k < 1) throw std::invalid_argument("inverse moment order must be >= 1");
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  if (k + truncation > kMaxSeriesOrder + 1) {
    throw std::invalid_argument("k + truncation exceeds the series order limit");
  }
  const double shift = model.mean() + model.eta;
  if (!(shift > 0.0)) {
    throw std::invalid_argument("E[Y] + eta must be positive");
  }

  SeriesArray central{};
  gamma_central_moments(model.alpha_hat, model.theta_hat, truncation, central);

  SeriesResult result;
  double sum = 1.0;  // n = 0
  double prev_abs = std::numeric_limits<double>::infinity();
  double inv_shift_pow = 1.0;
  for (int n = 1; n <= truncation; ++n) {
    inv_shift_pow /= shift;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    const double term =
        sign * binomial(k + n - 1, n) * central[n] * inv_shift_pow;
    const double term_abs = std::abs(term);
    // Asymptotic-series guard: stop once terms grow again. Terms at the
    // rounding-noise level of the partial sum are ignored.
    if (n >= 3 && term_abs > prev_abs &&
        term_abs > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(sum)) {
      result.truncated_at_optimal_order = true;
      break;
    }
    sum += term;
    result.last_term = n;
    if (n >= 2) prev_abs = term_abs;
  }
  result.value = sum / ipow(shift, k);
  return result;
}

SeriesResult expected_inverse_shifted(const GammaInterferenceModel& model,
                                      int truncation) {
  return inverse_shifted_moment(model, 1, truncation);
}

SeriesResult sinr_raw_moment(int k, const RayleighPrior& prior, double power,
                             const GammaInterferenceModel& model,
                             int truncation) {
  if (k < 1) throw std::invalid_argument("SINR moment order must be >= 1");
  SeriesResult inv = inverse_shifted_moment(model, k, truncation);
  inv.value = sinr_raw_moment(k, prior, power, inv.value);
  return inv;
}

double sinr_raw_moment(int k, const RayleighPrior& prior, double power,
                       double inverse_moment) {
  if (k < 1) throw std::invalid_argument("SINR moment order must be >= 1");
  return ipow(power / prior.lambda(), k) * factorial(k) * inverse_moment;
}

double sinr_raw_moment_known_gain(int k, double gain, double power,
                                  double inverse_moment) {
  if (k < 1) throw std::invalid_argument("SINR moment order must be >= 1");
  return ipow(gain * gain * power, k) * inverse_moment;
}

double factorial(int n) {
  if (n < 0 || n > kMaxSeriesOrder) {
    throw std::invalid_argument("factorial argument out of range");
  }
  return kFactorial[static_cast<std::size_t>(n)];
}

double binomial(int n, int k) {
  if (k < 0 || k > n || n > 2 * kMaxSeriesOrder) {
    throw std::invalid_argument("binomial argument out of range");
  }
  return kBinomial[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

}  // namespace epibg
