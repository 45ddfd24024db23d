#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace epibg {

/// Rayleigh prior on the gain magnitude |g|. The squared gain |g|^2 is
/// exponential with rate lambda = 1 / (2 sigma^2); both are kept in sync.
class RayleighPrior {
 public:
  static RayleighPrior from_sigma(double sigma);
  static RayleighPrior from_lambda(double lambda);

  double sigma() const { return sigma_; }
  double lambda() const { return lambda_; }
  /// E[|g|^2] = 1 / lambda.
  double mean_power_gain() const { return 1.0 / lambda_; }

 private:
  RayleighPrior(double sigma, double lambda) : sigma_(sigma), lambda_(lambda) {}
  double sigma_;
  double lambda_;
};

/// How the shift term eta enters E[1/(Y + eta)].
enum class ShiftRole {
  inter,  // eta = |g_i|^2 p_i + noise: node i acts as an extra interferer
  intra,  // eta = noise
};

double shift_eta(ShiftRole role, double noise_power, double own_gain,
                 double own_power);

/// Gamma(alpha_hat, theta_hat) approximation of Y = sum_j p_j X_j with
/// X_j ~ exp(lambda), plus the deterministic shift eta.
struct GammaInterferenceModel {
  double alpha_hat = 1.0;
  double theta_hat = 1.0;
  double lambda = 1.0;
  double eta = 0.0;
  /// Powers the fit was computed from. Left empty by fit_gamma_mme_sums.
  std::vector<double> powers;

  double mean() const { return alpha_hat * theta_hat; }
  double variance() const { return alpha_hat * theta_hat * theta_hat; }
  GammaInterferenceModel with_eta(double new_eta) const;
};

/// Method-of-moments fit: alpha = (sum p)^2 / sum p^2,
/// theta = sum p^2 / (lambda sum p). Throws std::invalid_argument
/// ("no interferers") on an empty list.
GammaInterferenceModel fit_gamma_mme(std::span<const double> powers,
                                     double lambda);

/// Same fit from running sums; used on hot paths where the power list is
/// updated incrementally.
GammaInterferenceModel fit_gamma_mme_sums(double sum, double sum_sq,
                                          double lambda);

/// theta^n prod_{kappa=1..n} (alpha + kappa - 1); 1 for n = 0.
double gamma_raw_moment(const GammaInterferenceModel& model, int n);

/// Raw moments m_1..m_kmax and central moments (index 0 and 1 are 1 and 0).
class MomentVector {
 public:
  /// raw[0] must be 1 (zeroth moment); raw.size() - 1 == k_max.
  static MomentVector from_raw(std::vector<double> raw);

  int k_max() const { return static_cast<int>(raw_.size()) - 1; }
  double raw(int k) const { return raw_.at(static_cast<std::size_t>(k)); }
  double central(int k) const {
    return central_.at(static_cast<std::size_t>(k));
  }
  double mean() const { return raw_[1]; }
  std::span<const double> raw_span() const { return raw_; }
  std::span<const double> central_span() const { return central_; }

 private:
  std::vector<double> raw_;
  std::vector<double> central_;
  friend MomentVector raw_to_central(std::vector<double> raw);
};

/// central[n] = sum_j C(n,j) (-mean)^(n-j) raw[j]. Throws when k_max < 1.
MomentVector raw_to_central(std::vector<double> raw);

/// Raw moments of the fitted Gamma up to order k_max, with central moments.
MomentVector gamma_moments(const GammaInterferenceModel& model, int k_max);

struct SeriesResult {
  double value = 0.0;
  /// Terms started growing before the requested truncation; the partial sum
  /// stops at the smallest-magnitude term.
  bool truncated_at_optimal_order = false;
  /// Highest series index included in value.
  int last_term = 0;
};

/// E[(Y + eta)^-k] by the Taylor expansion around E[Y] + eta, truncated at
/// `truncation`. k >= 1.
SeriesResult inverse_shifted_moment(const GammaInterferenceModel& model, int k,
                                    int truncation);

/// E[1 / (Y + eta)] (k = 1 case of inverse_shifted_moment).
SeriesResult expected_inverse_shifted(const GammaInterferenceModel& model,
                                      int truncation);

/// k-th raw moment of the SINR payoff p X / (Y + eta) with X ~ exp(lambda):
/// p^k k! / lambda^k E[(Y + eta)^-k].
SeriesResult sinr_raw_moment(int k, const RayleighPrior& prior, double power,
                             const GammaInterferenceModel& model,
                             int truncation);

/// Same moment with E[(Y + eta)^-k] already evaluated; the belief engine
/// evaluates the series once per conditioning set and reuses it across the
/// hypothesis grid.
double sinr_raw_moment(int k, const RayleighPrior& prior, double power,
                       double inverse_moment);

/// k-th raw moment of |g|^2 p / (Y + eta) when the gain is known exactly:
/// (|g|^2 p)^k E[(Y + eta)^-k].
double sinr_raw_moment_known_gain(int k, double gain, double power,
                                  double inverse_moment);

/// n! for n <= 32, as a double.
double factorial(int n);
/// C(n, k) for 0 <= k <= n <= 64, as a double.
double binomial(int n, int k);

inline constexpr int kMaxSeriesOrder = 32;
inline constexpr int kDefaultTruncation = 4;

}  // namespace epibg
