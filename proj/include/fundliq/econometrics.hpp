#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace fundliq {

enum class CovFlavor { classical, clustered, hac };

// Result of a least-squares fit. `coef`/`cov`/`names` cover the slope
// parameters only; absorbed fixed-effect dimensions are listed by name.
// `dof_t` is the degrees of freedom used for t quantiles (n - k classical,
// G - 1 clustered).
struct RegressionFit {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    CovFlavor cov_flavor = CovFlavor::classical;
    long n_obs = 0;
    long n_params = 0;
    double r2_adj = 0.0;
    Eigen::VectorXd residuals;
    std::vector<std::string> absorbed_dims;
    long n_clusters = 0;
    double dof_t = 0.0;

    double se(Eigen::Index i) const;
    double tstat(Eigen::Index i) const;
    // Two-sided confidence interval from the Student t with dof_t degrees of
    // freedom (normal when dof_t is large or non-finite).
    std::pair<double, double> conf_int(Eigen::Index i, double level = 0.95) const;
    double pvalue(Eigen::Index i) const;
};

// Student t distribution helpers (nu = degrees of freedom).
double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

// Ordinary least squares via column-pivoted QR.
// Residuals are orthogonal to X within 1e-8 * ||y||; rank deficiency raises
// std::runtime_error naming the dependent column(s).
RegressionFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<std::string>& names = {});

// Alternating demeaning over the given fixed-effect dimensions. Each entry of
// `fe_ids` maps row -> group id (0-based, contiguous) for one dimension.
// A single dimension is demeaned exactly in one pass; multiple dimensions
// iterate until the max absolute change of a sweep drops below `tol`, with
// std::runtime_error after `max_iter` sweeps. If `column_scale` is given it
// receives, per column, the max absolute value remaining after the transform
// (a column absorbed by the effects comes back ~0).
Eigen::MatrixXd within_transform(Eigen::MatrixXd cols,
                                 const std::vector<std::vector<int>>& fe_ids,
                                 double tol = 1e-10, int max_iter = 500,
                                 std::vector<double>* column_scale = nullptr);

struct FeRegressOptions {
    std::vector<std::string> fe_names;  // one per fixed-effect dimension
    double within_tol = 1e-10;
    int within_max_iter = 500;
};

// Fixed-effects regression: listwise deletion of rows with missing y or x,
// within transform over fe_ids, OLS on the demeaned data, CR1 covariance
// clustered on cluster_ids:
//   (G/(G-1)) * ((N-1)/(N-K)) * (X'X)^-1 (sum_g X_g'u_g u_g'X_g) (X'X)^-1
// with K the number of slope parameters. Requires >= 2 clusters. A column
// absorbed by the fixed effects raises std::runtime_error naming it.
RegressionFit fe_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const std::vector<std::string>& x_names,
                         const std::vector<std::vector<int>>& fe_ids,
                         const std::vector<int>& cluster_ids,
                         const FeRegressOptions& opts = {});

// Bartlett-kernel HAC sandwich for an OLS fit with regressors X and residuals
// u, in time order. lags = 0 reduces exactly to the White (HC0) covariance.
Eigen::MatrixXd newey_west_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                               long lags);

// floor(4 * (T/100)^(2/9))
long nw_auto_lags(long n_obs);

struct MeanTest {
    double mean = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
    long n = 0;
    long lags = 0;
    bool degenerate = false;  // zero-variance series
};

// Mean of the series with a Newey-West standard error at the automatic lag.
// Missing (NaN) entries are dropped; requires >= 8 remaining observations.
MeanTest nw_mean_test(const std::vector<double>& series);

enum class FactorModel { capm, ff3, ff4 };

int factor_count(FactorModel model);

struct RollingAlphaOptions {
    int window = 36;
    FactorModel model = FactorModel::capm;
    // false: betas over [t-window, t-1], alpha_t = excess_t - slopes . f_t.
    // true:  alpha_t = intercept of the regression over [t-window+1, t].
    bool window_intercept_alpha = false;
};

// `excess` and the rows of `factors` (columns mkt_excess, smb, hml, wml) are
// aligned month series; the model selects the leading 1/3/4 factor columns.
// alpha is missing (NaN) until a full window of joint data precedes t.
std::vector<double> rolling_alpha(const std::vector<double>& excess,
                                  const Eigen::MatrixXd& factors,
                                  const RollingAlphaOptions& opts = {});

// Nearest-rank percentile of the non-missing values: sorted[ceil(p/100 * n)],
// 1-indexed and clamped to the sample.
double nearest_rank_percentile(const std::vector<double>& values, double pct);

// Clip to the pooled nearest-rank percentiles; NaN passes through untouched.
std::vector<double> winsorize(std::vector<double> values, double lower_pct = 5.0,
                              double upper_pct = 95.0);

// (x - mean) / sample SD over the non-missing values; NaN passes through.
// Zero variance raises std::runtime_error.
std::vector<double> standardize(const std::vector<double>& values);

}  // namespace fundliq
