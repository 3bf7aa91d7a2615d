#include "fundliq/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fundliq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Continued-fraction evaluation for the regularized incomplete beta function
// (modified Lentz).
double beta_cf(double a, double b, double x) {
    const double fpmin = 1e-300;
    const double eps = 3e-16;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

void demean_by_group(Eigen::MatrixXd& cols, const std::vector<int>& ids, int n_groups) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_groups, cols.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_groups);
    for (Eigen::Index r = 0; r < cols.rows(); ++r) {
        sums.row(ids[static_cast<size_t>(r)]) += cols.row(r);
        counts[ids[static_cast<size_t>(r)]] += 1.0;
    }
    for (int g = 0; g < n_groups; ++g) sums.row(g) /= counts[g];
    for (Eigen::Index r = 0; r < cols.rows(); ++r)
        cols.row(r) -= sums.row(ids[static_cast<size_t>(r)]);
}

int validate_dim(const std::vector<int>& ids, size_t n_rows) {
    if (ids.size() != n_rows)
        throw std::invalid_argument("fixed-effect id vector length mismatch");
    int max_id = -1;
    for (int id : ids) {
        if (id < 0) throw std::invalid_argument("fixed-effect ids must be >= 0");
        max_id = std::max(max_id, id);
    }
    return max_id + 1;
}

std::string column_label(const std::vector<std::string>& names, Eigen::Index i) {
    if (i < static_cast<Eigen::Index>(names.size())) return names[static_cast<size_t>(i)];
    return "column " + std::to_string(i);
}

}  // namespace

double RegressionFit::se(Eigen::Index i) const {
    return std::sqrt(std::max(0.0, cov(i, i)));
}

double RegressionFit::tstat(Eigen::Index i) const {
    double s = se(i);
    if (s == 0.0) return coef[i] == 0.0 ? 0.0 : std::copysign(
                                                    std::numeric_limits<double>::infinity(),
                                                    coef[i]);
    return coef[i] / s;
}

std::pair<double, double> RegressionFit::conf_int(Eigen::Index i, double level) const {
    double q = student_t_quantile(0.5 + level / 2.0, dof_t);
    double half = q * se(i);
    return {coef[i] - half, coef[i] + half};
}

double RegressionFit::pvalue(Eigen::Index i) const {
    double t = tstat(i);
    if (!std::isfinite(t)) return std::isnan(t) ? kNaN : 0.0;
    return 2.0 * (1.0 - student_t_cdf(std::fabs(t), dof_t));
}

double student_t_cdf(double x, double nu) {
    if (!(nu > 0.0) || nu > 1e8)
        return 0.5 * std::erfc(-x / std::sqrt(2.0));
    double p = 0.5 * incomplete_beta(nu / 2.0, 0.5, nu / (nu + x * x));
    return x >= 0.0 ? 1.0 - p : p;
}

double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("quantile probability must lie in (0, 1)");
    double lo = -2.0, hi = 2.0;
    while (student_t_cdf(lo, nu) > p && lo > -1e12) lo *= 2.0;
    while (student_t_cdf(hi, nu) < p && hi < 1e12) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, nu) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

RegressionFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<std::string>& names) {
    const Eigen::Index n = X.rows(), k = X.cols();
    if (y.size() != n) throw std::invalid_argument("ols: rows(X) != length(y)");
    if (n <= k) throw std::invalid_argument("ols: need more observations than parameters");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) {
        const auto& perm = qr.colsPermutation().indices();
        std::string msg = "ols: rank-deficient design; dependent column(s):";
        for (Eigen::Index j = qr.rank(); j < k; ++j)
            msg += " " + column_label(names, perm[j]);
        throw std::runtime_error(msg);
    }
    RegressionFit fit;
    fit.coef = qr.solve(y);
    fit.residuals = y - X * fit.coef;
    double ortho = (X.transpose() * fit.residuals).lpNorm<Eigen::Infinity>();
    if (ortho > 1e-8 * std::max(1.0, y.norm()))
        throw std::runtime_error("ols: residuals not orthogonal to the design");

    fit.names.resize(static_cast<size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) fit.names[static_cast<size_t>(j)] = column_label(names, j);
    fit.n_obs = n;
    fit.n_params = k;
    double rss = fit.residuals.squaredNorm();
    double sigma2 = rss / static_cast<double>(n - k);
    Eigen::MatrixXd xtx = X.transpose() * X;
    fit.cov = sigma2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    fit.cov_flavor = CovFlavor::classical;
    fit.dof_t = static_cast<double>(n - k);
    double tss = (y.array() - y.mean()).matrix().squaredNorm();
    if (tss > 0.0) {
        double r2 = 1.0 - rss / tss;
        fit.r2_adj = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
    } else {
        fit.r2_adj = kNaN;
    }
    return fit;
}

Eigen::MatrixXd within_transform(Eigen::MatrixXd cols,
                                 const std::vector<std::vector<int>>& fe_ids,
                                 double tol, int max_iter,
                                 std::vector<double>* column_scale) {
    const size_t n = static_cast<size_t>(cols.rows());
    std::vector<int> n_groups;
    n_groups.reserve(fe_ids.size());
    for (const auto& ids : fe_ids) n_groups.push_back(validate_dim(ids, n));

    if (fe_ids.size() == 1) {
        demean_by_group(cols, fe_ids[0], n_groups[0]);
    } else if (fe_ids.size() > 1) {
        bool converged = false;
        for (int iter = 0; iter < max_iter; ++iter) {
            Eigen::MatrixXd before = cols;
            for (size_t d = 0; d < fe_ids.size(); ++d)
                demean_by_group(cols, fe_ids[d], n_groups[d]);
            double delta = (cols - before).lpNorm<Eigen::Infinity>();
            if (delta < tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw std::runtime_error("within transform did not converge after " +
                                     std::to_string(max_iter) + " sweeps");
    }
    if (column_scale) {
        column_scale->resize(static_cast<size_t>(cols.cols()));
        for (Eigen::Index j = 0; j < cols.cols(); ++j)
            (*column_scale)[static_cast<size_t>(j)] = cols.col(j).lpNorm<Eigen::Infinity>();
    }
    return cols;
}

RegressionFit fe_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const std::vector<std::string>& x_names,
                         const std::vector<std::vector<int>>& fe_ids,
                         const std::vector<int>& cluster_ids,
                         const FeRegressOptions& opts) {
    const Eigen::Index n_in = y.size();
    const Eigen::Index k = X.cols();
    if (X.rows() != n_in) throw std::invalid_argument("fe_regress: rows(X) != length(y)");
    if (cluster_ids.size() != static_cast<size_t>(n_in))
        throw std::invalid_argument("fe_regress: cluster id length mismatch");
    for (const auto& ids : fe_ids)
        if (ids.size() != static_cast<size_t>(n_in))
            throw std::invalid_argument("fe_regress: fixed-effect id length mismatch");

    // Listwise deletion.
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<size_t>(n_in));
    for (Eigen::Index r = 0; r < n_in; ++r) {
        if (!std::isfinite(y[r])) continue;
        bool ok = true;
        for (Eigen::Index j = 0; j < k; ++j)
            if (!std::isfinite(X(r, j))) {
                ok = false;
                break;
            }
        if (ok) keep.push_back(r);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
    if (n <= k) throw std::invalid_argument("fe_regress: too few complete observations");

    // Compact ids over the kept rows; sorted-unique keeps the mapping
    // independent of row order.
    auto compact_fast = [&](auto getter) {
        std::vector<int> out(static_cast<size_t>(n));
        std::vector<std::pair<int, int>> sorted_ids;
        sorted_ids.reserve(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            sorted_ids.emplace_back(getter(keep[static_cast<size_t>(i)]), 0);
        std::sort(sorted_ids.begin(), sorted_ids.end());
        sorted_ids.erase(std::unique(sorted_ids.begin(), sorted_ids.end()), sorted_ids.end());
        for (size_t j = 0; j < sorted_ids.size(); ++j) sorted_ids[j].second = static_cast<int>(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            int orig = getter(keep[static_cast<size_t>(i)]);
            auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(),
                                       std::make_pair(orig, 0));
            out[static_cast<size_t>(i)] = it->second;
        }
        return out;
    };

    std::vector<std::vector<int>> fe_compact;
    fe_compact.reserve(fe_ids.size());
    for (const auto& ids : fe_ids)
        fe_compact.push_back(compact_fast([&](Eigen::Index r) { return ids[static_cast<size_t>(r)]; }));
    std::vector<int> clusters =
        compact_fast([&](Eigen::Index r) { return cluster_ids[static_cast<size_t>(r)]; });
    int n_clusters = clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
    if (n_clusters < 2) throw std::runtime_error("fe_regress: need at least 2 clusters");

    // Demean y and X together.
    Eigen::MatrixXd stacked(n, k + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        stacked(i, 0) = y[keep[static_cast<size_t>(i)]];
        stacked.row(i).tail(k) = X.row(keep[static_cast<size_t>(i)]);
    }
    std::vector<double> pre_scale(static_cast<size_t>(k + 1));
    for (Eigen::Index j = 0; j <= k; ++j)
        pre_scale[static_cast<size_t>(j)] = stacked.col(j).lpNorm<Eigen::Infinity>();
    std::vector<double> post_scale;
    stacked = within_transform(std::move(stacked), fe_compact, opts.within_tol,
                               opts.within_max_iter, &post_scale);
    for (Eigen::Index j = 1; j <= k; ++j) {
        double pre = std::max(1.0, pre_scale[static_cast<size_t>(j)]);
        if (post_scale[static_cast<size_t>(j)] <= 1e-8 * pre)
            throw std::runtime_error("fe_regress: column " + column_label(x_names, j - 1) +
                                     " is collinear with the fixed effects");
    }
    Eigen::VectorXd yd = stacked.col(0);
    Eigen::MatrixXd Xd = stacked.rightCols(k);

    RegressionFit fit = ols(Xd, yd, x_names);

    // CR1 clustered covariance.
    Eigen::MatrixXd xtx = Xd.transpose() * Xd;
    Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_clusters, k);
    for (Eigen::Index i = 0; i < n; ++i)
        scores.row(clusters[static_cast<size_t>(i)]) += fit.residuals[i] * Xd.row(i);
    Eigen::MatrixXd meat = scores.transpose() * scores;
    double G = static_cast<double>(n_clusters);
    double N = static_cast<double>(n);
    double K = static_cast<double>(k);
    double cr1 = (G / (G - 1.0)) * ((N - 1.0) / (N - K));
    fit.cov = cr1 * bread * meat * bread;
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
    fit.cov_flavor = CovFlavor::clustered;
    fit.n_clusters = n_clusters;
    fit.dof_t = G - 1.0;

    // Within R^2, adjusted over the slope parameters.
    double tss = yd.squaredNorm();
    double rss = fit.residuals.squaredNorm();
    if (tss > 0.0) {
        double r2 = 1.0 - rss / tss;
        fit.r2_adj = 1.0 - (1.0 - r2) * (N - 1.0) / (N - K);
    } else {
        fit.r2_adj = kNaN;
    }
    fit.absorbed_dims.clear();
    for (size_t d = 0; d < fe_ids.size(); ++d)
        fit.absorbed_dims.push_back(d < opts.fe_names.size() ? opts.fe_names[d]
                                                             : "fe" + std::to_string(d));
    return fit;
}

Eigen::MatrixXd newey_west_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                               long lags) {
    const Eigen::Index T = X.rows(), k = X.cols();
    if (u.size() != T) throw std::invalid_argument("newey_west_cov: length mismatch");
    if (lags < 0 || lags >= T)
        throw std::invalid_argument("newey_west_cov: lags must lie in [0, n_obs)");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index t = 0; t < T; ++t)
        S += u[t] * u[t] * X.row(t).transpose() * X.row(t);
    for (long l = 1; l <= lags; ++l) {
        double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index t = l; t < T; ++t)
            gamma += u[t] * u[t - l] * X.row(t).transpose() * X.row(t - l);
        S += w * (gamma + gamma.transpose());
    }
    Eigen::MatrixXd bread =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd cov = bread * S * bread;
    return 0.5 * (cov + cov.transpose());
}

long nw_auto_lags(long n_obs) {
    return static_cast<long>(
        std::floor(4.0 * std::pow(static_cast<double>(n_obs) / 100.0, 2.0 / 9.0)));
}

MeanTest nw_mean_test(const std::vector<double>& series) {
    std::vector<double> clean;
    clean.reserve(series.size());
    for (double v : series)
        if (std::isfinite(v)) clean.push_back(v);
    if (clean.empty()) throw std::invalid_argument("nw_mean_test: all values missing");
    if (clean.size() < 8) throw std::invalid_argument("nw_mean_test: need >= 8 observations");

    const long n = static_cast<long>(clean.size());
    MeanTest out;
    out.n = n;
    out.lags = std::min(nw_auto_lags(n), n - 1);
    double mean = 0.0;
    for (double v : clean) mean += v;
    mean /= static_cast<double>(n);
    out.mean = mean;
    Eigen::VectorXd u(n);
    for (long i = 0; i < n; ++i) u[i] = clean[static_cast<size_t>(i)] - mean;
    if (u.lpNorm<Eigen::Infinity>() == 0.0) {
        out.degenerate = true;
        out.se = 0.0;
        out.t_stat = mean == 0.0 ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(), mean);
        return out;
    }
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    out.se = std::sqrt(newey_west_cov(ones, u, out.lags)(0, 0));
    out.t_stat = mean / out.se;
    return out;
}

int factor_count(FactorModel model) {
    switch (model) {
        case FactorModel::capm: return 1;
        case FactorModel::ff3: return 3;
        case FactorModel::ff4: return 4;
    }
    return 0;
}

std::vector<double> rolling_alpha(const std::vector<double>& excess,
                                  const Eigen::MatrixXd& factors,
                                  const RollingAlphaOptions& opts) {
    const long n = static_cast<long>(excess.size());
    const int k = factor_count(opts.model);
    if (factors.rows() != n) throw std::invalid_argument("rolling_alpha: length mismatch");
    if (factors.cols() < k) throw std::invalid_argument("rolling_alpha: too few factor columns");
    if (opts.window < k + 2) throw std::invalid_argument("rolling_alpha: window too short");

    std::vector<char> row_ok(static_cast<size_t>(n));
    for (long t = 0; t < n; ++t) {
        bool ok = std::isfinite(excess[static_cast<size_t>(t)]);
        for (int j = 0; j < k && ok; ++j) ok = std::isfinite(factors(t, j));
        row_ok[static_cast<size_t>(t)] = ok ? 1 : 0;
    }
    std::vector<double> alpha(static_cast<size_t>(n), kNaN);
    const long W = opts.window;
    Eigen::MatrixXd Xw(W, k + 1);
    Eigen::VectorXd yw(W);
    for (long t = 0; t < n; ++t) {
        long lo = opts.window_intercept_alpha ? t - W + 1 : t - W;
        long hi = opts.window_intercept_alpha ? t : t - 1;  // inclusive window
        if (lo < 0) continue;
        bool full = true;
        for (long s = lo; s <= hi && full; ++s) full = row_ok[static_cast<size_t>(s)] != 0;
        if (!full) continue;
        if (!opts.window_intercept_alpha) {
            bool have_t = std::isfinite(excess[static_cast<size_t>(t)]);
            for (int j = 0; j < k && have_t; ++j) have_t = std::isfinite(factors(t, j));
            if (!have_t) continue;
        }
        for (long s = 0; s < W; ++s) {
            Xw(s, 0) = 1.0;
            Xw.row(s).tail(k) = factors.row(lo + s).head(k);
            yw[s] = excess[static_cast<size_t>(lo + s)];
        }
        RegressionFit fit = ols(Xw, yw);
        if (opts.window_intercept_alpha) {
            alpha[static_cast<size_t>(t)] = fit.coef[0];
        } else {
            double predicted = 0.0;
            for (int j = 0; j < k; ++j) predicted += fit.coef[j + 1] * factors(t, j);
            alpha[static_cast<size_t>(t)] = excess[static_cast<size_t>(t)] - predicted;
        }
    }
    return alpha;
}

double nearest_rank_percentile(const std::vector<double>& values, double pct) {
    if (pct < 0.0 || pct > 100.0)
        throw std::invalid_argument("percentile must lie in [0, 100]");
    std::vector<double> clean;
    clean.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v)) clean.push_back(v);
    if (clean.empty()) throw std::invalid_argument("percentile of an empty sample");
    std::sort(clean.begin(), clean.end());
    const double n = static_cast<double>(clean.size());
    long idx = static_cast<long>(std::ceil(pct * n / 100.0 - 1e-12));
    idx = std::clamp(idx, 1L, static_cast<long>(clean.size()));
    return clean[static_cast<size_t>(idx - 1)];
}

std::vector<double> winsorize(std::vector<double> values, double lower_pct,
                              double upper_pct) {
    if (values.empty()) throw std::invalid_argument("winsorize: empty input");
    if (lower_pct >= upper_pct)
        throw std::invalid_argument("winsorize: lower percentile must be below upper");
    bool any = false;
    for (double v : values)
        if (std::isfinite(v)) {
            any = true;
            break;
        }
    if (!any) return values;
    double lo = nearest_rank_percentile(values, lower_pct);
    double hi = nearest_rank_percentile(values, upper_pct);
    for (double& v : values)
        if (std::isfinite(v)) v = std::clamp(v, lo, hi);
    return values;
}

std::vector<double> standardize(const std::vector<double>& values) {
    double sum = 0.0;
    long n = 0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    if (n < 2) throw std::invalid_argument("standardize: need >= 2 observations");
    double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) throw std::runtime_error("standardize: zero variance");
    std::vector<double> out(values.size(), kNaN);
    for (size_t i = 0; i < values.size(); ++i)
        if (std::isfinite(values[i])) out[i] = (values[i] - mean) / sd;
    return out;
}

}  // namespace fundliq
