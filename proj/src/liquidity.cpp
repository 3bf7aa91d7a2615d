#include "fundliq/liquidity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fundliq/csv.hpp"
#include "fundliq/dates.hpp"
#include "fundliq/econometrics.hpp"
#include "fundliq/parallel.hpp"

namespace fundliq {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_single_stock_month(const std::vector<StockDayBar>& bars) {
    for (size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].stock_id != bars[0].stock_id ||
            month_of_day(bars[i].date) != month_of_day(bars[0].date))
            throw std::invalid_argument("bars must cover a single stock-month");
    }
}

}  // namespace

StockMonthLiquidity amihud_stock_month(const std::vector<StockDayBar>& bars,
                                       long min_days) {
    check_single_stock_month(bars);
    StockMonthLiquidity out;
    if (bars.empty()) return out;
    out.stock_id = bars[0].stock_id;
    out.month = month_of_day(bars[0].date);
    double sum = 0.0;
    long days = 0;
    for (const auto& bar : bars) {
        if (bar.dvol > 0.0) {
            sum += std::fabs(bar.ret) / bar.dvol;
            ++days;
        }
    }
    out.n_days = days;
    if (days >= min_days) out.illiq_amihud = sum / static_cast<double>(days);
    return out;
}

StockMonthLiquidity ps_gamma_stock_month(const std::vector<StockDayBar>& bars,
                                         const std::vector<MarketDay>& market,
                                         long min_pairs, bool sign_raw_return) {
    check_single_stock_month(bars);
    StockMonthLiquidity out;
    if (bars.empty()) return out;
    out.stock_id = bars[0].stock_id;
    out.month = month_of_day(bars[0].date);

    std::vector<StockDayBar> sorted = bars;
    std::sort(sorted.begin(), sorted.end(),
              [](const StockDayBar& a, const StockDayBar& b) { return a.date < b.date; });

    // Market lookup and trading-day adjacency come from the market series.
    auto market_at = [&](int date) -> const MarketDay* {
        auto it = std::lower_bound(market.begin(), market.end(), date,
                                   [](const MarketDay& m, int d) { return m.date < d; });
        return (it != market.end() && it->date == date) ? &*it : nullptr;
    };
    struct PairRow {
        double y, ret, signed_vol;
    };
    std::vector<PairRow> pairs;
    for (size_t i = 0; i + 1 < sorted.size(); ++i) {
        const StockDayBar& d0 = sorted[i];
        const StockDayBar& d1 = sorted[i + 1];
        const MarketDay* m0 = market_at(d0.date);
        const MarketDay* m1 = market_at(d1.date);
        if (!m0 || !m1)
            throw std::invalid_argument("market return missing for bar date " +
                                        format_date(!m0 ? d0.date : d1.date));
        // Consecutive trading days only: d1 must be the market day after d0.
        auto it = std::lower_bound(market.begin(), market.end(), d0.date,
                                   [](const MarketDay& m, int d) { return m.date < d; });
        if (it + 1 == market.end() || (it + 1)->date != d1.date) continue;
        double excess0 = d0.ret - m0->mkt_ret;
        double excess1 = d1.ret - m1->mkt_ret;
        double sign_arg = sign_raw_return ? d0.ret : excess0;
        pairs.push_back({excess1, d0.ret, sign_of(sign_arg) * d0.dvol});
    }
    out.n_pairs = static_cast<long>(pairs.size());
    if (out.n_pairs < std::max(min_pairs, 4L)) {
        out.gamma_status = GammaStatus::insufficient_pairs;
        return out;
    }
    Eigen::MatrixXd X(out.n_pairs, 3);
    Eigen::VectorXd y(out.n_pairs);
    for (long i = 0; i < out.n_pairs; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = pairs[static_cast<size_t>(i)].ret;
        X(i, 2) = pairs[static_cast<size_t>(i)].signed_vol;
        y[i] = pairs[static_cast<size_t>(i)].y;
    }
    try {
        RegressionFit fit = ols(X, y, {"theta", "ret", "signed_vol"});
        out.theta = fit.coef[0];
        out.phi = fit.coef[1];
        out.gamma = fit.coef[2];
        out.gamma_status = GammaStatus::ok;
    } catch (const std::runtime_error&) {
        out.gamma_status = GammaStatus::singular;
    }
    return out;
}

std::vector<StockMonthLiquidity> compute_stock_month_liquidity(
    const std::vector<StockDayBar>& bars, const std::vector<MarketDay>& market,
    const LiquidityOptions& opts, int workers) {
    // Group end indices of contiguous (stock, month) runs; bars are sorted by
    // (stock_id, date) after ingest, so equal keys are adjacent.
    std::vector<std::pair<size_t, size_t>> groups;
    size_t start = 0;
    for (size_t i = 0; i <= bars.size(); ++i) {
        bool boundary = i == bars.size() || bars[i].stock_id != bars[start].stock_id ||
                        month_of_day(bars[i].date) != month_of_day(bars[start].date);
        if (boundary) {
            if (i > start) groups.emplace_back(start, i);
            start = i;
        }
    }
    std::vector<StockMonthLiquidity> out(groups.size());
    parallel_for(groups.size(), workers, [&](size_t g) {
        std::vector<StockDayBar> slice(bars.begin() + static_cast<long>(groups[g].first),
                                       bars.begin() + static_cast<long>(groups[g].second));
        StockMonthLiquidity a = amihud_stock_month(slice, opts.min_days);
        StockMonthLiquidity p =
            ps_gamma_stock_month(slice, market, opts.min_pairs, opts.sign_raw_return);
        a.gamma = p.gamma;
        a.theta = p.theta;
        a.phi = p.phi;
        a.n_pairs = p.n_pairs;
        a.gamma_status = p.gamma_status;
        out[g] = std::move(a);
    });
    std::sort(out.begin(), out.end(),
              [](const StockMonthLiquidity& a, const StockMonthLiquidity& b) {
                  return std::tie(a.stock_id, a.month) < std::tie(b.stock_id, b.month);
              });
    return out;
}

FundIlliq fund_illiquidity(const HoldingsSnapshot& snapshot,
                           const std::map<std::string, double>& stock_score,
                           double coverage_floor) {
    double equity_weight = 0.0, covered_weight = 0.0, weighted_sum = 0.0;
    for (const auto& [stock_id, weight] : snapshot.positions) {
        equity_weight += weight;
        auto it = stock_score.find(stock_id);
        if (it == stock_score.end() || !std::isfinite(it->second)) continue;
        covered_weight += weight;
        weighted_sum += weight * it->second;
    }
    FundIlliq out;
    if (equity_weight <= 0.0) return out;
    out.coverage = covered_weight / equity_weight;
    if (covered_weight > 0.0 && out.coverage >= coverage_floor)
        out.value = weighted_sum / covered_weight;
    return out;
}

std::vector<double> delta_illiq(const std::vector<double>& series, int horizon) {
    if (horizon < 1) throw std::invalid_argument("delta_illiq: horizon must be >= 1");
    std::vector<double> out(series.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t t = static_cast<size_t>(horizon); t < series.size(); ++t) {
        double a = series[t], b = series[t - static_cast<size_t>(horizon)];
        if (std::isfinite(a) && std::isfinite(b)) out[t] = a - b;
    }
    return out;
}

std::string render_stock_month_liquidity_csv(const std::vector<StockMonthLiquidity>& rows) {
    std::string out = "stock_id,month,illiq_amihud,gamma,n_days\n";
    for (const auto& row : rows) {
        out += row.stock_id;
        out += ',';
        out += format_month(row.month);
        out += ',';
        out += format_double(row.illiq_amihud);
        out += ',';
        out += format_double(row.gamma);
        out += ',';
        out += std::to_string(row.n_days);
        out += '\n';
    }
    return out;
}

std::string render_fund_month_illiq_csv(const std::vector<FundMonthIlliq>& rows) {
    std::string out = "fund_id,month,illiq_amihud,illiq_ps,coverage\n";
    for (const auto& row : rows) {
        out += row.fund_id;
        out += ',';
        out += format_month(row.month);
        out += ',';
        out += format_double(row.illiq_amihud);
        out += ',';
        out += format_double(row.illiq_ps);
        out += ',';
        out += format_double(row.coverage);
        out += '\n';
    }
    return out;
}

}  // namespace fundliq
