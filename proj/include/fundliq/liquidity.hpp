#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fundliq/data_model.hpp"

namespace fundliq {

enum class GammaStatus { ok, insufficient_pairs, singular };

// One stock-month of liquidity measures. Scores are NaN when the month does
// not meet the data minimums; `gamma_status` says why the gamma is missing.
struct StockMonthLiquidity {
    std::string stock_id;
    int month = 0;
    double illiq_amihud = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    long n_days = 0;   // days with dvol > 0 entering the Amihud mean
    long n_pairs = 0;  // consecutive-trading-day pairs entering the gamma fit
    double theta = std::numeric_limits<double>::quiet_NaN();
    double phi = std::numeric_limits<double>::quiet_NaN();
    GammaStatus gamma_status = GammaStatus::insufficient_pairs;
};

struct LiquidityOptions {
    long min_days = 10;   // Amihud: month missing below this day count
    long min_pairs = 15;  // gamma: month missing below this pair count
    // Reversal regressor sign convention: sign of the market-excess return by
    // default, sign of the raw return when set.
    bool sign_raw_return = false;
};

// Mean of |ret| / dvol over the days with dvol > 0; missing if fewer than
// min_days such days. `bars` must all share one stock and month.
StockMonthLiquidity amihud_stock_month(const std::vector<StockDayBar>& bars,
                                       long min_days = 10);

// Return-reversal regression over consecutive trading days d (market
// calendar): excess return of day d+1 on [1, ret_d, sign * dvol_d]. Missing
// if fewer than min_pairs pairs; a singular design marks the month missing
// with GammaStatus::singular. Every bar date must appear in `market`.
StockMonthLiquidity ps_gamma_stock_month(const std::vector<StockDayBar>& bars,
                                         const std::vector<MarketDay>& market,
                                         long min_pairs = 15,
                                         bool sign_raw_return = false);

// Both measures for every stock-month present in `bars`, ordered by
// (stock_id, month). Parallelizes over stock-months; the result does not
// depend on `workers`.
std::vector<StockMonthLiquidity> compute_stock_month_liquidity(
    const std::vector<StockDayBar>& bars, const std::vector<MarketDay>& market,
    const LiquidityOptions& opts = {}, int workers = 1);

struct FundIlliq {
    double value = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();
};

// Position-weighted mean of the per-stock scores, weights renormalized over
// the stocks with a non-missing score (cash excluded). Missing when the
// covered fraction of the equity weight falls below `coverage_floor`.
FundIlliq fund_illiquidity(const HoldingsSnapshot& snapshot,
                           const std::map<std::string, double>& stock_score,
                           double coverage_floor = 0.5);

// out[t] = series[t] - series[t-h]; NaN when either endpoint is missing.
std::vector<double> delta_illiq(const std::vector<double>& series, int horizon);

// Export rows: one per fund-month, both measures side by side. `coverage`
// refers to the Amihud score map.
struct FundMonthIlliq {
    std::string fund_id;
    int month = 0;
    double illiq_amihud = std::numeric_limits<double>::quiet_NaN();
    double illiq_ps = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();
};

std::string render_stock_month_liquidity_csv(const std::vector<StockMonthLiquidity>& rows);
std::string render_fund_month_illiq_csv(const std::vector<FundMonthIlliq>& rows);

}  // namespace fundliq
