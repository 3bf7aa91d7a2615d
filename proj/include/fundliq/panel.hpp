#pragma once

#include <array>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fundliq/data_model.hpp"
#include "fundliq/econometrics.hpp"
#include "fundliq/liquidity.hpp"

namespace fundliq {

// One fund-month of the assembled panel. Returns, flows, and cash changes are
// fractions; cash_pct, expense_ratio, and turnover stay in percent. All-NaN
// defaults mean "missing".
struct FundMonthRecord {
    std::string fund_id;
    int month = 0;
    double ret_net = std::numeric_limits<double>::quiet_NaN();
    double ret_gross = std::numeric_limits<double>::quiet_NaN();
    double flow = std::numeric_limits<double>::quiet_NaN();
    double flow_q0 = std::numeric_limits<double>::quiet_NaN();
    double flow_q1 = std::numeric_limits<double>::quiet_NaN();
    double cash_pct = std::numeric_limits<double>::quiet_NaN();
    double dcash_level_6m = std::numeric_limits<double>::quiet_NaN();
    double dcash_prop_6m = std::numeric_limits<double>::quiet_NaN();
    double illiq_amihud = std::numeric_limits<double>::quiet_NaN();
    double illiq_ps = std::numeric_limits<double>::quiet_NaN();
    double illiq = std::numeric_limits<double>::quiet_NaN();       // selected measure
    double illiq_lag6 = std::numeric_limits<double>::quiet_NaN();  // built post-winsorization
    double dilliq_3m = std::numeric_limits<double>::quiet_NaN();
    double activeness = std::numeric_limits<double>::quiet_NaN();
    double activeness_lag1 = std::numeric_limits<double>::quiet_NaN();
    double alpha_capm = std::numeric_limits<double>::quiet_NaN();
    double alpha_ff3 = std::numeric_limits<double>::quiet_NaN();
    double alpha_ff4 = std::numeric_limits<double>::quiet_NaN();
    double alpha_capm_gross = std::numeric_limits<double>::quiet_NaN();
    double alpha_ff3_gross = std::numeric_limits<double>::quiet_NaN();
    double alpha_ff4_gross = std::numeric_limits<double>::quiet_NaN();
    double size = std::numeric_limits<double>::quiet_NaN();  // ln(TNA)
    double expense_ratio = std::numeric_limits<double>::quiet_NaN();
    double turnover = std::numeric_limits<double>::quiet_NaN();
    double age_months = std::numeric_limits<double>::quiet_NaN();
    double tna = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();
};

struct PanelDataset {
    std::vector<FundMonthRecord> rows;  // sorted by (fund_id, month)
    std::map<std::string, std::string> input_digests;
    std::string config_digest;
};

enum class Measure { amihud, ps };

struct PanelOptions {
    long min_months = 36;
    int start_month = -1;  // serial month bounds, inclusive; -1 = open
    int end_month = -1;
    Measure measure = Measure::amihud;
    double winsor_lower = 5.0;
    double winsor_upper = 95.0;
    bool winsorize_enabled = true;
    int activeness_window = 12;
    long activeness_min_obs = 10;
    LiquidityOptions liquidity;
    bool alpha_window_intercept = false;
    int alpha_window = 36;
    int eq45_flow_lags = 5;  // regressors flow_t .. flow_{t-5}
    int eq6_flow_lags = 3;   // regressors flow_t .. flow_{t-3}
    int workers = 1;
};

// ret_net + expense_ratio / 1200 (expense in % per annum, returns fractional).
double gross_return(double ret_net, double expense_ratio);

// Trailing sample SD of the illiquidity series over [t-window, t-1]; missing
// below min_obs non-missing values in the window.
std::vector<double> liquidity_activeness(const std::vector<double>& illiq,
                                         int window = 12, long min_obs = 10);

// Joins the ingested inputs into the fund-month panel: returns and flows from
// the fund series, cash from holdings, illiquidity from stock bars, trailing
// activeness, rolling alphas, then pooled winsorization of the analysis
// columns and the post-winsorization lag columns. Throws if the join is empty.
PanelDataset build_panel(const MarketData& data, const PanelOptions& opts);

struct SummaryRow {
    std::string name;
    double mean = 0, median = 0, sd = 0, p25 = 0, p75 = 0;
    long n = 0;
};

// Pooled moments per reported variable, in reporting units (% where the
// tables use percent).
std::vector<SummaryRow> summary_stats(const PanelDataset& panel);

// Flow->cash and flow->illiquidity fixed-effects regressions. All use fund
// and month effects with month-clustered (CR1) errors.
RegressionFit run_eq4(const PanelDataset& panel, const PanelOptions& opts);
RegressionFit run_eq5(const PanelDataset& panel, const PanelOptions& opts);
RegressionFit run_eq6(const PanelDataset& panel, const PanelOptions& opts);
RegressionFit run_eq7(const PanelDataset& panel, const PanelOptions& opts);

// The eight sort/performance metrics, in fixed order.
enum class Metric {
    ret_gross,
    alpha_capm_gross,
    alpha_ff3_gross,
    alpha_ff4_gross,
    ret_net,
    alpha_capm_net,
    alpha_ff3_net,
    alpha_ff4_net,
};
extern const std::vector<Metric> kAllMetrics;
std::string metric_name(Metric m);
double metric_value(const FundMonthRecord& r, Metric m);

struct SortTable {
    struct MetricRow {
        std::string name;
        std::array<double, 5> quintile_mean{};  // time-averaged, fraction units
        double spread_5_1 = std::numeric_limits<double>::quiet_NaN();
        MeanTest spread_test;  // on the monthly 5-1 series
        bool t_available = false;
        long n_months = 0;
    };
    std::array<double, 5> mean_activeness{};  // signal means per quintile
    std::vector<MetricRow> metrics;
    long n_months_sorted = 0;
    std::vector<std::string> warnings;  // skipped months etc.
};

// Monthly quintile sorts on lagged activeness: rank ascending at t (ties by
// fund_id), metric measured at t+1, equal-weighted. Eligibility requires the
// signal and the next-month net return; months with fewer than min_funds
// eligible funds are skipped with a warning.
SortTable quintile_sort(const PanelDataset& panel, int min_funds = 10);

// Eight fixed-effects regressions of metric_t on activeness_{t-1} plus fund
// controls (ln age, size, expense, turnover), one per metric, in kAllMetrics
// order. `include_expense_control` exists for diagnostics of the fee channel.
std::vector<RegressionFit> run_activeness_performance(const PanelDataset& panel,
                                                      const PanelOptions& opts,
                                                      bool include_expense_control = true);

// Panel export used by the determinism tests and the report command.
std::string render_panel_csv(const PanelDataset& panel);

}  // namespace fundliq
