#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fundliq/data_model.hpp"

namespace fundliq {

// Net new money as a fraction of prior TNA, with return-driven growth
// removed: (tna_t - tna_prev * (1 + ret_t)) / tna_prev. NaN in -> NaN out;
// a non-positive finite tna_prev is a contract violation.
double monthly_flow(double tna_t, double tna_prev, double ret_t);

// Compounded multi-month analogue over (t-h, t]:
//   (TNA_t - TNA_{t-h} * prod_{s=t-h+1..t}(1 + ret_s)) / TNA_{t-h}
// `tna` and `ret` are month-aligned series; any missing value in the window
// makes the result missing. h = 1 reduces to monthly_flow.
double horizon_flow(const std::vector<double>& tna, const std::vector<double>& ret,
                    size_t t, int horizon);

// Sum of the five cash-equivalent components, in percent of TNA.
double cash_pct(const HoldingsSnapshot& snapshot);

struct CashChangeSeries {
    // (cash_pct_t/100 * TNA_t - cash_pct_{t-h}/100 * TNA_{t-h}) / TNA_{t-h}
    std::vector<double> dcash_level;
    // (cash_pct_t - cash_pct_{t-h}) / 100
    std::vector<double> dcash_prop;
};

// Both cash-change dependents over a fixed horizon (default 6 months), as
// fractions of TNA. Missing endpoints make the entry missing.
CashChangeSeries cash_changes(const std::vector<double>& cash_pct_series,
                              const std::vector<double>& tna, int horizon = 6);

// Export row for fund_flows.csv.
struct FundFlowRow {
    std::string fund_id;
    int month = 0;
    double flow_1m = std::numeric_limits<double>::quiet_NaN();
    double flow_q0 = std::numeric_limits<double>::quiet_NaN();
    double flow_q1 = std::numeric_limits<double>::quiet_NaN();
    double cash_pct = std::numeric_limits<double>::quiet_NaN();
    double dcash_level_6m = std::numeric_limits<double>::quiet_NaN();
    double dcash_prop_6m = std::numeric_limits<double>::quiet_NaN();
};

std::string render_fund_flows_csv(const std::vector<FundFlowRow>& rows);

}  // namespace fundliq
