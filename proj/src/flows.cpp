#include "fundliq/flows.hpp"

#include <cmath>
#include <stdexcept>

#include "fundliq/csv.hpp"
#include "fundliq/dates.hpp"

namespace fundliq {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double monthly_flow(double tna_t, double tna_prev, double ret_t) {
    if (!std::isfinite(tna_t) || !std::isfinite(tna_prev) || !std::isfinite(ret_t))
        return kNaN;
    if (tna_prev <= 0.0) throw std::invalid_argument("monthly_flow: prior TNA must be > 0");
    return (tna_t - tna_prev * (1.0 + ret_t)) / tna_prev;
}

double horizon_flow(const std::vector<double>& tna, const std::vector<double>& ret,
                    size_t t, int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon_flow: horizon must be >= 1");
    if (tna.size() != ret.size()) throw std::invalid_argument("horizon_flow: length mismatch");
    size_t h = static_cast<size_t>(horizon);
    if (t >= tna.size() || t < h) return kNaN;
    double base = tna[t - h];
    if (!std::isfinite(base)) return kNaN;
    if (base <= 0.0) throw std::invalid_argument("horizon_flow: base TNA must be > 0");
    double growth = 1.0;
    for (size_t s = t - h + 1; s <= t; ++s) {
        if (!std::isfinite(ret[s])) return kNaN;
        growth *= 1.0 + ret[s];
    }
    if (!std::isfinite(tna[t])) return kNaN;
    return (tna[t] - base * growth) / base;
}

double cash_pct(const HoldingsSnapshot& snapshot) {
    double sum = 0.0;
    for (double component : snapshot.cash_components) sum += component;
    return sum;
}

CashChangeSeries cash_changes(const std::vector<double>& cash_pct_series,
                              const std::vector<double>& tna, int horizon) {
    if (horizon < 1) throw std::invalid_argument("cash_changes: horizon must be >= 1");
    if (cash_pct_series.size() != tna.size())
        throw std::invalid_argument("cash_changes: length mismatch");
    size_t n = tna.size();
    size_t h = static_cast<size_t>(horizon);
    CashChangeSeries out;
    out.dcash_level.assign(n, kNaN);
    out.dcash_prop.assign(n, kNaN);
    for (size_t t = h; t < n; ++t) {
        double c1 = cash_pct_series[t], c0 = cash_pct_series[t - h];
        double a1 = tna[t], a0 = tna[t - h];
        if (!std::isfinite(c1) || !std::isfinite(c0)) continue;
        out.dcash_prop[t] = (c1 - c0) / 100.0;
        if (!std::isfinite(a1) || !std::isfinite(a0) || a0 <= 0.0) continue;
        out.dcash_level[t] = (c1 / 100.0 * a1 - c0 / 100.0 * a0) / a0;
    }
    return out;
}

std::string render_fund_flows_csv(const std::vector<FundFlowRow>& rows) {
    std::string out =
        "fund_id,month,flow_1m,flow_q0,flow_q1,cash_pct,dcash_level_6m,dcash_prop_6m\n";
    for (const auto& row : rows) {
        out += row.fund_id;
        out += ',';
        out += format_month(row.month);
        out += ',';
        out += format_double(row.flow_1m);
        out += ',';
        out += format_double(row.flow_q0);
        out += ',';
        out += format_double(row.flow_q1);
        out += ',';
        out += format_double(row.cash_pct);
        out += ',';
        out += format_double(row.dcash_level_6m);
        out += ',';
        out += format_double(row.dcash_prop_6m);
        out += '\n';
    }
    return out;
}

}  // namespace fundliq
