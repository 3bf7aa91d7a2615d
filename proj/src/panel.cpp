#include "fundliq/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "fundliq/csv.hpp"
#include "fundliq/dates.hpp"
#include "fundliq/flows.hpp"
#include "fundliq/parallel.hpp"

namespace fundliq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One fund's contiguous slice of the filtered fund series, month ascending.
struct FundBlock {
    std::string fund_id;
    std::vector<const FundSeriesRow*> rows;
    int m0 = 0;
    int m1 = 0;
};

// Row lookup plus 0-based fund/month ordinals for the fixed-effect calls.
struct PanelIndex {
    std::vector<int> fund_ord;
    std::vector<int> month_ord;
    std::map<std::pair<std::string, int>, std::size_t> row_at;
};

PanelIndex index_panel(const PanelDataset& panel) {
    PanelIndex ix;
    const auto& rows = panel.rows;
    ix.fund_ord.resize(rows.size());
    ix.month_ord.resize(rows.size());
    std::map<std::string, int> funds;
    std::map<int, int> months;
    for (const auto& r : rows) {
        funds.emplace(r.fund_id, 0);
        months.emplace(r.month, 0);
    }
    int next = 0;
    for (auto& [id, ord] : funds) ord = next++;
    next = 0;
    for (auto& [m, ord] : months) ord = next++;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ix.fund_ord[i] = funds[rows[i].fund_id];
        ix.month_ord[i] = months[rows[i].month];
        ix.row_at[{rows[i].fund_id, rows[i].month}] = i;
    }
    return ix;
}

RegressionFit two_way_fe(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const std::vector<std::string>& names, const PanelIndex& ix) {
    FeRegressOptions fo;
    fo.fe_names = {"fund", "month"};
    return fe_regress(y, X, names, {ix.fund_ord, ix.month_ord}, ix.month_ord, fo);
}

// dep_t on flow_t .. flow_{t-n_lags}, fund+month effects, month clusters.
RegressionFit flow_lag_regression(const PanelDataset& panel,
                                  double FundMonthRecord::*dep, int n_lags) {
    if (n_lags < 0) throw std::invalid_argument("flow lags must be >= 0");
    const auto& rows = panel.rows;
    const auto n = static_cast<Eigen::Index>(rows.size());
    PanelIndex ix = index_panel(panel);
    Eigen::VectorXd y(n);
    Eigen::MatrixXd X(n, n_lags + 1);
    std::vector<std::string> names;
    for (int k = 0; k <= n_lags; ++k) names.push_back("flow_lag" + std::to_string(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y(i) = r.*dep;
        for (int k = 0; k <= n_lags; ++k) {
            auto it = ix.row_at.find({r.fund_id, r.month - k});
            X(i, k) = it == ix.row_at.end() ? kNaN : rows[it->second].flow;
        }
    }
    return two_way_fe(y, X, names, ix);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return kNaN;
    double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double gross_return(double ret_net, double expense_ratio) {
    if (std::isfinite(expense_ratio) && expense_ratio < 0.0)
        throw std::invalid_argument("gross_return: expense ratio must be >= 0");
    return ret_net + expense_ratio / 1200.0;
}

std::vector<double> liquidity_activeness(const std::vector<double>& illiq,
                                         int window, long min_obs) {
    if (window < 2) throw std::invalid_argument("activeness: window must be >= 2");
    long need = std::max<long>(min_obs, 2);
    std::vector<double> out(illiq.size(), kNaN);
    for (std::size_t t = static_cast<std::size_t>(window); t < illiq.size(); ++t) {
        double sum = 0.0;
        long n = 0;
        for (std::size_t j = t - static_cast<std::size_t>(window); j < t; ++j) {
            if (!std::isfinite(illiq[j])) continue;
            sum += illiq[j];
            ++n;
        }
        if (n < need) continue;
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = t - static_cast<std::size_t>(window); j < t; ++j) {
            if (!std::isfinite(illiq[j])) continue;
            ss += (illiq[j] - mean) * (illiq[j] - mean);
        }
        out[t] = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return out;
}

PanelDataset build_panel(const MarketData& data, const PanelOptions& opts) {
    if (opts.start_month >= 0 && opts.end_month >= 0 && opts.start_month > opts.end_month)
        throw std::invalid_argument("panel: sample window start is after its end");

    // The pipeline is insensitive to input row order; canonicalize up front.
    std::vector<FundSeriesRow> series;
    series.reserve(data.fund_series.size());
    for (const auto& r : data.fund_series) {
        if (opts.start_month >= 0 && r.month < opts.start_month) continue;
        if (opts.end_month >= 0 && r.month > opts.end_month) continue;
        series.push_back(r);
    }
    std::sort(series.begin(), series.end(), [](const FundSeriesRow& a, const FundSeriesRow& b) {
        return std::tie(a.fund_id, a.month) < std::tie(b.fund_id, b.month);
    });
    series = apply_sample_filter(series, opts.min_months);
    if (series.empty()) throw std::runtime_error("panel: no fund-months survive the sample filter");

    std::vector<StockDayBar> bars = data.stock_bars;
    std::sort(bars.begin(), bars.end(), [](const StockDayBar& a, const StockDayBar& b) {
        return std::tie(a.stock_id, a.date) < std::tie(b.stock_id, b.date);
    });
    std::vector<MarketDay> market = data.market_daily;
    std::sort(market.begin(), market.end(),
              [](const MarketDay& a, const MarketDay& b) { return a.date < b.date; });

    auto stock_liq = compute_stock_month_liquidity(bars, market, opts.liquidity, opts.workers);
    std::map<int, std::map<std::string, double>> amihud_scores, gamma_scores;
    for (const auto& sm : stock_liq) {
        if (std::isfinite(sm.illiq_amihud)) amihud_scores[sm.month][sm.stock_id] = sm.illiq_amihud;
        if (std::isfinite(sm.gamma)) gamma_scores[sm.month][sm.stock_id] = sm.gamma;
    }

    std::map<std::pair<std::string, int>, const HoldingsSnapshot*> holdings_at;
    for (const auto& h : data.holdings) holdings_at[{h.fund_id, h.month}] = &h;
    std::map<int, FactorRow> factor_at;
    for (const auto& f : data.factors) factor_at[f.month] = f;

    std::vector<FundBlock> blocks;
    for (const auto& r : series) {
        if (blocks.empty() || blocks.back().fund_id != r.fund_id) {
            blocks.push_back({r.fund_id, {}, r.month, r.month});
        }
        blocks.back().rows.push_back(&r);
        blocks.back().m1 = r.month;
    }

    const std::map<std::string, double> no_scores;
    std::vector<std::vector<FundMonthRecord>> per_fund(blocks.size());
    parallel_for(blocks.size(), opts.workers, [&](std::size_t bi) {
        const FundBlock& b = blocks[bi];
        const int m0 = b.m0;
        const std::size_t span = static_cast<std::size_t>(b.m1 - b.m0 + 1);

        std::vector<const FundSeriesRow*> at(span, nullptr);
        std::vector<double> nav(span, kNaN), tna(span, kNaN), expense(span, kNaN),
            turn(span, kNaN), age(span, kNaN);
        for (const FundSeriesRow* r : b.rows) {
            std::size_t j = static_cast<std::size_t>(r->month - m0);
            at[j] = r;
            nav[j] = r->nav;
            tna[j] = r->tna;
            expense[j] = r->expense_ratio;
            turn[j] = r->turnover;
            age[j] = static_cast<double>(r->age_months);
        }

        // Net return needs adjacent NAVs; a month gap leaves the return missing.
        std::vector<double> ret(span, kNaN), gross(span, kNaN);
        for (std::size_t j = 1; j < span; ++j) {
            if (std::isfinite(nav[j]) && std::isfinite(nav[j - 1]))
                ret[j] = nav[j] / nav[j - 1] - 1.0;
        }
        for (std::size_t j = 0; j < span; ++j) {
            if (std::isfinite(ret[j])) gross[j] = gross_return(ret[j], expense[j]);
        }

        std::vector<double> flow(span, kNaN), q0(span, kNaN), q1(span, kNaN);
        for (std::size_t j = 1; j < span; ++j) flow[j] = monthly_flow(tna[j], tna[j - 1], ret[j]);
        for (std::size_t j = 0; j < span; ++j) {
            q0[j] = horizon_flow(tna, ret, j, 3);
            if (j >= 3) q1[j] = horizon_flow(tna, ret, j - 3, 3);
        }

        std::vector<double> cash(span, kNaN), illiq_am(span, kNaN), illiq_ps(span, kNaN),
            cov(span, kNaN);
        for (std::size_t j = 0; j < span; ++j) {
            auto hit = holdings_at.find({b.fund_id, m0 + static_cast<int>(j)});
            if (hit == holdings_at.end()) continue;
            const HoldingsSnapshot& snap = *hit->second;
            cash[j] = cash_pct(snap);
            auto am = amihud_scores.find(snap.month);
            FundIlliq fa =
                fund_illiquidity(snap, am == amihud_scores.end() ? no_scores : am->second);
            illiq_am[j] = fa.value;
            cov[j] = fa.coverage;
            auto gm = gamma_scores.find(snap.month);
            FundIlliq fg =
                fund_illiquidity(snap, gm == gamma_scores.end() ? no_scores : gm->second);
            illiq_ps[j] = fg.value;
        }

        const std::vector<double>& illiq_sel =
            opts.measure == Measure::amihud ? illiq_am : illiq_ps;
        std::vector<double> dill = delta_illiq(illiq_sel, 3);
        std::vector<double> act =
            liquidity_activeness(illiq_sel, opts.activeness_window, opts.activeness_min_obs);
        CashChangeSeries cc = cash_changes(cash, tna, 6);

        Eigen::MatrixXd fmat(span, 4);
        fmat.setConstant(kNaN);
        std::vector<double> rf(span, kNaN);
        for (std::size_t j = 0; j < span; ++j) {
            auto it = factor_at.find(m0 + static_cast<int>(j));
            if (it == factor_at.end()) continue;
            fmat(static_cast<Eigen::Index>(j), 0) = it->second.mkt_excess;
            fmat(static_cast<Eigen::Index>(j), 1) = it->second.smb;
            fmat(static_cast<Eigen::Index>(j), 2) = it->second.hml;
            fmat(static_cast<Eigen::Index>(j), 3) = it->second.wml;
            rf[j] = it->second.rf;
        }
        std::vector<double> ex_net(span, kNaN), ex_gross(span, kNaN);
        for (std::size_t j = 0; j < span; ++j) {
            if (std::isfinite(ret[j]) && std::isfinite(rf[j])) ex_net[j] = ret[j] - rf[j];
            if (std::isfinite(gross[j]) && std::isfinite(rf[j])) ex_gross[j] = gross[j] - rf[j];
        }
        RollingAlphaOptions ao;
        ao.window = opts.alpha_window;
        ao.window_intercept_alpha = opts.alpha_window_intercept;
        ao.model = FactorModel::capm;
        std::vector<double> a1 = rolling_alpha(ex_net, fmat, ao);
        std::vector<double> a1g = rolling_alpha(ex_gross, fmat, ao);
        ao.model = FactorModel::ff3;
        std::vector<double> a3 = rolling_alpha(ex_net, fmat, ao);
        std::vector<double> a3g = rolling_alpha(ex_gross, fmat, ao);
        ao.model = FactorModel::ff4;
        std::vector<double> a4 = rolling_alpha(ex_net, fmat, ao);
        std::vector<double> a4g = rolling_alpha(ex_gross, fmat, ao);

        auto& out = per_fund[bi];
        out.reserve(b.rows.size());
        for (std::size_t j = 0; j < span; ++j) {
            if (!at[j]) continue;
            FundMonthRecord r;
            r.fund_id = b.fund_id;
            r.month = m0 + static_cast<int>(j);
            r.ret_net = ret[j];
            r.ret_gross = gross[j];
            r.flow = flow[j];
            r.flow_q0 = q0[j];
            r.flow_q1 = q1[j];
            r.cash_pct = cash[j];
            r.dcash_level_6m = cc.dcash_level[j];
            r.dcash_prop_6m = cc.dcash_prop[j];
            r.illiq_amihud = illiq_am[j];
            r.illiq_ps = illiq_ps[j];
            r.illiq = illiq_sel[j];
            r.dilliq_3m = dill[j];
            r.activeness = act[j];
            r.alpha_capm = a1[j];
            r.alpha_ff3 = a3[j];
            r.alpha_ff4 = a4[j];
            r.alpha_capm_gross = a1g[j];
            r.alpha_ff3_gross = a3g[j];
            r.alpha_ff4_gross = a4g[j];
            r.size = std::isfinite(tna[j]) && tna[j] > 0.0 ? std::log(tna[j]) : kNaN;
            r.expense_ratio = expense[j];
            r.turnover = turn[j];
            r.age_months = age[j];
            r.tna = tna[j];
            r.coverage = cov[j];
            out.push_back(std::move(r));
        }
    });

    PanelDataset panel;
    std::size_t total = 0;
    for (const auto& v : per_fund) total += v.size();
    panel.rows.reserve(total);
    for (auto& v : per_fund)
        for (auto& r : v) panel.rows.push_back(std::move(r));

    if (opts.winsorize_enabled) {
        static const std::vector<double FundMonthRecord::*> kAnalysisColumns = {
            &FundMonthRecord::ret_net,          &FundMonthRecord::ret_gross,
            &FundMonthRecord::flow,             &FundMonthRecord::flow_q0,
            &FundMonthRecord::flow_q1,          &FundMonthRecord::cash_pct,
            &FundMonthRecord::dcash_level_6m,   &FundMonthRecord::dcash_prop_6m,
            &FundMonthRecord::illiq_amihud,     &FundMonthRecord::illiq_ps,
            &FundMonthRecord::illiq,            &FundMonthRecord::dilliq_3m,
            &FundMonthRecord::activeness,       &FundMonthRecord::alpha_capm,
            &FundMonthRecord::alpha_ff3,        &FundMonthRecord::alpha_ff4,
            &FundMonthRecord::alpha_capm_gross, &FundMonthRecord::alpha_ff3_gross,
            &FundMonthRecord::alpha_ff4_gross,  &FundMonthRecord::size,
            &FundMonthRecord::expense_ratio,    &FundMonthRecord::turnover,
            &FundMonthRecord::age_months,
        };
        std::vector<double> col(panel.rows.size());
        for (auto member : kAnalysisColumns) {
            for (std::size_t i = 0; i < panel.rows.size(); ++i) col[i] = panel.rows[i].*member;
            std::vector<double> clipped = winsorize(col, opts.winsor_lower, opts.winsor_upper);
            for (std::size_t i = 0; i < panel.rows.size(); ++i) panel.rows[i].*member = clipped[i];
        }
    }

    // Lag columns come from the (possibly winsorized) stored columns so that
    // regressors and their lags clip identically.
    std::map<std::pair<std::string, int>, std::size_t> row_at;
    for (std::size_t i = 0; i < panel.rows.size(); ++i)
        row_at[{panel.rows[i].fund_id, panel.rows[i].month}] = i;
    for (auto& r : panel.rows) {
        auto it6 = row_at.find({r.fund_id, r.month - 6});
        if (it6 != row_at.end()) r.illiq_lag6 = panel.rows[it6->second].illiq;
        auto it1 = row_at.find({r.fund_id, r.month - 1});
        if (it1 != row_at.end()) r.activeness_lag1 = panel.rows[it1->second].activeness;
    }
    return panel;
}

std::vector<SummaryRow> summary_stats(const PanelDataset& panel) {
    struct VarSpec {
        const char* name;
        double FundMonthRecord::*member;
        double scale;
    };
    static const VarSpec kVars[] = {
        {"cash_pct", &FundMonthRecord::cash_pct, 1.0},
        {"illiq_amihud_x100", &FundMonthRecord::illiq_amihud, 100.0},
        {"illiq_ps_x100", &FundMonthRecord::illiq_ps, 100.0},
        {"flow_pct", &FundMonthRecord::flow, 100.0},
        {"turnover_pct", &FundMonthRecord::turnover, 1.0},
        {"expense_pct", &FundMonthRecord::expense_ratio, 1.0},
        {"age_months", &FundMonthRecord::age_months, 1.0},
        {"tna", &FundMonthRecord::tna, 1.0},
        {"ret_pct", &FundMonthRecord::ret_net, 100.0},
        {"alpha_capm_pct", &FundMonthRecord::alpha_capm, 100.0},
        {"alpha_ff3_pct", &FundMonthRecord::alpha_ff3, 100.0},
        {"alpha_ff4_pct", &FundMonthRecord::alpha_ff4, 100.0},
    };
    std::vector<SummaryRow> out;
    std::vector<double> vals;
    for (const auto& spec : kVars) {
        vals.clear();
        for (const auto& r : panel.rows) {
            double v = r.*spec.member;
            if (std::isfinite(v)) vals.push_back(v * spec.scale);
        }
        SummaryRow row;
        row.name = spec.name;
        row.n = static_cast<long>(vals.size());
        if (vals.empty()) {
            row.mean = row.median = row.sd = row.p25 = row.p75 = kNaN;
        } else {
            row.mean = mean_of(vals);
            row.median = nearest_rank_percentile(vals, 50.0);
            row.sd = sample_sd(vals);
            row.p25 = nearest_rank_percentile(vals, 25.0);
            row.p75 = nearest_rank_percentile(vals, 75.0);
        }
        out.push_back(std::move(row));
    }
    return out;
}

RegressionFit run_eq4(const PanelDataset& panel, const PanelOptions& opts) {
    return flow_lag_regression(panel, &FundMonthRecord::dcash_level_6m, opts.eq45_flow_lags);
}

RegressionFit run_eq5(const PanelDataset& panel, const PanelOptions& opts) {
    return flow_lag_regression(panel, &FundMonthRecord::dcash_prop_6m, opts.eq45_flow_lags);
}

RegressionFit run_eq6(const PanelDataset& panel, const PanelOptions& opts) {
    return flow_lag_regression(panel, &FundMonthRecord::dilliq_3m, opts.eq6_flow_lags);
}

RegressionFit run_eq7(const PanelDataset& panel, const PanelOptions&) {
    const auto& rows = panel.rows;
    const auto n = static_cast<Eigen::Index>(rows.size());
    PanelIndex ix = index_panel(panel);

    // Standardize lagged illiquidity over exactly the estimation sample: mask
    // it wherever another regression variable is missing, then let listwise
    // deletion keep precisely the rows the z-score was fit on.
    std::vector<double> zsrc(rows.size(), kNaN);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (std::isfinite(r.dcash_level_6m) && std::isfinite(r.flow_q0) &&
            std::isfinite(r.flow_q1) && std::isfinite(r.illiq_lag6))
            zsrc[i] = r.illiq_lag6;
    }
    std::vector<double> z = standardize(zsrc);

    Eigen::VectorXd y(n);
    Eigen::MatrixXd X(n, 5);
    const std::vector<std::string> names = {"flow_q0", "flow_q0_x_illiq_z", "flow_q1",
                                            "flow_q1_x_illiq_z", "illiq_z_lag6"};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        double zi = z[static_cast<std::size_t>(i)];
        y(i) = r.dcash_level_6m;
        X(i, 0) = r.flow_q0;
        X(i, 1) = r.flow_q0 * zi;
        X(i, 2) = r.flow_q1;
        X(i, 3) = r.flow_q1 * zi;
        X(i, 4) = zi;
    }
    return two_way_fe(y, X, names, ix);
}

const std::vector<Metric> kAllMetrics = {
    Metric::ret_gross, Metric::alpha_capm_gross, Metric::alpha_ff3_gross,
    Metric::alpha_ff4_gross, Metric::ret_net, Metric::alpha_capm_net,
    Metric::alpha_ff3_net, Metric::alpha_ff4_net,
};

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::ret_gross: return "ret_gross";
        case Metric::alpha_capm_gross: return "alpha_capm_gross";
        case Metric::alpha_ff3_gross: return "alpha_ff3_gross";
        case Metric::alpha_ff4_gross: return "alpha_ff4_gross";
        case Metric::ret_net: return "ret_net";
        case Metric::alpha_capm_net: return "alpha_capm_net";
        case Metric::alpha_ff3_net: return "alpha_ff3_net";
        case Metric::alpha_ff4_net: return "alpha_ff4_net";
    }
    throw std::logic_error("metric_name: unknown metric");
}

double metric_value(const FundMonthRecord& r, Metric m) {
    switch (m) {
        case Metric::ret_gross: return r.ret_gross;
        case Metric::alpha_capm_gross: return r.alpha_capm_gross;
        case Metric::alpha_ff3_gross: return r.alpha_ff3_gross;
        case Metric::alpha_ff4_gross: return r.alpha_ff4_gross;
        case Metric::ret_net: return r.ret_net;
        case Metric::alpha_capm_net: return r.alpha_capm;
        case Metric::alpha_ff3_net: return r.alpha_ff3;
        case Metric::alpha_ff4_net: return r.alpha_ff4;
    }
    throw std::logic_error("metric_value: unknown metric");
}

SortTable quintile_sort(const PanelDataset& panel, int min_funds) {
    if (min_funds < 5)
        throw std::invalid_argument("quintile_sort: need at least 5 eligible funds per month");
    const auto& rows = panel.rows;
    const std::size_t n_metrics = kAllMetrics.size();

    std::map<std::pair<std::string, int>, std::size_t> row_at;
    std::map<int, std::vector<std::size_t>> by_month;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        row_at[{rows[i].fund_id, rows[i].month}] = i;
        by_month[rows[i].month].push_back(i);
    }

    // Per used month: quintile signal means and next-month metric means.
    struct MonthObs {
        std::array<double, 5> act{};
        std::vector<std::array<double, 5>> met;
    };
    std::vector<MonthObs> obs;
    SortTable table;

    for (const auto& [month, idxs] : by_month) {
        // (signal, current row, next-month row); eligibility needs the signal
        // and the fund's next-month net return.
        std::vector<std::tuple<double, std::size_t, std::size_t>> elig;
        bool any_signal = false;
        for (std::size_t i : idxs) {
            const auto& r = rows[i];
            if (!std::isfinite(r.activeness)) continue;
            any_signal = true;
            auto nx = row_at.find({r.fund_id, month + 1});
            if (nx == row_at.end() || !std::isfinite(rows[nx->second].ret_net)) continue;
            elig.emplace_back(r.activeness, i, nx->second);
        }
        if (elig.size() < static_cast<std::size_t>(min_funds)) {
            if (any_signal) {
                std::ostringstream msg;
                msg << "month " << format_month(month) << ": " << elig.size()
                    << " eligible funds (fewer than " << min_funds << "), skipped";
                table.warnings.push_back(msg.str());
            }
            continue;
        }
        std::sort(elig.begin(), elig.end(), [&](const auto& a, const auto& b) {
            double sa = std::get<0>(a), sb = std::get<0>(b);
            if (sa != sb) return sa < sb;
            return rows[std::get<1>(a)].fund_id < rows[std::get<1>(b)].fund_id;
        });

        const std::size_t ne = elig.size();
        std::array<double, 5> act_sum{};
        std::array<long, 5> act_n{};
        std::vector<std::array<double, 5>> met_sum(n_metrics, {});
        std::vector<std::array<long, 5>> met_n(n_metrics, {});
        for (std::size_t rank = 0; rank < ne; ++rank) {
            std::size_t q = rank * 5 / ne;
            act_sum[q] += std::get<0>(elig[rank]);
            ++act_n[q];
            const auto& next_row = rows[std::get<2>(elig[rank])];
            for (std::size_t k = 0; k < n_metrics; ++k) {
                double v = metric_value(next_row, kAllMetrics[k]);
                if (!std::isfinite(v)) continue;
                met_sum[k][q] += v;
                ++met_n[k][q];
            }
        }
        MonthObs mo;
        mo.met.resize(n_metrics);
        for (std::size_t q = 0; q < 5; ++q)
            mo.act[q] = act_sum[q] / static_cast<double>(act_n[q]);
        for (std::size_t k = 0; k < n_metrics; ++k)
            for (std::size_t q = 0; q < 5; ++q)
                mo.met[k][q] =
                    met_n[k][q] > 0 ? met_sum[k][q] / static_cast<double>(met_n[k][q]) : kNaN;
        obs.push_back(std::move(mo));
    }

    table.n_months_sorted = static_cast<long>(obs.size());
    for (std::size_t q = 0; q < 5; ++q) {
        double s = 0.0;
        for (const auto& o : obs) s += o.act[q];
        table.mean_activeness[q] = obs.empty() ? kNaN : s / static_cast<double>(obs.size());
    }

    for (std::size_t k = 0; k < n_metrics; ++k) {
        SortTable::MetricRow mr;
        mr.name = metric_name(kAllMetrics[k]);
        // A month enters a metric's average only with all five quintiles
        // populated, so the stored spread equals the mean monthly spread.
        std::vector<double> spread_series;
        std::array<double, 5> sums{};
        long used = 0;
        for (const auto& o : obs) {
            bool full = true;
            for (std::size_t q = 0; q < 5; ++q) full = full && std::isfinite(o.met[k][q]);
            if (!full) continue;
            for (std::size_t q = 0; q < 5; ++q) sums[q] += o.met[k][q];
            spread_series.push_back(o.met[k][4] - o.met[k][0]);
            ++used;
        }
        mr.n_months = used;
        if (used > 0) {
            for (std::size_t q = 0; q < 5; ++q)
                mr.quintile_mean[q] = sums[q] / static_cast<double>(used);
            mr.spread_5_1 = mr.quintile_mean[4] - mr.quintile_mean[0];
        } else {
            mr.quintile_mean.fill(kNaN);
        }
        if (used >= 8) {
            mr.spread_test = nw_mean_test(spread_series);
            mr.t_available = true;
        }
        table.metrics.push_back(std::move(mr));
    }
    return table;
}

std::vector<RegressionFit> run_activeness_performance(const PanelDataset& panel,
                                                      const PanelOptions&,
                                                      bool include_expense_control) {
    const auto& rows = panel.rows;
    const auto n = static_cast<Eigen::Index>(rows.size());
    PanelIndex ix = index_panel(panel);

    std::vector<std::string> names = {"activeness_lag1", "ln_age", "size"};
    if (include_expense_control) names.push_back("expense_ratio");
    names.push_back("turnover");
    const auto k = static_cast<Eigen::Index>(names.size());

    Eigen::MatrixXd X(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        Eigen::Index c = 0;
        X(i, c++) = r.activeness_lag1;
        X(i, c++) = std::isfinite(r.age_months) && r.age_months > 0.0 ? std::log(r.age_months)
                                                                     : kNaN;
        X(i, c++) = r.size;
        if (include_expense_control) X(i, c++) = r.expense_ratio;
        X(i, c++) = r.turnover;
    }

    std::vector<RegressionFit> fits;
    fits.reserve(kAllMetrics.size());
    for (Metric m : kAllMetrics) {
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i)
            y(i) = metric_value(rows[static_cast<std::size_t>(i)], m);
        fits.push_back(two_way_fe(y, X, names, ix));
    }
    return fits;
}

std::string render_panel_csv(const PanelDataset& panel) {
    std::string out =
        "fund_id,month,ret_net,ret_gross,flow,flow_q0,flow_q1,cash_pct,"
        "dcash_level_6m,dcash_prop_6m,illiq_amihud,illiq_ps,illiq,illiq_lag6,"
        "dilliq_3m,activeness,activeness_lag1,alpha_capm,alpha_ff3,alpha_ff4,"
        "alpha_capm_gross,alpha_ff3_gross,alpha_ff4_gross,size,expense_ratio,"
        "turnover,age_months,tna,coverage\n";
    for (const auto& r : panel.rows) {
        out += r.fund_id;
        out += ',';
        out += format_month(r.month);
        for (double v : {r.ret_net, r.ret_gross, r.flow, r.flow_q0, r.flow_q1, r.cash_pct,
                         r.dcash_level_6m, r.dcash_prop_6m, r.illiq_amihud, r.illiq_ps, r.illiq,
                         r.illiq_lag6, r.dilliq_3m, r.activeness, r.activeness_lag1, r.alpha_capm,
                         r.alpha_ff3, r.alpha_ff4, r.alpha_capm_gross, r.alpha_ff3_gross,
                         r.alpha_ff4_gross, r.size, r.expense_ratio, r.turnover, r.age_months,
                         r.tna, r.coverage}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace fundliq
