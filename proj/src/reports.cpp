#include "fundliq/reports.hpp"

#include <json.hpp>
#include <set>
#include <utility>

#include "fundliq/csv.hpp"

namespace fundliq {

namespace {

using nlohmann::json;

json sample_block(const PanelDataset& panel) {
    std::set<std::string> funds;
    std::set<int> months;
    for (const auto& r : panel.rows) {
        funds.insert(r.fund_id);
        months.insert(r.month);
    }
    return json{{"n_rows", panel.rows.size()},
                {"n_funds", funds.size()},
                {"n_months", months.size()}};
}

json base_sidecar(const PanelDataset& panel) {
    json j;
    j["config_digest"] = panel.config_digest;
    j["input_digests"] = panel.input_digests;
    j["sample"] = sample_block(panel);
    return j;
}

json fit_block(const std::string& column, const RegressionFit& fit) {
    return json{{"column", column},
                {"n_obs", fit.n_obs},
                {"r2_adj", fit.r2_adj},
                {"n_clusters", fit.n_clusters}};
}

// Tidy rows for one fit; `scale` multiplies coef/se/CI (t and p invariant).
void append_fit_rows(std::string& out, const std::string& column, const RegressionFit& fit,
                     double scale) {
    for (Eigen::Index i = 0; i < fit.coef.size(); ++i) {
        auto [lo, hi] = fit.conf_int(i);
        out += column;
        out += ',';
        out += fit.names[static_cast<std::size_t>(i)];
        for (double v : {fit.coef(i) * scale, fit.se(i) * scale, fit.tstat(i), fit.pvalue(i),
                         lo * scale, hi * scale}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
}

constexpr const char* kTidyHeader = "column,term,coef,se,t_stat,p_value,ci_lo,ci_hi\n";

}  // namespace

ReportBundle build_reports(const PanelDataset& panel, const PanelOptions& opts) {
    ReportBundle bundle;

    {
        std::string csv = "variable,mean,median,sd,p25,p75,n\n";
        auto stats = summary_stats(panel);
        for (const auto& s : stats) {
            csv += s.name;
            for (double v : {s.mean, s.median, s.sd, s.p25, s.p75}) {
                csv += ',';
                csv += format_double(v);
            }
            csv += ',';
            csv += std::to_string(s.n);
            csv += '\n';
        }
        json meta = base_sidecar(panel);
        meta["n_variables"] = stats.size();
        bundle.files.push_back({"table1.csv", std::move(csv), meta.dump(2) + "\n"});
    }

    {
        std::string csv = kTidyHeader;
        RegressionFit eq4 = run_eq4(panel, opts);
        RegressionFit eq5 = run_eq5(panel, opts);
        RegressionFit eq6 = run_eq6(panel, opts);
        append_fit_rows(csv, "dcash_level_6m", eq4, 1.0);
        append_fit_rows(csv, "dcash_prop_6m", eq5, 1.0);
        append_fit_rows(csv, "dilliq_3m", eq6, 1.0);
        json meta = base_sidecar(panel);
        meta["fits"] = json::array({fit_block("dcash_level_6m", eq4),
                                    fit_block("dcash_prop_6m", eq5),
                                    fit_block("dilliq_3m", eq6)});
        bundle.files.push_back({"table2_panelA.csv", std::move(csv), meta.dump(2) + "\n"});
    }

    {
        std::string csv = kTidyHeader;
        RegressionFit eq7 = run_eq7(panel, opts);
        append_fit_rows(csv, "dcash_level_6m", eq7, 1.0);
        json meta = base_sidecar(panel);
        meta["fits"] = json::array({fit_block("dcash_level_6m", eq7)});
        bundle.files.push_back({"table2_panelB.csv", std::move(csv), meta.dump(2) + "\n"});
    }

    {
        SortTable sorts = quintile_sort(panel);
        std::string csv = "metric,q1,q2,q3,q4,q5,spread_5_1,nw_t,n_months\n";
        csv += "activeness";
        for (double v : sorts.mean_activeness) {
            csv += ',';
            csv += format_double(v);
        }
        csv += ',';
        csv += format_double(sorts.mean_activeness[4] - sorts.mean_activeness[0]);
        csv += ",nan,";
        csv += std::to_string(sorts.n_months_sorted);
        csv += '\n';
        // Performance metrics in percent per month; the signal row stays raw.
        for (const auto& mr : sorts.metrics) {
            csv += mr.name;
            for (double v : mr.quintile_mean) {
                csv += ',';
                csv += format_double(v * 100.0);
            }
            csv += ',';
            csv += format_double(mr.spread_5_1 * 100.0);
            csv += ',';
            csv += format_double(mr.t_available ? mr.spread_test.t_stat
                                                : std::numeric_limits<double>::quiet_NaN());
            csv += ',';
            csv += std::to_string(mr.n_months);
            csv += '\n';
        }
        json meta = base_sidecar(panel);
        meta["n_months_sorted"] = sorts.n_months_sorted;
        meta["warnings"] = sorts.warnings;
        bundle.files.push_back({"table3.csv", std::move(csv), meta.dump(2) + "\n"});
    }

    {
        std::string csv = kTidyHeader;
        auto fits = run_activeness_performance(panel, opts);
        json blocks = json::array();
        for (std::size_t k = 0; k < fits.size(); ++k) {
            std::string column = metric_name(kAllMetrics[k]);
            append_fit_rows(csv, column, fits[k], 100.0);
            blocks.push_back(fit_block(column, fits[k]));
        }
        json meta = base_sidecar(panel);
        meta["fits"] = std::move(blocks);
        bundle.files.push_back({"table4.csv", std::move(csv), meta.dump(2) + "\n"});
    }

    return bundle;
}

}  // namespace fundliq
