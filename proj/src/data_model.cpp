#include "fundliq/data_model.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "fundliq/csv.hpp"
#include "fundliq/dates.hpp"

namespace fundliq {

namespace {

constexpr size_t kMaxIssues = 100;

std::string render_issues(const std::string& path, const std::vector<IngestIssue>& issues) {
    std::ostringstream ss;
    ss << path << ": " << issues.size() << " validation issue(s)";
    if (issues.size() >= kMaxIssues) ss << " (truncated)";
    for (const auto& issue : issues) {
        ss << "\n  ";
        if (issue.line > 0) {
            ss << "line " << issue.line;
            if (issue.other_line > 0) ss << " and line " << issue.other_line;
            ss << ": ";
        }
        ss << issue.message;
    }
    return ss.str();
}

// Accumulates validation issues for one file; the ingest routines scan the
// whole file before throwing so the report covers every violation at once.
struct Collector {
    std::vector<IngestIssue> issues;

    bool full() const { return issues.size() >= kMaxIssues; }

    void add(int line, std::string message, int other_line = 0) {
        if (!full()) issues.push_back({line, other_line, std::move(message)});
    }

    void finish(const std::string& path) const {
        if (!issues.empty()) throw IngestError(path, issues);
    }
};

bool parse_double_field(Collector& report, const CsvReader& reader, std::string_view field,
                        const char* name, double& out) {
    if (!try_parse_double(field, out)) {
        report.add(reader.line(), std::string("malformed ") + name + " value '" +
                                      std::string(field) + "'");
        return false;
    }
    return true;
}

bool parse_long_field(Collector& report, const CsvReader& reader, std::string_view field,
                      const char* name, long& out) {
    if (!try_parse_long(field, out)) {
        report.add(reader.line(), std::string("malformed ") + name + " value '" +
                                      std::string(field) + "'");
        return false;
    }
    return true;
}

bool check_field_count(Collector& report, const CsvReader& reader) {
    if (reader.fields().size() != reader.expected_fields()) {
        report.add(reader.line(), "expected " + std::to_string(reader.expected_fields()) +
                                      " fields, got " + std::to_string(reader.fields().size()));
        return false;
    }
    return true;
}

int cash_component_index(std::string_view id) {
    for (size_t i = 0; i < kCashComponentIds.size(); ++i)
        if (id == kCashComponentIds[i]) return static_cast<int>(i);
    return -1;
}

}  // namespace

IngestError::IngestError(std::string path, std::vector<IngestIssue> issues)
    : std::runtime_error(render_issues(path, issues)),
      path_(std::move(path)),
      issues_(std::move(issues)) {}

// ---------------------------------------------------------------------------
// stock_bars.csv: stock_id,date,ret,dvol
// ---------------------------------------------------------------------------

std::vector<StockDayBar> ingest_stock_bars(const std::string& path) {
    CsvReader reader(path, "stock_id,date,ret,dvol");
    Collector report;
    std::vector<StockDayBar> bars;
    std::map<std::pair<std::string, int>, int> seen;  // (stock, date) -> line
    while (reader.next_row() && !report.full()) {
        if (!check_field_count(report, reader)) continue;
        const auto& f = reader.fields();
        StockDayBar bar;
        bar.stock_id = std::string(f[0]);
        double ret = 0.0, dvol = 0.0;
        int date = 0;
        try {
            date = parse_date(std::string(f[1]));
        } catch (const std::exception& e) {
            report.add(reader.line(), e.what());
            continue;
        }
        if (!parse_double_field(report, reader, f[2], "ret", ret)) continue;
        if (!parse_double_field(report, reader, f[3], "dvol", dvol)) continue;
        bar.date = date;
        bar.ret = ret;
        bar.dvol = dvol;
        if (bar.stock_id.empty()) {
            report.add(reader.line(), "empty stock_id");
            continue;
        }
        if (bar.dvol < 0) {
            report.add(reader.line(), "dvol must be >= 0, got " + format_double(bar.dvol));
            continue;
        }
        if (bar.ret <= -1.0) {
            report.add(reader.line(), "ret must be > -1, got " + format_double(bar.ret));
            continue;
        }
        auto key = std::make_pair(bar.stock_id, bar.date);
        auto [it, inserted] = seen.emplace(key, reader.line());
        if (!inserted) {
            report.add(reader.line(),
                       "duplicate (" + bar.stock_id + ", " + format_date(bar.date) + ")",
                       it->second);
            continue;
        }
        bars.push_back(std::move(bar));
    }
    report.finish(path);
    std::sort(bars.begin(), bars.end(), [](const StockDayBar& a, const StockDayBar& b) {
        return std::tie(a.stock_id, a.date) < std::tie(b.stock_id, b.date);
    });
    return bars;
}

// ---------------------------------------------------------------------------
// holdings.csv: fund_id,month,stock_id,weight
// Cash rows use the reserved ids in kCashComponentIds; weights are fractions
// of TNA for both stock and cash rows, and the snapshot keeps cash as
// percentages.
// ---------------------------------------------------------------------------

std::vector<HoldingsSnapshot> ingest_holdings(const std::string& path) {
    CsvReader reader(path, "fund_id,month,stock_id,weight");
    Collector report;
    struct Group {
        HoldingsSnapshot snap;
        int first_line = 0;
        std::map<std::string, int> row_lines;  // stock_id -> line (duplicate detection)
    };
    std::map<std::pair<std::string, int>, Group> groups;
    while (reader.next_row() && !report.full()) {
        if (!check_field_count(report, reader)) continue;
        const auto& f = reader.fields();
        std::string fund_id(f[0]);
        int month = 0;
        try {
            month = parse_month(std::string(f[1]));
        } catch (const std::exception& e) {
            report.add(reader.line(), e.what());
            continue;
        }
        std::string stock_id(f[2]);
        double weight = 0.0;
        if (!parse_double_field(report, reader, f[3], "weight", weight)) continue;
        if (fund_id.empty() || stock_id.empty()) {
            report.add(reader.line(), "empty fund_id or stock_id");
            continue;
        }
        if (weight < 0) {
            report.add(reader.line(), "weight must be >= 0, got " + format_double(weight));
            continue;
        }
        auto& group = groups[{fund_id, month}];
        if (group.first_line == 0) {
            group.first_line = reader.line();
            group.snap.fund_id = fund_id;
            group.snap.month = month;
        }
        auto [it, inserted] = group.row_lines.emplace(stock_id, reader.line());
        if (!inserted) {
            report.add(reader.line(),
                       "duplicate holding (" + fund_id + ", " + format_month(month) + ", " +
                           stock_id + ")",
                       it->second);
            continue;
        }
        int cash_idx = cash_component_index(stock_id);
        if (cash_idx >= 0)
            group.snap.cash_components[static_cast<size_t>(cash_idx)] = weight * 100.0;
        else
            group.snap.positions.emplace_back(stock_id, weight);
    }
    std::vector<HoldingsSnapshot> snapshots;
    snapshots.reserve(groups.size());
    for (auto& [key, group] : groups) {
        double weight_sum = 0.0;
        for (const auto& [id, w] : group.snap.positions) weight_sum += w;
        for (double pct : group.snap.cash_components) weight_sum += pct / 100.0;
        if (weight_sum < 0.95 || weight_sum > 1.05) {
            report.add(group.first_line,
                       "holdings of (" + group.snap.fund_id + ", " +
                           format_month(group.snap.month) + ") sum to " +
                           format_double(weight_sum) + ", outside [0.95, 1.05]");
            continue;
        }
        std::sort(group.snap.positions.begin(), group.snap.positions.end());
        snapshots.push_back(std::move(group.snap));
    }
    report.finish(path);
    // groups map is already (fund_id, month)-ordered.
    return snapshots;
}

// ---------------------------------------------------------------------------
// fund_series.csv: fund_id,month,nav,tna,expense_ratio,turnover,age_months
// ---------------------------------------------------------------------------

std::vector<FundSeriesRow> ingest_fund_series(const std::string& path) {
    CsvReader reader(path, "fund_id,month,nav,tna,expense_ratio,turnover,age_months");
    Collector report;
    std::vector<FundSeriesRow> rows;
    std::vector<int> lines;
    std::map<std::pair<std::string, int>, int> seen;
    while (reader.next_row() && !report.full()) {
        if (!check_field_count(report, reader)) continue;
        const auto& f = reader.fields();
        FundSeriesRow row;
        row.fund_id = std::string(f[0]);
        try {
            row.month = parse_month(std::string(f[1]));
        } catch (const std::exception& e) {
            report.add(reader.line(), e.what());
            continue;
        }
        if (!parse_double_field(report, reader, f[2], "nav", row.nav)) continue;
        if (!parse_double_field(report, reader, f[3], "tna", row.tna)) continue;
        if (!parse_double_field(report, reader, f[4], "expense_ratio", row.expense_ratio))
            continue;
        if (!parse_double_field(report, reader, f[5], "turnover", row.turnover)) continue;
        if (!parse_long_field(report, reader, f[6], "age_months", row.age_months)) continue;
        if (row.fund_id.empty()) {
            report.add(reader.line(), "empty fund_id");
            continue;
        }
        if (row.nav <= 0) {
            report.add(reader.line(), "nav must be > 0, got " + format_double(row.nav));
            continue;
        }
        if (row.tna <= 0) {
            report.add(reader.line(), "tna must be > 0, got " + format_double(row.tna));
            continue;
        }
        if (row.expense_ratio < 0) {
            report.add(reader.line(),
                       "expense_ratio must be >= 0, got " + format_double(row.expense_ratio));
            continue;
        }
        auto key = std::make_pair(row.fund_id, row.month);
        auto [it, inserted] = seen.emplace(key, reader.line());
        if (!inserted) {
            report.add(reader.line(),
                       "duplicate (" + row.fund_id + ", " + format_month(row.month) + ")",
                       it->second);
            continue;
        }
        rows.push_back(std::move(row));
        lines.push_back(reader.line());
    }
    // Age must increase strictly with month within each fund.
    std::vector<size_t> order(rows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::tie(rows[a].fund_id, rows[a].month) <
               std::tie(rows[b].fund_id, rows[b].month);
    });
    for (size_t k = 1; k < order.size(); ++k) {
        const FundSeriesRow& prev = rows[order[k - 1]];
        const FundSeriesRow& cur = rows[order[k]];
        if (cur.fund_id == prev.fund_id && cur.age_months <= prev.age_months) {
            report.add(lines[order[k]],
                       "age_months not increasing for " + cur.fund_id + " between " +
                           format_month(prev.month) + " (" + std::to_string(prev.age_months) +
                           ") and " + format_month(cur.month) + " (" +
                           std::to_string(cur.age_months) + ")",
                       lines[order[k - 1]]);
        }
    }
    report.finish(path);
    std::sort(rows.begin(), rows.end(), [](const FundSeriesRow& a, const FundSeriesRow& b) {
        return std::tie(a.fund_id, a.month) < std::tie(b.fund_id, b.month);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// factors.csv: month,mkt_excess,smb,hml,wml,rf
// ---------------------------------------------------------------------------

std::vector<FactorRow> ingest_factors(const std::string& path) {
    CsvReader reader(path, "month,mkt_excess,smb,hml,wml,rf");
    Collector report;
    std::vector<FactorRow> rows;
    std::map<int, int> seen;
    while (reader.next_row() && !report.full()) {
        if (!check_field_count(report, reader)) continue;
        const auto& f = reader.fields();
        FactorRow row;
        try {
            row.month = parse_month(std::string(f[0]));
        } catch (const std::exception& e) {
            report.add(reader.line(), e.what());
            continue;
        }
        if (!parse_double_field(report, reader, f[1], "mkt_excess", row.mkt_excess)) continue;
        if (!parse_double_field(report, reader, f[2], "smb", row.smb)) continue;
        if (!parse_double_field(report, reader, f[3], "hml", row.hml)) continue;
        if (!parse_double_field(report, reader, f[4], "wml", row.wml)) continue;
        if (!parse_double_field(report, reader, f[5], "rf", row.rf)) continue;
        auto [it, inserted] = seen.emplace(row.month, reader.line());
        if (!inserted) {
            report.add(reader.line(), "duplicate month " + format_month(row.month), it->second);
            continue;
        }
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const FactorRow& a, const FactorRow& b) { return a.month < b.month; });
    for (size_t k = 1; k < rows.size(); ++k) {
        int prev = rows[k - 1].month;
        int cur = rows[k].month;
        if (cur > prev + 1) {
            std::string range = format_month(prev + 1);
            if (cur > prev + 2) range += ".." + format_month(cur - 1);
            report.add(0, "gap in months: missing " + range);
        }
    }
    report.finish(path);
    return rows;
}

// ---------------------------------------------------------------------------
// market_daily.csv: date,mkt_ret
// Contiguity over Mon-Fri trading days; weekend gaps are expected.
// ---------------------------------------------------------------------------

std::vector<MarketDay> ingest_market_daily(const std::string& path) {
    CsvReader reader(path, "date,mkt_ret");
    Collector report;
    std::vector<MarketDay> days;
    std::map<int, int> seen;
    while (reader.next_row() && !report.full()) {
        if (!check_field_count(report, reader)) continue;
        const auto& f = reader.fields();
        MarketDay day;
        try {
            day.date = parse_date(std::string(f[0]));
        } catch (const std::exception& e) {
            report.add(reader.line(), e.what());
            continue;
        }
        if (!parse_double_field(report, reader, f[1], "mkt_ret", day.mkt_ret)) continue;
        if (!is_weekday(day.date)) {
            report.add(reader.line(), "date " + format_date(day.date) + " is not a weekday");
            continue;
        }
        auto [it, inserted] = seen.emplace(day.date, reader.line());
        if (!inserted) {
            report.add(reader.line(), "duplicate date " + format_date(day.date), it->second);
            continue;
        }
        days.push_back(day);
    }
    std::sort(days.begin(), days.end(),
              [](const MarketDay& a, const MarketDay& b) { return a.date < b.date; });
    for (size_t k = 1; k < days.size(); ++k) {
        int d = days[k - 1].date + 1;
        while (d < days[k].date && !is_weekday(d)) ++d;
        if (d < days[k].date) {
            // Find the last missing weekday before the next present day.
            int last = days[k].date - 1;
            while (!is_weekday(last)) --last;
            std::string range = format_date(d);
            if (last > d) range += ".." + format_date(last);
            report.add(0, "gap in trading days: missing " + range);
        }
    }
    report.finish(path);
    return days;
}

// ---------------------------------------------------------------------------

std::vector<FundSeriesRow> apply_sample_filter(const std::vector<FundSeriesRow>& funds,
                                               long min_months) {
    if (min_months < 1) throw std::invalid_argument("min_months must be >= 1");
    std::map<std::string, long> counts;
    for (const auto& row : funds) ++counts[row.fund_id];
    std::vector<FundSeriesRow> kept;
    kept.reserve(funds.size());
    for (const auto& row : funds)
        if (counts[row.fund_id] >= min_months) kept.push_back(row);
    return kept;
}

// ---------------------------------------------------------------------------
// Renderers
// ---------------------------------------------------------------------------

std::string render_stock_bars_csv(const std::vector<StockDayBar>& bars) {
    std::string out = "stock_id,date,ret,dvol\n";
    for (const auto& bar : bars) {
        out += bar.stock_id;
        out += ',';
        out += format_date(bar.date);
        out += ',';
        out += format_double(bar.ret);
        out += ',';
        out += format_double(bar.dvol);
        out += '\n';
    }
    return out;
}

std::string render_holdings_csv(const std::vector<HoldingsSnapshot>& holdings) {
    std::string out = "fund_id,month,stock_id,weight\n";
    for (const auto& snap : holdings) {
        std::string prefix = snap.fund_id + ',' + format_month(snap.month) + ',';
        for (const auto& [stock_id, weight] : snap.positions)
            out += prefix + stock_id + ',' + format_double(weight) + '\n';
        for (size_t i = 0; i < kCashComponentIds.size(); ++i)
            if (snap.cash_components[i] != 0.0)
                out += prefix + kCashComponentIds[i] + ',' +
                       format_double(snap.cash_components[i] / 100.0) + '\n';
    }
    return out;
}

std::string render_fund_series_csv(const std::vector<FundSeriesRow>& rows) {
    std::string out = "fund_id,month,nav,tna,expense_ratio,turnover,age_months\n";
    for (const auto& row : rows) {
        out += row.fund_id;
        out += ',';
        out += format_month(row.month);
        out += ',';
        out += format_double(row.nav);
        out += ',';
        out += format_double(row.tna);
        out += ',';
        out += format_double(row.expense_ratio);
        out += ',';
        out += format_double(row.turnover);
        out += ',';
        out += std::to_string(row.age_months);
        out += '\n';
    }
    return out;
}

std::string render_factors_csv(const std::vector<FactorRow>& rows) {
    std::string out = "month,mkt_excess,smb,hml,wml,rf\n";
    for (const auto& row : rows) {
        out += format_month(row.month);
        out += ',';
        out += format_double(row.mkt_excess);
        out += ',';
        out += format_double(row.smb);
        out += ',';
        out += format_double(row.hml);
        out += ',';
        out += format_double(row.wml);
        out += ',';
        out += format_double(row.rf);
        out += '\n';
    }
    return out;
}

std::string render_market_daily_csv(const std::vector<MarketDay>& days) {
    std::string out = "date,mkt_ret\n";
    for (const auto& day : days) {
        out += format_date(day.date);
        out += ',';
        out += format_double(day.mkt_ret);
        out += '\n';
    }
    return out;
}

}  // namespace fundliq
