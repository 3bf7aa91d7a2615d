#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fundliq {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct StockDayBar {
    std::string stock_id;
    int date = 0;      // serial day
    double ret = 0.0;  // fractional daily return
    double dvol = 0.0; // traded volume, INR

    bool operator==(const StockDayBar&) const = default;
};

// The five cash-equivalent categories tracked in holdings files. Holdings
// rows carry them as TNA-fraction weights under these reserved stock_ids;
// the snapshot stores them as percentages of TNA.
inline constexpr std::array<const char*, 5> kCashComponentIds = {
    "CASH_NET", "CD", "TBILL", "CP", "BILLS_REDISC"};

struct HoldingsSnapshot {
    std::string fund_id;
    int month = 0;  // serial month index
    std::vector<std::pair<std::string, double>> positions;  // (stock_id, weight fraction)
    std::array<double, 5> cash_components{};  // percentages of TNA, kCashComponentIds order

    bool operator==(const HoldingsSnapshot&) const = default;
};

struct FundSeriesRow {
    std::string fund_id;
    int month = 0;
    double nav = 0.0;
    double tna = 0.0;
    double expense_ratio = 0.0;  // % per annum
    double turnover = 0.0;       // % per annum
    long age_months = 0;

    bool operator==(const FundSeriesRow&) const = default;
};

struct FactorRow {
    int month = 0;
    double mkt_excess = 0.0;
    double smb = 0.0;
    double hml = 0.0;
    double wml = 0.0;
    double rf = 0.0;

    bool operator==(const FactorRow&) const = default;
};

struct MarketDay {
    int date = 0;
    double mkt_ret = 0.0;

    bool operator==(const MarketDay&) const = default;
};

// Everything the pipeline consumes, post-ingest. Collections are sorted
// canonically (ids, then time) so downstream results do not depend on file
// row order.
struct MarketData {
    std::vector<StockDayBar> stock_bars;
    std::vector<HoldingsSnapshot> holdings;
    std::vector<FundSeriesRow> fund_series;
    std::vector<FactorRow> factors;
    std::vector<MarketDay> market_daily;
};

// ---------------------------------------------------------------------------
// Validation errors
// ---------------------------------------------------------------------------

struct IngestIssue {
    int line = 0;        // offending line (0 when not tied to a single line)
    int other_line = 0;  // second line for duplicate/ordering violations
    std::string message;
};

// Carries the full line-numbered validation report for one file. what()
// renders every issue so CLI users see the whole report at once.
class IngestError : public std::runtime_error {
  public:
    IngestError(std::string path, std::vector<IngestIssue> issues);
    const std::string& path() const { return path_; }
    const std::vector<IngestIssue>& issues() const { return issues_; }

  private:
    std::string path_;
    std::vector<IngestIssue> issues_;
};

// ---------------------------------------------------------------------------
// Ingest operations. Each reads one CSV schema, validates every invariant,
// and throws IngestError listing all violations with line numbers.
// ---------------------------------------------------------------------------

std::vector<StockDayBar> ingest_stock_bars(const std::string& path);
std::vector<HoldingsSnapshot> ingest_holdings(const std::string& path);
std::vector<FundSeriesRow> ingest_fund_series(const std::string& path);
std::vector<FactorRow> ingest_factors(const std::string& path);
std::vector<MarketDay> ingest_market_daily(const std::string& path);

// Keeps funds with at least min_months monthly observations. Funds that
// disappear mid-sample are retained if they meet the threshold (the sample
// is survivorship-bias free). Contiguity is not required.
std::vector<FundSeriesRow> apply_sample_filter(const std::vector<FundSeriesRow>& funds,
                                               long min_months = 36);

// ---------------------------------------------------------------------------
// Writers (exact input schemas; used by the generator and round-trip tests)
// ---------------------------------------------------------------------------

std::string render_stock_bars_csv(const std::vector<StockDayBar>& bars);
std::string render_holdings_csv(const std::vector<HoldingsSnapshot>& holdings);
std::string render_fund_series_csv(const std::vector<FundSeriesRow>& rows);
std::string render_factors_csv(const std::vector<FactorRow>& rows);
std::string render_market_daily_csv(const std::vector<MarketDay>& days);

}  // namespace fundliq
