#include "fundliq/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <set>
#include <stdexcept>

#include "fundliq/csv.hpp"
#include "fundliq/dates.hpp"
#include "fundliq/flows.hpp"
#include "fundliq/liquidity.hpp"
#include "fundliq/panel.hpp"
#include "fundliq/parallel.hpp"
#include "fundliq/rng.hpp"

using nlohmann::json;

namespace fundliq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags; part of the determinism contract.
constexpr uint64_t kTagMarket = 1;
constexpr uint64_t kTagFactors = 2;
constexpr uint64_t kTagStock = 3;
constexpr uint64_t kTagFund = 4;
constexpr uint64_t kTagFlows = 5;

enum class Mode { default_calibration, eq4_kernel, eq7_quarterly, eq5_share, null_universe };

Mode parse_mode(const std::string& name) {
    if (name == "default_calibration") return Mode::default_calibration;
    if (name == "eq4_kernel") return Mode::eq4_kernel;
    if (name == "eq7_quarterly") return Mode::eq7_quarterly;
    if (name == "eq5_share") return Mode::eq5_share;
    if (name == "null_universe") return Mode::null_universe;
    throw std::invalid_argument(
        "universe config: unknown plant_mode '" + name +
        "' (expected default_calibration, eq4_kernel, eq7_quarterly, eq5_share, "
        "null_universe)");
}

std::string padded_id(char prefix, int index1, size_t width) {
    std::string digits = std::to_string(index1);
    std::string out(1, prefix);
    if (digits.size() < width) out.append(width - digits.size(), '0');
    out += digits;
    return out;
}

// Fractions of the cash bucket assigned to the five component lines.
constexpr std::array<double, 5> kCashSplit = {0.55, 0.15, 0.20, 0.07, 0.03};

struct Calendar {
    std::vector<int> month_index;            // serial month per panel slot
    std::vector<int> all_days;               // weekday serials, month-major
    std::vector<std::pair<size_t, size_t>> month_day_range;  // [begin, end) into all_days
};

Calendar make_calendar(const UniverseConfig& c) {
    Calendar cal;
    int m0 = c.start_year * 12 + (c.start_month_of_year - 1);
    for (int j = 0; j < c.n_months; ++j) {
        int m = m0 + j;
        cal.month_index.push_back(m);
        int year = m / 12, month = m % 12 + 1;
        int first = days_from_civil(year, month, 1);
        int next = (month == 12) ? days_from_civil(year + 1, 1, 1)
                                 : days_from_civil(year, month + 1, 1);
        size_t begin = cal.all_days.size();
        for (int d = first; d < next; ++d)
            if (is_weekday(d)) cal.all_days.push_back(d);
        cal.month_day_range.emplace_back(begin, cal.all_days.size());
    }
    return cal;
}

double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double mean_at(const std::vector<double>& lambda_hat_flat, const std::vector<int>& side,
               size_t n_months, size_t j) {
    double sum = 0.0;
    for (int s : side) sum += lambda_hat_flat[static_cast<size_t>(s) * n_months + j];
    return sum / static_cast<double>(side.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

void UniverseConfig::validate() const {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument("universe config: " + msg);
    };
    parse_mode(plant_mode);
    if (n_stocks < 8 || n_stocks > 999) fail("n_stocks must be in [8, 999]");
    if (n_funds < 1 || n_funds > 9999) fail("n_funds must be in [1, 9999]");
    if (n_months < 1 || n_months > 1200) fail("n_months must be in [1, 1200]");
    if (start_month_of_year < 1 || start_month_of_year > 12)
        fail("start_month_of_year must be in [1, 12]");
    if (start_year < 1970 || start_year > 2400) fail("start_year must be in [1970, 2400]");
    if (!(lambda_min > 0.0) || !(lambda_max > lambda_min))
        fail("stock lambda grid requires 0 < lambda_min < lambda_max");
    for (auto [v, name] : {std::pair<double, const char*>{dvol_log_sd, "dvol_log_sd"},
                           {stock_idio_sd, "stock_idio_sd"},
                           {market_daily_sd, "market_daily_sd"},
                           {mkt_excess_sd, "mkt_excess_sd"},
                           {factor_sd, "factor_sd"},
                           {fund_idio_sd, "fund_idio_sd"},
                           {illiq_log_sd, "illiq_log_sd"},
                           {cash_share_log_sd, "cash_share_log_sd"},
                           {cash_noise_sd, "cash_noise_sd"},
                           {cash_core_noise, "cash_core_noise"},
                           {expense_noise_sd, "expense_noise_sd"},
                           {turnover_sd, "turnover_sd"},
                           {tna0_log_sd, "tna0_log_sd"},
                           {flow_half_width, "flow_half_width"}})
        if (!(v >= 0.0)) fail(std::string(name) + " must be >= 0");
    if (!(zero_volume_prob >= 0.0 && zero_volume_prob <= 0.9))
        fail("zero_volume_prob must be in [0, 0.9]");
    if (!(illiq_mean > 0.0)) fail("illiq_mean must be > 0");
    if (!(act_rel_sd_min > 0.0) || !(act_rel_sd_max >= act_rel_sd_min))
        fail("activeness dispersion requires 0 < act_rel_sd_min <= act_rel_sd_max");
    if (!(beta_min <= beta_max)) fail("beta_min must be <= beta_max");
    if (!(factor_load_range >= 0.0)) fail("factor_load_range must be >= 0");
    if (!(cash_base_share > 0.0)) fail("cash_base_share must be > 0");
    if (!(cash_floor_frac >= 0.0) || !(cash_cap_frac > cash_floor_frac) || cash_cap_frac > 1.0)
        fail("cash bounds require 0 <= cash_floor_frac < cash_cap_frac <= 1");
    if (!(expense_floor >= 0.0)) fail("expense_floor must be >= 0");
    if (!(turnover_floor >= 0.0)) fail("turnover_floor must be >= 0");
    if (age_base_min < 0 || age_base_max < age_base_min)
        fail("age base range requires 0 <= age_base_min <= age_base_max");
    if (!(tna0_median > 0.0)) fail("tna0_median must be > 0");
    if (!(nav0 > 0.0)) fail("nav0 must be > 0");
    if (!(winsor_lower > 0.0 && winsor_lower < winsor_upper && winsor_upper < 100.0))
        fail("winsor percentiles require 0 < lower < upper < 100");
    if (activeness_window < 2) fail("activeness_window must be >= 2");
    if (activeness_min_obs < 2) fail("activeness_min_obs must be >= 2");
    if (!(winsor_compensation > 0.0)) fail("winsor_compensation must be > 0");
    if (!(premium_compensation > 0.0)) fail("premium_compensation must be > 0");
}

namespace {

json config_to_json(const UniverseConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["n_stocks"] = c.n_stocks;
    j["n_funds"] = c.n_funds;
    j["n_months"] = c.n_months;
    j["plant_mode"] = c.plant_mode;
    j["start_year"] = c.start_year;
    j["start_month_of_year"] = c.start_month_of_year;
    j["lambda_min"] = c.lambda_min;
    j["lambda_max"] = c.lambda_max;
    j["dvol_log_sd"] = c.dvol_log_sd;
    j["zero_volume_prob"] = c.zero_volume_prob;
    j["stock_mkt_loading"] = c.stock_mkt_loading;
    j["stock_idio_sd"] = c.stock_idio_sd;
    j["market_daily_sd"] = c.market_daily_sd;
    j["illiq_mean"] = c.illiq_mean;
    j["illiq_log_sd"] = c.illiq_log_sd;
    j["act_rel_sd_min"] = c.act_rel_sd_min;
    j["act_rel_sd_max"] = c.act_rel_sd_max;
    j["dilliq_dips"] = c.dilliq_dips;
    j["dips_enabled"] = c.dips_enabled;
    j["flow_mean"] = c.flow_mean;
    j["flow_half_width"] = c.flow_half_width;
    j["rf_monthly"] = c.rf_monthly;
    j["mkt_excess_mean"] = c.mkt_excess_mean;
    j["mkt_excess_sd"] = c.mkt_excess_sd;
    j["factor_sd"] = c.factor_sd;
    j["beta_min"] = c.beta_min;
    j["beta_max"] = c.beta_max;
    j["factor_load_range"] = c.factor_load_range;
    j["fund_idio_sd"] = c.fund_idio_sd;
    j["activeness_premium"] = c.activeness_premium;
    j["premium_compensation"] = c.premium_compensation;
    j["flow_to_cash_kernel"] = c.flow_to_cash_kernel;
    j["flow_to_cash_prop_kernel"] = c.flow_to_cash_prop_kernel;
    j["flow_illiq_coefs"] = c.flow_illiq_coefs;
    j["winsor_compensation"] = c.winsor_compensation;
    j["cash_base_share"] = c.cash_base_share;
    j["cash_share_log_sd"] = c.cash_share_log_sd;
    j["cash_noise_sd"] = c.cash_noise_sd;
    j["cash_core_noise"] = c.cash_core_noise;
    j["cash_floor_frac"] = c.cash_floor_frac;
    j["cash_cap_frac"] = c.cash_cap_frac;
    j["expense_base"] = c.expense_base;
    j["expense_per_illiq"] = c.expense_per_illiq;
    j["expense_per_act"] = c.expense_per_act;
    j["expense_noise_sd"] = c.expense_noise_sd;
    j["expense_floor"] = c.expense_floor;
    j["turnover_mean"] = c.turnover_mean;
    j["turnover_sd"] = c.turnover_sd;
    j["turnover_floor"] = c.turnover_floor;
    j["age_base_min"] = c.age_base_min;
    j["age_base_max"] = c.age_base_max;
    j["tna0_median"] = c.tna0_median;
    j["tna0_log_sd"] = c.tna0_log_sd;
    j["nav0"] = c.nav0;
    j["winsor_lower"] = c.winsor_lower;
    j["winsor_upper"] = c.winsor_upper;
    j["activeness_window"] = c.activeness_window;
    j["activeness_min_obs"] = c.activeness_min_obs;
    return j;
}

UniverseConfig config_from_json_object(const json& j) {
    UniverseConfig c;
    j.at("seed").get_to(c.seed);
    j.at("n_stocks").get_to(c.n_stocks);
    j.at("n_funds").get_to(c.n_funds);
    j.at("n_months").get_to(c.n_months);
    j.at("plant_mode").get_to(c.plant_mode);
    j.at("start_year").get_to(c.start_year);
    j.at("start_month_of_year").get_to(c.start_month_of_year);
    j.at("lambda_min").get_to(c.lambda_min);
    j.at("lambda_max").get_to(c.lambda_max);
    j.at("dvol_log_sd").get_to(c.dvol_log_sd);
    j.at("zero_volume_prob").get_to(c.zero_volume_prob);
    j.at("stock_mkt_loading").get_to(c.stock_mkt_loading);
    j.at("stock_idio_sd").get_to(c.stock_idio_sd);
    j.at("market_daily_sd").get_to(c.market_daily_sd);
    j.at("illiq_mean").get_to(c.illiq_mean);
    j.at("illiq_log_sd").get_to(c.illiq_log_sd);
    j.at("act_rel_sd_min").get_to(c.act_rel_sd_min);
    j.at("act_rel_sd_max").get_to(c.act_rel_sd_max);
    j.at("dilliq_dips").get_to(c.dilliq_dips);
    j.at("dips_enabled").get_to(c.dips_enabled);
    j.at("flow_mean").get_to(c.flow_mean);
    j.at("flow_half_width").get_to(c.flow_half_width);
    j.at("rf_monthly").get_to(c.rf_monthly);
    j.at("mkt_excess_mean").get_to(c.mkt_excess_mean);
    j.at("mkt_excess_sd").get_to(c.mkt_excess_sd);
    j.at("factor_sd").get_to(c.factor_sd);
    j.at("beta_min").get_to(c.beta_min);
    j.at("beta_max").get_to(c.beta_max);
    j.at("factor_load_range").get_to(c.factor_load_range);
    j.at("fund_idio_sd").get_to(c.fund_idio_sd);
    j.at("activeness_premium").get_to(c.activeness_premium);
    j.at("premium_compensation").get_to(c.premium_compensation);
    j.at("flow_to_cash_kernel").get_to(c.flow_to_cash_kernel);
    j.at("flow_to_cash_prop_kernel").get_to(c.flow_to_cash_prop_kernel);
    j.at("flow_illiq_coefs").get_to(c.flow_illiq_coefs);
    j.at("winsor_compensation").get_to(c.winsor_compensation);
    j.at("cash_base_share").get_to(c.cash_base_share);
    j.at("cash_share_log_sd").get_to(c.cash_share_log_sd);
    j.at("cash_noise_sd").get_to(c.cash_noise_sd);
    j.at("cash_core_noise").get_to(c.cash_core_noise);
    j.at("cash_floor_frac").get_to(c.cash_floor_frac);
    j.at("cash_cap_frac").get_to(c.cash_cap_frac);
    j.at("expense_base").get_to(c.expense_base);
    j.at("expense_per_illiq").get_to(c.expense_per_illiq);
    j.at("expense_per_act").get_to(c.expense_per_act);
    j.at("expense_noise_sd").get_to(c.expense_noise_sd);
    j.at("expense_floor").get_to(c.expense_floor);
    j.at("turnover_mean").get_to(c.turnover_mean);
    j.at("turnover_sd").get_to(c.turnover_sd);
    j.at("turnover_floor").get_to(c.turnover_floor);
    j.at("age_base_min").get_to(c.age_base_min);
    j.at("age_base_max").get_to(c.age_base_max);
    j.at("tna0_median").get_to(c.tna0_median);
    j.at("tna0_log_sd").get_to(c.tna0_log_sd);
    j.at("nav0").get_to(c.nav0);
    j.at("winsor_lower").get_to(c.winsor_lower);
    j.at("winsor_upper").get_to(c.winsor_upper);
    j.at("activeness_window").get_to(c.activeness_window);
    j.at("activeness_min_obs").get_to(c.activeness_min_obs);
    return c;
}

}  // namespace

std::string UniverseConfig::to_json() const { return config_to_json(*this).dump(2) + "\n"; }

UniverseConfig UniverseConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("universe config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("universe config: top level must be an object");
    UniverseConfig base = preset_config(j.value("plant_mode", "default_calibration"));
    json merged = config_to_json(base);
    for (const auto& [key, value] : j.items()) {
        if (!merged.contains(key))
            throw std::invalid_argument("universe config: unknown key '" + key + "'");
        merged[key] = value;
    }
    UniverseConfig c;
    try {
        c = config_from_json_object(merged);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("universe config: bad field value: ") + e.what());
    }
    c.validate();
    return c;
}

UniverseConfig preset_config(const std::string& name) {
    UniverseConfig c;  // defaults are the default_calibration preset
    if (name == "default_calibration") return c;

    // Shared recovery baseline: zero-mean flows and market so TNA has no
    // drift, degenerate betas/loadings, tight noise, fixed cash scale. The
    // planted responses are then exactly the regression estimands up to the
    // dependent-column winsorization, which the compensation factors undo.
    auto recovery = [&c]() {
        c.n_funds = 200;
        c.n_months = 60;
        c.flow_mean = 0.0;
        c.rf_monthly = 0.0;
        c.mkt_excess_mean = 0.0;
        c.mkt_excess_sd = 0.006;
        c.factor_sd = 0.006;
        c.beta_min = 1.0;
        c.beta_max = 1.0;
        c.factor_load_range = 0.0;
        c.fund_idio_sd = 0.006;
        c.act_rel_sd_min = 0.12;
        c.act_rel_sd_max = 0.60;
        c.cash_base_share = 0.25;
        c.cash_share_log_sd = 0.0;
        c.cash_core_noise = 0.0;
        c.cash_cap_frac = 0.95;
        c.tna0_log_sd = 0.0;
    };

    if (name == "eq4_kernel") {
        recovery();
        c.plant_mode = "eq4_kernel";
        c.dips_enabled = true;
        c.winsor_compensation = 1.11;
        c.premium_compensation = 1.11;
        return c;
    }
    if (name == "eq7_quarterly") {
        recovery();
        c.plant_mode = "eq7_quarterly";
        c.dips_enabled = false;
        c.activeness_premium = 0.0;
        c.winsor_compensation = 1.11;
        return c;
    }
    if (name == "eq5_share") {
        recovery();
        c.plant_mode = "eq5_share";
        c.dips_enabled = false;
        c.activeness_premium = 0.0;
        c.cash_base_share = 0.12;
        c.winsor_compensation = 1.11;
        return c;
    }
    if (name == "null_universe") {
        recovery();
        c.plant_mode = "null_universe";
        c.n_months = 72;
        c.dips_enabled = false;
        c.activeness_premium = 0.0;
        c.dilliq_dips = {0.0, 0.0, 0.0};
        c.flow_to_cash_kernel = {0, 0, 0, 0, 0, 0};
        c.flow_to_cash_prop_kernel = {0, 0, 0, 0, 0, 0};
        c.flow_illiq_coefs = {0, 0, 0, 0};
        return c;
    }
    throw std::invalid_argument("universe config: unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

struct FundScratch {
    // drawn characteristics
    double lbar = 0, sigma_act = 0, beta = 0, l_smb = 0, l_hml = 0, l_wml = 0;
    double sbar = 0, tna0 = 0;
    long age_base = 0;
    std::vector<double> zeta, idio, eta, nu, turnover_v, flows;
    // liquidity
    std::vector<int> side_a, side_b;
    std::vector<double> a_weight, lhat, act_raw;
    // paths
    std::vector<double> gross, net, nav, tna, expense, flow_rep, q0, q1;
    std::vector<double> cash, cash_share;
};

}  // namespace

SyntheticUniverse generate_universe(const UniverseConfig& config, int workers) {
    config.validate();
    const Mode mode = parse_mode(config.plant_mode);
    const size_t S = static_cast<size_t>(config.n_stocks);
    const size_t F = static_cast<size_t>(config.n_funds);
    const size_t M = static_cast<size_t>(config.n_months);
    const Calendar cal = make_calendar(config);
    const size_t D = cal.all_days.size();
    const long amihud_min_days = LiquidityOptions().min_days;

    // --- market and factors -------------------------------------------------
    std::vector<double> mkt_daily(D);
    {
        Rng rng = Rng::stream(config.seed, kTagMarket, 0);
        for (size_t d = 0; d < D; ++d) rng.normal(0.0, config.market_daily_sd);
        // Draw twice so the series is independent of calendar tweaks upstream
        // of the loop above? No: single pass; regenerate deterministically.
        rng = Rng::stream(config.seed, kTagMarket, 0);
        for (size_t d = 0; d < D; ++d) mkt_daily[d] = rng.normal(0.0, config.market_daily_sd);
    }
    std::vector<FactorRow> factors(M);
    {
        Rng rng = Rng::stream(config.seed, kTagFactors, 0);
        for (size_t j = 0; j < M; ++j) {
            factors[j].month = cal.month_index[j];
            factors[j].mkt_excess = rng.normal(config.mkt_excess_mean, config.mkt_excess_sd);
            factors[j].smb = rng.normal(0.0, config.factor_sd);
            factors[j].hml = rng.normal(0.0, config.factor_sd);
            factors[j].wml = rng.normal(0.0, config.factor_sd);
            factors[j].rf = config.rf_monthly;
        }
    }

    // --- stocks: bars and measured monthly Amihud scores --------------------
    std::vector<double> lambda_grid(S);
    for (size_t s = 0; s < S; ++s) {
        double frac = (S == 1) ? 0.0 : static_cast<double>(s) / static_cast<double>(S - 1);
        lambda_grid[s] = config.lambda_min * std::pow(config.lambda_max / config.lambda_min, frac);
    }
    std::vector<std::vector<StockDayBar>> stock_bars(S);
    std::vector<double> lambda_hat(S * M, kNaN);  // measured score, stock-major
    parallel_for(S, workers, [&](size_t s) {
        // Per-day draw order: idiosyncratic return, zero-volume coin, volume
        // noise. Fixed; part of the determinism contract.
        Rng rng = Rng::stream(config.seed, kTagStock, s);
        std::string id = padded_id('S', static_cast<int>(s) + 1, 3);
        auto& bars = stock_bars[s];
        bars.reserve(D);
        for (size_t d = 0; d < D; ++d) {
            double idio = rng.normal(0.0, config.stock_idio_sd);
            bool zero_vol = rng.u01() < config.zero_volume_prob;
            double noise = std::exp(rng.normal(0.0, config.dvol_log_sd));
            double ret = config.stock_mkt_loading * mkt_daily[d] + idio;
            double dvol = zero_vol ? 0.0 : std::fabs(ret) / (lambda_grid[s] * noise);
            bars.push_back({id, cal.all_days[d], ret, dvol});
        }
        for (size_t j = 0; j < M; ++j) {
            auto [b, e] = cal.month_day_range[j];
            std::vector<StockDayBar> slice(bars.begin() + static_cast<long>(b),
                                           bars.begin() + static_cast<long>(e));
            lambda_hat[s * M + j] = amihud_stock_month(slice, amihud_min_days).illiq_amihud;
        }
    });

    // --- fund characteristics, illiquidity path, activeness -----------------
    std::vector<FundScratch> funds(F);
    const double dip_scale = 1.0 / config.illiq_mean;
    parallel_for(F, workers, [&](size_t i) {
        FundScratch& f = funds[i];
        // Per-fund draw order: base illiquidity, activeness SD, beta, factor
        // loadings (smb, hml, wml), cash share, initial TNA, age base, then
        // monthly blocks of zeta, idio, eta, nu, turnover. Fixed.
        Rng rng = Rng::stream(config.seed, kTagFund, i);
        f.lbar = config.illiq_mean *
                 std::exp(config.illiq_log_sd * rng.normal_trunc(2.5) -
                          0.5 * config.illiq_log_sd * config.illiq_log_sd);
        f.sigma_act = rng.log_uniform(config.act_rel_sd_min, config.act_rel_sd_max);
        f.beta = rng.uniform(config.beta_min, config.beta_max);
        f.l_smb = rng.uniform(-config.factor_load_range, config.factor_load_range);
        f.l_hml = rng.uniform(-config.factor_load_range, config.factor_load_range);
        f.l_wml = rng.uniform(-config.factor_load_range, config.factor_load_range);
        f.sbar = config.cash_base_share *
                 std::exp(config.cash_share_log_sd * rng.normal_trunc(2.5));
        f.tna0 = config.tna0_median * std::exp(config.tna0_log_sd * rng.normal_trunc(2.0));
        f.age_base = config.age_base_min +
                     static_cast<long>(rng.below(
                         static_cast<uint64_t>(config.age_base_max - config.age_base_min + 1)));
        f.zeta.resize(M);
        for (size_t j = 0; j < M; ++j) f.zeta[j] = rng.normal_trunc(2.5);
        f.idio.resize(M);
        for (size_t j = 0; j < M; ++j) f.idio[j] = rng.normal(0.0, config.fund_idio_sd);
        f.eta.resize(M);
        for (size_t j = 0; j < M; ++j) f.eta[j] = rng.normal(0.0, config.expense_noise_sd);
        f.nu.resize(M);
        for (size_t j = 0; j < M; ++j) f.nu[j] = rng.normal_trunc(2.5);
        f.turnover_v.resize(M);
        for (size_t j = 0; j < M; ++j)
            f.turnover_v[j] =
                std::max(config.turnover_floor, rng.normal(config.turnover_mean, config.turnover_sd));

        Rng flow_rng = Rng::stream(config.seed, kTagFlows, i);
        f.flows.assign(M, kNaN);
        for (size_t j = 1; j < M; ++j)
            f.flows[j] = flow_rng.uniform(config.flow_mean - config.flow_half_width,
                                          config.flow_mean + config.flow_half_width);

        // Liquid and illiquid sleeves: four stocks nearest lbar/6 and 6*lbar
        // on the lambda grid. The monthly mix weight is solved against the
        // measured scores so the pipeline's holdings-weighted illiquidity
        // lands exactly on the planted path.
        std::vector<size_t> order(S);
        for (size_t s = 0; s < S; ++s) order[s] = s;
        auto pick = [&](double anchor, const std::set<size_t>& used) {
            std::vector<size_t> cand;
            for (size_t s : order)
                if (!used.count(s)) cand.push_back(s);
            std::sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
                double da = std::fabs(std::log(lambda_grid[a] / anchor));
                double db = std::fabs(std::log(lambda_grid[b] / anchor));
                if (da != db) return da < db;
                return a < b;
            });
            cand.resize(std::min<size_t>(4, cand.size()));
            std::vector<int> out(cand.begin(), cand.end());
            std::sort(out.begin(), out.end());
            return out;
        };
        f.side_a = pick(f.lbar / 6.0, {});
        f.side_b = pick(6.0 * f.lbar, std::set<size_t>(f.side_a.begin(), f.side_a.end()));

        f.a_weight.resize(M);
        f.lhat.resize(M);
        for (size_t j = 0; j < M; ++j) {
            double dip = 1.0;
            if (config.dips_enabled) {
                for (size_t k = 0; k < config.dilliq_dips.size(); ++k) {
                    if (j >= k + 1 && std::isfinite(f.flows[j - k]))
                        dip += config.dilliq_dips[k] * dip_scale * f.flows[j - k];
                }
            }
            double target = f.lbar *
                            std::exp(f.sigma_act * f.zeta[j] - 0.5 * f.sigma_act * f.sigma_act) *
                            dip;
            double a_mean = mean_at(lambda_hat, f.side_a, M, j);
            double b_mean = mean_at(lambda_hat, f.side_b, M, j);
            double a = 0.5;
            if (std::isfinite(a_mean) && std::isfinite(b_mean) && b_mean > a_mean)
                a = clampd((b_mean - target) / (b_mean - a_mean), 0.02, 0.98);
            f.a_weight[j] = a;
            f.lhat[j] = a * a_mean + (1.0 - a) * b_mean;
        }
        f.act_raw = liquidity_activeness(f.lhat, config.activeness_window,
                                         config.activeness_min_obs);
    });

    // --- pooled winsorization replicas (illiquidity, activeness) ------------
    auto pool_column = [&](auto&& get) {
        std::vector<double> col(F * M, kNaN);
        for (size_t i = 0; i < F; ++i)
            for (size_t j = 0; j < M; ++j) col[i * M + j] = get(i, j);
        return col;
    };
    std::vector<double> w_illiq =
        winsorize(pool_column([&](size_t i, size_t j) { return funds[i].lhat[j]; }),
                  config.winsor_lower, config.winsor_upper);
    std::vector<double> w_act =
        winsorize(pool_column([&](size_t i, size_t j) { return funds[i].act_raw[j]; }),
                  config.winsor_lower, config.winsor_upper);
    std::vector<double> act_month_mean(M, kNaN);
    for (size_t j = 0; j < M; ++j) {
        double sum = 0.0;
        long n = 0;
        for (size_t i = 0; i < F; ++i) {
            double v = w_act[i * M + j];
            if (std::isfinite(v)) {
                sum += v;
                ++n;
            }
        }
        if (n > 0) act_month_mean[j] = sum / static_cast<double>(n);
    }

    // z replica for the interaction mode: winsorized illiquidity lagged six
    // months, standardized over the rows the estimation keeps (all funds,
    // months 7..M in this complete panel).
    std::vector<double> z_col;
    if (mode == Mode::eq7_quarterly) {
        std::vector<double> zsrc(F * M, kNaN);
        for (size_t i = 0; i < F; ++i)
            for (size_t j = 6; j < M; ++j) zsrc[i * M + j] = w_illiq[i * M + j - 6];
        z_col = standardize(zsrc);
    }

    // --- returns, NAV/TNA paths, expense, quarterly flow replicas ------------
    const double prem_mech = config.activeness_premium * config.premium_compensation;
    parallel_for(F, workers, [&](size_t i) {
        FundScratch& f = funds[i];
        f.gross.assign(M, kNaN);
        f.net.assign(M, kNaN);
        f.nav.assign(M, kNaN);
        f.tna.assign(M, kNaN);
        f.expense.resize(M);
        f.nav[0] = config.nav0;
        f.tna[0] = f.tna0;
        for (size_t j = 0; j < M; ++j) {
            double act_prev = (j >= 1) ? w_act[i * M + j - 1] : kNaN;
            double e = config.expense_base + config.expense_per_illiq * f.lbar +
                       (std::isfinite(act_prev) ? config.expense_per_act * act_prev : 0.0) +
                       config.expense_noise_sd * f.eta[j];
            f.expense[j] = std::max(config.expense_floor, e);
            if (j == 0) continue;
            double prem = 0.0;
            if (prem_mech != 0.0 && std::isfinite(act_prev) &&
                std::isfinite(act_month_mean[j - 1]))
                prem = prem_mech * (act_prev - act_month_mean[j - 1]);
            f.gross[j] = config.rf_monthly + f.beta * factors[j].mkt_excess +
                         f.l_smb * factors[j].smb + f.l_hml * factors[j].hml +
                         f.l_wml * factors[j].wml + prem + f.idio[j];
            f.net[j] = f.gross[j] - f.expense[j] / 1200.0;
            f.nav[j] = f.nav[j - 1] * (1.0 + f.net[j]);
            f.tna[j] = f.tna[j - 1] * (1.0 + f.net[j] + f.flows[j]);
        }
        // Pipeline replicas of the flow columns, via the same functions the
        // panel build calls.
        f.flow_rep.assign(M, kNaN);
        for (size_t j = 1; j < M; ++j)
            f.flow_rep[j] = monthly_flow(f.tna[j], f.tna[j - 1], f.net[j]);
        f.q0.assign(M, kNaN);
        f.q1.assign(M, kNaN);
        for (size_t j = 0; j < M; ++j) {
            f.q0[j] = horizon_flow(f.tna, f.net, j, 3);
            if (j >= 3) f.q1[j] = horizon_flow(f.tna, f.net, j - 3, 3);
        }
    });

    // --- pooled winsorization replicas of the flow regressors ----------------
    std::vector<double> w_flow, w_q0, w_q1;
    if (mode == Mode::eq4_kernel || mode == Mode::eq5_share)
        w_flow = winsorize(pool_column([&](size_t i, size_t j) { return funds[i].flow_rep[j]; }),
                           config.winsor_lower, config.winsor_upper);
    if (mode == Mode::eq7_quarterly) {
        w_q0 = winsorize(pool_column([&](size_t i, size_t j) { return funds[i].q0[j]; }),
                         config.winsor_lower, config.winsor_upper);
        w_q1 = winsorize(pool_column([&](size_t i, size_t j) { return funds[i].q1[j]; }),
                         config.winsor_lower, config.winsor_upper);
    }

    // --- cash paths ----------------------------------------------------------
    const double comp = config.winsor_compensation;
    parallel_for(F, workers, [&](size_t i) {
        FundScratch& f = funds[i];
        f.cash.assign(M, kNaN);
        f.cash_share.assign(M, kNaN);
        auto clamp_cash = [&](double level, size_t j) {
            return clampd(level, config.cash_floor_frac * f.tna[j],
                          config.cash_cap_frac * f.tna[j]);
        };
        if (mode == Mode::eq5_share) {
            // Share recursion: the proportional cash change equals the planted
            // kernel response plus iid noise, exactly.
            for (size_t j = 0; j < M; ++j) {
                if (j < 6) {
                    f.cash_share[j] = f.sbar;
                } else {
                    double inc = config.cash_noise_sd * f.nu[j];
                    for (size_t k = 0; k < 6; ++k) {
                        double wf = w_flow[i * M + j - k];
                        if (std::isfinite(wf))
                            inc += comp * config.flow_to_cash_prop_kernel[k] * wf;
                    }
                    f.cash_share[j] = clampd(f.cash_share[j - 6] + inc, config.cash_floor_frac,
                                             config.cash_cap_frac);
                }
                f.cash[j] = f.cash_share[j] * f.tna[j];
            }
        } else if (mode == Mode::default_calibration) {
            // Level model on raw flows: a base cash demand proportional to
            // assets plus the contemporaneous-and-lagged routed flows.
            for (size_t j = 0; j < M; ++j) {
                double level = f.sbar * f.tna[j] * (1.0 + config.cash_core_noise * f.nu[j]);
                for (size_t k = 0; k < 6; ++k) {
                    if (j < k + 1) break;
                    double fl = f.flow_rep[j - k];
                    if (std::isfinite(fl))
                        level += config.flow_to_cash_kernel[k] * fl * f.tna[j - k - 1];
                }
                f.cash[j] = clamp_cash(level, j);
                f.cash_share[j] = f.cash[j] / f.tna[j];
            }
        } else {
            // Level recursion: the 6-month cash change scaled by lagged TNA
            // equals the planted response plus iid noise, exactly.
            for (size_t j = 0; j < M; ++j) {
                if (j < 6) {
                    f.cash[j] = f.sbar * f.tna[j];
                } else {
                    double inc = config.cash_noise_sd * f.nu[j];
                    if (mode == Mode::eq4_kernel) {
                        for (size_t k = 0; k < 6; ++k) {
                            double wf = w_flow[i * M + j - k];
                            if (std::isfinite(wf))
                                inc += comp * config.flow_to_cash_kernel[k] * wf;
                        }
                    } else if (mode == Mode::eq7_quarterly) {
                        double q0 = w_q0[i * M + j];
                        double q1 = w_q1[i * M + j];
                        double z = z_col[i * M + j];
                        if (std::isfinite(q0) && std::isfinite(q1) && std::isfinite(z)) {
                            inc += comp * (config.flow_illiq_coefs[0] * q0 +
                                           config.flow_illiq_coefs[1] * q0 * z +
                                           config.flow_illiq_coefs[2] * q1 +
                                           config.flow_illiq_coefs[3] * q1 * z);
                        }
                    }
                    f.cash[j] = clamp_cash(f.cash[j - 6] + f.tna[j - 6] * inc, j);
                }
                f.cash_share[j] = f.cash[j] / f.tna[j];
            }
        }
    });

    // --- assemble ------------------------------------------------------------
    SyntheticUniverse out;
    out.data.factors = std::move(factors);
    out.data.market_daily.reserve(D);
    for (size_t d = 0; d < D; ++d)
        out.data.market_daily.push_back({cal.all_days[d], mkt_daily[d]});
    size_t total_bars = 0;
    for (auto& bars : stock_bars) total_bars += bars.size();
    out.data.stock_bars.reserve(total_bars);
    for (auto& bars : stock_bars)
        out.data.stock_bars.insert(out.data.stock_bars.end(), bars.begin(), bars.end());

    out.data.holdings.reserve(F * M);
    out.data.fund_series.reserve(F * M);
    for (size_t i = 0; i < F; ++i) {
        const FundScratch& f = funds[i];
        std::string fund_id = padded_id('F', static_cast<int>(i) + 1, 4);
        for (size_t j = 0; j < M; ++j) {
            HoldingsSnapshot snap;
            snap.fund_id = fund_id;
            snap.month = cal.month_index[j];
            double equity = 1.0 - f.cash_share[j];
            std::vector<int> ids = f.side_a;
            ids.insert(ids.end(), f.side_b.begin(), f.side_b.end());
            std::sort(ids.begin(), ids.end());
            for (int s : ids) {
                bool liquid = std::find(f.side_a.begin(), f.side_a.end(), s) != f.side_a.end();
                double w = (liquid ? f.a_weight[j] : 1.0 - f.a_weight[j]) * equity / 4.0;
                snap.positions.emplace_back(padded_id('S', s + 1, 3), w);
            }
            for (size_t k = 0; k < kCashSplit.size(); ++k)
                snap.cash_components[k] = 100.0 * f.cash_share[j] * kCashSplit[k];
            out.data.holdings.push_back(std::move(snap));

            FundSeriesRow row;
            row.fund_id = fund_id;
            row.month = cal.month_index[j];
            row.nav = f.nav[j];
            row.tna = f.tna[j];
            row.expense_ratio = f.expense[j];
            row.turnover = f.turnover_v[j];
            row.age_months = f.age_base + static_cast<long>(j);
            out.data.fund_series.push_back(std::move(row));
        }
    }

    // --- manifest ------------------------------------------------------------
    const bool premium_on =
        (mode == Mode::eq4_kernel || mode == Mode::default_calibration) &&
        config.activeness_premium != 0.0;
    json planted;
    planted["flow_to_cash_beta"] =
        (mode == Mode::eq4_kernel || mode == Mode::default_calibration)
            ? config.flow_to_cash_kernel[0]
            : 0.0;
    planted["flow_to_cash_kernel"] =
        (mode == Mode::eq4_kernel || mode == Mode::default_calibration)
            ? json(config.flow_to_cash_kernel)
            : json(std::array<double, 6>{});
    planted["flow_to_cash_prop_beta"] =
        (mode == Mode::eq5_share) ? config.flow_to_cash_prop_kernel[0] : 0.0;
    planted["flow_to_cash_prop_kernel"] = (mode == Mode::eq5_share)
                                              ? json(config.flow_to_cash_prop_kernel)
                                              : json(std::array<double, 6>{});
    planted["flow_illiq_beta0"] =
        (mode == Mode::eq7_quarterly) ? config.flow_illiq_coefs[0] : 0.0;
    planted["flow_illiq_interaction"] =
        (mode == Mode::eq7_quarterly) ? config.flow_illiq_coefs[1] : 0.0;
    planted["flow_illiq_prev_quarter"] =
        (mode == Mode::eq7_quarterly) ? config.flow_illiq_coefs[2] : 0.0;
    planted["flow_illiq_prev_quarter_interaction"] =
        (mode == Mode::eq7_quarterly) ? config.flow_illiq_coefs[3] : 0.0;
    planted["dilliq_lag0"] = config.dips_enabled ? config.dilliq_dips[0] : 0.0;
    planted["dilliq_lag3"] = config.dips_enabled ? -config.dilliq_dips[0] : 0.0;
    planted["activeness_premium"] = premium_on ? config.activeness_premium : 0.0;

    json manifest;
    manifest["plant_mode"] = config.plant_mode;
    manifest["seed"] = config.seed;
    manifest["n_stocks"] = config.n_stocks;
    manifest["n_funds"] = config.n_funds;
    manifest["n_months"] = config.n_months;
    manifest["start_month"] = format_month(cal.month_index.front());
    manifest["end_month"] = format_month(cal.month_index.back());
    manifest["n_stock_bars"] = out.data.stock_bars.size();
    manifest["planted"] = planted;
    manifest["config"] = config_to_json(config);
    out.manifest_json = manifest.dump(2) + "\n";
    return out;
}

std::vector<std::pair<std::string, std::string>> write_universe(
    const SyntheticUniverse& universe, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file_atomic((std::filesystem::path(dir) / name).string(), content);
        written.emplace_back(name, string_digest(content));
    };
    emit("stock_bars.csv", render_stock_bars_csv(universe.data.stock_bars));
    emit("holdings.csv", render_holdings_csv(universe.data.holdings));
    emit("fund_series.csv", render_fund_series_csv(universe.data.fund_series));
    emit("factors.csv", render_factors_csv(universe.data.factors));
    emit("market_daily.csv", render_market_daily_csv(universe.data.market_daily));
    emit("manifest.json", universe.manifest_json);
    return written;
}

// ---------------------------------------------------------------------------
// Dummy-variable oracle
// ---------------------------------------------------------------------------

RegressionFit dummy_fe_ols_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                  const std::vector<std::string>& x_names,
                                  const std::vector<std::vector<int>>& fe_ids,
                                  const std::vector<int>& cluster_ids) {
    const long n = y.size();
    if (X.rows() != n) throw std::invalid_argument("dummy_fe_ols_oracle: X rows != y size");
    if (static_cast<long>(cluster_ids.size()) != n)
        throw std::invalid_argument("dummy_fe_ols_oracle: cluster_ids size mismatch");
    for (const auto& дim : fe_ids)
        if (static_cast<long>(дim.size()) != n)
            throw std::invalid_argument("dummy_fe_ols_oracle: fe dimension size mismatch");
    if (n > 5000)
        throw std::runtime_error("dummy_fe_ols_oracle: refusing panels above 5000 rows");
    const long k = X.cols();

    std::vector<long> keep;
    for (long r = 0; r < n; ++r) {
        bool ok = std::isfinite(y[r]);
        for (long c = 0; c < k && ok; ++c) ok = std::isfinite(X(r, c));
        if (ok) keep.push_back(r);
    }
    const long N = static_cast<long>(keep.size());
    if (N == 0) throw std::runtime_error("dummy_fe_ols_oracle: no complete rows");

    // Remap group and cluster labels over the retained rows.
    auto remap = [&](const std::vector<int>& ids) {
        std::map<int, int> to_new;
        std::vector<int> out(static_cast<size_t>(N));
        for (long r = 0; r < N; ++r) {
            int g = ids[static_cast<size_t>(keep[static_cast<size_t>(r)])];
            auto [it, fresh] = to_new.emplace(g, static_cast<int>(to_new.size()));
            out[static_cast<size_t>(r)] = it->second;
        }
        return std::pair<std::vector<int>, long>(out, static_cast<long>(to_new.size()));
    };

    long p_dummy = 1;
    std::vector<std::pair<std::vector<int>, long>> dims;
    for (const auto& ids : fe_ids) {
        dims.push_back(remap(ids));
        p_dummy += dims.back().second - 1;  // first group absorbed by the intercept
    }
    auto [clusters, G] = remap(cluster_ids);

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, p_dummy + k);
    std::vector<std::string> names;
    names.reserve(static_cast<size_t>(p_dummy + k));
    D.col(0).setOnes();
    names.push_back("intercept");
    long col = 1;
    for (size_t d = 0; d < dims.size(); ++d) {
        for (long g = 1; g < dims[d].second; ++g)
            names.push_back("fe" + std::to_string(d) + "_" + std::to_string(g));
        for (long r = 0; r < N; ++r) {
            int g = dims[d].first[static_cast<size_t>(r)];
            if (g >= 1) D(r, col + g - 1) = 1.0;
        }
        col += dims[d].second - 1;
    }
    Eigen::VectorXd yk(N);
    for (long r = 0; r < N; ++r) yk[r] = y[keep[static_cast<size_t>(r)]];
    for (long c = 0; c < k; ++c)
        for (long r = 0; r < N; ++r) D(r, p_dummy + c) = X(keep[static_cast<size_t>(r)], c);
    for (long c = 0; c < k; ++c)
        names.push_back(c < static_cast<long>(x_names.size()) ? x_names[static_cast<size_t>(c)]
                                                              : "x" + std::to_string(c));

    RegressionFit big = ols(D, yk, names);

    // Residualize the slope block on the dummy space; the clustered
    // covariance of the slopes only involves these components.
    Eigen::MatrixXd Dd = D.leftCols(p_dummy);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Dd);
    Eigen::MatrixXd Xt = D.rightCols(k) - Dd * qr.solve(D.rightCols(k));
    const Eigen::VectorXd& u = big.residuals;

    Eigen::MatrixXd xtx_inv = (Xt.transpose() * Xt).inverse();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    std::vector<Eigen::VectorXd> scores(static_cast<size_t>(G), Eigen::VectorXd::Zero(k));
    for (long r = 0; r < N; ++r)
        scores[static_cast<size_t>(clusters[static_cast<size_t>(r)])] +=
            Xt.row(r).transpose() * u[r];
    for (const auto& s : scores) meat += s * s.transpose();
    double scale = (static_cast<double>(G) / (G - 1.0)) *
                   ((N - 1.0) / static_cast<double>(N - k));
    Eigen::MatrixXd cov = scale * xtx_inv * meat * xtx_inv;

    RegressionFit fit;
    fit.names.assign(names.end() - k, names.end());
    fit.coef = big.coef.tail(k);
    fit.cov = cov;
    fit.cov_flavor = CovFlavor::clustered;
    fit.n_obs = N;
    fit.n_params = k;
    fit.residuals = u;
    fit.n_clusters = G;
    fit.dof_t = static_cast<double>(G - 1);
    Eigen::VectorXd yt = yk - Dd * qr.solve(yk);
    double sst = yt.squaredNorm();
    double ssr = u.squaredNorm();
    double r2 = (sst > 0.0) ? 1.0 - ssr / sst : 0.0;
    fit.r2_adj =
        (N - k - 1 > 0) ? 1.0 - (1.0 - r2) * (N - 1.0) / static_cast<double>(N - k - 1) : r2;
    return fit;
}

// ---------------------------------------------------------------------------
// Closed-form battery
// ---------------------------------------------------------------------------

namespace {

CheckResult run_check(const std::string& name, double err, double tol,
                      const std::string& what) {
    CheckResult r;
    r.name = name;
    r.passed = std::isfinite(err) && err <= tol;
    r.detail = what + ": max deviation " + format_double(err) + " (tolerance " +
               format_double(tol) + ")";
    return r;
}

CheckResult check_amihud_homogeneity() {
    Rng rng(42);
    std::vector<StockDayBar> bars, scaled;
    for (int d = 0; d < 21; ++d) {
        double ret = rng.normal(0.0, 0.02);
        double dvol = std::exp(rng.normal(10.0, 0.5));
        bars.push_back({"S001", 1000 + d, ret, dvol});
        scaled.push_back({"S001", 1000 + d, ret, 3.0 * dvol});
    }
    double base = amihud_stock_month(bars).illiq_amihud;
    double third = amihud_stock_month(scaled).illiq_amihud;
    return run_check("amihud_homogeneity", std::fabs(third * 3.0 / base - 1.0), 1e-12,
                     "volume scaled by 3 must scale the measure by 1/3");
}

CheckResult check_flow_identity() {
    double worst = 0.0;
    Rng rng(43);
    for (int t = 0; t < 100; ++t) {
        double prev = std::exp(rng.normal(4.0, 1.0));
        double ret = rng.normal(0.0, 0.05);
        double g = rng.normal(0.0, 0.04);
        double flow = monthly_flow(prev * (1.0 + ret + g), prev, ret);
        worst = std::max(worst, std::fabs(flow - g));
    }
    return run_check("flow_identity", worst, 1e-12,
                     "flow must recover the planted net-flow rate exactly");
}

CheckResult check_nw_lag0_matches_white() {
    Rng rng(44);
    const long T = 40;
    Eigen::MatrixXd X(T, 2);
    Eigen::VectorXd u(T);
    for (long t = 0; t < T; ++t) {
        X(t, 0) = 1.0;
        X(t, 1) = rng.normal(0.0, 1.0);
        u[t] = rng.normal(0.0, 0.5);
    }
    Eigen::MatrixXd nw = newey_west_cov(X, u, 0);
    Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (long t = 0; t < T; ++t)
        meat += X.row(t).transpose() * X.row(t) * u[t] * u[t];
    Eigen::MatrixXd white = xtx_inv * meat * xtx_inv;
    return run_check("nw_lag0_matches_white", (nw - white).cwiseAbs().maxCoeff(), 1e-12,
                     "zero-lag HAC must equal the White covariance");
}

CheckResult check_winsorize_idempotent() {
    Rng rng(45);
    std::vector<double> v(200);
    for (auto& x : v) x = rng.normal(0.0, 3.0);
    v[10] = kNaN;
    v[77] = kNaN;
    std::vector<double> once = winsorize(v);
    std::vector<double> twice = winsorize(once);
    double worst = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        if (std::isnan(once[i]) != std::isnan(twice[i])) worst = 1.0;
        if (std::isfinite(once[i])) worst = std::max(worst, std::fabs(once[i] - twice[i]));
    }
    return run_check("winsorize_idempotent", worst, 0.0,
                     "winsorizing a winsorized sample must change nothing");
}

CheckResult check_rolling_alpha_zero() {
    Rng rng(46);
    const size_t T = 60;
    Eigen::MatrixXd factors(T, 4);
    std::vector<double> excess(T);
    for (size_t t = 0; t < T; ++t) {
        for (int c = 0; c < 4; ++c) factors(static_cast<long>(t), c) = rng.normal(0.0, 0.02);
        excess[t] = 0.9 * factors(static_cast<long>(t), 0) - 0.2 * factors(static_cast<long>(t), 1) +
                    0.1 * factors(static_cast<long>(t), 2);
    }
    RollingAlphaOptions opts;
    opts.model = FactorModel::ff3;
    std::vector<double> alpha = rolling_alpha(excess, factors, opts);
    double worst = 0.0;
    for (double a : alpha)
        if (std::isfinite(a)) worst = std::max(worst, std::fabs(a));
    return run_check("rolling_alpha_zero", worst, 1e-10,
                     "an exactly factor-spanned return must have zero alpha");
}

CheckResult check_within_single_pass() {
    Rng rng(47);
    const long N = 120;
    Eigen::MatrixXd cols(N, 2);
    std::vector<int> ids(N);
    for (long r = 0; r < N; ++r) {
        cols(r, 0) = rng.normal(1.0, 2.0);
        cols(r, 1) = rng.normal(-3.0, 1.0);
        ids[static_cast<size_t>(r)] = static_cast<int>(r % 7);
    }
    Eigen::MatrixXd out = within_transform(cols, {ids});
    std::vector<double> sums(7 * 2, 0.0);
    for (long r = 0; r < N; ++r)
        for (int c = 0; c < 2; ++c) sums[static_cast<size_t>(ids[static_cast<size_t>(r)] * 2 + c)] += out(r, c);
    double worst = 0.0;
    for (double s : sums) worst = std::max(worst, std::fabs(s));
    return run_check("within_single_pass", worst, 1e-10,
                     "single-dimension demeaning must zero every group mean in one pass");
}

CheckResult check_within_two_way() {
    Rng rng(48);
    const long N = 300;
    Eigen::MatrixXd cols(N, 1);
    std::vector<int> a(N), b(N);
    for (long r = 0; r < N; ++r) {
        a[static_cast<size_t>(r)] = static_cast<int>(r % 15);
        b[static_cast<size_t>(r)] = static_cast<int>((r / 3) % 20);
        cols(r, 0) = rng.normal(0.0, 1.0) + a[static_cast<size_t>(r)] - 0.5 * b[static_cast<size_t>(r)];
    }
    Eigen::MatrixXd out = within_transform(cols, {a, b});
    std::vector<double> sa(15, 0.0), na(15, 0.0), sb(20, 0.0), nb(20, 0.0);
    for (long r = 0; r < N; ++r) {
        sa[static_cast<size_t>(a[static_cast<size_t>(r)])] += out(r, 0);
        na[static_cast<size_t>(a[static_cast<size_t>(r)])] += 1;
        sb[static_cast<size_t>(b[static_cast<size_t>(r)])] += out(r, 0);
        nb[static_cast<size_t>(b[static_cast<size_t>(r)])] += 1;
    }
    double worst = 0.0;
    for (size_t g = 0; g < sa.size(); ++g) worst = std::max(worst, std::fabs(sa[g] / na[g]));
    for (size_t g = 0; g < sb.size(); ++g) worst = std::max(worst, std::fabs(sb[g] / nb[g]));
    return run_check("within_two_way_converges", worst, 1e-9,
                     "alternating demeaning must drive both dimensions' group means to zero");
}

CheckResult check_sort_partition_counts() {
    // Mirrors the quintile assignment rule: fund at ascending-signal rank r of
    // n eligible lands in quintile floor(r * 5 / n).
    double worst = 0.0;
    for (int n = 5; n <= 97; ++n) {
        std::array<int, 5> count{};
        for (int r = 0; r < n; ++r) {
            int q = static_cast<int>(static_cast<long>(r) * 5 / n);
            if (q < 0 || q > 4) return run_check("sort_partition_counts", 1.0, 0.0, "rank out of range");
            ++count[static_cast<size_t>(q)];
        }
        int total = 0, lo = n, hi = 0;
        for (int c : count) {
            total += c;
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        if (total != n || hi - lo > 1 || lo < 1) worst = 1.0;
    }
    return run_check("sort_partition_counts", worst, 0.0,
                     "quintile sizes must partition n into near-equal fifths");
}

CheckResult check_t_quantile_roundtrip() {
    double worst = 0.0;
    for (double nu : {3.0, 10.0, 57.0}) {
        for (double p : {0.025, 0.5, 0.975}) {
            double q = student_t_quantile(p, nu);
            worst = std::max(worst, std::fabs(student_t_cdf(q, nu) - p));
        }
    }
    double z = student_t_quantile(0.975, 1e9);
    worst = std::max(worst, std::fabs(z - 1.959964) / 10.0);
    return run_check("t_quantile_roundtrip", worst, 1e-7,
                     "t CDF and quantile must invert each other; large nu must approach normal");
}

}  // namespace

std::vector<CheckResult> closed_form_checks() {
    return {check_amihud_homogeneity(), check_flow_identity(),  check_nw_lag0_matches_white(),
            check_winsorize_idempotent(), check_rolling_alpha_zero(), check_within_single_pass(),
            check_within_two_way(),       check_sort_partition_counts(), check_t_quantile_roundtrip()};
}

std::vector<CheckResult> closed_form_checks(const std::vector<std::string>& subset) {
    std::vector<CheckResult> all = closed_form_checks();
    std::vector<CheckResult> out;
    for (const auto& name : subset)
        for (const auto& r : all)
            if (r.name == name) out.push_back(r);
    return out;
}

}  // namespace fundliq
