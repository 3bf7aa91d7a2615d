#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fundliq/data_model.hpp"
#include "fundliq/econometrics.hpp"

namespace fundliq {

// Synthetic universe generator. All randomness flows from `seed` through
// per-entity integer-state streams (xoshiro256++ seeded via SplitMix64 of
// seed, a stream tag, and the entity index), so adding funds or stocks never
// perturbs the draws of existing entities and generation parallelizes with
// identical output.
//
// `plant_mode` selects the planted mechanisms:
//   default_calibration  level cash model on raw flows, dispersed fund
//                        characteristics matched to realistic magnitudes
//   eq4_kernel           cash-change increments carry a distributed-lag flow
//                        kernel; illiquidity dips after inflows; a return
//                        premium loads on lagged activeness
//   eq7_quarterly        cash-change increments carry quarterly flows and
//                        their interactions with standardized lagged
//                        illiquidity
//   eq5_share            cash-share increments carry the flow kernel
//   null_universe        every planted effect zero; noise only
//
// Recovery modes plant responses on the winsorized transforms the estimation
// pipeline actually regresses on (the generator reproduces the pipeline's
// pooled winsorization and standardization internally), and the increments
// carry fresh iid noise, so month-clustered standard errors are valid for
// the planted coefficients. `winsor_compensation` and `premium_compensation`
// pre-scale the planted mechanisms to undo the attenuation from winsorizing
// the dependent columns; they are tuned so the pipeline's estimands equal the
// stated targets.
struct UniverseConfig {
    std::uint64_t seed = 1;
    int n_stocks = 48;
    int n_funds = 120;
    int n_months = 72;
    std::string plant_mode = "default_calibration";
    int start_year = 2011;
    int start_month_of_year = 1;

    // Stock microstructure: per-stock Amihud scale lambda on a log-spaced
    // grid, daily volume dvol = |ret| / (lambda * exp(dvol noise)).
    double lambda_min = 2.5e-4;
    double lambda_max = 0.35;
    double dvol_log_sd = 0.3;
    double zero_volume_prob = 0.03;
    double stock_mkt_loading = 0.7;
    double stock_idio_sd = 0.02;
    double market_daily_sd = 0.008;

    // Fund illiquidity process: base level lognormal across funds, monthly
    // lognormal wobble with per-fund relative SD (the activeness source),
    // multiplicative post-inflow dips in liquid assets.
    double illiq_mean = 0.0101;
    double illiq_log_sd = 0.55;
    double act_rel_sd_min = 0.08;
    double act_rel_sd_max = 0.45;
    std::array<double, 3> dilliq_dips = {-0.007, -0.003, -0.001};
    bool dips_enabled = true;

    // Flows: iid uniform on [mean - half_width, mean + half_width].
    double flow_mean = 0.007;
    double flow_half_width = 0.063;

    // Returns and factors.
    double rf_monthly = 0.005;
    double mkt_excess_mean = 0.0095;
    double mkt_excess_sd = 0.035;
    double factor_sd = 0.008;
    double beta_min = 0.8;
    double beta_max = 1.2;
    double factor_load_range = 0.2;
    double fund_idio_sd = 0.02;

    // Activeness premium: gross returns load on the previous month's
    // winsorized activeness, demeaned across funds each month.
    double activeness_premium = 0.8969;
    double premium_compensation = 1.0;

    // Cash: targets are the estimands the pipeline should recover;
    // winsor_compensation scales the planted mechanism.
    std::array<double, 6> flow_to_cash_kernel = {0.32, 0.10, 0.06, 0.07, 0.05, 0.03};
    std::array<double, 6> flow_to_cash_prop_kernel = {0.13, 0.05, 0.03, 0.02, 0.01, 0.01};
    // Quarterly-flow response: level, level x z, previous quarter, previous
    // quarter x z, with z the standardized 6-month-lagged illiquidity.
    std::array<double, 4> flow_illiq_coefs = {0.16, 0.13, 0.05, -0.04};
    double winsor_compensation = 1.0;
    double cash_base_share = 0.0217;
    double cash_share_log_sd = 0.85;
    double cash_noise_sd = 0.01;
    double cash_core_noise = 0.30;
    double cash_floor_frac = 0.0005;
    double cash_cap_frac = 0.5;

    // Expense model (percent per annum).
    double expense_base = 1.6;
    double expense_per_illiq = 20.0;
    double expense_per_act = 200.0;
    double expense_noise_sd = 0.25;
    double expense_floor = 0.1;

    // Remaining fund characteristics.
    double turnover_mean = 72.0;
    double turnover_sd = 30.0;
    double turnover_floor = 5.0;
    long age_base_min = 12;
    long age_base_max = 180;
    double tna0_median = 67.0;
    double tna0_log_sd = 1.5;
    double nav0 = 10.0;

    // Panel conventions mirrored by the generator's internal replica of the
    // estimation pipeline.
    double winsor_lower = 5.0;
    double winsor_upper = 95.0;
    int activeness_window = 12;
    long activeness_min_obs = 10;

    // Throws std::invalid_argument on infeasible settings.
    void validate() const;

    std::string to_json() const;
    // Starts from the defaults (or the preset named by "plant_mode" if
    // present) and overrides whichever keys appear.
    static UniverseConfig from_json(const std::string& text);
};

// Named presets: default_calibration, eq4_kernel, eq7_quarterly, eq5_share,
// null_universe. Recovery presets fix the dispersed characteristics to the
// values the coverage analysis assumes.
UniverseConfig preset_config(const std::string& name);

struct SyntheticUniverse {
    MarketData data;
    std::string manifest_json;  // planted targets, mode, seed, entity counts
};

SyntheticUniverse generate_universe(const UniverseConfig& config, int workers = 1);

// Writes the five input CSVs plus manifest.json; returns (file name, content
// digest) pairs in write order.
std::vector<std::pair<std::string, std::string>> write_universe(
    const SyntheticUniverse& universe, const std::string& dir);

// Brute-force fixed-effects reference: explicit one-hot dummy columns plus
// OLS, with the clustered covariance assembled from the residualized slopes.
// Refuses panels above 5000 rows.
RegressionFit dummy_fe_ols_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                  const std::vector<std::string>& x_names,
                                  const std::vector<std::vector<int>>& fe_ids,
                                  const std::vector<int>& cluster_ids);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Battery of analytically known cases; failures are reported, not thrown.
// The overload runs only the named subset (unknown names are skipped, an
// empty subset yields an empty report).
std::vector<CheckResult> closed_form_checks();
std::vector<CheckResult> closed_form_checks(const std::vector<std::string>& subset);

}  // namespace fundliq
