#pragma once

// EcoL2 score and baseline error metrics.
//
//   EcoL2 = (1 - exp(log_alpha R)) / (1 + beta * (Ce + Cd + Co + Ci * n_infer))
//
// All quantities are 64-bit; carbon is in kgCO2.

#include <cstdint>
#include <span>
#include <vector>

namespace ecol2 {

struct EcoL2Params {
    double alpha = 100.0;
    double beta = 100.0;
    std::int64_t n_infer = 1;

    /// Throws ParameterError unless alpha > 0, alpha != 1, beta >= 1, n_infer >= 0.
    void validate() const;
    /// True when alpha lies outside [10, 1000], where boundedness is not guaranteed.
    [[nodiscard]] bool outside_reference_domain() const noexcept;
};

/// Lifecycle carbon split into the four stages. Inference carbon is per single inference.
struct CarbonLedger {
    double c_embodied = 0.0;
    double c_developmental = 0.0;
    double c_operational = 0.0;
    double c_inference_per_run = 0.0;

    /// Throws ParameterError if any component is negative or non-finite.
    void validate() const;
    [[nodiscard]] double total(std::int64_t n_infer) const noexcept;
    [[nodiscard]] bool degenerate(std::int64_t n_infer) const noexcept { return total(n_infer) == 0.0; }
};

struct ErrorReport {
    double relative_l2 = 0.0;  // NaN when the reference has zero norm
    double rmse = 0.0;
    double max_error = 0.0;
    double mae = 0.0;
    std::size_t n_points = 0;

    [[nodiscard]] bool relative_l2_defined() const noexcept;
};

struct EcoL2Score {
    double value = 0.0;
    double numerator = 0.0;
    double denominator = 1.0;
    double relative_l2 = 0.0;     // R actually used, after clamping
    bool inaccurate = false;      // R >= 0.1
    bool clamped = false;         // R == 0 was replaced by machine epsilon
    bool degenerate_carbon = false;
    bool outside_reference_domain = false;
};

/// Errors at or above this value mark a solver as inaccurate.
inline constexpr double kInaccurateThreshold = 0.1;

/// 1 - R^(1 / ln alpha). Requires 0 < r < 1 and a valid alpha.
[[nodiscard]] double ecol2_numerator(double r, double alpha);

[[nodiscard]] EcoL2Score ecol2(double r, const CarbonLedger& ledger, const EcoL2Params& params);

/// R, RMSE, ME and MAE of a prediction against a reference of the same length.
[[nodiscard]] ErrorReport error_metrics(std::span<const double> prediction,
                                        std::span<const double> reference);

/// Element-wise mean over repeated prediction runs. All runs must share a length.
[[nodiscard]] std::vector<double> mean_prediction(std::span<const std::vector<double>> runs);

/// Scores over the cross product alphas x betas; result[i][j] uses alphas[i], betas[j].
[[nodiscard]] std::vector<std::vector<EcoL2Score>> sweep(double r, const CarbonLedger& ledger,
                                                         std::span<const double> alphas,
                                                         std::span<const double> betas,
                                                         std::int64_t n_infer);

}  // namespace ecol2
