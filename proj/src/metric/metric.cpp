#include "ecol2/metric.hpp"

#include "ecol2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ecol2 {
namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

}  // namespace

void EcoL2Params::validate() const {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha == 1.0) {
        throw ParameterError("alpha must be positive and different from 1 (logarithm base), got " +
                             std::to_string(alpha));
    }
    if (!std::isfinite(beta) || beta < 1.0) {
        throw ParameterError("beta must be >= 1, got " + std::to_string(beta));
    }
    if (n_infer < 0) {
        throw ParameterError("n_infer must be non-negative, got " + std::to_string(n_infer));
    }
}

bool EcoL2Params::outside_reference_domain() const noexcept {
    return alpha < 10.0 || alpha > 1000.0;
}

void CarbonLedger::validate() const {
    for (double c : {c_embodied, c_developmental, c_operational, c_inference_per_run}) {
        if (!std::isfinite(c) || c < 0.0) {
            throw ParameterError("carbon components must be finite and non-negative");
        }
    }
}

double CarbonLedger::total(std::int64_t n_infer) const noexcept {
    return c_embodied + c_developmental + c_operational +
           c_inference_per_run * static_cast<double>(n_infer);
}

bool ErrorReport::relative_l2_defined() const noexcept { return !std::isnan(relative_l2); }

double ecol2_numerator(double r, double alpha) {
    require_finite(r, "relative error");
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha == 1.0) {
        throw ParameterError("alpha must be positive and different from 1");
    }
    if (r <= 0.0 || r >= 1.0) {
        throw DomainError("relative error must lie in (0, 1), got " + std::to_string(r));
    }
    // exp(log_alpha R) - 1 through expm1.
    return -std::expm1(std::log(r) / std::log(alpha));
}

EcoL2Score ecol2(double r, const CarbonLedger& ledger, const EcoL2Params& params) {
    require_finite(r, "relative error");
    params.validate();
    ledger.validate();

    EcoL2Score score;
    if (r == 0.0) {
        r = std::numeric_limits<double>::epsilon();
        score.clamped = true;
    }
    score.relative_l2 = r;
    score.numerator = ecol2_numerator(r, params.alpha);
    const double carbon = ledger.total(params.n_infer);
    score.denominator = 1.0 + params.beta * carbon;
    score.value = score.numerator / score.denominator;
    score.inaccurate = r >= kInaccurateThreshold;
    score.degenerate_carbon = carbon == 0.0;
    score.outside_reference_domain = params.outside_reference_domain();
    return score;
}

ErrorReport error_metrics(std::span<const double> prediction, std::span<const double> reference) {
    if (prediction.size() != reference.size()) {
        throw DomainError("prediction has " + std::to_string(prediction.size()) +
                          " points but reference has " + std::to_string(reference.size()));
    }
    if (reference.empty()) {
        throw DomainError("error metrics need at least one point");
    }

    double sq = 0.0;
    double ref_sq = 0.0;
    double abs_sum = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = prediction[i] - reference[i];
        require_finite(d, "field value");
        sq += d * d;
        ref_sq += reference[i] * reference[i];
        abs_sum += std::abs(d);
        max_abs = std::max(max_abs, std::abs(d));
    }

    const auto n = static_cast<double>(reference.size());
    ErrorReport report;
    report.n_points = reference.size();
    report.relative_l2 =
        ref_sq > 0.0 ? std::sqrt(sq) / std::sqrt(ref_sq) : std::numeric_limits<double>::quiet_NaN();
    report.rmse = std::sqrt(sq / n);
    report.max_error = max_abs;
    report.mae = abs_sum / n;
    return report;
}

std::vector<double> mean_prediction(std::span<const std::vector<double>> runs) {
    if (runs.empty()) {
        throw DomainError("mean prediction needs at least one run");
    }
    std::vector<double> mean(runs.front().size(), 0.0);
    for (const auto& run : runs) {
        if (run.size() != mean.size()) {
            throw DomainError("prediction runs differ in length");
        }
        for (std::size_t i = 0; i < run.size(); ++i) {
            mean[i] += run[i];
        }
    }
    const auto count = static_cast<double>(runs.size());
    for (double& v : mean) {
        v /= count;
    }
    return mean;
}

std::vector<std::vector<EcoL2Score>> sweep(double r, const CarbonLedger& ledger,
                                           std::span<const double> alphas,
                                           std::span<const double> betas, std::int64_t n_infer) {
    if (alphas.empty() || betas.empty()) {
        throw ParameterError("sweep needs at least one alpha and one beta");
    }
    std::vector<std::vector<EcoL2Score>> grid;
    grid.reserve(alphas.size());
    for (double alpha : alphas) {
        auto& row = grid.emplace_back();
        row.reserve(betas.size());
        for (double beta : betas) {
            row.push_back(ecol2(r, ledger, EcoL2Params{alpha, beta, n_infer}));
        }
    }
    return grid;
}

}  // namespace ecol2
