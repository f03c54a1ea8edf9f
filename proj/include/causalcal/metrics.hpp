#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalcal/graph.hpp"

namespace causalcal {

// The five evaluation types; A->B and B->A are both "directed", the two
// circle-arrow classes are both "partially directed".
enum class MergedEdgeType : std::uint8_t {
    Directed = 0,
    PartiallyDirected = 1,
    CircleCircle = 2,
    Bidirected = 3,
    NoEdge = 4,
};

inline constexpr int kNumMergedTypes = 5;

MergedEdgeType merge_class(EdgeClass cls);
const char* merged_type_name(MergedEdgeType type);

// Probability mass a 7-vector assigns to a merged type.
double merged_probability(const std::array<double, 7>& probs, MergedEdgeType type);

// Argmax; ties go to the lowest class index.
EdgeClass predict_class(const std::array<double, 7>& probs);

// One-vs-remainder precision/recall/F1 for a merged type. 0/0 cases are
// absent rather than zero; F1 is absent when either side is.
struct Prf1 {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

Prf1 prf1(std::span<const EdgeClass> predictions, std::span<const EdgeClass> truths,
          MergedEdgeType type);

// Maximum calibration error over equal-frequency bins: instances sorted by
// prediction (stable, so ties keep input order), consecutive bins of
// bin_capacity with the final bin absorbing the remainder; MCE is the
// largest |mean prediction - positive frequency| over bins.
double mce(std::span<const double> predictions, std::span<const std::uint8_t> labels,
           std::size_t bin_capacity);

// Micro MCE: every instance contributes its 7 probabilities to an aggregated
// prediction vector and its 1-of-7 indicator to an aggregated label vector.
double overall_mce(std::span<const std::array<double, 7>> prob_table,
                   std::span<const EdgeClass> truths, std::size_t bin_capacity);

// Fixed-width reliability bins over [0,1] (the last bin is closed above).
// Empty bins carry count 0 and no means.
struct ReliabilityBin {
    std::optional<double> mean_prediction;
    std::optional<double> frequency;
    std::size_t count = 0;
};

std::vector<ReliabilityBin> reliability_bins(std::span<const double> predictions,
                                             std::span<const std::uint8_t> labels,
                                             std::size_t num_bins = 5);

// Two-sided Wilcoxon signed rank on paired differences x - y, zero
// differences dropped. Exact null distribution up to n = 25, normal
// approximation with tie correction above. All-zero differences are
// degenerate (p = 1). Requires >= 5 nonzero differences otherwise.
struct WilcoxonResult {
    double statistic;  // W+ = rank sum of positive differences
    double p_value;
    bool degenerate;
};

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

struct TypeMetrics {
    Prf1 prf1;
    double mce = 0.0;
    std::vector<ReliabilityBin> reliability;
};

struct MetricsReport {
    std::array<TypeMetrics, kNumMergedTypes> per_type;
    double overall_mce = 0.0;
};

// Full scoring of a probability table against truth labels.
MetricsReport evaluate_metrics(std::span<const std::array<double, 7>> probs,
                               std::span<const EdgeClass> truths, std::size_t mce_bin_capacity);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);

// CSV rows for external plotting: type,bin_lo,bin_hi,mean_pred,frequency,count.
std::string reliability_csv(const MetricsReport& report);

}  // namespace causalcal
