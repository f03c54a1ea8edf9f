#include "causalcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "causalcal/citest.hpp"
#include "causalcal/textio.hpp"

namespace causalcal {

MergedEdgeType merge_class(EdgeClass cls) {
    switch (cls) {
        case EdgeClass::NoEdge: return MergedEdgeType::NoEdge;
        case EdgeClass::AtoB:
        case EdgeClass::BtoA: return MergedEdgeType::Directed;
        case EdgeClass::ACircleArrowB:
        case EdgeClass::BCircleArrowA: return MergedEdgeType::PartiallyDirected;
        case EdgeClass::CircleCircle: return MergedEdgeType::CircleCircle;
        case EdgeClass::Bidirected: return MergedEdgeType::Bidirected;
    }
    throw std::logic_error("merge_class: bad edge class");
}

const char* merged_type_name(MergedEdgeType type) {
    switch (type) {
        case MergedEdgeType::Directed: return "directed";
        case MergedEdgeType::PartiallyDirected: return "partially_directed";
        case MergedEdgeType::CircleCircle: return "circle_circle";
        case MergedEdgeType::Bidirected: return "bidirected";
        case MergedEdgeType::NoEdge: return "no_edge";
    }
    throw std::logic_error("merged_type_name: bad type");
}

double merged_probability(const std::array<double, 7>& probs, MergedEdgeType type) {
    switch (type) {
        case MergedEdgeType::Directed: return probs[1] + probs[2];
        case MergedEdgeType::PartiallyDirected: return probs[3] + probs[4];
        case MergedEdgeType::CircleCircle: return probs[5];
        case MergedEdgeType::Bidirected: return probs[6];
        case MergedEdgeType::NoEdge: return probs[0];
    }
    throw std::logic_error("merged_probability: bad type");
}

EdgeClass predict_class(const std::array<double, 7>& probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 7; ++c)
        if (probs[c] > probs[best]) best = c;
    return static_cast<EdgeClass>(best);
}

Prf1 prf1(std::span<const EdgeClass> predictions, std::span<const EdgeClass> truths,
          MergedEdgeType type) {
    if (predictions.size() != truths.size())
        throw std::invalid_argument("prf1: length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred_pos = merge_class(predictions[i]) == type;
        const bool true_pos = merge_class(truths[i]) == type;
        tp += pred_pos && true_pos;
        fp += pred_pos && !true_pos;
        fn += !pred_pos && true_pos;
    }
    Prf1 out;
    if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (out.precision && out.recall && (*out.precision + *out.recall) > 0.0)
        out.f1 = 2.0 * *out.precision * *out.recall / (*out.precision + *out.recall);
    else if (out.precision && out.recall)
        out.f1 = 0.0;  // both defined but zero
    return out;
}

double mce(std::span<const double> predictions, std::span<const std::uint8_t> labels,
           std::size_t bin_capacity) {
    const std::size_t n = predictions.size();
    if (n == 0) throw std::invalid_argument("mce: empty input");
    if (labels.size() != n) throw std::invalid_argument("mce: length mismatch");
    if (bin_capacity < 1) throw std::invalid_argument("mce: bin_capacity must be >= 1");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

    const std::size_t bins = std::max<std::size_t>(1, n / bin_capacity);
    double worst = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * bin_capacity;
        const std::size_t hi = (b + 1 == bins) ? n : lo + bin_capacity;
        double pred_sum = 0.0, pos = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            pred_sum += predictions[order[k]];
            pos += labels[order[k]];
        }
        const double count = static_cast<double>(hi - lo);
        worst = std::max(worst, std::abs(pred_sum / count - pos / count));
    }
    return worst;
}

double overall_mce(std::span<const std::array<double, 7>> prob_table,
                   std::span<const EdgeClass> truths, std::size_t bin_capacity) {
    if (prob_table.size() != truths.size())
        throw std::invalid_argument("overall_mce: length mismatch");
    std::vector<double> flat_p;
    std::vector<std::uint8_t> flat_z;
    flat_p.reserve(prob_table.size() * 7);
    flat_z.reserve(prob_table.size() * 7);
    for (std::size_t i = 0; i < prob_table.size(); ++i) {
        for (std::size_t c = 0; c < 7; ++c) {
            flat_p.push_back(prob_table[i][c]);
            flat_z.push_back(static_cast<std::size_t>(truths[i]) == c ? 1 : 0);
        }
    }
    return mce(flat_p, flat_z, bin_capacity);
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> predictions,
                                             std::span<const std::uint8_t> labels,
                                             std::size_t num_bins) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("reliability_bins: length mismatch");
    if (num_bins < 1) throw std::invalid_argument("reliability_bins: need at least one bin");

    std::vector<double> pred_sum(num_bins, 0.0), pos(num_bins, 0.0);
    std::vector<std::size_t> count(num_bins, 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        auto b = static_cast<std::size_t>(predictions[i] * static_cast<double>(num_bins));
        b = std::min(b, num_bins - 1);  // prediction 1.0 joins the closed top bin
        pred_sum[b] += predictions[i];
        pos[b] += labels[i];
        ++count[b];
    }
    std::vector<ReliabilityBin> out(num_bins);
    for (std::size_t b = 0; b < num_bins; ++b) {
        out[b].count = count[b];
        if (count[b] > 0) {
            out[b].mean_prediction = pred_sum[b] / static_cast<double>(count[b]);
            out[b].frequency = pos[b] / static_cast<double>(count[b]);
        }
    }
    return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("wilcoxon: length mismatch");

    std::vector<double> diff;
    diff.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diff.push_back(d);
    }
    if (diff.empty()) return {0.0, 1.0, true};
    const std::size_t n = diff.size();
    if (n < 5) throw std::invalid_argument("wilcoxon: need >= 5 nonzero differences");

    // Average ranks of |d|; doubling makes all ranks integral.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(diff[a]) < std::abs(diff[b]); });
    std::vector<std::uint64_t> rank2(n);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diff[order[j]]) == std::abs(diff[order[i]])) ++j;
        const std::uint64_t doubled = i + j + 1;  // 2 * average rank of the run
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = doubled;
        if (j - i > 1) tie_sizes.push_back(j - i);
        i = j;
    }

    std::uint64_t w2_plus = 0;
    std::uint64_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (diff[i] > 0.0) w2_plus += rank2[i];
    }
    const double w_plus = static_cast<double>(w2_plus) / 2.0;

    double p;
    if (n <= 25) {
        // Exact conditional null: count sign assignments by doubled rank sum.
        std::vector<double> dist(total2 + 1, 0.0);
        dist[0] = 1.0;
        std::size_t top = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t r = rank2[i];
            for (std::size_t s = top + 1; s-- > 0;)
                if (dist[s] > 0.0) dist[s + r] += dist[s];
            top += r;
        }
        const double denom = std::pow(2.0, static_cast<double>(n));
        double below = 0.0, above = 0.0;
        for (std::size_t s = 0; s <= total2; ++s) {
            if (s <= w2_plus) below += dist[s];
            if (s >= w2_plus) above += dist[s];
        }
        p = std::min(1.0, 2.0 * std::min(below, above) / denom);
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
        for (std::size_t t : tie_sizes) {
            const double td = static_cast<double>(t);
            var -= td * (td * td - 1.0) / 48.0;
        }
        const double z = (w_plus - mean) / std::sqrt(var);
        p = std::erfc(std::abs(z) / std::numbers::sqrt2);
    }
    return {w_plus, p, false};
}

MetricsReport evaluate_metrics(std::span<const std::array<double, 7>> probs,
                               std::span<const EdgeClass> truths, std::size_t mce_bin_capacity) {
    if (probs.size() != truths.size())
        throw std::invalid_argument("evaluate_metrics: length mismatch");

    std::vector<EdgeClass> predictions(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) predictions[i] = predict_class(probs[i]);

    MetricsReport report;
    for (int t = 0; t < kNumMergedTypes; ++t) {
        const auto type = static_cast<MergedEdgeType>(t);
        auto& entry = report.per_type[t];
        entry.prf1 = prf1(predictions, truths, type);

        std::vector<double> type_probs(probs.size());
        std::vector<std::uint8_t> type_labels(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) {
            type_probs[i] = merged_probability(probs[i], type);
            type_labels[i] = merge_class(truths[i]) == type ? 1 : 0;
        }
        entry.mce = mce(type_probs, type_labels, mce_bin_capacity);
        entry.reliability = reliability_bins(type_probs, type_labels, 5);
    }
    report.overall_mce = overall_mce(probs, truths, mce_bin_capacity);
    return report;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["overall_mce"] = report.overall_mce;
    auto& types = j["per_type"];
    for (int t = 0; t < kNumMergedTypes; ++t) {
        const auto& entry = report.per_type[t];
        nlohmann::json bins = nlohmann::json::array();
        for (const auto& bin : entry.reliability) {
            bins.push_back({{"mean_prediction", optional_to_json(bin.mean_prediction)},
                            {"frequency", optional_to_json(bin.frequency)},
                            {"count", bin.count}});
        }
        types[merged_type_name(static_cast<MergedEdgeType>(t))] = {
            {"precision", optional_to_json(entry.prf1.precision)},
            {"recall", optional_to_json(entry.prf1.recall)},
            {"f1", optional_to_json(entry.prf1.f1)},
            {"mce", entry.mce},
            {"reliability", bins}};
    }
    return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    MetricsReport report;
    report.overall_mce = j.at("overall_mce").get<double>();
    for (int t = 0; t < kNumMergedTypes; ++t) {
        const auto& src = j.at("per_type").at(merged_type_name(static_cast<MergedEdgeType>(t)));
        auto& entry = report.per_type[t];
        entry.prf1.precision = optional_from_json(src.at("precision"));
        entry.prf1.recall = optional_from_json(src.at("recall"));
        entry.prf1.f1 = optional_from_json(src.at("f1"));
        entry.mce = src.at("mce").get<double>();
        for (const auto& bin : src.at("reliability")) {
            ReliabilityBin rb;
            rb.mean_prediction = optional_from_json(bin.at("mean_prediction"));
            rb.frequency = optional_from_json(bin.at("frequency"));
            rb.count = bin.at("count").get<std::size_t>();
            entry.reliability.push_back(rb);
        }
    }
    return report;
}

std::string reliability_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "type,bin_lo,bin_hi,mean_pred,frequency,count\n";
    for (int t = 0; t < kNumMergedTypes; ++t) {
        const auto& bins = report.per_type[t].reliability;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const double width = 1.0 / static_cast<double>(bins.size());
            out << merged_type_name(static_cast<MergedEdgeType>(t)) << ','
                << format_double(static_cast<double>(b) * width) << ','
                << format_double(static_cast<double>(b + 1) * width) << ',';
            if (bins[b].mean_prediction) out << format_double(*bins[b].mean_prediction);
            out << ',';
            if (bins[b].frequency) out << format_double(*bins[b].frequency);
            out << ',' << bins[b].count << '\n';
        }
    }
    return out.str();
}

}  // namespace causalcal
