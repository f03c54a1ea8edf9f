#include "causalcal/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "causalcal/citest.hpp"

namespace causalcal {

namespace {

void softmax_in_place(std::array<double, 7>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z) v /= total;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::array<double, 7> ShallowNet::forward(const std::array<double, 7>& input) const {
    std::vector<double> h(hidden_size);
    for (std::size_t j = 0; j < hidden_size; ++j) {
        double z = b_hidden[j];
        for (std::size_t i = 0; i < 7; ++i) z += w_in[j * 7 + i] * input[i];
        h[j] = sigmoid(z);
    }
    std::array<double, 7> out;
    for (std::size_t o = 0; o < 7; ++o) {
        double z = b_out[o];
        for (std::size_t j = 0; j < hidden_size; ++j) z += w_out[o * hidden_size + j] * h[j];
        out[o] = z;
    }
    softmax_in_place(out);
    return out;
}

std::array<double, 7> SoftmaxModel::forward(const std::array<double, 7>& input) const {
    std::array<double, 7> out;
    for (std::size_t o = 0; o < 7; ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < 7; ++i) z += w[o * 7 + i] * input[i];
        out[o] = z;
    }
    softmax_in_place(out);
    return out;
}

namespace {

void check_examples(const std::vector<CalibrationExample>& examples) {
    if (examples.size() < 7)
        throw std::invalid_argument("train: need at least 7 calibration examples");
    for (const auto& ex : examples) {
        if (ex.label < 0 || ex.label >= kNumEdgeClasses)
            throw std::invalid_argument("train: label out of range");
        double total = 0.0;
        for (double v : ex.input) total += v;
        if (std::abs(total - 1.0) > 1e-6)
            throw std::invalid_argument("train: example input does not sum to 1");
    }
}

double glorot_radius(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Generic trainer over a parameter vector with a per-example gradient
// callback; both network shapes share the optimizer and stopping rule.
template <typename LossGrad>
void adagrad_train(std::vector<double>& params, const std::vector<CalibrationExample>& examples,
                   const TrainingMeta& meta, Rng& rng, LossGrad&& loss_grad,
                   const char* what) {
    const std::size_t m = examples.size();
    std::vector<double> accum(params.size(), 0.0);
    std::vector<double> grad(params.size(), 0.0);
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;

    for (std::size_t epoch = 0; epoch < meta.max_epochs; ++epoch) {
        rng.shuffle(perm.data(), m);
        for (std::size_t start = 0; start < m; start += meta.batch_size) {
            const std::size_t stop = std::min(m, start + meta.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) loss_grad(params, examples[perm[k]], grad);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t p = 0; p < params.size(); ++p) {
                const double g = grad[p] * inv;
                accum[p] += g * g;
                params[p] -= meta.learning_rate * g / std::sqrt(accum[p] + meta.adagrad_epsilon);
            }
        }

        double loss = 0.0;
        for (const auto& ex : examples) {
            std::vector<double> unused;  // gradient skipped in eval mode
            loss += loss_grad(params, ex, unused);
        }
        loss /= static_cast<double>(m);
        if (!std::isfinite(loss))
            throw std::runtime_error(std::string(what) + ": non-finite training loss at epoch " +
                                     std::to_string(epoch));
        if (loss < best_loss - meta.early_stop_delta) {
            best_loss = loss;
            stall = 0;
        } else if (++stall >= meta.patience) {
            break;
        }
    }
}

// Parameter packing for ShallowNet: [w_in | b_hidden | w_out | b_out].
struct NetLayout {
    std::size_t hidden;
    std::size_t w_in_off = 0, b_hidden_off, w_out_off, b_out_off, total;

    explicit NetLayout(std::size_t h)
        : hidden(h),
          b_hidden_off(h * 7),
          w_out_off(h * 7 + h),
          b_out_off(h * 7 + h + 7 * h),
          total(h * 7 + h + 7 * h + 7) {}
};

double net_loss_grad(const NetLayout& lay, const std::vector<double>& p,
                     const CalibrationExample& ex, std::vector<double>& grad) {
    const std::size_t h = lay.hidden;
    std::vector<double> hid(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = p[lay.b_hidden_off + j];
        for (std::size_t i = 0; i < 7; ++i) z += p[lay.w_in_off + j * 7 + i] * ex.input[i];
        hid[j] = sigmoid(z);
    }
    std::array<double, 7> out;
    for (std::size_t o = 0; o < 7; ++o) {
        double z = p[lay.b_out_off + o];
        for (std::size_t j = 0; j < h; ++j) z += p[lay.w_out_off + o * h + j] * hid[j];
        out[o] = z;
    }
    softmax_in_place(out);
    const double loss = -std::log(std::max(out[ex.label], 1e-300));
    if (grad.empty()) return loss;

    std::array<double, 7> dz2 = out;
    dz2[ex.label] -= 1.0;
    std::vector<double> dh(h, 0.0);
    for (std::size_t o = 0; o < 7; ++o) {
        grad[lay.b_out_off + o] += dz2[o];
        for (std::size_t j = 0; j < h; ++j) {
            grad[lay.w_out_off + o * h + j] += dz2[o] * hid[j];
            dh[j] += p[lay.w_out_off + o * h + j] * dz2[o];
        }
    }
    for (std::size_t j = 0; j < h; ++j) {
        const double dz1 = dh[j] * hid[j] * (1.0 - hid[j]);
        grad[lay.b_hidden_off + j] += dz1;
        for (std::size_t i = 0; i < 7; ++i) grad[lay.w_in_off + j * 7 + i] += dz1 * ex.input[i];
    }
    return loss;
}

ShallowNet train_member(const std::vector<CalibrationExample>& examples, const TrainingMeta& meta,
                        std::size_t hidden, std::uint64_t member_seed) {
    const NetLayout lay(hidden);
    Rng rng(member_seed);

    std::vector<double> params(lay.total, 0.0);
    const double r_in = glorot_radius(7, hidden);
    for (std::size_t k = 0; k < hidden * 7; ++k) params[lay.w_in_off + k] = rng.uniform(-r_in, r_in);
    const double r_out = glorot_radius(hidden, 7);
    for (std::size_t k = 0; k < 7 * hidden; ++k) params[lay.w_out_off + k] = rng.uniform(-r_out, r_out);

    adagrad_train(params, examples, meta, rng,
                  [&lay](const std::vector<double>& p, const CalibrationExample& ex,
                         std::vector<double>& g) { return net_loss_grad(lay, p, ex, g); },
                  "train");

    ShallowNet net;
    net.hidden_size = hidden;
    net.w_in.assign(params.begin() + lay.w_in_off, params.begin() + lay.w_in_off + hidden * 7);
    net.b_hidden.assign(params.begin() + lay.b_hidden_off, params.begin() + lay.b_hidden_off + hidden);
    net.w_out.assign(params.begin() + lay.w_out_off, params.begin() + lay.w_out_off + 7 * hidden);
    net.b_out.assign(params.begin() + lay.b_out_off, params.begin() + lay.b_out_off + 7);
    return net;
}

}  // namespace

CalibrationModel train(const std::vector<CalibrationExample>& examples, const TrainingMeta& meta,
                       Rng& rng) {
    check_examples(examples);
    CalibrationModel model;
    model.meta = meta;
    model.members.reserve(kEnsembleSize);

    // Draw all member settings up front so member training order cannot
    // shift the stream.
    std::vector<std::pair<std::size_t, std::uint64_t>> settings;
    settings.reserve(kEnsembleSize);
    for (std::size_t m = 0; m < kEnsembleSize; ++m)
        settings.emplace_back(4 + rng.below(4), rng.next_u64());

    for (const auto& [hidden, seed] : settings)
        model.members.push_back(train_member(examples, meta, hidden, seed));
    return model;
}

std::array<double, 7> calibrate(const CalibrationModel& model, const std::array<double, 7>& input) {
    double total_in = 0.0;
    for (double v : input) total_in += v;
    if (std::abs(total_in - 1.0) > 1e-6)
        throw std::invalid_argument("calibrate: input does not sum to 1");
    if (model.members.size() != kEnsembleSize)
        throw std::invalid_argument("calibrate: model must have 10 members");

    std::array<double, 7> mean{};
    for (const auto& member : model.members) {
        const auto out = member.forward(input);
        for (std::size_t c = 0; c < 7; ++c) mean[c] += out[c];
    }
    double total = 0.0;
    for (double& v : mean) {
        v /= static_cast<double>(kEnsembleSize);
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        for (double& v : mean) v /= total;
    return mean;
}

SoftmaxModel train_softmax_baseline(const std::vector<CalibrationExample>& examples,
                                    const TrainingMeta& meta, Rng& rng) {
    check_examples(examples);
    std::vector<double> params(7 * 7 + 7, 0.0);
    const double r = glorot_radius(7, 7);
    for (std::size_t k = 0; k < 49; ++k) params[k] = rng.uniform(-r, r);

    const auto loss_grad = [](const std::vector<double>& p, const CalibrationExample& ex,
                              std::vector<double>& grad) {
        std::array<double, 7> out;
        for (std::size_t o = 0; o < 7; ++o) {
            double z = p[49 + o];
            for (std::size_t i = 0; i < 7; ++i) z += p[o * 7 + i] * ex.input[i];
            out[o] = z;
        }
        softmax_in_place(out);
        const double loss = -std::log(std::max(out[ex.label], 1e-300));
        if (grad.empty()) return loss;
        for (std::size_t o = 0; o < 7; ++o) {
            const double dz = out[o] - (static_cast<int>(o) == ex.label ? 1.0 : 0.0);
            grad[49 + o] += dz;
            for (std::size_t i = 0; i < 7; ++i) grad[o * 7 + i] += dz * ex.input[i];
        }
        return loss;
    };
    adagrad_train(params, examples, meta, rng, loss_grad, "train_softmax_baseline");

    SoftmaxModel model;
    model.w.assign(params.begin(), params.begin() + 49);
    for (std::size_t o = 0; o < 7; ++o) model.b[o] = params[49 + o];
    return model;
}

TruthOracle::TruthOracle(const CausalDag& dag, std::vector<std::uint32_t> observed_to_original,
                         const SearchConfig& config)
    : pag_(0) {
    DSepTester tester(dag, std::move(observed_to_original));
    pag_ = run_search(tester, config);
}

std::vector<EdgeClass> TruthOracle::all_labels() const {
    const std::size_t v = pag_.num_nodes();
    std::vector<EdgeClass> labels(num_pairs(v), EdgeClass::NoEdge);
    for (const auto& [i, j] : pag_.edge_list())
        labels[pair_index(i, j, v)] = pag_.classify(i, j);
    return labels;
}

EdgeClass true_edge_class(const CausalDag& dag, std::span<const std::uint32_t> latents,
                          std::uint32_t a, std::uint32_t b) {
    std::vector<bool> is_latent(dag.num_nodes(), false);
    for (std::uint32_t l : latents) is_latent[l] = true;
    if (is_latent[a] || is_latent[b])
        throw std::invalid_argument("true_edge_class: queried node is latent");

    std::vector<std::uint32_t> observed;
    std::uint32_t oa = 0, ob = 0;
    for (std::size_t n = 0; n < dag.num_nodes(); ++n) {
        if (is_latent[n]) continue;
        if (n == a) oa = static_cast<std::uint32_t>(observed.size());
        if (n == b) ob = static_cast<std::uint32_t>(observed.size());
        observed.push_back(static_cast<std::uint32_t>(n));
    }
    const TruthOracle oracle(dag, std::move(observed));
    const EdgeClass cls = oracle.true_class(oa, ob);
    // classify() reports the ascending-order pair; flip for descending queries.
    return a < b ? cls : swap_edge_class(cls);
}

namespace {

constexpr int kNumBins = 5;

int bin_of(double p) {
    const int b = static_cast<int>(p * kNumBins);
    return std::clamp(b, 0, kNumBins - 1);  // p == 1 joins the last bin
}

// Distributes `deficit` units over bins proportionally to population,
// capped by spare capacity, largest fractional remainder first.
void redistribute(std::array<std::size_t, kNumBins>& take,
                  const std::array<std::vector<std::size_t>, kNumBins>& bins, std::size_t deficit) {
    while (deficit > 0) {
        double spare_pop = 0.0;
        for (int b = 0; b < kNumBins; ++b)
            if (bins[b].size() > take[b]) spare_pop += static_cast<double>(bins[b].size());
        if (spare_pop == 0.0) return;

        std::array<double, kNumBins> want{};
        std::array<std::size_t, kNumBins> add{};
        std::size_t allocated = 0;
        for (int b = 0; b < kNumBins; ++b) {
            if (bins[b].size() <= take[b]) continue;
            want[b] = static_cast<double>(deficit) * static_cast<double>(bins[b].size()) / spare_pop;
            add[b] = std::min(static_cast<std::size_t>(want[b]), bins[b].size() - take[b]);
            allocated += add[b];
        }
        // Hand out remaining units by descending fractional part (bin index
        // breaks ties) so every pass makes progress.
        while (allocated < deficit) {
            int pick = -1;
            double best = -1.0;
            for (int b = 0; b < kNumBins; ++b) {
                if (bins[b].size() <= take[b] + add[b]) continue;
                const double frac = want[b] - static_cast<double>(add[b]);
                if (frac > best) {
                    best = frac;
                    pick = b;
                }
            }
            if (pick < 0) break;
            ++add[pick];
            ++allocated;
        }
        if (allocated == 0) return;
        for (int b = 0; b < kNumBins; ++b) take[b] += add[b];
        deficit -= std::min(deficit, allocated);
    }
}

}  // namespace

SplitResult stratified_sample(const ProbTable& table, const std::vector<EdgeClass>& labels,
                              std::size_t n_train, Rng& rng) {
    if (n_train % 7 != 0) throw std::invalid_argument("stratified_sample: N must be divisible by 7");
    if (labels.size() != table.probs.size())
        throw std::invalid_argument("stratified_sample: label/table size mismatch");
    if (labels.size() < n_train)
        throw std::runtime_error("stratified_sample: fewer pairs than N (degenerate simulation)");
    const std::size_t per_class = n_train / 7;

    SplitResult result;
    std::vector<bool> taken(labels.size(), false);

    // Selection depends only on the bootstrap scores, never on labels; the
    // truth of a pair is looked up after it is chosen. That keeps the chosen
    // labels conditionally unbiased given the inputs, which is what lets
    // cross-entropy training produce calibrated conditionals.
    for (int cls = 0; cls < kNumEdgeClasses; ++cls) {
        // All still-unselected pairs, binned by their class-`cls` score.
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < labels.size(); ++p)
            if (!taken[p]) members.push_back(p);
        std::stable_sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
            return table.probs[x][cls] < table.probs[y][cls];
        });

        std::array<std::vector<std::size_t>, kNumBins> bins;
        for (std::size_t p : members) bins[bin_of(table.probs[p][cls])].push_back(p);

        // Base quota: the class share split as evenly as possible over bins.
        std::array<std::size_t, kNumBins> quota{};
        for (int b = 0; b < kNumBins; ++b)
            quota[b] = per_class / kNumBins + (static_cast<std::size_t>(b) < per_class % kNumBins ? 1 : 0);

        std::array<std::size_t, kNumBins> take{};
        std::size_t deficit = 0;
        for (int b = 0; b < kNumBins; ++b) {
            take[b] = std::min(quota[b], bins[b].size());
            deficit += quota[b] - take[b];
        }
        if (deficit > 0) redistribute(take, bins, deficit);

        for (int b = 0; b < kNumBins; ++b) {
            auto& pool = bins[b];
            for (std::size_t k = 0; k < take[b]; ++k) {
                const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
                std::swap(pool[k], pool[j]);
                const std::size_t pair = pool[k];
                taken[pair] = true;
                result.train_pairs.push_back(pair);
                result.train.push_back({table.probs[pair], static_cast<int>(labels[pair])});
            }
        }
    }

    for (std::size_t p = 0; p < labels.size(); ++p)
        if (!taken[p]) result.test_pairs.push_back(p);
    return result;
}

std::string model_to_json(const CalibrationModel& model) {
    nlohmann::json j;
    j["training_meta"] = {{"learning_rate", model.meta.learning_rate},
                          {"batch_size", model.meta.batch_size},
                          {"max_epochs", model.meta.max_epochs},
                          {"early_stop_delta", model.meta.early_stop_delta},
                          {"patience", model.meta.patience},
                          {"adagrad_epsilon", model.meta.adagrad_epsilon},
                          {"seed", model.meta.seed}};
    auto& members = j["members"];
    members = nlohmann::json::array();
    for (const auto& net : model.members) {
        members.push_back({{"hidden_size", net.hidden_size},
                           {"w_in", net.w_in},
                           {"b_hidden", net.b_hidden},
                           {"w_out", net.w_out},
                           {"b_out", net.b_out}});
    }
    return j.dump(2);
}

CalibrationModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CalibrationModel model;
    const auto& meta = j.at("training_meta");
    model.meta.learning_rate = meta.at("learning_rate").get<double>();
    model.meta.batch_size = meta.at("batch_size").get<std::size_t>();
    model.meta.max_epochs = meta.at("max_epochs").get<std::size_t>();
    model.meta.early_stop_delta = meta.at("early_stop_delta").get<double>();
    model.meta.patience = meta.at("patience").get<std::size_t>();
    model.meta.adagrad_epsilon = meta.at("adagrad_epsilon").get<double>();
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("members")) {
        ShallowNet net;
        net.hidden_size = m.at("hidden_size").get<std::size_t>();
        net.w_in = m.at("w_in").get<std::vector<double>>();
        net.b_hidden = m.at("b_hidden").get<std::vector<double>>();
        net.w_out = m.at("w_out").get<std::vector<double>>();
        net.b_out = m.at("b_out").get<std::vector<double>>();
        model.members.push_back(std::move(net));
    }
    return model;
}

}  // namespace causalcal
