#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalcal/bootstrap.hpp"
#include "causalcal/graph.hpp"
#include "causalcal/rng.hpp"
#include "causalcal/search.hpp"

namespace causalcal {

struct CalibrationExample {
    std::array<double, 7> input;  // bootstrap probabilities
    int label;                    // true edge class, 0..6
};

// One hidden layer of logistic-sigmoid units, softmax output.
struct ShallowNet {
    std::size_t hidden_size = 0;
    std::vector<double> w_in;     // hidden_size x 7, row-major
    std::vector<double> b_hidden; // hidden_size
    std::vector<double> w_out;    // 7 x hidden_size, row-major
    std::vector<double> b_out;    // 7

    std::array<double, 7> forward(const std::array<double, 7>& input) const;
};

struct TrainingMeta {
    double learning_rate = 0.1;
    std::size_t batch_size = 10;
    std::size_t max_epochs = 500;
    // Stop once the epoch loss has not improved by more than this for
    // `patience` consecutive epochs.
    double early_stop_delta = 1e-6;
    std::size_t patience = 25;
    double adagrad_epsilon = 1e-8;
    std::uint64_t seed = 0;
};

struct CalibrationModel {
    std::vector<ShallowNet> members;  // exactly 10
    TrainingMeta meta;
};

inline constexpr std::size_t kEnsembleSize = 10;

// Trains the 10-member ensemble: hidden sizes drawn uniformly from {4,5,6,7}
// per member, independent initializations (uniform [-r, r] with
// r = sqrt(6 / (fan_in + fan_out)), zero biases), mini-batch adagrad on mean
// cross-entropy (step = lr * g / sqrt(G + eps)). The rng drives hidden-size
// and per-member seed draws; training itself is sequential and deterministic.
CalibrationModel train(const std::vector<CalibrationExample>& examples, const TrainingMeta& meta,
                       Rng& rng);

// Mean of the member outputs. Renormalized only if the sum drifts from 1 by
// more than 1e-9 (it cannot, up to rounding).
std::array<double, 7> calibrate(const CalibrationModel& model, const std::array<double, 7>& input);

// 7 -> 7 affine + softmax, same optimizer; the linear baseline.
struct SoftmaxModel {
    std::vector<double> w;  // 7 x 7, row-major
    std::array<double, 7> b{};

    std::array<double, 7> forward(const std::array<double, 7>& input) const;
};

SoftmaxModel train_softmax_baseline(const std::vector<CalibrationExample>& examples,
                                    const TrainingMeta& meta, Rng& rng);

// Ground-truth edge classes: the PAG produced by the orientation phase run
// on the d-separation oracle of the marginal model over observed nodes.
class TruthOracle {
public:
    TruthOracle(const CausalDag& dag, std::vector<std::uint32_t> observed_to_original,
                const SearchConfig& config = {});

    // Arguments are observed-variable indices.
    EdgeClass true_class(std::uint32_t a, std::uint32_t b) const { return pag_.classify(a, b); }
    const Pag& pag() const { return pag_; }
    // Labels for every pair, indexed by pair_index.
    std::vector<EdgeClass> all_labels() const;

private:
    Pag pag_;
};

// Convenience for single queries; a and b are original node indices and must
// be observed (not in latents).
EdgeClass true_edge_class(const CausalDag& dag, std::span<const std::uint32_t> latents,
                          std::uint32_t a, std::uint32_t b);

struct SplitResult {
    std::vector<CalibrationExample> train;
    std::vector<std::size_t> train_pairs;  // pair indices, parallel to train
    std::vector<std::size_t> test_pairs;   // everything else, ascending
};

// Stratified calibration split. For each of the seven edge classes the
// not-yet-selected pairs are sorted by their bootstrap score for that class
// and partitioned into the five fixed bins {[0,.2), [.2,.4), [.4,.6),
// [.6,.8), [.8,1]}; an equal share of the class quota N/7 is drawn uniformly
// from each bin, and the drawn pair's oracle label becomes the example
// label. Selection never looks at labels (truth is obtained only for the
// chosen pairs), which keeps the labels conditionally unbiased given the
// inputs. Underfull bins hand their deficit to the remaining bins of the
// same class proportionally to bin population. Fewer pairs than N throws.
SplitResult stratified_sample(const ProbTable& table, const std::vector<EdgeClass>& labels,
                              std::size_t n_train, Rng& rng);

// JSON round trip for trained models (per-member hidden size and weights,
// full precision, plus training meta).
std::string model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const std::string& text);

}  // namespace causalcal
