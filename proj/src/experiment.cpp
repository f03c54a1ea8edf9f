#include "causalcal/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "causalcal/bootstrap.hpp"
#include "causalcal/textio.hpp"

namespace causalcal {

using nlohmann::json;

void ExperimentConfig::validate() const {
    sim.validate();
    if (bootstrap_replicates < 1) throw std::invalid_argument("config: bootstrap_replicates >= 1");
    if (replications < 1) throw std::invalid_argument("config: replications >= 1");
    if (alphas.empty()) throw std::invalid_argument("config: at least one alpha");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("config: alpha must be in (0,1)");
    if (calibration_sizes.empty()) throw std::invalid_argument("config: at least one calibration size");
    for (std::size_t n : calibration_sizes)
        if (n % 7 != 0) throw std::invalid_argument("config: calibration sizes must be divisible by 7");
    if (mce_bin_capacity < 1) throw std::invalid_argument("config: mce_bin_capacity >= 1");
    if (output_dir.empty()) throw std::invalid_argument("config: output_dir required");
}

namespace {

template <typename T>
void read_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        read_if_present(s, "num_nodes", c.sim.num_nodes);
        read_if_present(s, "num_edges", c.sim.num_edges);
        read_if_present(s, "sample_size", c.sim.sample_size);
        read_if_present(s, "hidden_fraction", c.sim.hidden_fraction);
        if (s.contains("variance_range")) {
            c.sim.variance_lo = s.at("variance_range").at(0).get<double>();
            c.sim.variance_hi = s.at("variance_range").at(1).get<double>();
        }
        if (s.contains("coeff_magnitude_range")) {
            c.sim.coeff_lo = s.at("coeff_magnitude_range").at(0).get<double>();
            c.sim.coeff_hi = s.at("coeff_magnitude_range").at(1).get<double>();
        }
    }
    if (j.contains("bootstrap")) {
        const auto& b = j.at("bootstrap");
        read_if_present(b, "num_replicates", c.bootstrap_replicates);
        read_if_present(b, "max_conditioning_size", c.max_conditioning_size);
        read_if_present(b, "dense_threshold", c.dense_threshold);
    }
    read_if_present(j, "alphas", c.alphas);
    read_if_present(j, "calibration_sizes", c.calibration_sizes);
    read_if_present(j, "replications", c.replications);
    read_if_present(j, "mce_bin_capacity", c.mce_bin_capacity);
    read_if_present(j, "jobs", c.jobs);
    read_if_present(j, "master_seed", c.master_seed);
    std::string out_dir;
    read_if_present(j, "output_dir", out_dir);
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (j.contains("training")) {
        const auto& t = j.at("training");
        read_if_present(t, "learning_rate", c.training.learning_rate);
        read_if_present(t, "batch_size", c.training.batch_size);
        read_if_present(t, "max_epochs", c.training.max_epochs);
        read_if_present(t, "early_stop_delta", c.training.early_stop_delta);
        read_if_present(t, "patience", c.training.patience);
        read_if_present(t, "adagrad_epsilon", c.training.adagrad_epsilon);
    }
    c.validate();
    return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
    json j;
    j["sim"] = {{"num_nodes", c.sim.num_nodes},
                {"num_edges", c.sim.num_edges},
                {"sample_size", c.sim.sample_size},
                {"hidden_fraction", c.sim.hidden_fraction},
                {"variance_range", {c.sim.variance_lo, c.sim.variance_hi}},
                {"coeff_magnitude_range", {c.sim.coeff_lo, c.sim.coeff_hi}}};
    j["bootstrap"] = {{"num_replicates", c.bootstrap_replicates},
                      {"dense_threshold", c.dense_threshold}};
    if (c.max_conditioning_size != std::numeric_limits<std::size_t>::max())
        j["bootstrap"]["max_conditioning_size"] = c.max_conditioning_size;
    else
        j["bootstrap"]["max_conditioning_size"] = nullptr;
    j["alphas"] = c.alphas;
    j["calibration_sizes"] = c.calibration_sizes;
    j["replications"] = c.replications;
    j["mce_bin_capacity"] = c.mce_bin_capacity;
    j["jobs"] = c.jobs;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir.string();
    j["training"] = {{"learning_rate", c.training.learning_rate},
                     {"batch_size", c.training.batch_size},
                     {"max_epochs", c.training.max_epochs},
                     {"early_stop_delta", c.training.early_stop_delta},
                     {"patience", c.training.patience},
                     {"adagrad_epsilon", c.training.adagrad_epsilon}};
    return j.dump(2) + "\n";
}

namespace paths {

std::filesystem::path rep_dir(const ExperimentConfig& c, std::size_t rep) {
    char name[16];
    std::snprintf(name, sizeof name, "rep_%03zu", rep);
    return c.output_dir / name;
}

std::filesystem::path alpha_dir(const ExperimentConfig& c, std::size_t rep, std::size_t alpha_idx) {
    return rep_dir(c, rep) / ("alpha_" + format_double(c.alphas.at(alpha_idx)));
}

std::filesystem::path n_dir(const ExperimentConfig& c, std::size_t rep, std::size_t alpha_idx,
                            std::size_t n_idx) {
    return alpha_dir(c, rep, alpha_idx) /
           ("N_" + std::to_string(c.calibration_sizes.at(n_idx)));
}

}  // namespace paths

std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t rep) {
    return mix_seed(config.master_seed, 1000 + rep);
}

std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

SearchConfig make_search_config(const ExperimentConfig& c, double alpha) {
    SearchConfig s;
    s.alpha = alpha;
    s.max_conditioning_size = c.max_conditioning_size;
    return s;
}

Dataset load_dataset(const ExperimentConfig& c, std::size_t rep) {
    std::ifstream in(paths::rep_dir(c, rep) / "dataset.csv");
    if (!in) throw std::runtime_error("missing dataset.csv; run the simulate stage first");
    return parse_dataset_csv(in);
}

std::vector<EdgeClass> load_truth_labels(const ExperimentConfig& c, std::size_t rep,
                                         std::size_t num_observed) {
    std::ifstream in(paths::rep_dir(c, rep) / "truth_pag.txt");
    if (!in) throw std::runtime_error("missing truth_pag.txt; run the simulate stage first");
    const Pag pag = parse_pag(in, num_observed);
    std::vector<EdgeClass> labels(num_pairs(num_observed), EdgeClass::NoEdge);
    for (const auto& [i, j] : pag.edge_list()) labels[pair_index(i, j, num_observed)] = pag.classify(i, j);
    return labels;
}

ProbTable load_prob_table(const ExperimentConfig& c, std::size_t rep, std::size_t alpha_idx) {
    std::ifstream in(paths::alpha_dir(c, rep, alpha_idx) / "distributions.csv");
    if (!in) throw std::runtime_error("missing distributions.csv; run the bootstrap stage first");
    return parse_distribution_csv(in);
}

struct SplitFile {
    std::vector<std::size_t> train_pairs;
    std::vector<int> train_labels;
    std::vector<std::size_t> test_pairs;
};

SplitFile load_split(const std::filesystem::path& dir) {
    const json j = json::parse(read_file(dir / "split.json"));
    SplitFile s;
    s.train_pairs = j.at("train_pairs").get<std::vector<std::size_t>>();
    s.train_labels = j.at("train_labels").get<std::vector<int>>();
    s.test_pairs = j.at("test_pairs").get<std::vector<std::size_t>>();
    return s;
}

}  // namespace

void stage_simulate(const ExperimentConfig& config, std::size_t rep) {
    const auto dir = paths::rep_dir(config, rep);
    std::filesystem::create_directories(dir);

    SimConfig sim = config.sim;
    sim.seed = mix_seed(replication_seed(config, rep), 1);
    const SimulatedInstance inst = simulate(sim);

    {
        std::ostringstream out;
        write_dataset_csv(out, inst.data);
        write_file_atomic(dir / "dataset.csv", out.str());
    }
    {
        std::ostringstream out;
        write_dag(out, inst.dag);
        write_file_atomic(dir / "dag.txt", out.str());
    }
    {
        std::vector<std::uint32_t> observed = inst.data.provenance;
        const TruthOracle oracle(inst.dag, std::move(observed));
        write_file_atomic(dir / "truth_pag.txt", pag_to_string(oracle.pag()));
    }
}

void stage_bootstrap(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx) {
    const auto dir = paths::alpha_dir(config, rep, alpha_idx);
    std::filesystem::create_directories(dir);
    const Dataset data = load_dataset(config, rep);

    BootstrapConfig bc;
    bc.num_replicates = config.bootstrap_replicates;
    bc.search = make_search_config(config, config.alphas[alpha_idx]);
    bc.seed = mix_seed(mix_seed(replication_seed(config, rep), 2), alpha_idx);
    bc.parallelism = config.jobs;
    bc.dense_threshold = config.dense_threshold;
    bc.checkpoint_dir = dir / "pags";

    BootstrapDiagnostics diag;
    const DistributionTable table = estimate_distributions(data, bc, {}, &diag);

    std::ostringstream csv;
    write_distribution_csv(csv, table);
    const std::string csv_text = csv.str();
    write_file_atomic(dir / "distributions.csv", csv_text);

    std::ostringstream data_csv;
    write_dataset_csv(data_csv, data);
    json meta;
    meta["num_replicates"] = bc.num_replicates;
    meta["alpha"] = config.alphas[alpha_idx];
    meta["seed"] = bc.seed;
    meta["dataset_hash"] = content_hash(data_csv.str());
    meta["diagnostics"] = {{"ci_tests", diag.ci_tests},
                           {"clamped_correlations", diag.clamped_correlations},
                           {"orientation_removals", diag.orientation_removals},
                           {"replicates_loaded_from_checkpoint",
                            diag.replicates_loaded_from_checkpoint}};
    write_file_atomic(dir / "bootstrap_meta.json", meta.dump(2) + "\n");
}

void stage_split(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                 std::size_t n_idx) {
    const auto dir = paths::n_dir(config, rep, alpha_idx, n_idx);
    std::filesystem::create_directories(dir);
    const ProbTable table = load_prob_table(config, rep, alpha_idx);
    const auto labels = load_truth_labels(config, rep, table.num_vars);
    const std::size_t n_train = config.calibration_sizes[n_idx];

    Rng rng(mix_seed(mix_seed(mix_seed(replication_seed(config, rep), 3), alpha_idx), n_train));
    const SplitResult split = stratified_sample(table, labels, n_train, rng);

    json j;
    j["train_pairs"] = split.train_pairs;
    std::vector<int> train_labels;
    train_labels.reserve(split.train.size());
    for (const auto& ex : split.train) train_labels.push_back(ex.label);
    j["train_labels"] = train_labels;
    j["test_pairs"] = split.test_pairs;
    write_file_atomic(dir / "split.json", j.dump() + "\n");
}

void stage_calibrate(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                     std::size_t n_idx) {
    const auto dir = paths::n_dir(config, rep, alpha_idx, n_idx);
    const ProbTable table = load_prob_table(config, rep, alpha_idx);
    const SplitFile split = load_split(dir);

    std::vector<CalibrationExample> examples;
    examples.reserve(split.train_pairs.size());
    for (std::size_t k = 0; k < split.train_pairs.size(); ++k)
        examples.push_back({table.probs.at(split.train_pairs[k]), split.train_labels.at(k)});

    TrainingMeta meta = config.training;
    meta.seed = mix_seed(mix_seed(mix_seed(replication_seed(config, rep), 4), alpha_idx),
                         config.calibration_sizes[n_idx]);
    Rng rng(meta.seed);
    const CalibrationModel model = train(examples, meta, rng);
    write_file_atomic(dir / "model.json", model_to_json(model) + "\n");
}

void stage_evaluate(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                    std::size_t n_idx) {
    const auto dir = paths::n_dir(config, rep, alpha_idx, n_idx);
    const ProbTable table = load_prob_table(config, rep, alpha_idx);
    const auto labels = load_truth_labels(config, rep, table.num_vars);
    const SplitFile split = load_split(dir);
    const CalibrationModel model = model_from_json(read_file(dir / "model.json"));

    std::vector<std::array<double, 7>> before, after;
    std::vector<EdgeClass> truths;
    before.reserve(split.test_pairs.size());
    after.reserve(split.test_pairs.size());
    truths.reserve(split.test_pairs.size());
    for (const std::size_t p : split.test_pairs) {
        before.push_back(table.probs.at(p));
        after.push_back(calibrate(model, before.back()));
        truths.push_back(labels.at(p));
    }

    const MetricsReport report_before = evaluate_metrics(before, truths, config.mce_bin_capacity);
    const MetricsReport report_after = evaluate_metrics(after, truths, config.mce_bin_capacity);
    write_file_atomic(dir / "metrics_before.json", metrics_to_json(report_before) + "\n");
    write_file_atomic(dir / "metrics_after.json", metrics_to_json(report_after) + "\n");
    write_file_atomic(dir / "reliability_before.csv", reliability_csv(report_before));
    write_file_atomic(dir / "reliability_after.csv", reliability_csv(report_after));
}

namespace {

struct PairedReports {
    std::vector<MetricsReport> before;
    std::vector<MetricsReport> after;
    std::vector<std::size_t> reps;
};

PairedReports load_pairs(const ExperimentConfig& c, std::size_t alpha_idx, std::size_t n_idx) {
    PairedReports out;
    for (std::size_t rep = 0; rep < c.replications; ++rep) {
        const auto dir = paths::n_dir(c, rep, alpha_idx, n_idx);
        const auto before_path = dir / "metrics_before.json";
        const auto after_path = dir / "metrics_after.json";
        if (!std::filesystem::exists(before_path) || !std::filesystem::exists(after_path)) continue;
        out.before.push_back(metrics_from_json(read_file(before_path)));
        out.after.push_back(metrics_from_json(read_file(after_path)));
        out.reps.push_back(rep);
    }
    return out;
}

struct MeanAcc {
    double total = 0.0;
    std::size_t used = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            total += *v;
            ++used;
        }
    }
    void add(double v) {
        total += v;
        ++used;
    }
    std::optional<double> mean() const {
        if (used == 0) return std::nullopt;
        return total / static_cast<double>(used);
    }
};

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// Per-metric extraction helpers for the significance pairing.
using MetricGetter = std::optional<double> (*)(const MetricsReport&, int type_idx);

std::optional<double> get_precision(const MetricsReport& r, int t) {
    return r.per_type[t].prf1.precision;
}
std::optional<double> get_recall(const MetricsReport& r, int t) { return r.per_type[t].prf1.recall; }
std::optional<double> get_f1(const MetricsReport& r, int t) { return r.per_type[t].prf1.f1; }
std::optional<double> get_mce(const MetricsReport& r, int t) { return r.per_type[t].mce; }
std::optional<double> get_overall(const MetricsReport& r, int) { return r.overall_mce; }

SignificanceRow make_row(const std::string& type, const std::string& metric, bool lower_is_better,
                         const std::vector<MetricsReport>& before,
                         const std::vector<MetricsReport>& after, MetricGetter getter, int t) {
    SignificanceRow row;
    row.type = type;
    row.metric = metric;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < before.size(); ++i) {
        const auto b = getter(before[i], t);
        const auto a = getter(after[i], t);
        if (b && a) {
            xs.push_back(*b);
            ys.push_back(*a);
        }
    }
    row.pairs_used = xs.size();
    if (xs.empty()) return row;
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(xs.size());
    mean_y /= static_cast<double>(xs.size());
    if (mean_x != mean_y)
        row.better = (lower_is_better ? (mean_y < mean_x) : (mean_y > mean_x)) ? "after" : "before";

    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) nonzero += xs[i] != ys[i];
    if (nonzero >= 5) {
        const auto result = wilcoxon_signed_rank(xs, ys);
        row.p_value = result.p_value;
        row.significant = !result.degenerate && result.p_value < 0.05;
    }
    return row;
}

}  // namespace

std::vector<SignificanceRow> compare_before_after(const std::vector<MetricsReport>& before,
                                                  const std::vector<MetricsReport>& after) {
    if (before.size() != after.size())
        throw std::invalid_argument("compare_before_after: unpaired reports");
    std::vector<SignificanceRow> rows;
    for (int t = 0; t < kNumMergedTypes; ++t) {
        const std::string type = merged_type_name(static_cast<MergedEdgeType>(t));
        rows.push_back(make_row(type, "precision", false, before, after, get_precision, t));
        rows.push_back(make_row(type, "recall", false, before, after, get_recall, t));
        rows.push_back(make_row(type, "f1", false, before, after, get_f1, t));
        rows.push_back(make_row(type, "mce", true, before, after, get_mce, t));
    }
    rows.push_back(make_row("overall", "mce", true, before, after, get_overall, 0));
    return rows;
}

void stage_report(const ExperimentConfig& config) {
    const auto agg_dir = config.output_dir / "aggregate";
    std::filesystem::create_directories(agg_dir);

    std::ostringstream table;
    table << "alpha,N,method,type,precision,recall,f1,mce,precision_n,recall_n,f1_n,mce_n,"
             "replications_used\n";
    std::ostringstream sig;
    sig << "alpha,N,type,metric,pairs_used,p_value,significant,better\n";

    // One wide row per (config, replication, method), Table-1 shaped.
    std::ostringstream flat;
    flat << "alpha,N,replication,method";
    for (int t = 0; t < kNumMergedTypes - 1; ++t) {
        const char* name = merged_type_name(static_cast<MergedEdgeType>(t));
        flat << ',' << name << "_precision," << name << "_recall," << name << "_f1," << name
             << "_mce";
    }
    flat << ",no_edge_mce,overall_mce\n";

    for (std::size_t ai = 0; ai < config.alphas.size(); ++ai) {
        for (std::size_t ni = 0; ni < config.calibration_sizes.size(); ++ni) {
            const PairedReports pairs = load_pairs(config, ai, ni);
            if (pairs.before.empty()) continue;

            for (std::size_t k = 0; k < pairs.reps.size(); ++k) {
                const auto emit_flat = [&](const char* method, const MetricsReport& rep) {
                    flat << format_double(config.alphas[ai]) << ',' << config.calibration_sizes[ni]
                         << ',' << pairs.reps[k] << ',' << method;
                    for (int t = 0; t < kNumMergedTypes - 1; ++t) {
                        const auto& e = rep.per_type[t];
                        flat << ',' << opt_str(e.prf1.precision) << ',' << opt_str(e.prf1.recall)
                             << ',' << opt_str(e.prf1.f1) << ',' << format_double(e.mce);
                    }
                    flat << ','
                         << format_double(rep.per_type[static_cast<int>(MergedEdgeType::NoEdge)].mce)
                         << ',' << format_double(rep.overall_mce) << '\n';
                };
                emit_flat("before", pairs.before[k]);
                emit_flat("after", pairs.after[k]);
            }

            const auto emit_method = [&](const char* method, const std::vector<MetricsReport>& reports) {
                for (int t = 0; t < kNumMergedTypes; ++t) {
                    MeanAcc p, r, f1, m;
                    for (const auto& rep : reports) {
                        p.add(rep.per_type[t].prf1.precision);
                        r.add(rep.per_type[t].prf1.recall);
                        f1.add(rep.per_type[t].prf1.f1);
                        m.add(rep.per_type[t].mce);
                    }
                    table << format_double(config.alphas[ai]) << ',' << config.calibration_sizes[ni]
                          << ',' << method << ',' << merged_type_name(static_cast<MergedEdgeType>(t))
                          << ',' << opt_str(p.mean()) << ',' << opt_str(r.mean()) << ','
                          << opt_str(f1.mean()) << ',' << opt_str(m.mean()) << ',' << p.used << ','
                          << r.used << ',' << f1.used << ',' << m.used << ',' << reports.size()
                          << '\n';
                }
                MeanAcc overall;
                for (const auto& rep : reports) overall.add(rep.overall_mce);
                table << format_double(config.alphas[ai]) << ',' << config.calibration_sizes[ni]
                      << ',' << method << ",overall,,,," << opt_str(overall.mean()) << ",,,,"
                      << overall.used << ',' << reports.size() << '\n';
            };
            emit_method("before", pairs.before);
            emit_method("after", pairs.after);

            for (const auto& row : compare_before_after(pairs.before, pairs.after)) {
                sig << format_double(config.alphas[ai]) << ',' << config.calibration_sizes[ni] << ','
                    << row.type << ',' << row.metric << ',' << row.pairs_used << ','
                    << opt_str(row.p_value) << ',' << (row.significant ? "yes" : "no") << ','
                    << row.better << '\n';
            }
        }
    }
    write_file_atomic(agg_dir / "table.csv", table.str());
    write_file_atomic(agg_dir / "significance.csv", sig.str());
    write_file_atomic(agg_dir / "metrics_flat.csv", flat.str());
}

namespace {

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

    template <typename Fn>
    void run(const std::string& label, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        sink_.emplace_back(label, elapsed.count());
    }

private:
    std::vector<std::pair<std::string, double>>& sink_;
};

void collect_artifacts(const std::filesystem::path& root, std::vector<std::string>& out) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file())
            out.push_back(std::filesystem::relative(entry.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    const std::string resolved = config_to_json_text(config);
    write_file_atomic(config.output_dir / "resolved_config.json", resolved);

    RunManifest manifest;
    manifest.config_hash = content_hash(resolved);
    manifest.tool_version = kToolVersion;
    StageTimer timer(manifest.timings_seconds);

    for (std::size_t rep = 0; rep < config.replications; ++rep) {
        manifest.replication_seeds.push_back(replication_seed(config, rep));
        ReplicationStatus status;
        status.replication = rep;
        const std::string tag = "rep_" + std::to_string(rep);
        try {
            timer.run(tag + "/simulate", [&] { stage_simulate(config, rep); });
            for (std::size_t ai = 0; ai < config.alphas.size(); ++ai) {
                timer.run(tag + "/bootstrap", [&] { stage_bootstrap(config, rep, ai); });
                for (std::size_t ni = 0; ni < config.calibration_sizes.size(); ++ni) {
                    timer.run(tag + "/split", [&] { stage_split(config, rep, ai, ni); });
                    timer.run(tag + "/calibrate", [&] { stage_calibrate(config, rep, ai, ni); });
                    timer.run(tag + "/evaluate", [&] { stage_evaluate(config, rep, ai, ni); });
                }
            }
            status.ok = true;
        } catch (const std::exception& e) {
            status.ok = false;
            status.error = e.what();
        }
        manifest.statuses.push_back(status);
    }

    timer.run("report", [&] { stage_report(config); });
    collect_artifacts(config.output_dir, manifest.artifacts);

    json j;
    j["config_hash"] = manifest.config_hash;
    j["tool_version"] = manifest.tool_version;
    j["replication_seeds"] = manifest.replication_seeds;
    json statuses = json::array();
    for (const auto& s : manifest.statuses)
        statuses.push_back({{"replication", s.replication}, {"ok", s.ok}, {"error", s.error}});
    j["replications"] = statuses;
    json timings = json::array();
    for (const auto& [label, seconds] : manifest.timings_seconds)
        timings.push_back({{"stage", label}, {"seconds", seconds}});
    j["timings"] = timings;
    j["artifacts"] = manifest.artifacts;
    write_file_atomic(config.output_dir / "manifest.json", j.dump(2) + "\n");
    manifest.artifacts.push_back("manifest.json");
    return manifest;
}

}  // namespace causalcal
