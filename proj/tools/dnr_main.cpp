// Command-line front end: loss decomposition on user-supplied logit batches,
// gradient checking, causal graph queries, and the toy few-shot experiments.
//
// Exit codes:
//   0  success
//   2  input could not be parsed (command line, batch file, graph, config)
//   3  validation failure (bad values, shapes, capacity limits)
//   4  conditioning on a zero-probability event
//   5  training diverged
//   6  a requested check failed (gradient check over tolerance)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnr/causal.hpp"
#include "dnr/errors.hpp"
#include "dnr/fixtures.hpp"
#include "dnr/formats.hpp"
#include "dnr/kd.hpp"
#include "dnr/prob.hpp"
#include "dnr/rng.hpp"
#include "dnr/scm.hpp"
#include "dnr/stats.hpp"
#include "dnr/toy.hpp"
#include "json.hpp"

namespace {

using dnr::Matrix;
using dnr::Rng;
using dnr::Temperature;
using dnr::formats::format_double;
using dnr::formats::OutputFormat;
using dnr::formats::TableDoc;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitConditioning = 4;
constexpr int kExitTraining = 5;
constexpr int kExitCheckFailed = 6;

// Thrown after a report is emitted when a check did not pass.
struct check_failure {};

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

struct OutputOptions {
    std::string format;  // empty: table on the terminal, records when --out is given
    std::string out_path;
};

void add_output_flags(CLI::App* cmd, OutputOptions& opt) {
    cmd->add_option("--format", opt.format, "Output format: table, csv, or records")
        ->check(CLI::IsMember({"table", "csv", "records"}));
    cmd->add_option("--out", opt.out_path,
                    "Write the document to this file (default format becomes records)");
}

void emit(const TableDoc& doc, const OutputOptions& opt) {
    const OutputFormat format =
        opt.format.empty()
            ? (opt.out_path.empty() ? OutputFormat::table : OutputFormat::records)
            : dnr::formats::parse_output_format(opt.format);
    const std::string rendered = dnr::formats::render(doc, format);
    if (opt.out_path.empty()) {
        std::cout << rendered;
    } else {
        dnr::formats::write_text_file(opt.out_path, rendered);
        std::cout << "wrote " << opt.out_path << "\n";
    }
}

json num(double v) { return json(v); }

// ---------------------------------------------------------------------------
// Hyperparameter flags shared by several subcommands
// ---------------------------------------------------------------------------

struct HyperFlags {
    std::optional<std::string> preset;
    std::optional<double> alpha, beta, temperature, lambda;
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& h) {
    cmd->add_option("--preset", h.preset, "Hyperparameter preset: coco or voc")
        ->check(CLI::IsMember({"coco", "voc"}));
    cmd->add_option("--alpha", h.alpha, "Weight of the foreground binary term");
    cmd->add_option("--beta", h.beta, "Weight of the background binary term");
    cmd->add_option("--temperature,-T", h.temperature, "Softmax temperature (> 0)");
    cmd->add_option("--lambda", h.lambda, "Distillation weight used by the trainer");
}

dnr::kd::DnRHyperparams resolve_hyper(const HyperFlags& flags,
                                      dnr::kd::DnRHyperparams base) {
    if (flags.preset) {
        base = *flags.preset == "voc" ? dnr::kd::DnRHyperparams::voc()
                                      : dnr::kd::DnRHyperparams::coco();
    }
    if (flags.alpha) base.alpha = *flags.alpha;
    if (flags.beta) base.beta = *flags.beta;
    if (flags.temperature) base.temperature = Temperature{*flags.temperature};
    if (flags.lambda) base.loss_weight_lambda = *flags.lambda;
    return base;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input;
    HyperFlags hyper;
    OutputOptions out;
};

void run_decompose(const DecomposeArgs& args) {
    const dnr::kd::SampleBatch batch =
        dnr::formats::parse_batch_jsonl(dnr::formats::read_text_file(args.input));
    const dnr::kd::DnRHyperparams h =
        resolve_hyper(args.hyper, dnr::kd::DnRHyperparams::coco());
    const dnr::kd::LossDecomposition dec = dnr::kd::decompose(batch, h.temperature);

    TableDoc doc;
    doc.columns = {"sample",  "role",        "label",        "vanilla",      "tdd",
                   "fbd_pos", "fcd_pos",     "fbd_neg",      "fcd_neg",      "p_not_target",
                   "p_fg_pos", "p_fg_neg",   "residual",     "dnr_loss"};
    double max_residual = 0.0;
    for (std::size_t i = 0; i < dec.samples.size(); ++i) {
        const dnr::kd::SampleTerms& s = dec.samples[i];
        const double recombined =
            s.foreground
                ? s.tdd + s.p_not_target * s.fbd_pos + s.p_not_target * s.p_not_bg_pos * s.fcd_pos
                : s.fbd_neg + s.p_not_bg_neg * s.fcd_neg;
        const double residual = s.vanilla_kd - recombined;
        max_residual = std::max(max_residual, std::abs(residual));
        doc.add_row({json(static_cast<std::int64_t>(i)), json(s.foreground ? "fg" : "bg"),
                     batch.labels[i] == dnr::kd::kBackground ? json("bg") : json(batch.labels[i]),
                     num(s.vanilla_kd), num(s.tdd), num(s.fbd_pos), num(s.fcd_pos), num(s.fbd_neg),
                     num(s.fcd_neg), num(s.p_not_target), num(s.p_not_bg_pos), num(s.p_not_bg_neg),
                     num(residual), json()});
    }
    const dnr::kd::BatchAggregates& agg = dec.batch;
    doc.add_row({json("batch"), json(), json(), num(agg.vanilla_all), num(agg.tdd),
                 num(agg.fbd_pos_weighted), num(agg.fcd_pos_weighted), num(agg.fbd_neg),
                 num(agg.fcd_neg_weighted), json(), json(), json(), num(max_residual),
                 num(dnr::kd::dnr_loss(dec, h))});
    emit(doc, args.out);
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckArgs {
    std::uint64_t seed = 0;
    std::size_t trials = 100;
    double step = 1e-5;
    double tolerance = 1e-5;
    HyperFlags hyper;
    OutputOptions out;
};

double max_relative_error(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double scale = std::max({1.0, std::abs(a.data[k]), std::abs(b.data[k])});
        worst = std::max(worst, std::abs(a.data[k] - b.data[k]) / scale);
    }
    return worst;
}

void run_gradcheck(const GradcheckArgs& args) {
    const dnr::kd::DnRHyperparams base =
        resolve_hyper(args.hyper, dnr::kd::DnRHyperparams::coco());
    constexpr double kTemps[3] = {1.0, 5.0, 10.0};

    Rng rng(args.seed);
    TableDoc doc;
    doc.columns = {"trial", "rows", "classes", "temperature", "max_rel_error"};
    double worst = 0.0;
    for (std::size_t trial = 0; trial < args.trials; ++trial) {
        dnr::kd::RandomBatchSpec spec;
        // Sprinkle in the smallest class counts, where restricted groups
        // collapse and the loss must fall back to exact zeros.
        if (trial % 5 == 3) spec.min_classes = spec.max_classes = 3;
        if (trial % 5 == 4) spec.min_classes = spec.max_classes = 2;
        const dnr::kd::SampleBatch batch = dnr::kd::random_batch(rng, spec);

        dnr::kd::DnRHyperparams h = base;
        if (!args.hyper.temperature) h.temperature = Temperature{kTemps[trial % 3]};

        const dnr::kd::LossGradient analytic = dnr::kd::dnr_gradient(batch, h);
        const dnr::kd::LossGradient numeric = dnr::kd::finite_difference_gradient(
            [](const dnr::kd::SampleBatch& b, const dnr::kd::DnRHyperparams& hh) {
                return dnr::kd::dnr_loss(dnr::kd::decompose(b, hh.temperature), hh);
            },
            batch, h, args.step);
        const double err = max_relative_error(analytic.d_student_logits, numeric.d_student_logits);
        worst = std::max(worst, err);
        doc.add_row({json(static_cast<std::int64_t>(trial)),
                     json(static_cast<std::int64_t>(batch.size())),
                     json(static_cast<std::int64_t>(batch.num_classes())), num(h.temperature.value),
                     num(err)});
    }
    emit(doc, args.out);
    const bool pass = worst <= args.tolerance;
    std::cout << "gradient check: " << (pass ? "PASS" : "FAIL") << " (max relative error "
              << format_double(worst) << ", tolerance " << format_double(args.tolerance) << ", "
              << args.trials << " trials)\n";
    if (!pass) throw check_failure{};
}

// ---------------------------------------------------------------------------
// causal
// ---------------------------------------------------------------------------

struct CausalArgs {
    std::string query;
    std::string node_x, node_y;
    std::string fixture, graph_file, scm_file;
    std::vector<std::string> given;
    std::vector<std::string> zset;
    std::string x_value;
    bool zset_given = false;
    OutputOptions out;
};

std::string join_names(const std::vector<std::string>& names) {
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    out += "}";
    return out;
}

std::vector<std::string> drop_empty(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    for (const std::string& s : in)
        if (!s.empty()) out.push_back(s);
    return out;
}

dnr::causal::NodeSet to_node_set(const dnr::causal::CausalDag& dag,
                                 const std::vector<std::string>& names) {
    dnr::causal::NodeSet set;
    for (const std::string& name : names) set.insert(dag.node(name));
    return set;
}

void add_classified_row(TableDoc& doc, const dnr::causal::CausalDag& dag,
                        const dnr::causal::PathClassification& cls) {
    doc.add_row({json(dnr::causal::format_path(dag, cls.path)),
                 json(dnr::causal::to_string(cls.kind)),
                 json(cls.open_given_conditioning ? "open" : "blocked"),
                 cls.confounder ? json(dag.name(*cls.confounder)) : json()});
}

void run_causal(const CausalArgs& args) {
    const bool is_adjust = args.query == "adjust";

    // Resolve the graph (and model, for adjust).
    std::optional<dnr::causal::DiscreteScm> scm;
    dnr::causal::CausalDag dag;
    if (is_adjust) {
        if (args.scm_file.empty()) {
            throw dnr::invalid_input("adjust needs --scm with a structural model file");
        }
        scm = dnr::formats::parse_scm_json(dnr::formats::read_text_file(args.scm_file));
        dag = scm->dag();
    } else {
        if (args.fixture.empty() == args.graph_file.empty()) {
            throw dnr::invalid_input("pass exactly one of --fixture or --graph");
        }
        dag = args.fixture.empty()
                  ? dnr::formats::parse_graph_text(dnr::formats::read_text_file(args.graph_file))
                  : dnr::causal::example_graph(args.fixture);
    }
    const int x = dag.node(args.node_x);
    const int y = dag.node(args.node_y);

    TableDoc doc;
    if (args.query == "dsep") {
        const std::vector<std::string> given = drop_empty(args.given);
        const dnr::causal::NodeSet z = to_node_set(dag, given);
        const bool separated = dnr::causal::is_d_separated(dag, x, y, z);
        std::cout << "dsep(" << args.node_x << ", " << args.node_y << " | " << join_names(given)
                  << ") -> " << (separated ? "d-separated" : "dependent") << "\n";
        doc.columns = {"path", "kind", "status", "confounder"};
        for (const dnr::causal::NodePath& path : dnr::causal::enumerate_paths(dag, x, y)) {
            add_classified_row(doc, dag, dnr::causal::classify_path(dag, path, z));
        }
    } else if (args.query == "backdoor") {
        if (!args.zset_given) {
            throw dnr::invalid_input(
                "backdoor needs --set (use --set \"\" for the empty adjustment set)");
        }
        const std::vector<std::string> zn = drop_empty(args.zset);
        const dnr::causal::NodeSet z = to_node_set(dag, zn);
        const bool ok = dnr::causal::satisfies_backdoor_criterion(dag, x, y, z);
        std::cout << "backdoor-criterion(" << args.node_x << ", " << args.node_y << " | "
                  << join_names(zn) << ") -> " << (ok ? "satisfied" : "violated") << "\n";
        const dnr::causal::NodeSet below_x = dag.descendants(x);
        for (const int node : z) {
            if (below_x.count(node) > 0) {
                std::cout << "note: " << dag.name(node) << " is a descendant of " << args.node_x
                          << "\n";
            }
        }
        doc.columns = {"path", "kind", "status", "confounder"};
        for (const dnr::causal::NodePath& path : dnr::causal::classic_backdoor_paths(dag, x, y)) {
            add_classified_row(doc, dag, dnr::causal::classify_path(dag, path, z));
        }
    } else if (args.query == "general-backdoor") {
        const std::vector<std::string> given = drop_empty(args.given);
        const dnr::causal::NodeSet w = to_node_set(dag, given);
        const auto paths = dnr::causal::general_backdoor_paths(dag, x, y, w);
        std::cout << "general-backdoor(" << args.node_x << ", " << args.node_y << " | "
                  << join_names(given) << ") -> " << paths.size() << " open non-causal path"
                  << (paths.size() == 1 ? "" : "s") << "\n";
        doc.columns = {"path", "kind", "status", "confounder"};
        for (const dnr::causal::PathClassification& cls : paths) {
            add_classified_row(doc, dag, cls);
        }
    } else {  // adjust
        if (!args.zset_given) {
            throw dnr::invalid_input(
                "adjust needs --set (use --set \"\" for the empty adjustment set)");
        }
        if (args.x_value.empty()) {
            throw dnr::invalid_input("adjust needs --x-value with a domain label");
        }
        std::vector<int> z;
        for (const std::string& name : drop_empty(args.zset)) z.push_back(dag.node(name));
        dnr::causal::Assignment w;
        std::vector<std::string> w_text;
        for (const std::string& pair : drop_empty(args.given)) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size()) {
                throw dnr::invalid_input("adjust --given entries must look like NODE=VALUE");
            }
            const std::string name = pair.substr(0, eq);
            const std::string label = pair.substr(eq + 1);
            const int node = dag.node(name);
            w.emplace_back(node, scm->value_index(node, label));
            w_text.push_back(pair);
        }
        const int x_value = scm->value_index(x, args.x_value);
        const std::vector<double> dist = dnr::causal::backdoor_adjust(*scm, x, x_value, y, z, w);
        std::cout << "adjust: P(" << args.node_y << " | do(" << args.node_x << "="
                  << args.x_value << ")";
        if (!w_text.empty()) std::cout << ", given " << join_names(w_text);
        std::cout << ") over " << join_names(drop_empty(args.zset)) << "\n";
        doc.columns = {"value", "probability"};
        for (std::size_t v = 0; v < dist.size(); ++v) {
            doc.add_row({json(scm->domain(y)[v]), num(dist[v])});
        }
    }
    emit(doc, args.out);
}

// ---------------------------------------------------------------------------
// Experiment configuration shared by toy / ablate / paradox
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    dnr::toy::SyntheticTaskSpec task;
    dnr::toy::TeacherSpec teacher;
    dnr::toy::TrainConfig train;
    std::string variant = "dnr";
};

struct ExperimentFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> rho;
    std::optional<std::string> variant;
    std::optional<double> lr_base, lr_all;
    std::optional<std::size_t> iters_base, iters_all, batch_size, shots;
    std::optional<double> teacher_temperature;
    HyperFlags hyper;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool with_variant) {
    cmd->add_option("--config", f.config_path, "JSON experiment configuration file");
    cmd->add_option("--seed", f.seed, "Seed for task, teacher, and training streams");
    cmd->add_option("--rho", f.rho, "Teacher corruption rate in [0, 1]");
    if (with_variant) {
        cmd->add_option("--variant", f.variant,
                        "Distillation variant (no-kd, vanilla-kd, fbd, fcd, tdd+fbd+fcd, "
                        "fbd-neg+fcd, fbd-pos+fcd, dnr)");
    }
    cmd->add_option("--lr-base", f.lr_base, "Stage-one learning rate");
    cmd->add_option("--lr-all", f.lr_all, "Stage-two learning rate");
    cmd->add_option("--iters-base", f.iters_base, "Stage-one iterations");
    cmd->add_option("--iters-all", f.iters_all, "Stage-two iterations");
    cmd->add_option("--batch-size", f.batch_size, "Minibatch size");
    cmd->add_option("--shots", f.shots, "Training samples per novel class");
    cmd->add_option("--teacher-temperature", f.teacher_temperature,
                    "Sharpness of the teacher's centroid logits");
    add_hyper_flags(cmd, f.hyper);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw dnr::parse_error("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

ExperimentConfig load_experiment_config(const ExperimentFlags& flags) {
    ExperimentConfig cfg;  // library defaults

    if (!flags.config_path.empty()) {
        json doc;
        try {
            doc = json::parse(dnr::formats::read_text_file(flags.config_path));
        } catch (const json::parse_error& e) {
            throw dnr::parse_error(std::string("invalid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw dnr::parse_error("config must be a JSON object");
        reject_unknown_keys(doc, {"task", "teacher", "train", "variant"}, "config");
        if (doc.contains("task")) {
            const json& t = doc.at("task");
            reject_unknown_keys(t,
                                {"feature_dim", "base_classes", "novel_classes", "shots_per_novel",
                                 "samples_per_base", "class_center_scale", "noise_scale",
                                 "background_fraction", "seed"},
                                "config.task");
            read_key(t, "feature_dim", cfg.task.feature_dim);
            read_key(t, "base_classes", cfg.task.base_classes);
            read_key(t, "novel_classes", cfg.task.novel_classes);
            read_key(t, "shots_per_novel", cfg.task.shots_per_novel);
            read_key(t, "samples_per_base", cfg.task.samples_per_base);
            read_key(t, "class_center_scale", cfg.task.class_center_scale);
            read_key(t, "noise_scale", cfg.task.noise_scale);
            read_key(t, "background_fraction", cfg.task.background_fraction);
            read_key(t, "seed", cfg.task.seed);
        }
        if (doc.contains("teacher")) {
            const json& t = doc.at("teacher");
            reject_unknown_keys(t, {"corruption_rate", "temperature", "seed"}, "config.teacher");
            read_key(t, "corruption_rate", cfg.teacher.corruption_rate);
            read_key(t, "temperature", cfg.teacher.temperature);
            read_key(t, "seed", cfg.teacher.seed);
        }
        if (doc.contains("train")) {
            const json& t = doc.at("train");
            reject_unknown_keys(t,
                                {"lr_base", "lr_all", "iters_base", "iters_all", "batch_size",
                                 "seed", "preset", "alpha", "beta", "temperature", "lambda"},
                                "config.train");
            read_key(t, "lr_base", cfg.train.lr_base);
            read_key(t, "lr_all", cfg.train.lr_all);
            read_key(t, "iters_base", cfg.train.iters_base);
            read_key(t, "iters_all", cfg.train.iters_all);
            read_key(t, "batch_size", cfg.train.batch_size);
            read_key(t, "seed", cfg.train.seed);
            std::string preset;
            read_key(t, "preset", preset);
            if (!preset.empty()) {
                if (preset != "coco" && preset != "voc") {
                    throw dnr::parse_error("config.train.preset must be coco or voc");
                }
                cfg.train.hyper = preset == "voc" ? dnr::kd::DnRHyperparams::voc()
                                                  : dnr::kd::DnRHyperparams::coco();
            }
            if (t.contains("alpha")) cfg.train.hyper.alpha = t.at("alpha").get<double>();
            if (t.contains("beta")) cfg.train.hyper.beta = t.at("beta").get<double>();
            if (t.contains("temperature")) {
                cfg.train.hyper.temperature = Temperature{t.at("temperature").get<double>()};
            }
            if (t.contains("lambda")) {
                cfg.train.hyper.loss_weight_lambda = t.at("lambda").get<double>();
            }
        }
        read_key(doc, "variant", cfg.variant);
    }

    if (flags.seed) {
        cfg.task.seed = *flags.seed;
        cfg.teacher.seed = *flags.seed;
        cfg.train.seed = *flags.seed;
    }
    if (flags.rho) cfg.teacher.corruption_rate = *flags.rho;
    if (flags.variant) cfg.variant = *flags.variant;
    if (flags.lr_base) cfg.train.lr_base = *flags.lr_base;
    if (flags.lr_all) cfg.train.lr_all = *flags.lr_all;
    if (flags.iters_base) cfg.train.iters_base = *flags.iters_base;
    if (flags.iters_all) cfg.train.iters_all = *flags.iters_all;
    if (flags.batch_size) cfg.train.batch_size = *flags.batch_size;
    if (flags.shots) cfg.task.shots_per_novel = *flags.shots;
    if (flags.teacher_temperature) cfg.teacher.temperature = *flags.teacher_temperature;
    cfg.train.hyper = resolve_hyper(flags.hyper, cfg.train.hyper);
    cfg.train.variant = dnr::toy::variant_by_name(cfg.variant).flags;
    return cfg;
}

// ---------------------------------------------------------------------------
// toy
// ---------------------------------------------------------------------------

struct ToyArgs {
    ExperimentFlags flags;
    OutputOptions out;
};

void run_toy(const ToyArgs& args) {
    const ExperimentConfig cfg = load_experiment_config(args.flags);
    const dnr::toy::RunResult result = dnr::toy::run_single(cfg.task, cfg.teacher, cfg.train);

    TableDoc doc;
    doc.columns = {"metric", "value"};
    doc.add_row({json("variant"), json(cfg.variant)});
    doc.add_row({json("seed"), json(cfg.task.seed)});
    doc.add_row({json("corruption_rate"), num(cfg.teacher.corruption_rate)});
    doc.add_row({json("novel_mean"), num(result.report.novel_mean)});
    doc.add_row({json("base_mean"), num(result.report.base_mean)});
    doc.add_row({json("overall"), num(result.report.overall)});
    for (const auto& [klass, acc] : result.report.per_class_accuracy) {
        const auto c = static_cast<std::size_t>(klass);
        const std::string name = c == cfg.task.layout().background()
                                     ? std::string("accuracy_bg")
                                     : "accuracy_class_" + std::to_string(klass);
        doc.add_row({json(name), num(acc)});
    }
    emit(doc, args.out);
}

// ---------------------------------------------------------------------------
// ablate / paradox
// ---------------------------------------------------------------------------

struct AblateArgs {
    ExperimentFlags flags;
    std::size_t num_seeds = 20;
    OutputOptions out;
};

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
    return seeds;
}

void append_ablation_rows(TableDoc& doc, const std::vector<dnr::toy::AblationRow>& rows,
                          const std::optional<double>& rho) {
    for (const dnr::toy::AblationRow& row : rows) {
        std::size_t failures = row.cells.size() - row.n_ok;
        std::vector<json> cells;
        if (rho) cells.push_back(num(*rho));
        cells.push_back(json(row.variant.name));
        cells.push_back(json(static_cast<std::int64_t>(row.n_ok)));
        cells.push_back(json(static_cast<std::int64_t>(failures)));
        cells.push_back(row.n_ok > 0 ? num(row.mean_novel) : json());
        cells.push_back(row.n_ok > 1 ? num(row.stderr_novel) : json());
        doc.add_row(std::move(cells));
    }
}

void run_ablate(const AblateArgs& args) {
    if (args.num_seeds == 0) throw dnr::invalid_input("--seeds must be positive");
    ExperimentConfig cfg = load_experiment_config(args.flags);
    // Without an explicit rate the ablation exercises a faulty teacher; a
    // config file's value is respected.
    if (!args.flags.rho && args.flags.config_path.empty()) cfg.teacher.corruption_rate = 0.4;
    const std::vector<std::uint64_t> seeds =
        seed_range(args.flags.seed ? *args.flags.seed : 0, args.num_seeds);

    const auto rows = dnr::toy::run_ablation(cfg.task, cfg.teacher, cfg.train,
                                             dnr::toy::default_ablation_variants(), seeds);
    TableDoc doc;
    doc.columns = {"variant", "runs", "failures", "mean_novel", "stderr_novel"};
    append_ablation_rows(doc, rows, std::nullopt);
    emit(doc, args.out);
}

struct ParadoxArgs {
    ExperimentFlags flags;
    std::size_t num_seeds = 20;
    std::vector<double> rhos = {0.0, 0.2, 0.4};
    OutputOptions out;
};

void run_paradox(const ParadoxArgs& args) {
    if (args.num_seeds == 0) throw dnr::invalid_input("--seeds must be positive");
    if (args.rhos.empty()) throw dnr::invalid_input("--rhos must name at least one rate");
    const ExperimentConfig cfg = load_experiment_config(args.flags);
    const std::vector<std::uint64_t> seeds =
        seed_range(args.flags.seed ? *args.flags.seed : 0, args.num_seeds);

    const std::vector<dnr::toy::Variant> variants = {
        dnr::toy::variant_by_name("no-kd"),
        dnr::toy::variant_by_name("vanilla-kd"),
        dnr::toy::variant_by_name("dnr"),
    };

    TableDoc doc;
    doc.columns = {"rho", "variant", "runs", "failures", "mean_novel", "stderr_novel"};
    for (const double rho : args.rhos) {
        dnr::toy::TeacherSpec teacher = cfg.teacher;
        teacher.corruption_rate = rho;
        const auto rows = dnr::toy::run_ablation(cfg.task, teacher, cfg.train, variants, seeds);
        append_ablation_rows(doc, rows, rho);
    }
    emit(doc, args.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Disentangled knowledge-distillation losses, causal graph queries, and a toy "
        "few-shot distillation benchmark"};
    app.require_subcommand(1);

    DecomposeArgs decompose_args;
    CLI::App* decompose_cmd = app.add_subcommand(
        "decompose", "Split a logit batch into its distillation terms");
    decompose_cmd->add_option("--input,-i", decompose_args.input, "JSONL batch file")
        ->required();
    add_hyper_flags(decompose_cmd, decompose_args.hyper);
    add_output_flags(decompose_cmd, decompose_args.out);

    GradcheckArgs gradcheck_args;
    CLI::App* gradcheck_cmd = app.add_subcommand(
        "gradcheck", "Compare analytic loss gradients against finite differences");
    gradcheck_cmd->add_option("--seed", gradcheck_args.seed, "Base seed for the random batches");
    gradcheck_cmd->add_option("--trials", gradcheck_args.trials, "Number of random batches");
    gradcheck_cmd->add_option("--step", gradcheck_args.step, "Finite-difference step");
    gradcheck_cmd->add_option("--tolerance", gradcheck_args.tolerance,
                              "Maximum allowed relative error");
    add_hyper_flags(gradcheck_cmd, gradcheck_args.hyper);
    add_output_flags(gradcheck_cmd, gradcheck_args.out);

    CausalArgs causal_args;
    CLI::App* causal_cmd =
        app.add_subcommand("causal", "Graph separation, backdoor, and adjustment queries");
    causal_cmd
        ->add_option("query", causal_args.query,
                     "One of: dsep, backdoor, general-backdoor, adjust")
        ->required()
        ->check(CLI::IsMember({"dsep", "backdoor", "general-backdoor", "adjust"}));
    causal_cmd->add_option("x", causal_args.node_x, "First node (treatment)")->required();
    causal_cmd->add_option("y", causal_args.node_y, "Second node (outcome)")->required();
    causal_cmd->add_option("--fixture", causal_args.fixture, "Built-in example graph name");
    causal_cmd->add_option("--graph", causal_args.graph_file, "Graph text file (A -> B lines)");
    causal_cmd->add_option("--scm", causal_args.scm_file,
                           "Structural model JSON (required by adjust)");
    causal_cmd
        ->add_option("--given", causal_args.given,
                     "Conditioning nodes (dsep, general-backdoor) or NODE=VALUE pairs (adjust)")
        ->delimiter(',');
    causal_cmd
        ->add_option("--set", causal_args.zset,
                     "Adjustment set (backdoor, adjust); pass \"\" for the empty set")
        ->delimiter(',');
    causal_cmd->add_option("--x-value", causal_args.x_value,
                           "Domain label the treatment is set to (adjust)");
    add_output_flags(causal_cmd, causal_args.out);

    ToyArgs toy_args;
    CLI::App* toy_cmd =
        app.add_subcommand("toy", "Run one synthetic few-shot distillation pipeline");
    add_experiment_flags(toy_cmd, toy_args.flags, /*with_variant=*/true);
    add_output_flags(toy_cmd, toy_args.out);

    AblateArgs ablate_args;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "Run the eight-variant ablation over a seed grid");
    add_experiment_flags(ablate_cmd, ablate_args.flags, /*with_variant=*/false);
    ablate_cmd->add_option("--seeds", ablate_args.num_seeds, "Number of consecutive seeds");
    add_output_flags(ablate_cmd, ablate_args.out);

    ParadoxArgs paradox_args;
    CLI::App* paradox_cmd = app.add_subcommand(
        "paradox", "Sweep teacher corruption rates over no-kd / vanilla-kd / dnr");
    add_experiment_flags(paradox_cmd, paradox_args.flags, /*with_variant=*/false);
    paradox_cmd->add_option("--seeds", paradox_args.num_seeds, "Number of consecutive seeds");
    paradox_cmd->add_option("--rhos", paradox_args.rhos, "Corruption rates to sweep")
        ->delimiter(',');
    add_output_flags(paradox_cmd, paradox_args.out);

    try {
        app.parse(argc, argv);
        causal_args.zset_given = causal_cmd->count("--set") > 0;
        if (decompose_cmd->parsed()) run_decompose(decompose_args);
        if (gradcheck_cmd->parsed()) run_gradcheck(gradcheck_args);
        if (causal_cmd->parsed()) run_causal(causal_args);
        if (toy_cmd->parsed()) run_toy(toy_args);
        if (ablate_cmd->parsed()) run_ablate(ablate_args);
        if (paradox_cmd->parsed()) run_paradox(paradox_args);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitParse;
    } catch (const check_failure&) {
        return kExitCheckFailed;
    } catch (const dnr::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const dnr::conditioning_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConditioning;
    } catch (const dnr::training_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const dnr::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
