#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dnr/kd.hpp"
#include "dnr/matrix.hpp"

namespace dnr::toy {

// Class-index layout shared by every dataset of a task: base classes first,
// then novel classes, background last.
struct ClassLayout {
    std::size_t base = 0;
    std::size_t novel = 0;

    std::size_t num_classes() const { return base + novel + 1; }
    std::size_t background() const { return base + novel; }
    bool is_base(std::size_t c) const { return c < base; }
    bool is_novel(std::size_t c) const { return c >= base && c < base + novel; }
};

struct SyntheticTaskSpec {
    std::size_t feature_dim = 16;
    std::size_t base_classes = 6;
    std::size_t novel_classes = 3;
    std::size_t shots_per_novel = 5;    // K: training samples per novel class
    std::size_t samples_per_base = 200;
    double class_center_scale = 3.0;    // norm of each class center
    double noise_scale = 1.0;           // within-class standard deviation
    double background_fraction = 0.5;   // share of background rows in generated splits
    std::uint64_t seed = 0;

    ClassLayout layout() const { return {base_classes, novel_classes}; }
    void validate() const;
};

struct Dataset {
    ClassLayout layout;
    Matrix features;          // N x feature_dim
    std::vector<int> labels;  // class indices; background rows carry layout.background()

    std::size_t size() const { return features.rows; }
};

struct Task {
    SyntheticTaskSpec spec;
    Matrix centers;  // (base+novel) x feature_dim, one row per foreground class
    Dataset base_train;   // samples_per_base per base class + background rows
    Dataset novel_train;  // exactly K rows per novel class, no background
    Dataset eval_set;     // fresh draw over every class + background rows
};

// Foreground classes draw from N(center_c, noise_scale^2 I); background from
// a broad zero-centered gaussian (stddev class_center_scale per coordinate).
// Deterministic in spec.seed.
Task generate_task(const SyntheticTaskSpec& spec);

struct TeacherSpec {
    double corruption_rate = 0.0;  // probability a foreground row's logits are corrupted
    double temperature = 1.0;      // sharpness of the centroid logits
    std::uint64_t seed = 0;

    void validate() const;
};

// Frozen nearest-centroid classifier. Logits for class c are
// -||x - centroid_c||^2 / (2 * temperature). Corruption swaps a row's
// true-class logit with a uniformly chosen other foreground class logit; the
// decision and the swap partner are a pure function of (seed, row index), so
// repeated logit computations agree.
struct Teacher {
    ClassLayout layout;
    Matrix centroids;  // num_classes x feature_dim
    double temperature = 1.0;
    double corruption_rate = 0.0;
    std::uint64_t seed = 0;
};

// Fits centroids on a fresh held-out draw from the task's generative
// distribution (seeded by t_spec.seed): 100 samples per foreground class,
// 400 background samples.
Teacher build_teacher(const Task& task, const TeacherSpec& t_spec);

// Teacher logits for every row of `data`, corruption included.
Matrix teacher_logits(const Teacher& teacher, const Dataset& data);

// Linear classifier over augmented features [x; 1].
struct LinearStudent {
    Matrix weights;  // num_classes x (feature_dim + 1)

    static LinearStudent zeros(std::size_t num_classes, std::size_t feature_dim) {
        return {Matrix(num_classes, feature_dim + 1, 0.0)};
    }
    Matrix logits(const Matrix& features) const;
};

struct TrainConfig {
    double lr_base = 0.1;
    double lr_all = 0.05;
    std::size_t iters_base = 2000;
    std::size_t iters_all = 1000;
    std::size_t batch_size = 32;
    kd::DnRHyperparams hyper = kd::DnRHyperparams::coco();
    kd::TermFlags variant;  // all flags clear = no distillation
    std::uint64_t seed = 0;

    // Enforces that at most one distillation mode is active: either the
    // vanilla flag, or a combination of term flags, or nothing.
    void validate() const;
};

// Optional per-iteration probe used by tests and diagnostics.
using StepObserver = std::function<void(std::size_t iter, double ce_loss, double distill_loss)>;

// Stage one: minibatch SGD on cross-entropy restricted to base + background
// classes. Throws training_error when the loss goes non-finite.
LinearStudent train_base(LinearStudent student, const Dataset& base_train,
                         const TrainConfig& cfg);

// Stage two: minibatch SGD on full cross-entropy plus
// hyper.loss_weight_lambda times the distillation term selected by
// cfg.variant. Teacher logits are computed once per dataset and treated as
// constants.
LinearStudent finetune_all(LinearStudent student, const Dataset& all_train,
                           const Teacher& teacher, const TrainConfig& cfg,
                           const StepObserver& observer = {});

struct EvalReport {
    std::map<int, double> per_class_accuracy;  // class index -> accuracy
    double novel_mean = 0.0;
    double base_mean = 0.0;
    double overall = 0.0;
};

// Argmax prediction, ties broken toward the lowest class index.
EvalReport evaluate(const LinearStudent& student, const Dataset& eval_set);

// The balanced fine-tuning split: the first K rows of every base class from
// base_train, all novel shots, and background rows from base_train's
// background pool at the spec's background fraction.
Dataset assemble_finetune_split(const Task& task);

struct RunResult {
    LinearStudent student;
    EvalReport report;
};

// generate -> teacher -> stage one -> stage two -> evaluate.
RunResult run_single(const SyntheticTaskSpec& spec, const TeacherSpec& t_spec,
                     const TrainConfig& cfg);

struct Variant {
    std::string name;
    kd::TermFlags flags;
};

// The eight standard ablation rows: no distillation, vanilla, and the term
// subsets {fbd}, {fcd}, {tdd+fbd+fcd}, {fbd-neg+fcd}, {fbd-pos+fcd},
// {fbd+fcd} (the full remerged loss).
std::vector<Variant> default_ablation_variants();

const Variant& variant_by_name(const std::string& name);

struct AblationCell {
    std::uint64_t seed = 0;
    double novel_accuracy = 0.0;
    bool failed = false;
    std::string error;  // populated when failed
};

struct AblationRow {
    Variant variant;
    std::vector<AblationCell> cells;
    std::size_t n_ok = 0;
    double mean_novel = 0.0;
    double stderr_novel = 0.0;
};

// Full grid: every variant x seed runs the whole pipeline with spec/teacher/
// train seeds all set to the grid seed (so rows are paired by seed).
// Training failures mark the cell rather than aborting the table.
std::vector<AblationRow> run_ablation(const SyntheticTaskSpec& spec, const TeacherSpec& t_spec,
                                      const TrainConfig& cfg, const std::vector<Variant>& variants,
                                      const std::vector<std::uint64_t>& seeds);

}  // namespace dnr::toy
