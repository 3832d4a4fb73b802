#include "dnr/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dnr/errors.hpp"
#include "dnr/prob.hpp"
#include "dnr/rng.hpp"
#include "dnr/stats.hpp"

namespace dnr::toy {

namespace {

// Sub-stream tags. Distinct constants keep every consumer of a seed on an
// independent stream.
constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kBaseStream = 2;
constexpr std::uint64_t kNovelStream = 3;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kTeacherFitStream = 7;
constexpr std::uint64_t kCorruptionStream = 9;
constexpr std::uint64_t kBaseTrainStream = 20;
constexpr std::uint64_t kFinetuneStream = 21;

constexpr std::size_t kEvalPerClass = 100;
constexpr std::size_t kTeacherFitPerClass = 100;
constexpr std::size_t kTeacherFitBackground = 400;

std::size_t background_rows_for(double background_fraction, std::size_t foreground_rows) {
    const double ratio = background_fraction / (1.0 - background_fraction);
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(foreground_rows)));
}

void fill_foreground_row(Matrix& features, std::size_t row, const Matrix& centers,
                         std::size_t klass, double noise_scale, Rng& rng) {
    for (std::size_t d = 0; d < features.cols; ++d) {
        features(row, d) = centers(klass, d) + noise_scale * rng.normal();
    }
}

void fill_background_row(Matrix& features, std::size_t row, double spread, Rng& rng) {
    for (std::size_t d = 0; d < features.cols; ++d) {
        features(row, d) = spread * rng.normal();
    }
}

// Draws `per_class` rows for every foreground class followed by `n_background`
// background rows, all from one stream, in a fixed class-major order.
Dataset draw_split(const SyntheticTaskSpec& spec, const Matrix& centers, std::size_t per_class,
                   std::size_t n_background, Rng& rng) {
    const ClassLayout layout = spec.layout();
    const std::size_t n_fg_classes = layout.base + layout.novel;
    const std::size_t n_rows = per_class * n_fg_classes + n_background;

    Dataset out;
    out.layout = layout;
    out.features = Matrix(n_rows, spec.feature_dim, 0.0);
    out.labels.resize(n_rows, 0);

    std::size_t row = 0;
    for (std::size_t c = 0; c < n_fg_classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            fill_foreground_row(out.features, row, centers, c, spec.noise_scale, rng);
            out.labels[row] = static_cast<int>(c);
        }
    }
    for (std::size_t b = 0; b < n_background; ++b, ++row) {
        fill_background_row(out.features, row, spec.class_center_scale, rng);
        out.labels[row] = static_cast<int>(layout.background());
    }
    return out;
}

std::vector<double> augmented_row(const Matrix& features, std::size_t row) {
    std::vector<double> x(features.cols + 1, 1.0);
    for (std::size_t d = 0; d < features.cols; ++d) {
        x[d] = features(row, d);
    }
    return x;
}

double squared_distance(std::span<const double> x, const Matrix& centroids, std::size_t c) {
    double acc = 0.0;
    for (std::size_t d = 0; d < centroids.cols; ++d) {
        const double diff = x[d] - centroids(c, d);
        acc += diff * diff;
    }
    return acc;
}

// Cross-entropy over the classes listed in `keep`, its gradient with respect
// to the kept logits written into `grad_out` (same indexing as `keep`).
double ce_and_grad(std::span<const double> logits, std::span<const std::size_t> keep,
                   int label, std::vector<double>& grad_out) {
    const std::vector<double> p = masked_softmax(logits, keep, Temperature{1.0});
    grad_out.assign(keep.size(), 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        grad_out[k] = p[k];
        if (static_cast<int>(keep[k]) == label) {
            grad_out[k] -= 1.0;
            loss = -std::log(std::max(p[k], 1e-300));
        }
    }
    return loss;
}

std::string iteration_message(const char* stage, std::size_t iter) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s loss became non-finite at iteration %zu", stage, iter);
    return buf;
}

std::string divergence_message(const char* stage, std::size_t iter) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s logits overflowed at iteration %zu", stage, iter);
    return buf;
}

}  // namespace

void SyntheticTaskSpec::validate() const {
    if (feature_dim == 0) throw invalid_input("feature_dim must be positive");
    if (base_classes == 0) throw invalid_input("base_classes must be positive");
    if (novel_classes == 0) throw invalid_input("novel_classes must be positive");
    if (shots_per_novel == 0) throw invalid_input("shots_per_novel must be positive");
    if (samples_per_base < shots_per_novel) {
        throw invalid_input("samples_per_base must be at least shots_per_novel");
    }
    if (!(class_center_scale > 0.0) || !std::isfinite(class_center_scale)) {
        throw invalid_input("class_center_scale must be positive and finite");
    }
    if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
        throw invalid_input("noise_scale must be positive and finite");
    }
    if (!(background_fraction > 0.0) || !(background_fraction < 1.0)) {
        throw invalid_input("background_fraction must lie strictly between 0 and 1");
    }
}

void TeacherSpec::validate() const {
    if (!(corruption_rate >= 0.0) || !(corruption_rate <= 1.0)) {
        throw invalid_input("corruption_rate must lie in [0, 1]");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw invalid_input("teacher temperature must be positive and finite");
    }
}

void TrainConfig::validate() const {
    if (!(lr_base > 0.0) || !(lr_all > 0.0)) throw invalid_input("learning rates must be positive");
    if (batch_size == 0) throw invalid_input("batch_size must be positive");
    const bool has_terms = variant.tdd || variant.fbd_pos || variant.fbd_neg || variant.fcd;
    if (variant.kd_vanilla && has_terms) {
        throw invalid_input("variant may not combine the vanilla flag with term flags");
    }
}

Task generate_task(const SyntheticTaskSpec& spec) {
    spec.validate();
    const ClassLayout layout = spec.layout();
    const std::size_t n_fg_classes = layout.base + layout.novel;
    const Rng root(spec.seed);

    // Class centers: independent gaussian directions scaled to a common norm.
    Matrix centers(n_fg_classes, spec.feature_dim, 0.0);
    {
        Rng rng = root.split(kCenterStream);
        for (std::size_t c = 0; c < n_fg_classes; ++c) {
            double norm_sq = 0.0;
            for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                centers(c, d) = rng.normal();
                norm_sq += centers(c, d) * centers(c, d);
            }
            const double norm = std::sqrt(norm_sq);
            if (norm < 1e-12) {
                // Vanishingly unlikely; pin the center on the first axis.
                for (std::size_t d = 0; d < spec.feature_dim; ++d) centers(c, d) = 0.0;
                centers(c, 0) = spec.class_center_scale;
            } else {
                for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                    centers(c, d) *= spec.class_center_scale / norm;
                }
            }
        }
    }

    Task task;
    task.spec = spec;
    task.centers = std::move(centers);

    {
        // Base split: only base classes, plus its background pool.
        Rng rng = root.split(kBaseStream);
        const std::size_t n_fg = spec.base_classes * spec.samples_per_base;
        const std::size_t n_bg = background_rows_for(spec.background_fraction, n_fg);

        Dataset ds;
        ds.layout = layout;
        ds.features = Matrix(n_fg + n_bg, spec.feature_dim, 0.0);
        ds.labels.resize(n_fg + n_bg, 0);
        std::size_t row = 0;
        for (std::size_t c = 0; c < spec.base_classes; ++c) {
            for (std::size_t s = 0; s < spec.samples_per_base; ++s, ++row) {
                fill_foreground_row(ds.features, row, task.centers, c, spec.noise_scale, rng);
                ds.labels[row] = static_cast<int>(c);
            }
        }
        for (std::size_t b = 0; b < n_bg; ++b, ++row) {
            fill_background_row(ds.features, row, spec.class_center_scale, rng);
            ds.labels[row] = static_cast<int>(layout.background());
        }
        task.base_train = std::move(ds);
    }

    {
        // Novel split: exactly K shots per novel class, no background.
        Rng rng = root.split(kNovelStream);
        Dataset ds;
        ds.layout = layout;
        const std::size_t n_rows = spec.novel_classes * spec.shots_per_novel;
        ds.features = Matrix(n_rows, spec.feature_dim, 0.0);
        ds.labels.resize(n_rows, 0);
        std::size_t row = 0;
        for (std::size_t c = layout.base; c < n_fg_classes; ++c) {
            for (std::size_t s = 0; s < spec.shots_per_novel; ++s, ++row) {
                fill_foreground_row(ds.features, row, task.centers, c, spec.noise_scale, rng);
                ds.labels[row] = static_cast<int>(c);
            }
        }
        task.novel_train = std::move(ds);
    }

    {
        Rng rng = root.split(kEvalStream);
        const std::size_t n_bg =
            background_rows_for(spec.background_fraction, n_fg_classes * kEvalPerClass);
        task.eval_set = draw_split(spec, task.centers, kEvalPerClass, n_bg, rng);
    }

    return task;
}

Teacher build_teacher(const Task& task, const TeacherSpec& t_spec) {
    t_spec.validate();
    const SyntheticTaskSpec& spec = task.spec;
    const ClassLayout layout = spec.layout();
    const std::size_t n_fg_classes = layout.base + layout.novel;

    Teacher teacher;
    teacher.layout = layout;
    teacher.temperature = t_spec.temperature;
    teacher.corruption_rate = t_spec.corruption_rate;
    teacher.seed = t_spec.seed;
    teacher.centroids = Matrix(layout.num_classes(), spec.feature_dim, 0.0);

    Rng rng = Rng(t_spec.seed).split(kTeacherFitStream);
    std::vector<double> sample(spec.feature_dim, 0.0);
    for (std::size_t c = 0; c < n_fg_classes; ++c) {
        for (std::size_t s = 0; s < kTeacherFitPerClass; ++s) {
            for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                sample[d] = task.centers(c, d) + spec.noise_scale * rng.normal();
                teacher.centroids(c, d) += sample[d] / static_cast<double>(kTeacherFitPerClass);
            }
        }
    }
    const std::size_t bg = layout.background();
    for (std::size_t s = 0; s < kTeacherFitBackground; ++s) {
        for (std::size_t d = 0; d < spec.feature_dim; ++d) {
            teacher.centroids(bg, d) +=
                spec.class_center_scale * rng.normal() / static_cast<double>(kTeacherFitBackground);
        }
    }
    return teacher;
}

Matrix teacher_logits(const Teacher& teacher, const Dataset& data) {
    if (data.layout.num_classes() != teacher.centroids.rows) {
        throw invalid_input("dataset layout does not match the teacher's class count");
    }
    const std::size_t n_classes = teacher.centroids.rows;
    const std::size_t n_fg_classes = n_classes - 1;
    const int bg_label = static_cast<int>(data.layout.background());
    const Rng corruption_root = Rng(teacher.seed).split(kCorruptionStream);

    Matrix logits(data.size(), n_classes, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.features.row(i);
        for (std::size_t c = 0; c < n_classes; ++c) {
            logits(i, c) = -0.5 * squared_distance(x, teacher.centroids, c) / teacher.temperature;
        }
        const int label = data.labels[i];
        if (label == bg_label || n_fg_classes < 2) continue;

        // The corruption decision is keyed to the row index so that
        // recomputing logits for any subset of rows gives identical values.
        Rng row_rng = corruption_root.split(i);
        const double u = row_rng.uniform();
        const std::size_t j = row_rng.below(n_fg_classes - 1);
        if (u < teacher.corruption_rate) {
            const std::size_t target = static_cast<std::size_t>(label);
            const std::size_t other = j < target ? j : j + 1;
            std::swap(logits(i, target), logits(i, other));
        }
    }
    return logits;
}

Matrix LinearStudent::logits(const Matrix& features) const {
    if (features.cols + 1 != weights.cols) {
        throw invalid_input("feature dimension does not match the student's weights");
    }
    Matrix out(features.rows, weights.rows, 0.0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        for (std::size_t c = 0; c < weights.rows; ++c) {
            double acc = weights(c, features.cols);  // bias
            for (std::size_t d = 0; d < features.cols; ++d) {
                acc += weights(c, d) * features(i, d);
            }
            out(i, c) = acc;
        }
    }
    return out;
}

LinearStudent train_base(LinearStudent student, const Dataset& base_train,
                         const TrainConfig& cfg) {
    cfg.validate();
    const ClassLayout layout = base_train.layout;
    if (student.weights.rows != layout.num_classes()) {
        throw invalid_input("student class count does not match the dataset layout");
    }

    // Restrict stage one to the classes the base split actually contains.
    std::vector<std::size_t> keep;
    keep.reserve(layout.base + 1);
    for (std::size_t c = 0; c < layout.base; ++c) keep.push_back(c);
    keep.push_back(layout.background());

    Rng rng = Rng(cfg.seed).split(kBaseTrainStream);
    const std::size_t n = base_train.size();
    std::vector<double> grad;
    std::vector<double> row_logits(layout.num_classes(), 0.0);

    for (std::size_t iter = 0; iter < cfg.iters_base; ++iter) {
        double loss = 0.0;
        Matrix update(student.weights.rows, student.weights.cols, 0.0);
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const std::size_t idx = rng.below(n);
            const std::vector<double> x = augmented_row(base_train.features, idx);
            for (std::size_t c = 0; c < student.weights.rows; ++c) {
                double acc = 0.0;
                for (std::size_t d = 0; d < student.weights.cols; ++d) {
                    acc += student.weights(c, d) * x[d];
                }
                if (!std::isfinite(acc)) throw training_error(divergence_message("base", iter));
                row_logits[c] = acc;
            }
            loss += ce_and_grad(row_logits, keep, base_train.labels[idx], grad) /
                    static_cast<double>(cfg.batch_size);
            for (std::size_t k = 0; k < keep.size(); ++k) {
                const double coef = grad[k] / static_cast<double>(cfg.batch_size);
                for (std::size_t d = 0; d < student.weights.cols; ++d) {
                    update(keep[k], d) += coef * x[d];
                }
            }
        }
        if (!std::isfinite(loss)) throw training_error(iteration_message("base", iter));
        for (std::size_t i = 0; i < update.data.size(); ++i) {
            student.weights.data[i] -= cfg.lr_base * update.data[i];
        }
    }
    return student;
}

LinearStudent finetune_all(LinearStudent student, const Dataset& all_train,
                           const Teacher& teacher, const TrainConfig& cfg,
                           const StepObserver& observer) {
    cfg.validate();
    const ClassLayout layout = all_train.layout;
    if (student.weights.rows != layout.num_classes()) {
        throw invalid_input("student class count does not match the dataset layout");
    }
    const bool distilling = cfg.variant.any();
    const int bg_label = static_cast<int>(layout.background());

    // The teacher is frozen: compute its logits for the whole split once.
    const Matrix frozen = distilling ? teacher_logits(teacher, all_train) : Matrix();

    std::vector<std::size_t> keep(layout.num_classes());
    std::iota(keep.begin(), keep.end(), std::size_t{0});

    Rng rng = Rng(cfg.seed).split(kFinetuneStream);
    const std::size_t n = all_train.size();
    std::vector<double> grad;
    std::vector<double> row_logits(layout.num_classes(), 0.0);

    for (std::size_t iter = 0; iter < cfg.iters_all; ++iter) {
        std::vector<std::size_t> idx(cfg.batch_size);
        for (auto& v : idx) v = rng.below(n);

        double ce = 0.0;
        Matrix update(student.weights.rows, student.weights.cols, 0.0);
        kd::SampleBatch batch;
        if (distilling) {
            batch.teacher_logits = Matrix(cfg.batch_size, layout.num_classes(), 0.0);
            batch.student_logits = Matrix(cfg.batch_size, layout.num_classes(), 0.0);
            batch.labels.resize(cfg.batch_size, 0);
            batch.background_index = layout.background();
        }

        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const std::size_t row = idx[b];
            const std::vector<double> x = augmented_row(all_train.features, row);
            for (std::size_t c = 0; c < student.weights.rows; ++c) {
                double acc = 0.0;
                for (std::size_t d = 0; d < student.weights.cols; ++d) {
                    acc += student.weights(c, d) * x[d];
                }
                if (!std::isfinite(acc)) throw training_error(divergence_message("fine-tune", iter));
                row_logits[c] = acc;
            }
            ce += ce_and_grad(row_logits, keep, all_train.labels[row], grad) /
                  static_cast<double>(cfg.batch_size);
            for (std::size_t c = 0; c < layout.num_classes(); ++c) {
                const double coef = grad[c] / static_cast<double>(cfg.batch_size);
                for (std::size_t d = 0; d < student.weights.cols; ++d) {
                    update(c, d) += coef * x[d];
                }
            }
            if (distilling) {
                for (std::size_t c = 0; c < layout.num_classes(); ++c) {
                    batch.teacher_logits(b, c) = frozen(row, c);
                    batch.student_logits(b, c) = row_logits[c];
                }
                const int label = all_train.labels[row];
                batch.labels[b] = label == bg_label ? kd::kBackground : label;
            }
        }

        double distill = 0.0;
        if (distilling) {
            kd::LossGradient dg;
            try {
                distill = kd::term_loss(batch, cfg.hyper, cfg.variant);
                dg = kd::term_gradient(batch, cfg.hyper, cfg.variant);
            } catch (const infinite_divergence&) {
                // The student drifted far enough from the teacher that some
                // class probability underflowed to zero: a divergence of the
                // run, not a precondition violation by the caller.
                throw training_error(divergence_message("fine-tune", iter));
            }
            const double lambda = cfg.hyper.loss_weight_lambda;
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                const std::vector<double> x = augmented_row(all_train.features, idx[b]);
                for (std::size_t c = 0; c < layout.num_classes(); ++c) {
                    const double coef = lambda * dg.d_student_logits(b, c);
                    if (coef == 0.0) continue;
                    for (std::size_t d = 0; d < student.weights.cols; ++d) {
                        update(c, d) += coef * x[d];
                    }
                }
            }
        }

        if (!std::isfinite(ce) || !std::isfinite(distill)) {
            throw training_error(iteration_message("fine-tune", iter));
        }
        if (observer) observer(iter, ce, distill);
        for (std::size_t i = 0; i < update.data.size(); ++i) {
            student.weights.data[i] -= cfg.lr_all * update.data[i];
        }
    }
    return student;
}

EvalReport evaluate(const LinearStudent& student, const Dataset& eval_set) {
    const ClassLayout layout = eval_set.layout;
    const Matrix logits = student.logits(eval_set.features);

    std::map<int, std::pair<std::size_t, std::size_t>> counts;  // class -> (correct, total)
    std::size_t correct_total = 0;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
        std::size_t pred = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (logits(i, c) > logits(i, pred)) pred = c;
        }
        const int label = eval_set.labels[i];
        auto& entry = counts[label];
        entry.second += 1;
        if (static_cast<int>(pred) == label) {
            entry.first += 1;
            correct_total += 1;
        }
    }

    EvalReport report;
    double novel_sum = 0.0, base_sum = 0.0;
    std::size_t novel_n = 0, base_n = 0;
    for (const auto& [label, entry] : counts) {
        const double acc = static_cast<double>(entry.first) / static_cast<double>(entry.second);
        report.per_class_accuracy[label] = acc;
        const auto c = static_cast<std::size_t>(label);
        if (layout.is_novel(c)) {
            novel_sum += acc;
            novel_n += 1;
        } else if (layout.is_base(c)) {
            base_sum += acc;
            base_n += 1;
        }
    }
    report.novel_mean = novel_n > 0 ? novel_sum / static_cast<double>(novel_n) : 0.0;
    report.base_mean = base_n > 0 ? base_sum / static_cast<double>(base_n) : 0.0;
    report.overall = eval_set.size() > 0
                         ? static_cast<double>(correct_total) / static_cast<double>(eval_set.size())
                         : 0.0;
    return report;
}

Dataset assemble_finetune_split(const Task& task) {
    const SyntheticTaskSpec& spec = task.spec;
    const ClassLayout layout = spec.layout();
    const std::size_t shots = spec.shots_per_novel;
    const int bg_label = static_cast<int>(layout.background());

    const std::size_t n_fg = (layout.base + layout.novel) * shots;
    const std::size_t n_bg = background_rows_for(spec.background_fraction, n_fg);

    std::vector<std::size_t> rows;
    rows.reserve(n_fg + n_bg);
    // First K rows of every base class, in class order.
    std::vector<std::size_t> taken(layout.base, 0);
    for (std::size_t i = 0; i < task.base_train.size(); ++i) {
        const int label = task.base_train.labels[i];
        if (label == bg_label) continue;
        auto& t = taken[static_cast<std::size_t>(label)];
        if (t < shots) {
            rows.push_back(i);
            ++t;
        }
    }
    // Background rows from the base pool.
    std::size_t bg_taken = 0;
    for (std::size_t i = 0; i < task.base_train.size() && bg_taken < n_bg; ++i) {
        if (task.base_train.labels[i] == bg_label) {
            rows.push_back(i);
            ++bg_taken;
        }
    }
    if (bg_taken < n_bg) {
        throw invalid_input("base split does not hold enough background rows for fine-tuning");
    }

    Dataset out;
    out.layout = layout;
    out.features = Matrix(rows.size() + task.novel_train.size(), spec.feature_dim, 0.0);
    out.labels.resize(out.features.rows, 0);
    std::size_t row = 0;
    for (const std::size_t src : rows) {
        for (std::size_t d = 0; d < spec.feature_dim; ++d) {
            out.features(row, d) = task.base_train.features(src, d);
        }
        out.labels[row] = task.base_train.labels[src];
        ++row;
    }
    for (std::size_t src = 0; src < task.novel_train.size(); ++src, ++row) {
        for (std::size_t d = 0; d < spec.feature_dim; ++d) {
            out.features(row, d) = task.novel_train.features(src, d);
        }
        out.labels[row] = task.novel_train.labels[src];
    }
    return out;
}

RunResult run_single(const SyntheticTaskSpec& spec, const TeacherSpec& t_spec,
                     const TrainConfig& cfg) {
    const Task task = generate_task(spec);
    const Teacher teacher = build_teacher(task, t_spec);

    LinearStudent student =
        LinearStudent::zeros(spec.layout().num_classes(), spec.feature_dim);
    student = train_base(std::move(student), task.base_train, cfg);
    const Dataset all_train = assemble_finetune_split(task);
    student = finetune_all(std::move(student), all_train, teacher, cfg);

    RunResult result;
    result.report = evaluate(student, task.eval_set);
    result.student = std::move(student);
    return result;
}

std::vector<Variant> default_ablation_variants() {
    using kd::TermFlags;
    std::vector<Variant> out;
    out.push_back({"no-kd", TermFlags{}});
    out.push_back({"vanilla-kd", TermFlags::vanilla()});
    out.push_back({"fbd", TermFlags{.fbd_pos = true, .fbd_neg = true}});
    out.push_back({"fcd", TermFlags{.fcd = true}});
    out.push_back({"tdd+fbd+fcd",
                   TermFlags{.tdd = true, .fbd_pos = true, .fbd_neg = true, .fcd = true}});
    out.push_back({"fbd-neg+fcd", TermFlags{.fbd_neg = true, .fcd = true}});
    out.push_back({"fbd-pos+fcd", TermFlags{.fbd_pos = true, .fcd = true}});
    out.push_back({"dnr", TermFlags::dnr()});
    return out;
}

const Variant& variant_by_name(const std::string& name) {
    static const std::vector<Variant> table = default_ablation_variants();
    for (const Variant& v : table) {
        if (v.name == name) return v;
    }
    std::string msg = "unknown variant \"" + name + "\"; expected one of:";
    for (const Variant& v : table) msg += " " + v.name;
    throw invalid_input(msg);
}

std::vector<AblationRow> run_ablation(const SyntheticTaskSpec& spec, const TeacherSpec& t_spec,
                                      const TrainConfig& cfg, const std::vector<Variant>& variants,
                                      const std::vector<std::uint64_t>& seeds) {
    if (variants.empty()) throw invalid_input("run_ablation needs at least one variant");
    if (seeds.empty()) throw invalid_input("run_ablation needs at least one seed");

    std::vector<AblationRow> rows;
    rows.reserve(variants.size());
    for (const Variant& variant : variants) {
        AblationRow row;
        row.variant = variant;
        std::vector<double> ok_values;
        for (const std::uint64_t seed : seeds) {
            SyntheticTaskSpec s = spec;
            TeacherSpec t = t_spec;
            TrainConfig c = cfg;
            s.seed = seed;
            t.seed = seed;
            c.seed = seed;
            c.variant = variant.flags;

            AblationCell cell;
            cell.seed = seed;
            try {
                const RunResult result = run_single(s, t, c);
                cell.novel_accuracy = result.report.novel_mean;
                ok_values.push_back(cell.novel_accuracy);
            } catch (const training_error& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            row.cells.push_back(std::move(cell));
        }
        row.n_ok = ok_values.size();
        if (!ok_values.empty()) {
            row.mean_novel = stats::mean(ok_values);
            row.stderr_novel = ok_values.size() > 1 ? stats::standard_error(ok_values) : 0.0;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace dnr::toy
