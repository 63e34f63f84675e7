// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/classifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "moexray/errors.hpp"
#include "moexray/random.hpp"

namespace moexray {

Scaler standardize_fit(const Matrix& features) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n < 2) throw DomainError("standardization needs at least 2 rows");
    Scaler s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.means[j] += features(i, j);
    for (auto& m : s.means) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = features(i, j) - s.means[j];
            s.stds[j] += c * c;
        }
    for (auto& v : s.stds) {
        v = std::sqrt(v / static_cast<double>(n - 1));
        if (!(v > 0.0)) v = 1.0;
    }
    return s;
}

Matrix standardize_apply(const Scaler& scaler, const Matrix& features) {
    if (features.cols() != scaler.means.size())
        throw DomainError(fmt::format("scaler has {} features, input has {}", scaler.means.size(), features.cols()));
    Matrix out(features.rows(), features.cols());
    for (std::size_t i = 0; i < features.rows(); ++i)
        for (std::size_t j = 0; j < features.cols(); ++j)
            out(i, j) = (features(i, j) - scaler.means[j]) / scaler.stds[j];
    return out;
}

namespace {

// Writes softmax probabilities of one row of scores in place; returns log-sum-exp.
double softmax_inplace(std::span<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return mx + std::log(sum);
}

}  // namespace

double logreg_objective(const Matrix& features, std::span<const int> labels, const Matrix& weights,
                        std::span<const double> biases, double l2_strength, Matrix* grad_weights,
                        std::vector<double>* grad_biases) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    const std::size_t c = weights.rows();
    if (grad_weights) *grad_weights = Matrix(c, d);
    if (grad_biases) grad_biases->assign(c, 0.0);

    std::vector<double> z(c);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = features.row(i);
        for (std::size_t k = 0; k < c; ++k) z[k] = dot(weights.row(k), x) + biases[k];
        const auto yi = static_cast<std::size_t>(labels[i]);
        const double zy = z[yi];
        const double lse = softmax_inplace(z);
        loss += lse - zy;
        if (grad_weights) {
            for (std::size_t k = 0; k < c; ++k) {
                const double r = z[k] - (k == yi ? 1.0 : 0.0);
                if (r == 0.0) continue;
                auto g = grad_weights->row(k);
                for (std::size_t j = 0; j < d; ++j) g[j] += r * x[j];
                if (grad_biases) (*grad_biases)[k] += r;
            }
        } else if (grad_biases) {
            for (std::size_t k = 0; k < c; ++k) (*grad_biases)[k] += z[k] - (k == yi ? 1.0 : 0.0);
        }
    }
    const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    loss *= inv_n;
    const double wsq = dot(weights.data(), weights.data());
    loss += 0.5 * l2_strength * wsq;
    if (grad_weights) {
        auto g = grad_weights->data();
        auto w = weights.data();
        for (std::size_t t = 0; t < g.size(); ++t) g[t] = g[t] * inv_n + l2_strength * w[t];
    }
    if (grad_biases)
        for (double& g : *grad_biases) g *= inv_n;
    return loss;
}

LogRegModel fit_logreg(const Matrix& features, std::span<const int> labels, int num_classes,
                       const LogRegParams& params, std::uint64_t seed) {
    (void)seed;
    if (labels.size() != features.rows()) throw DomainError("one label per feature row required");
    if (num_classes < 2) throw DomainError("logistic regression needs at least 2 classes");
    std::set<int> present;
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw DomainError(fmt::format("label {} out of range", y));
        present.insert(y);
    }
    if (present.size() < 2) throw DomainError("training data contains a single class");
    for (double v : features.data())
        if (!std::isfinite(v)) throw DomainError("non-finite feature value");

    const auto c = static_cast<std::size_t>(num_classes);
    const std::size_t d = features.cols();
    LogRegModel model;
    model.params = params;
    model.weights = Matrix(c, d);
    model.biases.assign(c, 0.0);

    Matrix gw;
    std::vector<double> gb;
    double loss = logreg_objective(features, labels, model.weights, model.biases, params.l2_strength, &gw, &gb);
    model.loss_history.push_back(loss);

    constexpr double kArmijo = 1e-4;
    constexpr double kMinStep = 1e-12;
    double step = 1.0;
    Matrix trial_w(c, d);
    std::vector<double> trial_b(c);
    for (model.iterations = 0; model.iterations < params.max_iters; ++model.iterations) {
        const double gsq = dot(gw.data(), gw.data()) + dot(gb, gb);
        model.grad_norm = std::sqrt(gsq);
        if (model.grad_norm < params.tolerance) {
            model.converged = true;
            break;
        }
        step = std::min(step * 2.0, 1e3);
        double trial_loss = loss;
        bool accepted = false;
        while (step > kMinStep) {
            auto tw = trial_w.data();
            auto w = model.weights.data();
            auto g = gw.data();
            for (std::size_t t = 0; t < tw.size(); ++t) tw[t] = w[t] - step * g[t];
            for (std::size_t k = 0; k < c; ++k) trial_b[k] = model.biases[k] - step * gb[k];
            trial_loss = logreg_objective(features, labels, trial_w, trial_b, params.l2_strength);
            if (trial_loss <= loss - kArmijo * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further decrease representable
        std::swap(model.weights, trial_w);
        std::swap(model.biases, trial_b);
        loss = logreg_objective(features, labels, model.weights, model.biases, params.l2_strength, &gw, &gb);
        model.loss_history.push_back(loss);
    }
    if (!model.converged) {
        model.grad_norm = std::sqrt(dot(gw.data(), gw.data()) + dot(gb, gb));
        model.converged = model.grad_norm < params.tolerance;
    }
    return model;
}

Matrix decision_scores(const LogRegModel& model, const Matrix& features) {
    if (features.cols() != model.weights.cols())
        throw DomainError(fmt::format("model has {} features, input has {}", model.weights.cols(), features.cols()));
    const std::size_t c = model.weights.rows();
    Matrix out(features.rows(), c);
    for (std::size_t i = 0; i < features.rows(); ++i)
        for (std::size_t k = 0; k < c; ++k) out(i, k) = dot(model.weights.row(k), features.row(i)) + model.biases[k];
    return out;
}

std::vector<int> predict(const LogRegModel& model, const Matrix& features) {
    const Matrix s = decision_scores(model, features);
    std::vector<int> out(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) {
        const auto r = s.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 1) throw DomainError("fold count must be >= 1");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class)
        if (members.size() < static_cast<std::size_t>(k))
            throw DomainError(fmt::format("class {} has {} member(s), fewer than {} folds", cls, members.size(), k));

    FoldPlan plan;
    const auto kk = static_cast<std::size_t>(k);
    if (k == 1) {
        plan.degenerate = true;
        Fold all;
        all.test.resize(labels.size());
        std::iota(all.test.begin(), all.test.end(), 0);
        plan.folds.push_back(std::move(all));
        return plan;
    }

    std::vector<std::vector<std::size_t>> tests(kk);
    std::size_t next = 0;
    for (auto& [cls, members] : by_class) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(cls))));
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t idx : members) {
            tests[next].push_back(idx);
            next = (next + 1) % kk;
        }
    }
    for (std::size_t f = 0; f < kk; ++f) {
        Fold fold;
        fold.test = tests[f];
        std::sort(fold.test.begin(), fold.test.end());
        for (std::size_t g = 0; g < kk; ++g)
            if (g != f) fold.train.insert(fold.train.end(), tests[g].begin(), tests[g].end());
        std::sort(fold.train.begin(), fold.train.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

namespace {

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.row(rows[i]).begin(), x.cols(), out.row(i).begin());
    return out;
}

}  // namespace

std::vector<double> per_class_f1(const std::vector<std::vector<std::int64_t>>& confusion) {
    const std::size_t c = confusion.size();
    std::vector<double> f1(c, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
        std::int64_t tp = confusion[k][k];
        std::int64_t fn = 0;
        std::int64_t fp = 0;
        for (std::size_t j = 0; j < c; ++j) {
            if (j == k) continue;
            fn += confusion[k][j];
            fp += confusion[j][k];
        }
        const std::int64_t denom = 2 * tp + fp + fn;
        f1[k] = denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    }
    return f1;
}

CVReport cross_validate(const Matrix& features, std::span<const int> labels, std::span<const std::string> class_names,
                        int k, const LogRegParams& params, std::uint64_t seed) {
    if (labels.size() != features.rows()) throw DomainError("one label per feature row required");
    const FoldPlan plan = stratified_kfold(labels, k, seed);
    if (plan.degenerate) throw DomainError("cross-validation needs at least 2 folds");
    const auto c = class_names.size();

    CVReport r;
    r.seed = seed;
    r.folds = k;
    r.class_names.assign(class_names.begin(), class_names.end());
    r.confusion.assign(c, std::vector<std::int64_t>(c, 0));
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const Fold& fold = plan.folds[f];
        const Matrix train_raw = take_rows(features, fold.train);
        const Matrix test_raw = take_rows(features, fold.test);
        const Scaler scaler = standardize_fit(train_raw);
        const Matrix train = standardize_apply(scaler, train_raw);
        const Matrix test = standardize_apply(scaler, test_raw);
        std::vector<int> train_y;
        for (auto i : fold.train) train_y.push_back(labels[i]);
        const LogRegModel model =
            fit_logreg(train, train_y, static_cast<int>(c), params, mix_seed(seed, static_cast<std::uint64_t>(f)));
        const auto pred = predict(model, test);
        std::size_t correct = 0;
        for (std::size_t t = 0; t < fold.test.size(); ++t) {
            const int truth = labels[fold.test[t]];
            correct += pred[t] == truth ? 1 : 0;
            ++r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred[t])];
        }
        r.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(fold.test.size()));
    }
    const double kf = static_cast<double>(r.fold_accuracies.size());
    r.mean_accuracy = std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) / kf;
    double ss = 0.0;
    for (double a : r.fold_accuracies) ss += (a - r.mean_accuracy) * (a - r.mean_accuracy);
    r.std_accuracy = std::sqrt(ss / kf);
    const auto f1 = per_class_f1(r.confusion);
    for (std::size_t i = 0; i < c; ++i) r.per_class_f1[r.class_names[i]] = f1[i];
    r.macro_f1 = c > 0 ? std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(c) : 0.0;
    return r;
}

std::vector<int> encode_labels(std::span<const std::string> labels, std::span<const std::string> classes) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto it = std::find(classes.begin(), classes.end(), l);
        if (it == classes.end()) throw DomainError(fmt::format("unknown class label \"{}\"", l));
        out.push_back(static_cast<int>(it - classes.begin()));
    }
    return out;
}

void write_cv_report_json(const CVReport& r, const LogRegParams& params, const std::filesystem::path& path) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& name : r.class_names) per_class[name] = r.per_class_f1.at(name);
    const nlohmann::json j = {{"folds", r.folds},
                              {"fold_accuracies", r.fold_accuracies},
                              {"mean_accuracy", r.mean_accuracy},
                              {"std_accuracy", r.std_accuracy},
                              {"macro_f1", r.macro_f1},
                              {"per_class_f1", per_class},
                              {"classes", r.class_names},
                              {"confusion", r.confusion},
                              {"seed", r.seed},
                              {"hyperparams",
                               {{"l2_strength", params.l2_strength},
                                {"max_iters", params.max_iters},
                                {"tolerance", params.tolerance}}}};
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << j.dump(2) << '\n';
}

void write_confusion_csv(const CVReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "true\\predicted";
    for (const auto& n : r.class_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < r.class_names.size(); ++i) {
        out << r.class_names[i];
        for (auto v : r.confusion[i]) out << ',' << v;
        out << '\n';
    }
}

}  // namespace moexray
