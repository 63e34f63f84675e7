// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moexray/matrix.hpp"

namespace moexray {

/// Per-feature standardization fitted on one training fold.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;  // zero-variance features carry 1
};

/// Column means and n-1 standard deviations. Needs at least two rows.
Scaler standardize_fit(const Matrix& features);
Matrix standardize_apply(const Scaler& scaler, const Matrix& features);

struct LogRegParams {
    double l2_strength = 1e-2;
    int max_iters = 500;
    double tolerance = 1e-6;  // on the gradient 2-norm
};

struct LogRegModel {
    Matrix weights;               // classes x features
    std::vector<double> biases;   // per class
    LogRegParams params;
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    /// Objective after initialization and after every accepted step.
    std::vector<double> loss_history;

    int num_classes() const noexcept { return static_cast<int>(weights.rows()); }
};

/// Mean multinomial cross-entropy plus (l2/2)*||W||^2 (biases unpenalized).
/// When the gradient outputs are non-null they receive the analytic gradient.
double logreg_objective(const Matrix& features, std::span<const int> labels, const Matrix& weights,
                        std::span<const double> biases, double l2_strength, Matrix* grad_weights = nullptr,
                        std::vector<double>* grad_biases = nullptr);

/// Full-batch gradient descent with Armijo backtracking from a zero start.
/// Labels are class indices in [0, num_classes). The seed is accepted for API
/// uniformity; zero initialization makes the fit deterministic without it.
/// Throws DomainError on fewer than two classes or non-finite features.
LogRegModel fit_logreg(const Matrix& features, std::span<const int> labels, int num_classes,
                       const LogRegParams& params = {}, std::uint64_t seed = 0);

Matrix decision_scores(const LogRegModel& model, const Matrix& features);
/// Argmax class per row; ties go to the lowest class index.
std::vector<int> predict(const LogRegModel& model, const Matrix& features);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct FoldPlan {
    std::vector<Fold> folds;
    /// k == 1: a single fold whose test set is all data and whose train set is empty.
    bool degenerate = false;
};

/// Shuffles each class by seed and deals it round-robin into k folds. Dealing
/// continues across classes so fold sizes stay within one of each other.
/// Throws DomainError when a class has fewer than k members.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct CVReport {
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population (k) denominator
    double macro_f1 = 0.0;
    std::map<std::string, double> per_class_f1;
    std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted], pooled over folds
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;
    int folds = 0;
};

/// Per fold: fit the scaler on train rows, transform train and test, fit the
/// model on train, score test. Macro F1 is taken over the pooled confusion matrix.
CVReport cross_validate(const Matrix& features, std::span<const int> labels, std::span<const std::string> class_names,
                        int k, const LogRegParams& params, std::uint64_t seed);

/// Index of each label within `classes`; throws DomainError for unknown labels.
std::vector<int> encode_labels(std::span<const std::string> labels, std::span<const std::string> classes);

/// Per-class F1 from a confusion matrix (0 when a class has no predictions and no members).
std::vector<double> per_class_f1(const std::vector<std::vector<std::int64_t>>& confusion);

void write_cv_report_json(const CVReport& r, const LogRegParams& params, const std::filesystem::path& path);
void write_confusion_csv(const CVReport& r, const std::filesystem::path& path);

}  // namespace moexray
