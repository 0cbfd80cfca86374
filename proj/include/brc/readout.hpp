#pragma once

// Linear readout: softmax single-layer perceptron trained by mini-batch SGD,
// stratified k-fold evaluation and the spatial-shuffle chance control.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brc/dsp.hpp"

namespace brc {

struct LabeledDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;               // class index into class_names
    std::vector<std::string> class_names;
    std::vector<StateMeta> meta;           // optional; empty or one per sample

    std::size_t size() const { return labels.size(); }
    int n_classes() const { return static_cast<int>(class_names.size()); }
    int dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
    /// Throws DataError on ragged, mislabeled or non-finite content.
    void validate() const;
    LabeledDataset subset(std::span<const std::size_t> idx) const;
    void append(const LabeledDataset& other);
};

struct TrainConfig {
    int epochs = 1000;
    double lr0 = 0.01;
    double lr_decay_epochs = 250.0;   // lr(epoch) = lr0 / (1 + epoch / lr_decay_epochs)
    int batch_size = 8;
    bool standardize = true;

    std::vector<std::string> validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct ReadoutModel {
    int n_classes = 0;
    int dim = 0;
    std::vector<std::string> class_names;
    bool standardize = true;
    std::vector<double> mean;    // per feature, fitted on training data
    std::vector<double> scale;   // per feature std; 0 marks a constant feature
    Eigen::MatrixXd weights;     // n_classes x dim, acting on standardized features
    Eigen::VectorXd bias;

    TrainConfig train;
    std::uint64_t seed = 0;
    std::vector<double> loss_trace;  // mean training loss per epoch
    double final_loss = 0.0;

    bool operator==(const ReadoutModel&) const = default;
};

ReadoutModel train_slp(const LabeledDataset& ds, const TrainConfig& cfg, std::uint64_t seed);

struct Prediction {
    int label = 0;
    std::vector<double> scores;
};

Prediction predict(const ReadoutModel& m, std::span<const double> x);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

/// Mean cross-entropy of scores = W x + b over the rows of X (no
/// standardization). Writes the analytic gradient when gW / gb are given.
double cross_entropy(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                     std::span<const int> labels, Eigen::MatrixXd* gW = nullptr, Eigen::VectorXd* gb = nullptr);

/// Fold id for every sample: classes are shuffled independently and dealt
/// round-robin, each class starting where the previous one stopped.
std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int k, std::uint64_t seed);

struct CvResult {
    int k = 0;
    std::vector<double> fold_accuracy;
    double mean = 0.0;
    double std = 0.0;                        // sample std over folds
    std::vector<std::vector<int>> confusion; // [true][predicted], pooled over folds
    std::vector<double> per_class_accuracy;
    std::vector<int> per_class_count;
    std::vector<int> fold_of;
};

/// Stratified k-fold evaluation. Folds are trained on up to `jobs` threads;
/// the result does not depend on `jobs`.
CvResult cross_validate(const LabeledDataset& ds, int k, const TrainConfig& cfg, std::uint64_t seed,
                        int jobs = 1);

/// Accuracy of a frozen model on a dataset, with its confusion matrix.
CvResult evaluate(const ReadoutModel& m, const LabeledDataset& ds);

/// Independent uniform permutation of every sample's feature vector.
LabeledDataset shuffle_baseline(const LabeledDataset& ds, std::uint64_t seed);

void save_model(const ReadoutModel& m, const std::filesystem::path& path);
ReadoutModel load_model(const std::filesystem::path& path);

}  // namespace brc
