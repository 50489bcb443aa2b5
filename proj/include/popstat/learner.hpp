#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "popstat/estimators.hpp"
#include "popstat/mlp.hpp"

// Glue between estimate tables and the network: build training sets with
// confidence weights, train one model per (label source, attribute), persist
// and reload models bit-exactly, and produce learned EstimateTables.

namespace popstat {

struct TrainingSet {
    Eigen::MatrixXd X;     // rows = cells with a defined label
    Eigen::VectorXd y;     // initial estimates (training labels)
    Eigen::VectorXd w;     // observed stay-point count / max count
    std::vector<int> cells; // cell id per row
};

/// Rows with ABSENT labels are dropped; w = support / max support (the
/// confidence weight). Throws TrainingError when nothing is usable.
TrainingSet make_training_set(const Eigen::MatrixXd& features, const EstimateTable& labels);

struct LearnedModel {
    Mlp net;
    std::string attribute;      // visits | duration | distance
    double target_mean = 0.0;   // labels were standardized with these
    double target_spread = 1.0;
    TrainConfig cfg;            // as trained (records seed & mode)
    std::vector<double> train_loss;
};

/// init + train on the given labels; COUNT clamping is decided by the
/// attribute at prediction time.
LearnedModel train_model(const Eigen::MatrixXd& features, const EstimateTable& labels,
                         const TrainConfig& cfg);

/// One forward pass per cell; de-standardizes targets and clamps the visits
/// attribute at zero. Support column is carried over from the label table.
EstimateTable predict_all(const LearnedModel& model, const Eigen::MatrixXd& features,
                          const std::vector<std::int64_t>& support, const std::string& method);

// Model JSON: layer sizes, row-major parameters, seed/config, target scaler.
void write_model_json(const std::string& path, const LearnedModel& m);
LearnedModel read_model_json(const std::string& path);

// Per-epoch trace CSV: epoch,train_loss[,eval_metric]
void write_trace_csv(const std::string& path, const std::vector<double>& train_loss,
                     const std::vector<double>& eval_metric = {});

} // namespace popstat
