#include "popstat/learner.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "popstat/csv.hpp"

namespace popstat {

using nlohmann::json;

TrainingSet make_training_set(const Eigen::MatrixXd& features, const EstimateTable& labels) {
    if ((int)features.rows() != labels.cell_count())
        throw TrainingError("make_training_set: features cover " +
                            fmt_int((std::int64_t)features.rows()) + " cells, labels " +
                            fmt_int(labels.cell_count()));
    std::int64_t max_support = 0;
    for (int mu = 0; mu < labels.cell_count(); ++mu)
        if (labels.value[mu]) max_support = std::max(max_support, labels.support[mu]);
    if (max_support <= 0)
        throw TrainingError("make_training_set: no labelled cell has observed support");

    TrainingSet t;
    for (int mu = 0; mu < labels.cell_count(); ++mu)
        if (labels.value[mu]) t.cells.push_back(mu);
    t.X.resize(t.cells.size(), features.cols());
    t.y.resize(t.cells.size());
    t.w.resize(t.cells.size());
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
        const int mu = t.cells[i];
        t.X.row(i) = features.row(mu);
        t.y(i) = *labels.value[mu];
        t.w(i) = (double)labels.support[mu] / (double)max_support;
    }
    return t;
}

LearnedModel train_model(const Eigen::MatrixXd& features, const EstimateTable& labels,
                         const TrainConfig& cfg) {
    const TrainingSet ts = make_training_set(features, labels);
    Mlp net = mlp_init(cfg.seed, (int)features.cols());
    TrainResult r = train(std::move(net), TrainData{ts.X, ts.y, ts.w}, cfg);
    LearnedModel m;
    m.net = std::move(r.net);
    m.attribute = labels.attribute;
    m.target_mean = r.target_mean;
    m.target_spread = r.target_spread;
    m.cfg = cfg;
    m.train_loss = std::move(r.train_loss);
    return m;
}

EstimateTable predict_all(const LearnedModel& model, const Eigen::MatrixXd& features,
                          const std::vector<std::int64_t>& support, const std::string& method) {
    if (support.size() != (std::size_t)features.rows())
        throw DataError("predict_all: support column size mismatch");
    const Eigen::VectorXd raw = mlp_forward(model.net, Eigen::MatrixXd(features));
    const bool clamp = model.attribute == "visits";
    EstimateTable out;
    out.method = method;
    out.attribute = model.attribute;
    out.support = support;
    out.flags.assign(features.rows(), "");
    out.value.resize(features.rows());
    for (int mu = 0; mu < (int)features.rows(); ++mu) {
        double v = raw(mu) * model.target_spread + model.target_mean;
        if (clamp && v < 0.0) v = 0.0;
        out.value[mu] = v;
    }
    return out;
}

static json params_to_json(const std::vector<Mlp::Mat>& ws) {
    json out = json::array();
    for (const auto& W : ws) {
        json flat = json::array();
        for (int r = 0; r < W.rows(); ++r)
            for (int c = 0; c < W.cols(); ++c) flat.push_back(W(r, c));
        out.push_back(std::move(flat));
    }
    return out;
}

void write_model_json(const std::string& path, const LearnedModel& m) {
    json j;
    j["layer_sizes"] = m.net.layer_sizes();
    j["weights"] = params_to_json(m.net.w);
    json biases = json::array();
    for (const auto& b : m.net.b) {
        json flat = json::array();
        for (int r = 0; r < b.size(); ++r) flat.push_back(b(r));
        biases.push_back(std::move(flat));
    }
    j["biases"] = std::move(biases);
    j["attribute"] = m.attribute;
    j["target_scaler"] = {{"mean", m.target_mean}, {"spread", m.target_spread}};
    j["config"] = {{"weighted", m.cfg.weighted},
                   {"epochs", m.cfg.epochs},
                   {"lr", m.cfg.lr},
                   {"batch", m.cfg.batch},
                   {"seed", m.cfg.seed},
                   {"validation_fraction", m.cfg.validation_fraction},
                   {"patience", m.cfg.patience},
                   {"standardize_targets", m.cfg.standardize_targets}};
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << j.dump(1) << '\n';
}

LearnedModel read_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    LearnedModel m;
    try {
        const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
        if (sizes.size() < 2) throw ParseError(path + ": need at least 2 layer sizes");
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int in_dim = sizes[l], out_dim = sizes[l + 1];
            const auto& wf = j.at("weights").at(l);
            const auto& bf = j.at("biases").at(l);
            if ((int)wf.size() != in_dim * out_dim || (int)bf.size() != out_dim)
                throw ParseError(path + ": parameter array shape mismatch at layer " +
                                 fmt_int((std::int64_t)l));
            Mlp::Mat W(out_dim, in_dim);
            for (int r = 0; r < out_dim; ++r)
                for (int c = 0; c < in_dim; ++c) W(r, c) = wf.at(r * in_dim + c).get<double>();
            Mlp::Vec b(out_dim);
            for (int r = 0; r < out_dim; ++r) b(r) = bf.at(r).get<double>();
            m.net.w.push_back(std::move(W));
            m.net.b.push_back(std::move(b));
        }
        m.attribute = j.at("attribute").get<std::string>();
        m.target_mean = j.at("target_scaler").at("mean").get<double>();
        m.target_spread = j.at("target_scaler").at("spread").get<double>();
        const auto& c = j.at("config");
        m.cfg.weighted = c.at("weighted").get<bool>();
        m.cfg.epochs = c.at("epochs").get<int>();
        m.cfg.lr = c.at("lr").get<double>();
        m.cfg.batch = c.at("batch").get<int>();
        m.cfg.seed = c.at("seed").get<std::uint64_t>();
        m.cfg.validation_fraction = c.at("validation_fraction").get<double>();
        m.cfg.patience = c.at("patience").get<int>();
        m.cfg.standardize_targets = c.at("standardize_targets").get<bool>();
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return m;
}

void write_trace_csv(const std::string& path, const std::vector<double>& train_loss,
                     const std::vector<double>& eval_metric) {
    const bool with_eval = !eval_metric.empty();
    std::vector<std::string> header{"epoch", "train_loss"};
    if (with_eval) header.push_back("eval_metric");
    CsvWriter w(path, header);
    for (std::size_t e = 0; e < train_loss.size(); ++e) {
        std::vector<std::string> row{fmt_int((std::int64_t)e + 1), fmt_double(train_loss[e])};
        if (with_eval) row.push_back(fmt_double(eval_metric.at(e)));
        w.row(row);
    }
}

} // namespace popstat
