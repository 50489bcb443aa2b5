#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "popstat/learner.hpp"

using namespace popstat;

namespace {

EstimateTable label_table(std::vector<std::optional<double>> values,
                          std::vector<std::int64_t> support) {
    EstimateTable t;
    t.method = "oblivious";
    t.attribute = "duration";
    t.value = std::move(values);
    t.support = std::move(support);
    t.flags.assign(t.value.size(), "");
    return t;
}

} // namespace

TEST_SUITE("learner") {

TEST_CASE("training set drops absent labels and scales confidence weights") {
    Eigen::MatrixXd X(4, 3);
    X << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
    auto labels = label_table({10.0, std::nullopt, 30.0, 40.0}, {5, 9, 20, 10});
    TrainingSet t = make_training_set(X, labels);
    CHECK(t.cells == std::vector<int>{0, 2, 3});
    CHECK(t.X.rows() == 3);
    CHECK(t.y(0) == 10.0);
    CHECK(t.y(2) == 40.0);
    CHECK(t.w(0) == 0.25); // support / max support over labelled cells
    CHECK(t.w(1) == 1.0);
    CHECK(t.w(2) == 0.5);
    CHECK(t.X.row(1) == X.row(2));

    CHECK_THROWS_AS(make_training_set(Eigen::MatrixXd(2, 3), labels), TrainingError);
    auto empty = label_table({std::nullopt, std::nullopt, std::nullopt, std::nullopt}, {0, 0, 0, 0});
    CHECK_THROWS_AS(make_training_set(X, empty), TrainingError);
}

TEST_CASE("identical feature rows predict identical values") {
    Eigen::MatrixXd X(4, 2);
    X << 0.5, -1.0, 0.5, -1.0, 2.0, 0.25, -1.0, 0.75;
    auto labels = label_table({3.0, 3.5, 9.0, 1.0}, {4, 4, 4, 4});
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 5;
    LearnedModel m = train_model(X, labels, cfg);
    auto est = predict_all(m, X, labels.support, "learned-O");
    CHECK(*est.value[0] == *est.value[1]); // rows 0 and 1 are equal inputs
    CHECK(est.method == "learned-O");
    CHECK(est.attribute == "duration");
    CHECK(est.support == labels.support);
}

TEST_CASE("count predictions are clamped at zero, averages are not") {
    LearnedModel m;
    m.net.w = {Mlp::Mat::Zero(1, 2)};
    m.net.b = {Mlp::Vec::Constant(1, -3.2)};
    m.attribute = "visits";
    m.target_mean = 0.0;
    m.target_spread = 1.0;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 2);
    auto est = predict_all(m, X, {1, 1}, "learned-O");
    CHECK(*est.value[0] == 0.0); // raw -3.2, clamped for COUNT

    m.attribute = "duration";
    auto avg = predict_all(m, X, {1, 1}, "learned-O");
    CHECK(*avg.value[0] == -3.2);

    CHECK_THROWS_AS(predict_all(m, X, {1}, "learned-O"), DataError);
}

TEST_CASE("model json reloads bit-exactly and reserializes identically") {
    Eigen::MatrixXd X(5, 3);
    X << 1, 0, 0.2, 0, 1, -0.4, 0.3, 0.3, 1.0, -1, 0.5, 0, 0.7, -0.7, 0.1;
    auto labels = label_table({5.0, 7.0, std::nullopt, 2.0, 4.0}, {3, 6, 0, 2, 6});
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 21;
    cfg.weighted = true;
    LearnedModel m = train_model(X, labels, cfg);

    testutil::TempDir tmp("model_io");
    write_model_json(tmp.file("m.json"), m);
    LearnedModel back = read_model_json(tmp.file("m.json"));
    REQUIRE(back.net.w.size() == m.net.w.size());
    for (std::size_t l = 0; l < m.net.w.size(); ++l) {
        CHECK(back.net.w[l] == m.net.w[l]); // bitwise equality
        CHECK(back.net.b[l] == m.net.b[l]);
    }
    CHECK(back.attribute == m.attribute);
    CHECK(back.target_mean == m.target_mean);
    CHECK(back.target_spread == m.target_spread);
    CHECK(back.cfg.weighted == m.cfg.weighted);
    CHECK(back.cfg.seed == m.cfg.seed);
    CHECK(back.cfg.epochs == m.cfg.epochs);

    write_model_json(tmp.file("m2.json"), back);
    CHECK(testutil::read_text(tmp.file("m.json")) == testutil::read_text(tmp.file("m2.json")));

    // reloaded model predicts identically
    auto a = predict_all(m, X, labels.support, "learned-O");
    auto b = predict_all(back, X, labels.support, "learned-O");
    for (int mu = 0; mu < 5; ++mu) CHECK(*a.value[mu] == *b.value[mu]);

    CHECK_THROWS_AS(read_model_json(tmp.file("missing.json")), ParseError);
}

TEST_CASE("same config trains byte-identical model files") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 0, 1, 1, 1, 0.5, 0.5;
    auto labels = label_table({1.0, 2.0, 3.0, 4.0}, {2, 2, 2, 2});
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 33;
    testutil::TempDir tmp("model_det");
    write_model_json(tmp.file("a.json"), train_model(X, labels, cfg));
    write_model_json(tmp.file("b.json"), train_model(X, labels, cfg));
    CHECK(testutil::read_text(tmp.file("a.json")) == testutil::read_text(tmp.file("b.json")));
}

TEST_CASE("trace csv lists one row per epoch") {
    testutil::TempDir tmp("trace");
    write_trace_csv(tmp.file("t.csv"), {1.0, 0.5, 0.25}, {2.0, 1.0, 0.5});
    auto text = testutil::read_text(tmp.file("t.csv"));
    CHECK(text == "epoch,train_loss,eval_metric\n1,1,2\n2,0.5,1\n3,0.25,0.5\n");
    write_trace_csv(tmp.file("t2.csv"), {1.0, 0.5});
    CHECK(testutil::read_text(tmp.file("t2.csv")) == "epoch,train_loss\n1,1\n2,0.5\n");
}

} // TEST_SUITE
