#include "rhyme/dataset.hpp"
#include "rhyme/error.hpp"
#include "rhyme/lhs.hpp"
#include "rhyme/metrics.hpp"
#include "rhyme/training.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

using namespace rhyme;

namespace {

struct Fixture {
    Dataset data;
    SamplePoints points;
    std::vector<SampledTrajectory> train;
    std::vector<SampledTrajectory> val;
};

Fixture make_fixture() {
    DatasetConfig c;
    c.n_points = 32;
    c.dt = 0.1;
    c.t_end = 2.0;
    c.n_trajectories = 5;
    c.block_length = 2;
    Fixture f;
    f.data = generate_dataset(c, 314);
    f.points = SamplePoints::uniform(f.data.grid, 16);
    for (std::size_t i = 0; i < 5; ++i)
        (i < 3 ? f.train : f.val).push_back(sample_trajectory(f.data.trajectories[i], f.points, i));
    return f;
}

SurrogateModel make_model(const Fixture& f, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    BasisNetConfig bc;
    bc.n_features = 8;
    bc.hidden = {8};
    BasisNet basis(bc, 3, -10.0, 10.0, 16, rng);
    FlowNetConfig fc;
    fc.r = 3;
    fc.hidden = 6;
    fc.encoder_hidden = {6};
    fc.decoder_hidden = {6};
    FlowNet flow(fc, rng);
    Mlp recon = make_recon_net(3, {6}, rng);
    return SurrogateModel(std::move(basis), std::move(flow), std::move(recon), f.data.grid, f.points, 0.5);
}

// Reconstruction net forced to output the constant c.
void make_constant(SurrogateModel& m, double c) {
    auto& p = m.recon().params();
    const std::size_t last = p.entries().size() - 1;
    p.matrix(last - 1).setZero();
    p.matrix(last).setConstant(c);
}

TrainConfig small_train() {
    TrainConfig t;
    t.batch_size = 16;
    t.lr = 1e-3;
    t.max_epochs = 3;
    t.n_time_samples = 8;
    t.group_size = 4;
    return t;
}

}  // namespace

TEST_CASE("Latin hypercube times put one sample in each stratum") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 1 + seed % 17;
        const auto t = lhs_times(20.0, n, rng);
        REQUIRE(t.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(t[i] >= 20.0 * static_cast<double>(i) / static_cast<double>(n));
            CHECK(t[i] < 20.0 * static_cast<double>(i + 1) / static_cast<double>(n));
        }
    }
    std::mt19937_64 a(5), b(5);
    CHECK(lhs_times(3.0, 10, a) == lhs_times(3.0, 10, b));
    CHECK_THROWS_AS(lhs_times(3.0, 0, a), ContractViolation);
    CHECK_THROWS_AS(lhs_times(0.0, 3, a), ContractViolation);
}

TEST_CASE("plateau scheduler on a flat loss sequence") {
    PlateauScheduler s(1e-3, 0.5, 5, 30);
    std::vector<int> reductions;
    int stop_epoch = -1;
    for (int epoch = 1; epoch <= 40 && stop_epoch < 0; ++epoch) {
        const auto d = s.observe(5.0);
        CHECK(d.improved == (epoch == 1));
        if (d.lr_reduced) reductions.push_back(epoch);
        if (d.stop) stop_epoch = epoch;
    }
    CHECK(reductions == std::vector<int>{6, 11, 16, 21, 26, 31});
    CHECK(stop_epoch == 31);
    CHECK(s.lr() == doctest::Approx(1e-3 / 64.0).epsilon(1e-15));

    PlateauScheduler r(1.0, 0.5, 5, 30);
    for (double v : {3.0, 3.0, 3.0, 3.0, 2.0, 2.0, 2.0, 2.0, 2.0}) CHECK_FALSE(r.observe(v).lr_reduced);
    CHECK(r.observe(2.0).lr_reduced);
    CHECK(r.epochs_since_best() == 5);
    CHECK(r.best() == 2.0);
    CHECK_THROWS_AS(PlateauScheduler(0.0, 0.5, 5, 30), ContractViolation);
}

TEST_CASE("relative error and mean squared error on worked examples") {
    Eigen::MatrixXd truth(1, 2), pred(1, 2);
    truth << 3.0, 4.0;
    pred << 3.0, 4.0;
    CHECK(relative_l2(truth, pred) == 0.0);
    pred.setZero();
    CHECK(relative_l2(truth, pred) == 1.0);
    pred << 0.0, 4.0;
    CHECK(relative_l2(truth, pred) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(mean_squared_error(truth, pred) == 4.5);
    CHECK_THROWS_AS(relative_l2(Eigen::MatrixXd::Zero(1, 2), pred), ContractViolation);
    CHECK_THROWS_AS(relative_l2(truth, Eigen::MatrixXd::Zero(2, 1)), ContractViolation);
}

TEST_CASE("report statistics are recomputable from the written CSV") {
    test::TempDir dir("csv");
    EvalReport rep;
    rep.label = "x";
    rep.trajectory_ids = {7, 3, 11, 2};
    rep.errors = {0.1, 0.4, 0.2, 0.3};
    CHECK(rep.mean() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(rep.stddev() == doctest::Approx(std::sqrt(0.05 / 3.0)).epsilon(1e-14));
    CHECK(rep.quantile(0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(rep.quantile(0.25) == doctest::Approx(0.175).epsilon(1e-14));
    CHECK(rep.quantile(1.0) == 0.4);

    write_metrics_csv(rep, dir.path() / "m.csv");
    std::ifstream in(dir.path() / "m.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "trajectory_id,rel_l2");
    const auto back = read_metrics_csv(dir.path() / "m.csv");
    CHECK(back.trajectory_ids == rep.trajectory_ids);
    CHECK(back.errors == rep.errors);
    CHECK(std::abs(back.mean() - rep.mean()) <= 1e-12);
    CHECK(std::abs(back.stddev() - rep.stddev()) <= 1e-12);

    const std::vector<CurveRow> rows{{0, 1.5, 2.5, 1e-3}, {1, 1.0 / 3.0, 0.1, 5e-4}};
    write_curve_csv(rows, dir.path() / "c.csv");
    std::ifstream cin(dir.path() / "c.csv");
    std::getline(cin, header);
    CHECK(header == "epoch,train_loss,val_loss,lr");
    const auto rb = read_curve_csv(dir.path() / "c.csv");
    REQUIRE(rb.size() == 2);
    CHECK(rb[1].train_loss == 1.0 / 3.0);
    CHECK(rb[1].lr == 5e-4);
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("empirical loss of a constant predictor") {
    auto f = make_fixture();
    auto model = make_model(f, 1);
    make_constant(model, 0.75);
    // constant truth: loss is (c - c')^2
    std::vector<SampledTrajectory> flat = f.train;
    for (auto& t : flat) t.states.setConstant(-0.25);
    const auto set = project_set(model, flat);
    std::mt19937_64 rng(2);
    const auto q = lhs_queries(flat, 5, rng);
    CHECK(q.size() == 15);
    CHECK(empirical_loss(model, set, q) == doctest::Approx(1.0).epsilon(1e-14));

    // three sample points holding 1, 2, 3 against a zero predictor
    make_constant(model, 0.0);
    std::vector<SampledTrajectory> three = f.train;
    for (auto& t : three)
        for (Eigen::Index j = 0; j < t.states.cols(); ++j) t.states.col(j).setConstant(static_cast<double>(j % 3) + 1.0);
    // 16 points: values cycle 1,2,3 so the mean square is (6*1 + 5*4 + 5*9) / 16
    CHECK(empirical_loss(model, project_set(model, three), q) == doctest::Approx(71.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("query times snap to stored times") {
    auto f = make_fixture();
    std::mt19937_64 rng(9);
    const auto q = lhs_queries(f.train, 7, rng);
    REQUIRE(q.size() == 21);
    std::mt19937_64 again(9);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto t = lhs_times(2.0, 7, again);
        for (std::size_t j = 0; j < 7; ++j) {
            const auto& ref = q[i * 7 + j];
            CHECK(ref.traj == i);
            CHECK(std::abs(f.train[i].times[ref.time_index] - t[j]) <= 0.05 + 1e-12);
        }
    }
}

TEST_CASE("stage-two training is deterministic and keeps the best epoch") {
    auto f = make_fixture();
    auto a = make_model(f, 4);
    auto b = make_model(f, 4);
    const auto ra = train_stage2(a, f.train, f.val, small_train(), 77);
    const auto rb = train_stage2(b, f.train, f.val, small_train(), 77);
    REQUIRE(ra.curve.size() == 4);
    CHECK(ra.curve[0].epoch == 0);
    for (std::size_t i = 0; i < ra.curve.size(); ++i) {
        CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
        CHECK(ra.curve[i].val_loss == rb.curve[i].val_loss);
    }
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (const auto& row : ra.curve)
        if (row.val_loss < best) {
            best = row.val_loss;
            arg = row.epoch;
        }
    CHECK(ra.best_epoch == arg);
    CHECK(ra.best_val == best);
    CHECK(std::as_const(a.flow().encoder().params()).flat() == std::as_const(b.flow().encoder().params()).flat());

    auto c = make_model(f, 4);
    const auto rc = train_stage2(c, f.train, f.val, small_train(), 78);
    CHECK(rc.curve[1].train_loss != ra.curve[1].train_loss);
}

TEST_CASE("a single full batch does not depend on how queries are grouped") {
    auto f = make_fixture();
    auto cfg = small_train();
    cfg.max_epochs = 1;
    cfg.batch_size = 1000;
    cfg.group_size = 2;
    auto a = make_model(f, 5);
    const auto ra = train_stage2(a, f.train, f.val, cfg, 3);
    cfg.group_size = 64;
    auto b = make_model(f, 5);
    const auto rb = train_stage2(b, f.train, f.val, cfg, 3);
    CHECK(ra.curve[1].train_loss == doctest::Approx(rb.curve[1].train_loss).epsilon(1e-12));
    CHECK(ra.curve[1].val_loss == doctest::Approx(rb.curve[1].val_loss).epsilon(1e-10));
}

TEST_CASE("non-finite data aborts training with a divergence error") {
    auto f = make_fixture();
    f.train[1].states(4, 2) = std::numeric_limits<double>::quiet_NaN();
    auto m = make_model(f, 6);
    CHECK_THROWS_AS(train_stage2(m, f.train, f.val, small_train(), 1), TrainingDiverged);
}

TEST_CASE("evaluation reports one error per trajectory") {
    auto f = make_fixture();
    const auto m = make_model(f, 7);
    const auto rep = evaluate(m, f.val, 2.0);
    CHECK(rep.errors.size() == 2);
    CHECK(rep.trajectory_ids == std::vector<std::size_t>{3, 4});
    const auto pred = m.predict_on_points(f.val[0], f.val[0].times);
    CHECK(rep.errors[0] == doctest::Approx(relative_l2(f.val[0].states, pred)).epsilon(1e-12));
    CHECK_THROWS_AS(evaluate(m, f.val, 4.0), ContractViolation);
}
