#include "rhyme/error.hpp"
#include "rhyme/grad_check.hpp"
#include "rhyme/surrogate.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <utility>

using namespace rhyme;

namespace {

SurrogateModel tiny_model(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    const Grid1D grid(-5.0, 5.0, 24);
    BasisNetConfig bc;
    bc.n_features = 8;
    bc.hidden = {8};
    BasisNet basis(bc, 3, -5.0, 5.0, 12, rng);
    FlowNetConfig fc;
    fc.r = 3;
    fc.hidden = 6;
    fc.encoder_hidden = {5};
    fc.decoder_hidden = {5};
    FlowNet flow(fc, rng);
    flow.set_input_scale(0.8);
    Mlp recon = make_recon_net(3, {5}, rng);
    return SurrogateModel(std::move(basis), std::move(flow), std::move(recon), grid, SamplePoints::uniform(grid, 12), 0.5);
}

PiecewiseConstantInput random_input(const Grid1D& g, std::size_t n_profiles, std::uint64_t seed) {
    PiecewiseConstantInput in;
    in.delta = 0.5;
    in.t_end = 0.5 * static_cast<double>(n_profiles);
    for (std::size_t k = 0; k < n_profiles; ++k) {
        const Eigen::VectorXd v = test::random_vector(static_cast<Eigen::Index>(g.n_points()), seed + k);
        in.profiles.emplace_back(v.data(), v.data() + v.size());
    }
    return in;
}

std::vector<double> random_field(const Grid1D& g, std::uint64_t seed) {
    const Eigen::VectorXd v = test::random_vector(static_cast<Eigen::Index>(g.n_points()), seed);
    return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("Hadamard reconstruction on a hand-set network") {
    Mlp recon({2, 1}, "recon");
    recon.params().matrix(0) << 1.0, 2.0;
    recon.params().matrix(1) << 0.5;
    CHECK(reconstruct_output(recon, Eigen::Vector2d(1.0, 3.0), Eigen::Vector2d(2.0, -1.0)) == -3.5);
    // a zero factor on either side feeds h_u(0)
    CHECK(reconstruct_output(recon, Eigen::Vector2d::Zero(), Eigen::Vector2d(2.0, -1.0)) == 0.5);
    CHECK(reconstruct_output(recon, Eigen::Vector2d(4.0, 4.0), Eigen::Vector2d::Zero()) == 0.5);
    CHECK_THROWS_AS(reconstruct_output(recon, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()), ContractViolation);
}

TEST_CASE("mesh-free prediction composes basis, flow and reconstruction") {
    const auto model = tiny_model();
    const auto& g = model.grid();
    const auto u0 = random_field(g, 10);
    const auto input = random_input(g, 6, 20);
    const std::vector<SpaceTimeQuery> queries{{0.123, 1.7}, {-4.9, 0.0}, {3.3, 1.7}, {2.0, 0.5}, {-1.25, 2.2}};
    const auto out = predict(model, u0, input, queries);
    REQUIRE(out.size() == queries.size());

    Eigen::VectorXd u0_pts(12);
    Eigen::MatrixXd prof(6, 12);
    for (Eigen::Index j = 0; j < 12; ++j) {
        const auto node = model.points().indices[static_cast<std::size_t>(j)];
        u0_pts[j] = u0[node];
        for (Eigen::Index k = 0; k < 6; ++k) prof(k, j) = input.profiles[static_cast<std::size_t>(k)][node];
    }
    const Eigen::VectorXd a0 = model.project_state(u0_pts);
    ProjectedInputSequence f;
    f.delta = 0.5;
    f.coeff_profiles = model.project_profiles(prof);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const std::vector<double> x{queries[i].x};
        const Eigen::VectorXd phi = model.basis().eval(x).col(0);
        const double expected = reconstruct_output(model.recon(), model.flow().forward(a0, f, queries[i].t), phi);
        CHECK(std::abs(out[i] - expected) <= 1e-12);
    }
}

TEST_CASE("prediction does not depend on query order") {
    const auto model = tiny_model(2);
    const auto& g = model.grid();
    const auto u0 = random_field(g, 1);
    const auto input = random_input(g, 8, 2);
    std::vector<SpaceTimeQuery> q;
    for (int i = 0; i < 20; ++i) q.push_back({-5.0 + 0.49 * i, 0.17 * i});
    const auto base = predict(model, u0, input, q);
    std::vector<std::size_t> perm(q.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (7 * i + 3) % perm.size();
    std::vector<SpaceTimeQuery> shuffled;
    for (auto p : perm) shuffled.push_back(q[p]);
    const auto out = predict(model, u0, input, shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(std::abs(out[i] - base[perm[i]]) <= 1e-12);
    CHECK(predict(model, u0, input, {}).empty());
}

TEST_CASE("prediction contracts") {
    const auto model = tiny_model(3);
    const auto& g = model.grid();
    const auto u0 = random_field(g, 1);
    const auto input = random_input(g, 4, 2);
    CHECK_THROWS_AS(predict(model, u0, input, {{0.0, 2.25}}), ContractViolation);
    CHECK_NOTHROW(predict(model, u0, input, {{0.0, 2.0}}));
    CHECK_THROWS_AS(predict(model, u0, input, {{0.0, -1.0}}), ContractViolation);
    auto other = input;
    other.delta = 0.25;
    CHECK_THROWS_AS(predict(model, u0, other, {{0.0, 0.1}}), ContractViolation);
    CHECK_THROWS_AS(predict(model, std::vector<double>(5, 0.0), input, {{0.0, 0.1}}), ContractViolation);
}

TEST_CASE("batched training predictions agree with per-trajectory evaluation") {
    const auto model = tiny_model(4);
    const Eigen::MatrixXd a0 = test::random_matrix(3, 2, 5);
    const Eigen::MatrixXd p0 = test::random_matrix(3, 5, 6);
    const Eigen::MatrixXd p1 = test::random_matrix(3, 5, 7);
    const FlowBatch batch{a0, {&p0, &p1}, {{0, 3, 0.4}, {1, 0, 0.0}, {1, 4, 0.5}, {0, 1, 0.0}}};
    const Eigen::MatrixXd pred = predict_batch(model, batch);
    const Eigen::MatrixXd g0 = model.predict_on_points(a0.col(0), p0, {1.7, 0.5});
    const Eigen::MatrixXd g1 = model.predict_on_points(a0.col(1), p1, {0.0, 2.25});
    CHECK((pred.col(0) - g0.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((pred.col(3) - g0.row(1).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((pred.col(1) - g1.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((pred.col(2) - g1.row(1).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("surrogate gradients match central differences and leave the basis alone") {
    auto model = tiny_model(8);
    const Eigen::MatrixXd a0 = test::random_matrix(3, 2, 9);
    const Eigen::MatrixXd p0 = test::random_matrix(3, 4, 10);
    const Eigen::MatrixXd p1 = test::random_matrix(3, 4, 11);
    const FlowBatch batch{a0, {&p0, &p1}, {{0, 2, 0.25}, {1, 3, 0.0}, {1, 1, 0.8}}};
    const Eigen::MatrixXd w = test::random_matrix(12, 3, 12);
    const Eigen::VectorXd basis_before = std::as_const(model.basis().mlp().params()).flat();

    SurrogateCache cache;
    predict_batch(model, batch, &cache);
    FlowGrads fg = model.flow().zero_grads();
    ParamBundle rg = std::as_const(model.recon()).params().zeros_like();
    predict_backward(model, cache, w, fg, rg);

    auto loss = [&] { return (predict_batch(model, batch).array() * w.array()).sum(); };
    const std::pair<ParamBundle*, const ParamBundle*> blocks[] = {{&model.flow().encoder().params(), &fg.encoder},
                                                                  {&model.flow().cell().params(), &fg.cell},
                                                                  {&model.flow().decoder().params(), &fg.decoder},
                                                                  {&model.recon().params(), &rg}};
    for (const auto& [params, g] : blocks) {
        const auto r = grad_check(loss, params->flat(), std::as_const(*g).flat());
        CHECK(r.max_discrepancy <= 1e-6);
    }
    CHECK(std::as_const(model.basis().mlp().params()).flat() == basis_before);

    predict_batch(model, batch, &cache);
    FlowGrads fz = model.flow().zero_grads();
    ParamBundle rz = std::as_const(model.recon()).params().zeros_like();
    predict_backward(model, cache, Eigen::MatrixXd::Zero(12, 3), fz, rz);
    CHECK(std::as_const(rz).flat().isZero(0.0));
    for (const auto& b : FlowNet::as_vector(fz)) CHECK(b.flat().isZero(0.0));
    CHECK_THROWS_AS(predict_backward(model, cache, Eigen::MatrixXd::Zero(11, 3), fz, rz), ContractViolation);
}

TEST_CASE("saved models reproduce predictions exactly") {
    test::TempDir dir("model");
    const auto model = tiny_model(13);
    model.save(dir.path());
    CHECK(std::filesystem::exists(dir.path() / "manifest.json"));
    const auto back = SurrogateModel::load(dir.path());
    CHECK(back.parameter_count() == model.parameter_count());
    const auto& g = model.grid();
    const auto u0 = random_field(g, 14);
    const auto input = random_input(g, 5, 15);
    const std::vector<SpaceTimeQuery> q{{0.3, 0.0}, {1.1, 1.9}, {-2.0, 2.5}};
    CHECK(predict(back, u0, input, q) == predict(model, u0, input, q));
    CHECK_THROWS_AS(SurrogateModel::load(dir.path() / "nope"), ContractViolation);
}
