#include "rhyme/lstm.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

namespace {
constexpr std::size_t kWeights = 0;
constexpr std::size_t kBias = 1;

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }
}  // namespace

Lstm::Lstm(Eigen::Index input_width, Eigen::Index hidden_width, const std::string& prefix)
    : input_(input_width), hidden_(hidden_width) {
    RHYME_REQUIRE(input_width > 0 && hidden_width > 0, "Lstm: widths must be positive");
    params_.add(prefix + ".W", 4 * hidden_width, input_width + hidden_width);
    params_.add(prefix + ".b", 4 * hidden_width, 1);
}

void Lstm::init_glorot(std::mt19937_64& rng) {
    auto w = params_.matrix(kWeights);
    // fan-in/out of one gate block
    const double limit = std::sqrt(6.0 / static_cast<double>(hidden_ + input_ + hidden_));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    params_.matrix(kBias).setZero();
}

void Lstm::step(const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& h_prev,
                const Eigen::MatrixXd& c_prev,
                Eigen::MatrixXd& h,
                Eigen::MatrixXd& c,
                LstmStepCache* cache) const {
    const Eigen::Index B = x.cols();
    RHYME_REQUIRE(x.rows() == input_ && h_prev.rows() == hidden_ && c_prev.rows() == hidden_ && h_prev.cols() == B &&
                      c_prev.cols() == B,
                  "Lstm::step: shape mismatch");
    const Eigen::Index H = hidden_;
    Eigen::MatrixXd xh(input_ + H, B);
    xh.topRows(input_) = x;
    xh.bottomRows(H) = h_prev;
    Eigen::MatrixXd pre = params_.matrix(kWeights) * xh;
    pre.colwise() += params_.matrix(kBias).col(0);

    Eigen::MatrixXd gates(4 * H, B);
    gates.topRows(2 * H) = sigmoid(pre.topRows(2 * H).array()).matrix();
    gates.middleRows(2 * H, H) = pre.middleRows(2 * H, H).array().tanh().matrix();
    gates.bottomRows(H) = sigmoid(pre.bottomRows(H).array()).matrix();

    const auto i = gates.topRows(H).array();
    const auto f = gates.middleRows(H, H).array();
    const auto g = gates.middleRows(2 * H, H).array();
    const auto o = gates.bottomRows(H).array();
    c = (f * c_prev.array() + i * g).matrix();
    Eigen::MatrixXd tanh_c = c.array().tanh().matrix();
    h = (o * tanh_c.array()).matrix();

    if (cache) {
        cache->xh = std::move(xh);
        cache->gates = std::move(gates);
        cache->c_prev = c_prev;
        cache->tanh_c = std::move(tanh_c);
        cache->generation = params_.generation();
        cache->owner = this;
    }
}

void Lstm::step_backward(const LstmStepCache& cache,
                         const Eigen::MatrixXd& dh,
                         const Eigen::MatrixXd& dc,
                         ParamBundle& grads,
                         Eigen::MatrixXd& dx,
                         Eigen::MatrixXd& dh_prev,
                         Eigen::MatrixXd& dc_prev) const {
    RHYME_REQUIRE(cache.owner == this && cache.generation == params_.generation(), "Lstm::step_backward: stale cache");
    RHYME_REQUIRE(grads.size() == params_.size(), "Lstm::step_backward: gradient bundle layout mismatch");
    const Eigen::Index H = hidden_;
    const Eigen::Index B = cache.xh.cols();
    RHYME_REQUIRE(dh.rows() == H && dc.rows() == H && dh.cols() == B && dc.cols() == B,
                  "Lstm::step_backward: upstream gradient shape mismatch");

    const auto i = cache.gates.topRows(H).array();
    const auto f = cache.gates.middleRows(H, H).array();
    const auto g = cache.gates.middleRows(2 * H, H).array();
    const auto o = cache.gates.bottomRows(H).array();
    const auto tc = cache.tanh_c.array();

    const Eigen::ArrayXXd dc_total = dc.array() + dh.array() * o * (1.0 - tc.square());
    Eigen::MatrixXd dpre(4 * H, B);
    dpre.topRows(H) = (dc_total * g * i * (1.0 - i)).matrix();
    dpre.middleRows(H, H) = (dc_total * cache.c_prev.array() * f * (1.0 - f)).matrix();
    dpre.middleRows(2 * H, H) = (dc_total * i * (1.0 - g.square())).matrix();
    dpre.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();

    grads.matrix(kWeights).noalias() += dpre * cache.xh.transpose();
    grads.matrix(kBias).col(0) += dpre.rowwise().sum();

    const Eigen::MatrixXd dxh = params_.matrix(kWeights).transpose() * dpre;
    dx = dxh.topRows(input_);
    dh_prev = dxh.bottomRows(H);
    dc_prev = (dc_total * f).matrix();
}

}  // namespace rhyme
