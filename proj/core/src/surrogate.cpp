#include "rhyme/surrogate.hpp"

#include "rhyme/error.hpp"

#include <json.hpp>

#include <fstream>
#include <map>

namespace rhyme {

namespace fs = std::filesystem;
using nlohmann::json;

Mlp make_recon_net(Eigen::Index r, const std::vector<Eigen::Index>& hidden, std::mt19937_64& rng,
                   const std::string& prefix) {
    std::vector<Eigen::Index> widths{r};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    Mlp m(widths, prefix);
    m.init_glorot(rng);
    return m;
}

double reconstruct_output(const Mlp& recon, const Eigen::VectorXd& a_hat, const Eigen::VectorXd& phi_x) {
    RHYME_REQUIRE(a_hat.size() == phi_x.size(), "reconstruct_output: length mismatch");
    RHYME_REQUIRE(a_hat.size() == recon.input_width(), "reconstruct_output: length differs from network input");
    const Eigen::MatrixXd in = a_hat.cwiseProduct(phi_x);
    return recon.forward(in)(0, 0);
}

SurrogateModel::SurrogateModel(BasisNet basis, FlowNet flow, Mlp recon, Grid1D grid, SamplePoints points,
                               double delta)
    : basis_(std::move(basis)),
      flow_(std::move(flow)),
      recon_(std::move(recon)),
      grid_(std::move(grid)),
      points_(std::move(points)),
      delta_(delta) {
    RHYME_REQUIRE(basis_.rank() == flow_.rank() && recon_.input_width() == flow_.rank() && recon_.output_width() == 1,
                  "SurrogateModel: rank differs between basis, flow and reconstruction");
    RHYME_REQUIRE(delta_ > 0.0, "SurrogateModel: delta must be positive");
    basis_columns_ = basis_.eval(points_.positions);
    basis_at_points_ = basis_columns_.transpose();
}

Eigen::Index SurrogateModel::parameter_count() const {
    return basis_.mlp().params().size() + flow_.parameter_count() + recon_.params().size();
}

Eigen::VectorXd SurrogateModel::project_state(const Eigen::VectorXd& u0_at_points) const {
    return project(u0_at_points, basis_at_points_, points_.weights).coeffs;
}

Eigen::MatrixXd SurrogateModel::project_profiles(const Eigen::MatrixXd& profiles_at_points) const {
    return project_input_signal(profiles_at_points, delta_, basis_at_points_, points_.weights).coeff_profiles;
}

Eigen::MatrixXd SurrogateModel::predict_on_points(const Eigen::VectorXd& a0,
                                                  const Eigen::MatrixXd& coeff_profiles,
                                                  const std::vector<double>& times) const {
    const Eigen::MatrixXd a_hat = flow_.forward_times(a0, coeff_profiles, delta_, times);
    const Eigen::Index nx = basis_columns_.cols();
    const auto K = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd in(rank(), K * nx);
    for (Eigen::Index k = 0; k < K; ++k)
        in.middleCols(k * nx, nx) = basis_columns_.array().colwise() * a_hat.col(k).array();
    const Eigen::MatrixXd out = recon_.forward(in);
    return Eigen::Map<const Eigen::MatrixXd>(out.data(), nx, K).transpose();
}

Eigen::MatrixXd SurrogateModel::predict_on_points(const SampledTrajectory& traj, const std::vector<double>& times) const {
    return predict_on_points(project_state(traj.u0), project_profiles(traj.profiles), times);
}

std::vector<double> predict(const SurrogateModel& model,
                            std::span<const double> u0,
                            const PiecewiseConstantInput& input,
                            const std::vector<SpaceTimeQuery>& queries) {
    const Grid1D& grid = model.grid();
    RHYME_REQUIRE(u0.size() == grid.n_points(), "predict: u0 is not on the model grid");
    RHYME_REQUIRE(std::abs(input.delta - model.delta()) <= 1e-12 * model.delta(), "predict: input hold period differs");
    const auto& pts = model.points();
    const auto nx = static_cast<Eigen::Index>(pts.size());
    Eigen::VectorXd u0_pts(nx);
    Eigen::MatrixXd prof(static_cast<Eigen::Index>(input.n_profiles()), nx);
    for (Eigen::Index j = 0; j < nx; ++j) {
        const std::size_t node = pts.indices[static_cast<std::size_t>(j)];
        u0_pts[j] = u0[node];
        for (Eigen::Index k = 0; k < prof.rows(); ++k) {
            const auto& p = input.profiles[static_cast<std::size_t>(k)];
            RHYME_REQUIRE(p.size() == grid.n_points(), "predict: input profile is not on the model grid");
            prof(k, j) = p[node];
        }
    }
    const Eigen::VectorXd a0 = model.project_state(u0_pts);
    const Eigen::MatrixXd F = model.project_profiles(prof);

    std::map<double, std::size_t> time_slot;
    for (const auto& q : queries) {
        RHYME_REQUIRE(std::isfinite(q.x) && std::isfinite(q.t) && q.t >= 0.0, "predict: query must have finite x and t >= 0");
        time_slot.emplace(q.t, 0);
    }
    std::vector<double> times;
    for (auto& [t, slot] : time_slot) {
        slot = times.size();
        times.push_back(t);
    }
    if (!times.empty()) {
        const TimeSchedule last = schedule(times.back(), model.delta());
        const std::size_t need = last.k_t + (last.last_tau() > 0.0 ? 1 : 0);
        if (need > input.n_profiles())
            throw ContractViolation("predict: input is too short for the largest query time");
    }
    const Eigen::MatrixXd a_hat = times.empty() ? Eigen::MatrixXd() : model.flow().forward_times(a0, F, model.delta(), times);

    std::vector<double> xs;
    xs.reserve(queries.size());
    for (const auto& q : queries) xs.push_back(q.x);
    const Eigen::MatrixXd phi = model.basis().eval(xs);  // r x Q
    Eigen::MatrixXd in(model.rank(), static_cast<Eigen::Index>(queries.size()));
    for (std::size_t i = 0; i < queries.size(); ++i)
        in.col(static_cast<Eigen::Index>(i)) =
            a_hat.col(static_cast<Eigen::Index>(time_slot.at(queries[i].t))).cwiseProduct(phi.col(static_cast<Eigen::Index>(i)));
    const Eigen::MatrixXd out = queries.empty() ? Eigen::MatrixXd(1, 0) : model.recon().forward(in);
    return std::vector<double>(out.data(), out.data() + out.size());
}

Eigen::MatrixXd predict_batch(const SurrogateModel& model, const FlowBatch& batch, SurrogateCache* cache) {
    Eigen::MatrixXd a_hat = model.flow().forward_batch(batch, cache ? &cache->flow : nullptr);
    const Eigen::MatrixXd& phi = model.basis_columns();
    const Eigen::Index nx = phi.cols();
    const Eigen::Index Q = a_hat.cols();
    Eigen::MatrixXd in(model.rank(), Q * nx);
    for (Eigen::Index q = 0; q < Q; ++q) in.middleCols(q * nx, nx) = phi.array().colwise() * a_hat.col(q).array();
    const Eigen::MatrixXd out = model.recon().forward(in, cache ? &cache->recon : nullptr);
    if (cache) cache->a_hat = std::move(a_hat);
    return Eigen::Map<const Eigen::MatrixXd>(out.data(), nx, Q);
}

void predict_backward(const SurrogateModel& model,
                      const SurrogateCache& cache,
                      const Eigen::MatrixXd& d_pred,
                      FlowGrads& flow_grads,
                      ParamBundle& recon_grads) {
    const Eigen::MatrixXd& phi = model.basis_columns();
    const Eigen::Index nx = phi.cols();
    const Eigen::Index Q = cache.a_hat.cols();
    RHYME_REQUIRE(d_pred.rows() == nx && d_pred.cols() == Q, "predict_backward: gradient shape mismatch");
    const Eigen::Map<const Eigen::MatrixXd> dy(d_pred.data(), 1, nx * Q);
    const Eigen::MatrixXd d_in = model.recon().backward(cache.recon, dy, recon_grads);
    Eigen::MatrixXd d_a(model.rank(), Q);
    for (Eigen::Index q = 0; q < Q; ++q)
        d_a.col(q) = (d_in.middleCols(q * nx, nx).array() * phi.array()).rowwise().sum().matrix();
    model.flow().backward_batch(cache.flow, d_a, flow_grads);
}

void SurrogateModel::save(const fs::path& dir) const {
    fs::create_directories(dir);
    basis_.to_checkpoint().save(dir / "basis.rxw");
    flow_.to_checkpoint().save(dir / "flow.rxw");
    Checkpoint rc;
    std::vector<double> widths;
    for (auto w : recon_.widths()) widths.push_back(static_cast<double>(w));
    rc.add("recon.widths", {static_cast<std::uint32_t>(widths.size())}, widths);
    rc.add_bundle(recon_.params());
    rc.save(dir / "recon.rxw");

    json m;
    m["format"] = "rhyme-model";
    m["version"] = 1;
    m["r"] = rank();
    m["delta"] = delta_;
    m["grid"] = {{"x_min", grid_.x_min()}, {"x_max", grid_.x_max()}, {"n_points", grid_.n_points()}};
    m["points"] = {{"indices", points_.indices},
                   {"positions", points_.positions},
                   {"weights", points_.weights},
                   {"domain_length", points_.domain_length}};
    m["flow"] = {{"hidden", flow_.config().hidden},
                 {"encoder_hidden", flow_.config().encoder_hidden},
                 {"decoder_hidden", flow_.config().decoder_hidden},
                 {"input_scale", flow_.input_scale()}};
    m["basis"] = {{"n_features", basis_.feature_map().n_features()},
                  {"center", basis_.feature_map().center},
                  {"half_width", basis_.feature_map().half_width},
                  {"continuum_scale", basis_.continuum_scale()}};
    m["parameters"] = parameter_count();
    m["files"] = {"basis.rxw", "flow.rxw", "recon.rxw"};
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

SurrogateModel SurrogateModel::load(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ContractViolation("missing model manifest " + (dir / "manifest.json").string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw ContractViolation("malformed model manifest: " + std::string(e.what()));
    }
    BasisNet basis = BasisNet::from_checkpoint(Checkpoint::load(dir / "basis.rxw"));
    FlowNet flow = FlowNet::from_checkpoint(Checkpoint::load(dir / "flow.rxw"));
    const Checkpoint rc = Checkpoint::load(dir / "recon.rxw");
    std::vector<Eigen::Index> widths;
    for (double w : rc.get("recon.widths").data) widths.push_back(static_cast<Eigen::Index>(w));
    Mlp recon(widths, "recon");
    rc.read_bundle(recon.params());

    const auto& g = m.at("grid");
    Grid1D grid(g.at("x_min").get<double>(), g.at("x_max").get<double>(), g.at("n_points").get<std::size_t>());
    SamplePoints pts;
    const auto& p = m.at("points");
    pts.indices = p.at("indices").get<std::vector<std::size_t>>();
    pts.positions = p.at("positions").get<std::vector<double>>();
    pts.weights = p.at("weights").get<std::vector<double>>();
    pts.domain_length = p.at("domain_length").get<double>();
    return SurrogateModel(std::move(basis), std::move(flow), std::move(recon), grid, std::move(pts),
                          m.at("delta").get<double>());
}

}  // namespace rhyme
