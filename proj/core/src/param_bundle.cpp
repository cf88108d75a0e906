#include "rhyme/param_bundle.hpp"

#include "rhyme/error.hpp"

namespace rhyme {

std::size_t ParamBundle::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    RHYME_REQUIRE(rows > 0 && cols > 0, "ParamBundle: empty entry " + name);
    for (const auto& e : entries_) RHYME_REQUIRE(e.name != name, "ParamBundle: duplicate entry " + name);
    ParamEntry e{std::move(name), rows, cols, values_.size()};
    Eigen::VectorXd grown = Eigen::VectorXd::Zero(values_.size() + e.size());
    grown.head(values_.size()) = values_;
    values_ = std::move(grown);
    entries_.push_back(std::move(e));
    ++generation_;
    return entries_.size() - 1;
}

std::size_t ParamBundle::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw ContractViolation("ParamBundle: no entry named " + name);
}

ParamBundle ParamBundle::zeros_like() const {
    ParamBundle out;
    out.entries_ = entries_;
    out.values_ = Eigen::VectorXd::Zero(values_.size());
    return out;
}

bool ParamBundle::same_layout(const ParamBundle& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
    }
    return true;
}

}  // namespace rhyme
