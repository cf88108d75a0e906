#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rhyme {

struct ParamEntry {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;

    Eigen::Index size() const noexcept { return rows * cols; }
};

/// Named matrices stored contiguously in one flat vector (column-major per
/// entry). Shapes are fixed once added. Mutable access bumps generation(),
/// which forward caches record so a backward pass can reject stale caches.
class ParamBundle {
public:
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

    const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
    std::size_t find(const std::string& name) const;
    Eigen::Index size() const noexcept { return values_.size(); }

    Eigen::Map<const Eigen::MatrixXd> matrix(std::size_t i) const {
        const auto& e = entries_[i];
        return {values_.data() + e.offset, e.rows, e.cols};
    }
    Eigen::Map<Eigen::MatrixXd> matrix(std::size_t i) {
        ++generation_;
        const auto& e = entries_[i];
        return {values_.data() + e.offset, e.rows, e.cols};
    }

    const Eigen::VectorXd& flat() const noexcept { return values_; }
    Eigen::VectorXd& flat() noexcept {
        ++generation_;
        return values_;
    }

    std::uint64_t generation() const noexcept { return generation_; }
    ParamBundle zeros_like() const;
    void set_zero() { flat().setZero(); }
    bool same_layout(const ParamBundle& other) const;

private:
    std::vector<ParamEntry> entries_;
    Eigen::VectorXd values_;
    std::uint64_t generation_ = 0;
};

}  // namespace rhyme
