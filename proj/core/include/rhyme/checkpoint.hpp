#pragma once

#include "rhyme/param_bundle.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rhyme {

struct CheckpointArray {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double> data;  // column-major for 2-D entries
};

/// RXW1 file: "RXW1", u32 entry count, per entry {u32 name length, name
/// bytes, u32 ndim, u32 dims[ndim]}, then the f64 payload of all entries in
/// manifest order.
class Checkpoint {
public:
    void add(std::string name, std::vector<std::uint32_t> shape, std::vector<double> data);
    void add_scalar(std::string name, double value) { add(std::move(name), {1}, {value}); }
    void add_bundle(const ParamBundle& bundle);

    bool contains(const std::string& name) const;
    const CheckpointArray& get(const std::string& name) const;
    double scalar(const std::string& name) const;
    /// Copies every entry of `bundle` from the checkpoint, checking shapes.
    void read_bundle(ParamBundle& bundle) const;

    const std::vector<CheckpointArray>& arrays() const noexcept { return arrays_; }

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

private:
    std::vector<CheckpointArray> arrays_;
};

}  // namespace rhyme
