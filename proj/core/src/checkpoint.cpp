#include "rhyme/checkpoint.hpp"

#include "rhyme/binary_io.hpp"
#include "rhyme/error.hpp"

#include <fstream>
#include <numeric>

namespace rhyme {

namespace {
std::size_t element_count(const std::vector<std::uint32_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
}
}  // namespace

void Checkpoint::add(std::string name, std::vector<std::uint32_t> shape, std::vector<double> data) {
    RHYME_REQUIRE(!contains(name), "Checkpoint: duplicate entry " + name);
    RHYME_REQUIRE(element_count(shape) == data.size(), "Checkpoint: shape does not match data for " + name);
    arrays_.push_back({std::move(name), std::move(shape), std::move(data)});
}

void Checkpoint::add_bundle(const ParamBundle& bundle) {
    for (std::size_t i = 0; i < bundle.entries().size(); ++i) {
        const auto& e = bundle.entries()[i];
        const auto m = bundle.matrix(i);
        add(e.name, {io::checked_u32(static_cast<std::size_t>(e.rows), e.name), io::checked_u32(static_cast<std::size_t>(e.cols), e.name)},
            std::vector<double>(m.data(), m.data() + m.size()));
    }
}

bool Checkpoint::contains(const std::string& name) const {
    for (const auto& a : arrays_)
        if (a.name == name) return true;
    return false;
}

const CheckpointArray& Checkpoint::get(const std::string& name) const {
    for (const auto& a : arrays_)
        if (a.name == name) return a;
    throw ContractViolation("Checkpoint: missing entry " + name);
}

double Checkpoint::scalar(const std::string& name) const {
    const auto& a = get(name);
    RHYME_REQUIRE(a.data.size() == 1, "Checkpoint: entry is not a scalar: " + name);
    return a.data[0];
}

void Checkpoint::read_bundle(ParamBundle& bundle) const {
    for (std::size_t i = 0; i < bundle.entries().size(); ++i) {
        const auto& e = bundle.entries()[i];
        const auto& a = get(e.name);
        RHYME_REQUIRE(a.shape.size() == 2 && a.shape[0] == e.rows && a.shape[1] == e.cols,
                      "Checkpoint: shape mismatch for " + e.name);
        auto m = bundle.matrix(i);
        std::copy(a.data.begin(), a.data.end(), m.data());
    }
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    io::write_magic(out, "RXW1");
    io::write_u32(out, io::checked_u32(arrays_.size(), "entry count"));
    for (const auto& a : arrays_) {
        io::write_u32(out, io::checked_u32(a.name.size(), "name length"));
        out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        io::write_u32(out, io::checked_u32(a.shape.size(), "ndim"));
        for (auto d : a.shape) io::write_u32(out, d);
    }
    for (const auto& a : arrays_) io::write_f64(out, a.data);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("cannot open checkpoint " + path.string());
    io::expect_magic(in, "RXW1", path.string());
    const std::size_t n = io::read_u32(in);
    Checkpoint ck;
    ck.arrays_.resize(n);
    for (auto& a : ck.arrays_) {
        const std::size_t len = io::read_u32(in);
        RHYME_REQUIRE(len < (1u << 16), "Checkpoint: implausible name length");
        a.name.resize(len);
        in.read(a.name.data(), static_cast<std::streamsize>(len));
        const std::size_t ndim = io::read_u32(in);
        RHYME_REQUIRE(ndim <= 8, "Checkpoint: implausible rank");
        a.shape.resize(ndim);
        for (auto& d : a.shape) d = io::read_u32(in);
    }
    for (auto& a : ck.arrays_) a.data = io::read_f64(in, element_count(a.shape));
    return ck;
}

}  // namespace rhyme
