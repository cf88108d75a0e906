#include "rhyme/binary_io.hpp"

#include "rhyme/error.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace rhyme::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
    char buf[4] = {};
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw ContractViolation(what + ": bad magic, expected " + std::string(magic, 4));
}

void write_u32(std::ostream& out, std::uint32_t value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t value = 0;
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!in) throw ContractViolation("truncated binary file (u32)");
    return value;
}

void write_f64(std::ostream& out, std::span<const double> values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_f64(std::istream& in, std::span<double> values) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw ContractViolation("truncated binary file (f64 payload)");
}

std::vector<double> read_f64(std::istream& in, std::size_t count) {
    std::vector<double> values(count);
    read_f64(in, values);
    return values;
}

std::uint32_t checked_u32(std::size_t value, const std::string& what) {
    if (value > std::numeric_limits<std::uint32_t>::max()) throw ContractViolation(what + " does not fit in u32");
    return static_cast<std::uint32_t>(value);
}

}  // namespace rhyme::io
