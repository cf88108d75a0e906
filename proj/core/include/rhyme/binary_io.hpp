#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rhyme::io {

// Little-endian primitives for the RXT1/RXP1/RXW1 formats.
void write_magic(std::ostream& out, const char (&magic)[5]);
void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what);
void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in);
void write_f64(std::ostream& out, std::span<const double> values);
void read_f64(std::istream& in, std::span<double> values);
std::vector<double> read_f64(std::istream& in, std::size_t count);

std::uint32_t checked_u32(std::size_t value, const std::string& what);

}  // namespace rhyme::io
