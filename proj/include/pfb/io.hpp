#ifndef PFB_IO_HPP
#define PFB_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace pfb {

// Fixed float formatting for every emitted table: six significant digits,
// non-finite values normalized to "nan" so output stays locale- and
// sign-bit-independent.
std::string format_g6(double value);

std::uint64_t fnv1a(std::string_view bytes);

std::string read_file(const std::string& path);             // throws on failure
void write_file(const std::string& path, std::string_view content);

}  // namespace pfb

#endif  // PFB_IO_HPP
