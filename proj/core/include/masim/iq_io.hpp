#pragma once

#include <filesystem>
#include <iosfwd>

#include "masim/signals.hpp"

namespace masim {

// Little-endian capture file:
//   "MAIQ" | version u32 | x_m f64 | y_m f64 | T f64 | N u64 | seed u64 | N x (re f64, im f64)
inline constexpr std::uint32_t kIqFormatVersion = 1;
inline constexpr std::size_t kIqHeaderBytes = 4 + 4 + 8 + 8 + 8 + 8 + 8;

void write_iq(const IQRecord& record, std::ostream& out);
IQRecord read_iq(std::istream& in, const std::string& source_name = "<stream>");

// Header only; the body is not read.
IQRecord read_iq_header(std::istream& in, const std::string& source_name = "<stream>");

// File variants. Writes go to a temp file in the same directory and are renamed
// into place.
void write_iq_file(const IQRecord& record, const std::filesystem::path& path);
IQRecord read_iq_file(const std::filesystem::path& path);
IQRecord read_iq_header_file(const std::filesystem::path& path);

// Replaces `path` atomically with `bytes`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace masim
