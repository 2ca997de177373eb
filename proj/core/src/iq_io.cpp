#include "masim/iq_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <system_error>

namespace masim {

namespace {

static_assert(std::endian::native == std::endian::little,
              "IQ files are little-endian; big-endian hosts need byte swapping");

template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& src, const char* field) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) {
    throw ValidationError(src + ": truncated IQ header (" + field + ")");
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

struct Header {
  IQRecord rec;
  std::uint64_t n = 0;
};

Header parse_header(std::istream& in, const std::string& src) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MAIQ", 4) != 0) {
    throw ValidationError(src + ": not an IQ record (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, src, "version");
  if (version != kIqFormatVersion) {
    throw ValidationError(src + ": unsupported IQ format version " + std::to_string(version));
  }
  Header h;
  h.rec.position.x_m = get<double>(in, src, "x_m");
  h.rec.position.y_m = get<double>(in, src, "y_m");
  h.rec.sample_interval_s = get<double>(in, src, "T");
  h.n = get<std::uint64_t>(in, src, "N");
  h.rec.seed = get<std::uint64_t>(in, src, "seed");
  if (!(h.rec.sample_interval_s > 0.0)) {
    throw ValidationError(src + ": sample interval must be > 0");
  }
  if (h.n == 0) throw ValidationError(src + ": record has no samples");
  return h;
}

}  // namespace

void write_iq(const IQRecord& record, std::ostream& out) {
  out.write("MAIQ", 4);
  put<std::uint32_t>(out, kIqFormatVersion);
  put<double>(out, record.position.x_m);
  put<double>(out, record.position.y_m);
  put<double>(out, record.sample_interval_s);
  put<std::uint64_t>(out, record.samples.size());
  put<std::uint64_t>(out, record.seed);
  // std::complex<double> is layout-compatible with double[2].
  out.write(reinterpret_cast<const char*>(record.samples.data()),
            static_cast<std::streamsize>(record.samples.size() * sizeof(cplx)));
}

IQRecord read_iq_header(std::istream& in, const std::string& source_name) {
  return parse_header(in, source_name).rec;
}

IQRecord read_iq(std::istream& in, const std::string& source_name) {
  Header h = parse_header(in, source_name);
  if (h.n > (std::uint64_t{1} << 34)) {
    throw ValidationError(source_name + ": implausible sample count " + std::to_string(h.n));
  }
  h.rec.samples.resize(static_cast<std::size_t>(h.n));
  const auto bytes = static_cast<std::streamsize>(h.n * sizeof(cplx));
  if (!in.read(reinterpret_cast<char*>(h.rec.samples.data()), bytes)) {
    throw ValidationError(source_name + ": truncated IQ body, expected " + std::to_string(h.n) +
                          " samples");
  }
  return std::move(h.rec);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_iq_file(const IQRecord& record, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  write_iq(record, buf);
  write_file_atomic(path, std::move(buf).str());
}

IQRecord read_iq_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_iq(in, path.string());
}

IQRecord read_iq_header_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_iq_header(in, path.string());
}

}  // namespace masim
