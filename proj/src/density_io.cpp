#include "mlfe/density_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mlfe/errors.hpp"

namespace mlfe {

namespace {

static_assert(std::endian::native == std::endian::little,
              "density files are little-endian; add byte swapping for this platform");

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ConfigError("density file is truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

constexpr std::size_t kHeaderBytes = 4 + 3 * 4 + 2 * 8;

}  // namespace

std::string encode_density(const JointDensity& density) {
  std::string out;
  const auto values = density.values();
  out.reserve(kHeaderBytes + values.size() * sizeof(double));
  out.append("MLFE", 4);
  put<std::uint32_t>(out, kDensityFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(density.kappa()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(density.axis().points));
  put<double>(out, density.axis().lower);
  put<double>(out, density.axis().upper);
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
  return out;
}

JointDensity decode_density(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || bytes.substr(0, 4) != "MLFE") {
    throw ConfigError("not an MLFE density file");
  }
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kDensityFormatVersion) throw ConfigError("unsupported density file version");
  const auto kappa = take<std::uint32_t>(bytes, pos);
  const auto points = take<std::uint32_t>(bytes, pos);
  const auto lower = take<double>(bytes, pos);
  const auto upper = take<double>(bytes, pos);
  if (kappa < 2 || kappa > 3 || points < 2 || !(lower < upper)) {
    throw ConfigError("density file header is invalid");
  }
  std::size_t count = 1;
  for (std::uint32_t k = 0; k <= kappa; ++k) count *= points;
  if (bytes.size() - pos != count * sizeof(double)) throw ConfigError("density file size mismatch");
  std::vector<double> values(count);
  std::memcpy(values.data(), bytes.data() + pos, count * sizeof(double));
  return JointDensity(Axis{lower, upper, static_cast<int>(points)}, static_cast<int>(kappa),
                      std::move(values));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_density(const std::filesystem::path& path, const JointDensity& density) {
  write_file_atomic(path, encode_density(density));
}

JointDensity read_density(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open density file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_density(ss.str());
}

}  // namespace mlfe
