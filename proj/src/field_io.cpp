#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "chasm/phase_space.hpp"

namespace chasm {

namespace {

constexpr std::uint32_t kFieldVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_field: truncated header");
  return v;
}

struct Header {
  std::uint32_t dim, Nx, Nk, scalar_bytes;
  double x_min, x_max, Lk, time;
};

Header read_header(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CHSM", 4) != 0) throw std::runtime_error("read_field: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kFieldVersion) throw std::runtime_error("read_field: unsupported version");
  Header h{};
  h.dim = get<std::uint32_t>(is);
  h.Nx = get<std::uint32_t>(is);
  h.Nk = get<std::uint32_t>(is);
  h.scalar_bytes = get<std::uint32_t>(is);
  h.x_min = get<double>(is);
  h.x_max = get<double>(is);
  h.Lk = get<double>(is);
  h.time = get<double>(is);
  if (h.scalar_bytes != 4 && h.scalar_bytes != 8) throw std::runtime_error("read_field: bad element width");
  return h;
}

}  // namespace

template <class Real>
void write_field(const std::string& path, const FieldT<Real>& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_field: cannot open " + path);
  os.write("CHSM", 4);
  put<std::uint32_t>(os, kFieldVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.Nx));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.Nk));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sizeof(Real)));
  put<double>(os, f.grid.x_min);
  put<double>(os, f.grid.x_max);
  put<double>(os, f.grid.Lk);
  put<double>(os, f.time);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(Real)));
  if (!os) throw std::runtime_error("write_field: write failed for " + path);
}

template void write_field<double>(const std::string&, const FieldT<double>&);
template void write_field<float>(const std::string&, const FieldT<float>&);

WignerField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  const Header h = read_header(is);
  WignerField f(build_grid(static_cast<int>(h.dim), h.x_min, h.x_max, static_cast<int>(h.Nx), h.Lk,
                           static_cast<int>(h.Nk)),
                h.time);
  if (h.scalar_bytes == 8) {
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * 8));
  } else {
    std::vector<float> tmp(f.values.size());
    is.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(tmp.size() * 4));
    f.values.assign(tmp.begin(), tmp.end());
  }
  if (!is) throw std::runtime_error("read_field: truncated payload in " + path);
  return f;
}

int read_field_precision(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  return static_cast<int>(read_header(is).scalar_bytes);
}

void write_tensor2_text(const std::string& path, const Tensor2& t, const std::vector<double>& row_axis,
                        const std::vector<double>& col_axis, char delim) {
  if (row_axis.size() != t.rows || col_axis.size() != t.cols)
    throw std::invalid_argument("write_tensor2_text: axis length mismatch");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_tensor2_text: cannot open " + path);
  os.precision(17);
  os << "row" << delim << "col" << delim << "value\n";
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) os << row_axis[r] << delim << col_axis[c] << delim << t(r, c) << '\n';
}

}  // namespace chasm
