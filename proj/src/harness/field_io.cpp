#include "reki/harness.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace reki {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'E', 'K', 'I', 'F', 'L', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindGrid = 0;
constexpr std::uint32_t kKindMesh = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("read_field: truncated file " + path.string());
  }
  return v;
}

}  // namespace

void write_field(const std::filesystem::path& path, const Field& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field: cannot open " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  if (const auto* g = std::get_if<Grid>(&field.discretization())) {
    put(out, kKindGrid);
    put<std::int32_t>(out, g->nx);
    put<std::int32_t>(out, g->ny);
    put(out, g->x0);
    put(out, g->x1);
    put(out, g->y0);
    put(out, g->y1);
  } else {
    put(out, kKindMesh);
    put<std::uint64_t>(out, std::get<MeshHandle>(field.discretization())->element_count());
  }
  const Eigen::VectorXd& v = field.values();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_field: write failed for " + path.string());
}

Field read_field(const std::filesystem::path& path, MeshHandle mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field: cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("read_field: bad magic in " + path.string());
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) throw std::runtime_error("read_field: unsupported version " + std::to_string(version));
  const auto kind = get<std::uint32_t>(in, path);
  Discretization disc;
  if (kind == kKindGrid) {
    const auto nx = get<std::int32_t>(in, path);
    const auto ny = get<std::int32_t>(in, path);
    const auto x0 = get<double>(in, path);
    const auto x1 = get<double>(in, path);
    const auto y0 = get<double>(in, path);
    const auto y1 = get<double>(in, path);
    disc = Grid(nx, ny, x0, x1, y0, y1);
  } else if (kind == kKindMesh) {
    const auto elements = get<std::uint64_t>(in, path);
    if (!mesh) throw std::invalid_argument("read_field: mesh field needs its mesh");
    if (std::uint64_t(mesh->element_count()) != elements) {
      throw std::invalid_argument("read_field: element count does not match the supplied mesh");
    }
    disc = mesh;
  } else {
    throw std::runtime_error("read_field: unknown discretization kind");
  }
  const auto n = get<std::uint64_t>(in, path);
  if (n != std::uint64_t(discretization_size(disc))) throw std::runtime_error("read_field: value count mismatch");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  if (!in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)))) {
    throw std::runtime_error("read_field: truncated values in " + path.string());
  }
  return Field(disc, std::move(v));
}

}  // namespace reki
