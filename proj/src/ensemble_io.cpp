#include "chaosbench/ensemble_io.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/os.h>

namespace chaosbench::particles {
namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("truncated ensemble file: " + path);
  }
  return v;
}

}  // namespace

void write_binary(const Ensemble& ens, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  put<std::uint64_t>(out, ens.n);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ens.dim));
  put<double>(out, ens.time);
  put<std::uint64_t>(out, ens.meta.seed);
  out.write(reinterpret_cast<const char*>(ens.positions.data()),
            static_cast<std::streamsize>(ens.positions.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Ensemble read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  const auto n = get<std::uint64_t>(in, path);
  const auto d = get<std::uint64_t>(in, path);
  if (d < 1 || d > 1'000'000 || n > (std::uint64_t{1} << 40) / d) {
    throw std::runtime_error("implausible ensemble header: " + path);
  }
  Ensemble ens = make_ensemble(n, static_cast<int>(d));
  ens.time = get<double>(in, path);
  ens.meta.seed = get<std::uint64_t>(in, path);
  if (!in.read(reinterpret_cast<char*>(ens.positions.data()),
               static_cast<std::streamsize>(ens.positions.size() * sizeof(double)))) {
    throw std::runtime_error("truncated ensemble file: " + path);
  }
  return ens;
}

void write_csv(const Ensemble& ens, const std::string& path) {
  auto out = fmt::output_file(path);
  for (int k = 0; k < ens.dim; ++k) out.print("{}x{}", k == 0 ? "" : ",", k);
  out.print("\n");
  for (std::size_t i = 0; i < ens.n; ++i) {
    const auto r = ens.row(i);
    for (int k = 0; k < ens.dim; ++k) out.print("{}{:.17g}", k == 0 ? "" : ",", r[k]);
    out.print("\n");
  }
}

}  // namespace chaosbench::particles
