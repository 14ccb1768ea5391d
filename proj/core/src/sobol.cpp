#include <array>
#include <cstdint>
#include <string>

#include "pinn/error.hpp"
#include "pinn/sampling.hpp"

namespace pinn::sampling {

namespace {

constexpr int kBits = 32;
constexpr std::size_t kMaxDim = 6;

struct Primitive {
  int degree;
  std::uint32_t coeffs;
  std::array<std::uint32_t, 4> m;
};

// Joe & Kuo (2008) "new-joe-kuo-6.21201", dimensions 2..6. Dimension 1 is
// the van der Corput sequence.
constexpr std::array<Primitive, kMaxDim - 1> kTable{{
    {1, 0, {1, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0}},
    {3, 1, {1, 3, 1, 0}},
    {3, 2, {1, 1, 1, 0}},
    {4, 1, {1, 1, 3, 3}},
}};

using Directions = std::array<std::uint32_t, kBits>;

Directions directions(std::size_t dim) {
  Directions v{};
  if (dim == 0) {
    for (int k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
    return v;
  }
  const Primitive& p = kTable[dim - 1];
  const int s = p.degree;
  for (int k = 0; k < s; ++k) v[k] = p.m[k] << (kBits - 1 - k);
  for (int k = s; k < kBits; ++k) {
    std::uint32_t x = v[k - s] ^ (v[k - s] >> s);
    for (int i = 1; i < s; ++i)
      if ((p.coeffs >> (s - 1 - i)) & 1u) x ^= v[k - i];
    v[k] = x;
  }
  return v;
}

const std::array<Directions, kMaxDim>& all_directions() {
  static const auto table = [] {
    std::array<Directions, kMaxDim> t{};
    for (std::size_t d = 0; d < kMaxDim; ++d) t[d] = directions(d);
    return t;
  }();
  return table;
}

}  // namespace

std::vector<double> sobol(std::size_t n, std::size_t dim, std::uint64_t skip) {
  if (dim < 1 || dim > kMaxDim)
    throw Error("dimension out of range: Sobol supports 1.." +
                std::to_string(kMaxDim) + ", got " + std::to_string(dim));
  if (skip + n > (std::uint64_t{1} << kBits))
    throw Error("dimension out of range: Sobol index exceeds 2^32");
  const auto& dirs = all_directions();
  constexpr double kScale = 1.0 / 4294967296.0;  // 2^-32

  std::vector<double> out(n * dim);
  // Point `skip` directly from its Gray code, then one XOR per step.
  std::array<std::uint32_t, kMaxDim> x{};
  const std::uint64_t gray = skip ^ (skip >> 1);
  for (std::size_t d = 0; d < dim; ++d)
    for (int b = 0; b < kBits; ++b)
      if ((gray >> b) & 1u) x[d] ^= dirs[d][b];

  std::uint64_t index = skip;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < dim; ++d) out[r * dim + d] = x[d] * kScale;
    // Next point flips the direction number of the lowest zero bit of index.
    int c = 0;
    while ((index >> c) & 1u) ++c;
    ++index;
    if (c < kBits)
      for (std::size_t d = 0; d < dim; ++d) x[d] ^= dirs[d][c];
  }
  return out;
}

}  // namespace pinn::sampling
