#include "tcpnc/gf256.hpp"

#include <array>
#include <stdexcept>

namespace tcpnc::gf256 {
namespace {

struct Tables {
  // antilog is doubled so log a + log b never needs a modulo.
  std::array<Element, 510> antilog{};
  std::array<std::uint8_t, 256> log{};
};

constexpr Tables build_tables() {
  Tables t;
  unsigned x = 1;
  for (unsigned i = 0; i < 255; ++i) {
    t.antilog[i] = static_cast<Element>(x);
    t.antilog[i + 255] = static_cast<Element>(x);
    t.log[x] = static_cast<std::uint8_t>(i);
    x <<= 1;  // multiply by the generator 0x02
    if (x & 0x100) x ^= kPolynomial;
  }
  return t;
}

constexpr Tables kTables = build_tables();

static_assert(kTables.antilog[8] == 0x1D, "x^8 must reduce to 0x1D under 0x11D");
static_assert(kTables.antilog[255] == 1, "0x02 must generate the multiplicative group");

}  // namespace

Element mul(Element a, Element b) noexcept {
  if (a == 0 || b == 0) return 0;
  return kTables.antilog[kTables.log[a] + kTables.log[b]];
}

Element inv(Element a) {
  if (a == 0) throw std::domain_error("gf256: zero has no multiplicative inverse");
  return kTables.antilog[255 - kTables.log[a]];
}

unsigned log(Element a) { return kTables.log[a]; }

Element exp(unsigned power) noexcept { return kTables.antilog[power % 255]; }

void axpy(std::span<Element> dst, std::span<const Element> src, Element coeff) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("gf256::axpy: length mismatch");
  }
  if (coeff == 0) return;
  if (coeff == 1) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
    return;
  }
  // One row of the multiplication table for coeff, then a plain lookup loop.
  std::array<Element, 256> row;
  row[0] = 0;
  const unsigned lc = kTables.log[coeff];
  for (unsigned s = 1; s < 256; ++s) row[s] = kTables.antilog[lc + kTables.log[s]];
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= row[src[i]];
}

}  // namespace tcpnc::gf256
