#pragma once

#include <cstdint>
#include <span>

// Arithmetic over GF(2^8) reduced by x^8 + x^4 + x^3 + x^2 + 1 (0x11D).
// Multiplication goes through log/antilog tables generated from 0x02.
// The tables are constant-initialized, so every function here is safe to
// call from any thread.
namespace tcpnc::gf256 {

using Element = std::uint8_t;

inline constexpr unsigned kPolynomial = 0x11D;
inline constexpr Element kGenerator = 0x02;

constexpr Element add(Element a, Element b) noexcept { return a ^ b; }

Element mul(Element a, Element b) noexcept;

// Throws std::domain_error for a == 0.
Element inv(Element a);

// Discrete log base kGenerator. a must be nonzero.
unsigned log(Element a);
Element exp(unsigned power) noexcept;

/// dst[i] ^= coeff * src[i] for every i.
///
/// This is the only bulk primitive: the encoder's combinations and all of
/// the decoder's row operations go through it. Throws std::invalid_argument
/// when the spans differ in length.
void axpy(std::span<Element> dst, std::span<const Element> src, Element coeff);

}  // namespace tcpnc::gf256
