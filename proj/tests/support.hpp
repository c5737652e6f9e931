#pragma once

#include "pk/io.hpp"
#include "pk/reference_graphs.hpp"

#include <gtest/gtest.h>

namespace pk::test {

inline DoubleGroup<Sl2c> sl2c() { return DoubleGroup<Sl2c>(Sl2c{}); }
inline DoubleGroup<AbelianDouble> abelian(int n = 2) { return DoubleGroup<AbelianDouble>(AbelianDouble(n)); }

template <class B>
DoubleGroup<B> make_group();
template <>
inline DoubleGroup<Sl2c> make_group<Sl2c>() { return sl2c(); }
template <>
inline DoubleGroup<AbelianDouble> make_group<AbelianDouble>() { return abelian(2); }

// Residual scale for identities that hold exactly in exact arithmetic.
template <class B>
constexpr double exact_tol() { return std::is_same_v<B, AbelianDouble> ? 1e-14 : 1e-10; }

using Backends = ::testing::Types<Sl2c, AbelianDouble>;

template <class B>
struct BackendTest : ::testing::Test {
  DoubleGroup<B> G = make_group<B>();
};

}  // namespace pk::test
