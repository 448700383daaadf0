#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "speckle/rng.hpp"

using namespace spk::rng;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST_CASE("philox4x32-10 known answers") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit interval excludes zero") {
    CHECK(to_unit(0, 0) > 0.0);
    CHECK(to_unit(0xffffffffu, 0xffffffffu) <= 1.0);
}

TEST_CASE("gaussian pairs have unit variance") {
    const Key k = key_from_seed(7);
    double s = 0.0, s2 = 0.0, sxy = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto g = gaussian_pair({static_cast<std::uint32_t>(i), 0, 0, 0}, k);
        s += g[0] + g[1];
        s2 += g[0] * g[0] + g[1] * g[1];
        sxy += g[0] * g[1];
    }
    CHECK(std::abs(s / (2 * n)) < 5.0 / std::sqrt(2.0 * n));
    CHECK(std::abs(s2 / (2 * n) - 1.0) < 5.0 * std::sqrt(2.0 / (2 * n)));
    CHECK(std::abs(sxy / n) < 5.0 / std::sqrt(n));
}
