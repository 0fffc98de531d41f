#pragma once

#include <cmath>
#include <random>

#include "nslab/model.hpp"
#include "nslab/systems.hpp"

namespace nslab::test {

struct AffineCoeffs {
    double a0, a1, b0, b1;  // f = (a0 + a1 x) + (b0 + b1 x) u
    double c0, c1, c2;      // ga = c0 + c1 x + c2 y
    double d0, d1;          // gb = d0 + d1 x
};

// Random affine-in-u system on |x| <= 1 with g(x,0,+1) < 0 < g(x,0,-1)
// and dg/du < 0 built in.
inline AffineCoeffs random_affine(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    AffineCoeffs k{};
    k.a0 = U(rng);
    k.a1 = 0.5 * U(rng);
    k.b0 = U(rng);
    k.b1 = 0.5 * U(rng);
    k.c0 = U(rng);
    k.c1 = 0.5 * U(rng);
    k.c2 = 0.2 * U(rng);
    k.d1 = 0.3 * U(rng);
    const double margin = 0.2 + 0.9 * (U(rng) + 1.0);
    k.d0 = -(std::abs(k.c0) + std::abs(k.c1) + std::abs(k.d1) + margin);
    return k;
}

inline SwitchedSystem make_affine(const AffineCoeffs& k) {
    return affine_in_u([k](double x, double) { return k.a0 + k.a1 * x; },
                       [k](double x, double) { return k.b0 + k.b1 * x; },
                       [k](double x, double y) { return k.c0 + k.c1 * x + k.c2 * y; },
                       [k](double x, double) { return k.d0 + k.d1 * x; }, 1.0, "random-affine");
}

}  // namespace nslab::test
