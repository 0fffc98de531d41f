#include <cmath>

#include "doctest.h"
#include "nslab/regions.hpp"
#include "nslab/systems.hpp"

using namespace nslab;

TEST_CASE("annulus around the relay cycle") {
    const RegionSpec A = make_annulus(exutkin(), 1e-2, 1e-1, 1e-3);
    CHECK(A.kind == RegionKind::Annulus);
    CHECK(A.epsilon == doctest::Approx(1e-3));
    CHECK(A.K == doctest::Approx(2 * A.C + 1));
    const RegionCheck chk = region_check(exutkin(), A, 100);
    CHECK(chk.violations.empty());
    CHECK(chk.per_face.size() == A.faces.size());
    for (std::size_t n : chk.per_face) CHECK(n >= 100);
    CHECK(chk.samples >= 100 * A.faces.size());
    CHECK_THROWS_AS(make_annulus(exutkin(), 1e-2, 0.3, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(make_annulus(exutkin(), -1e-2, 0.1, 1e-3), std::invalid_argument);
}

TEST_CASE("block around the slow curve") {
    const SignMargins m = sign_margins(exutkin(), -1e-2, 2.0);
    REQUIRE(m.ok);
    // g = -0.5 - u changes sign at u = -0.5 only; u* = (0.5 + 1)/2, margin 0.25.
    CHECK(m.u_star == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(m.G == doctest::Approx(0.25).epsilon(1e-6));

    const RegionSpec B = make_block(exutkin(), -1e-2);
    CHECK(B.kind == RegionKind::Block);
    CHECK(B.sigma == doctest::Approx(B.G + 2.0));
    CHECK(B.kappa == doctest::Approx(-(1.0 - B.u_star) / (4.0 * B.sigma)));
    CHECK(B.delta == doctest::Approx(std::abs(B.kappa) / 2));
    const RegionCheck chk = region_check(exutkin(), B, 100);
    CHECK(chk.violations.empty());
    for (std::size_t n : chk.per_face) CHECK(n >= 100);
    CHECK_THROWS_AS(make_block(exutkin(), 1e-2), std::invalid_argument);
}

TEST_CASE("flipped normals violate everywhere") {
    for (const RegionSpec& base : {make_annulus(exutkin(), 1e-2, 1e-1, 1e-3), make_block(exutkin(), -1e-2)}) {
        for (const RegionFace& face : base.faces) {
            if (face.flow_surface) {
                RegionSpec copy = base;
                CHECK_THROWS_AS(flip_face(copy, face.name), std::invalid_argument);
                continue;
            }
            CAPTURE(face.name);
            RegionSpec flipped = base;
            flip_face(flipped, face.name);
            const RegionCheck chk = region_check(exutkin(), flipped, 50);
            std::size_t on_face = 0, idx = 0;
            for (std::size_t i = 0; i < flipped.faces.size(); ++i) {
                if (flipped.faces[i].name == face.name) idx = i;
            }
            for (const auto& v : chk.violations) on_face += v.face == face.name;
            CHECK(chk.per_face[idx] > 0);
            CHECK(on_face == chk.per_face[idx]);
        }
    }
    RegionSpec A = make_annulus(exutkin(), 1e-2, 1e-1, 1e-3);
    CHECK_THROWS_AS(flip_face(A, "no-such-face"), std::invalid_argument);
}

TEST_CASE("region field matches the scaled embedding") {
    const RegionSpec A = make_annulus(exutkin(), 1e-2, 1e-1, 1e-3);
    const Vec p{0.1, 0.5, 0.2};
    const Vec F = region_field(exutkin(), A, p);
    REQUIRE(F.size() == 3);
    CHECK(F[0] == doctest::Approx(0.3 + 0.008));
    CHECK(F[1] == doctest::Approx((-0.5 - 0.2) / 1e-2));
    CHECK(F[2] == doctest::Approx((1.0 - 0.2) / 1e-3));  // phi((0.5+0.2)/0.1) saturates
}
