#pragma once

// Candidate positively invariant regions of the embedding in scaled
// coordinates (x, v, u) with v = y/|alpha|, and a sampled inward-flow check
// on their faces.
//
//   annulus (alpha > 0): field (f, g/alpha, (phi((v+u)/kappa) - u)/eps)
//   block   (alpha < 0): field in slow time t/|alpha|,
//                        (|alpha| f, g, (phi((v-u)/|kappa|) - u)/|kappa|)

#include <optional>
#include <string>
#include <vector>

#include "nslab/model.hpp"

namespace nslab {

enum class RegionKind { Annulus, Block };

std::string_view to_string(RegionKind k);

struct RegionFace {
    std::string name;
    /// Maps a point of the unit cube [0,1]^(k+1) to a face point (x, v, u);
    /// nullopt where the face is empty for that x.
    std::function<std::optional<Vec>(std::span<const double>)> point;
    /// Outward unit-free normal at a face point (length k + 2).
    std::function<Vec(std::span<const double>)> normal;
    /// Faces swept by the flow itself are checked by an invariance residual.
    bool flow_surface = false;
    std::function<double(std::span<const double>)> invariance_residual;
};

struct RegionSpec {
    RegionKind kind = RegionKind::Annulus;
    double alpha = 0.0;
    double kappa = 0.0;   // signed, eps / alpha
    double epsilon = 0.0;
    double delta0 = 0.0;  // annulus
    double delta = 0.0;   // block
    double C = 0.0;       // max |f|, |g| on the compact
    double K = 0.0;       // 2C + 1 (annulus)
    double u_star = 0.0;  // block
    double G = 0.0;       // block
    double sigma = 0.0;   // G + 2 (block)
    double v_bound = 0.0; // block: |v| <= v_bound
    std::vector<RegionFace> faces;
    std::vector<std::string> notes;  // hypothesis checks that did not hold
};

/// Annulus around the relay cycle for alpha > 0, kappa in (0, 1/4).
RegionSpec make_annulus(const SwitchedSystem& sys, double alpha, double kappa, double delta0);

struct SignMargins {
    double u_star = 0.0;
    double G = 0.0;
    bool ok = false;
};

/// Smallest u* in (0,1) with g < 0 for u > u* and g > 0 for u < -u* on
/// samples of |x| <= M, |v| <= v_bound, |u| <= 2M; the returned u* is the
/// midpoint between it and 1, and G the smaller sign margin there.
SignMargins sign_margins(const SwitchedSystem& sys, double alpha, double v_bound);

/// Block around the slow curve for alpha < 0. Unset kappa defaults to
/// (1 - u*)/(4 sigma), unset delta to |kappa|/2; v_bound <= 0 uses max(M, 2).
RegionSpec make_block(const SwitchedSystem& sys, double alpha,
                      std::optional<double> kappa = std::nullopt,
                      std::optional<double> delta = std::nullopt, double v_bound = 0.0);

/// Reverses the normal of the named face. Throws if no such face exists.
void flip_face(RegionSpec& spec, std::string_view name);

/// Tolerance for the invariance residual of flow faces.
inline constexpr double kInvarianceTol = 1e-8;

struct Violation {
    std::string face;
    Vec point;
    double rate = 0.0;  // normal . field (>= 0 is a violation), or the invariance residual
};

struct RegionCheck {
    std::vector<Violation> violations;
    std::size_t samples = 0;          // evaluated face points
    std::vector<std::size_t> per_face;
};

/// Evaluates n_samples deterministic lattice points per face.
RegionCheck region_check(const SwitchedSystem& sys, const RegionSpec& spec, std::size_t n_samples);

/// The scaled field used by region_check at a point (x, v, u).
Vec region_field(const SwitchedSystem& sys, const RegionSpec& spec, std::span<const double> p);

}  // namespace nslab
