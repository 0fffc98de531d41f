#pragma once

#include <functional>

#include "nslab/model.hpp"

namespace nslab {

/// x' = 0.3 + u^3, y' = -0.5 - u on |x| <= bound. Filippov slides at -0.2,
/// Utkin at +0.175.
SwitchedSystem exutkin(double bound = 1.0);

/// Scalar system affine in u:
///   f = fa(x, y) + fb(x, y) u,   g = ga(x, y) + gb(x, y) u.
SwitchedSystem affine_in_u(std::function<double(double, double)> fa,
                           std::function<double(double, double)> fb,
                           std::function<double(double, double)> ga,
                           std::function<double(double, double)> gb, double bound,
                           std::string name = "affine");

}  // namespace nslab
