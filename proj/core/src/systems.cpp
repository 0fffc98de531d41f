#include "nslab/systems.hpp"

namespace nslab {

SwitchedSystem exutkin(double bound) {
    return SwitchedSystem::scalar([](double, double, double u) { return 0.3 + u * u * u; },
                                  [](double, double, double u) { return -0.5 - u; }, bound,
                                  "exutkin");
}

SwitchedSystem affine_in_u(std::function<double(double, double)> fa,
                           std::function<double(double, double)> fb,
                           std::function<double(double, double)> ga,
                           std::function<double(double, double)> gb, double bound,
                           std::string name) {
    return SwitchedSystem::scalar(
        [fa = std::move(fa), fb = std::move(fb)](double x, double y, double u) {
            return fa(x, y) + fb(x, y) * u;
        },
        [ga = std::move(ga), gb = std::move(gb)](double x, double y, double u) {
            return ga(x, y) + gb(x, y) * u;
        },
        bound, std::move(name));
}

}  // namespace nslab
