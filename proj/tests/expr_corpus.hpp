#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace nslab::test {

// Random well-formed expressions over x, x1, y, u with irregular spacing.
class ExprGenerator {
public:
    explicit ExprGenerator(std::uint64_t seed) : rng_(seed) {}

    std::string expr(int depth) {
        const int pick = depth <= 0 ? static_cast<int>(uni(0, 2)) : static_cast<int>(uni(0, 9));
        switch (pick) {
            case 0: return number();
            case 1: return variable();
            case 2: return "(" + sp() + expr(depth - 1) + sp() + ")";
            case 3: return "-" + sp() + operand(depth - 1);
            case 4: return operand(depth - 1) + sp() + "^" + sp() + operand(depth - 1);
            case 5: return fn() + "(" + sp() + expr(depth - 1) + sp() + ")";
            default: {
                static const char ops[] = {'+', '-', '*', '/'};
                return expr(depth - 1) + sp() + ops[uni(0, 3)] + sp() + expr(depth - 1);
            }
        }
    }

private:
    std::mt19937_64 rng_;

    std::size_t uni(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    std::string sp() { return uni(0, 3) == 0 ? " " : ""; }
    std::string operand(int depth) {
        const std::size_t p = uni(0, 2);
        if (p == 0) return number();
        if (p == 1) return variable();
        return "(" + expr(depth) + ")";
    }
    std::string number() {
        static const char* forms[] = {"0", "1", "2", "3.5", "0.25", ".5", "1e-3", "2.5E+2", "12", "7.125e1"};
        return forms[uni(0, 9)];
    }
    std::string variable() {
        static const char* names[] = {"x", "y", "u", "x1"};
        return names[uni(0, 3)];
    }
    std::string fn() {
        static const char* names[] = {"sin", "cos", "exp", "tanh", "abs"};
        return names[uni(0, 4)];
    }
};

}  // namespace nslab::test
