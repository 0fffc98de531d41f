#include "nslab/cli/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace nslab::cli {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Number;
    n->number = v;
    return n;
}

NodePtr make_op(Op op, std::vector<NodePtr> args, std::string name = {}) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->args = std::move(args);
    n->name = std::move(name);
    return n;
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ < s_.size()) fail(pos_, "operator or end of input");
        return e;
    }

private:
    const std::string& s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(std::size_t at, const std::string& expected) const {
        std::string found = at < s_.size() ? "'" + std::string(1, s_[at]) + "'" : "end of input";
        throw ParseError(at, expected,
                         "parse error at offset " + std::to_string(at) + ": expected " + expected +
                             ", found " + found);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make_op(Op::Add, {lhs, term()});
            else if (accept('-')) lhs = make_op(Op::Sub, {lhs, term()});
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make_op(Op::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make_op(Op::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_op(Op::Neg, {unary()});
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make_op(Op::Pow, {base, unary()});
        return base;
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mant = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            mant += digits();
        }
        if (mant == 0) fail(start, "digit");
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) fail(pos_, "exponent digits");
        }
        const std::string lit = s_.substr(start, pos_ - start);
        return make_number(std::strtod(lit.c_str(), nullptr));
    }

    int resolve(const std::string& name) const {
        auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it != vars_.end()) return static_cast<int>(it - vars_.begin());
        // A scalar state may be written as x or x1.
        if (name == "x") {
            auto x1 = std::find(vars_.begin(), vars_.end(), "x1");
            const bool scalar = std::find(vars_.begin(), vars_.end(), "x2") == vars_.end();
            if (x1 != vars_.end() && scalar) return static_cast<int>(x1 - vars_.begin());
        }
        if (name == "x1") {
            auto x = std::find(vars_.begin(), vars_.end(), "x");
            if (x != vars_.end()) return static_cast<int>(x - vars_.begin());
        }
        return -1;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail(pos_, "operand");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != ')') fail(pos_, "')'");
            ++pos_;
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            std::string name = s_.substr(start, pos_ - start);
            const auto& fns = known_functions();
            if (std::find(fns.begin(), fns.end(), name) != fns.end()) {
                skip_ws();
                if (pos_ >= s_.size() || s_[pos_] != '(') fail(pos_, "'('");
                ++pos_;
                NodePtr arg = expr();
                skip_ws();
                if (pos_ >= s_.size() || s_[pos_] != ')') fail(pos_, "')'");
                ++pos_;
                return make_op(Op::Call, {arg}, name);
            }
            const int slot = resolve(name);
            if (slot < 0) fail(start, "known variable or function");
            auto n = std::make_shared<ExprNode>();
            n->op = Op::Variable;
            n->name = std::move(name);
            n->slot = slot;
            return n;
        }
        fail(pos_, "operand");
    }
};

// Exponent as an integer literal (possibly negated), if it is one.
bool integer_exponent(const ExprNode& e, long& n) {
    const ExprNode* p = &e;
    long sign = 1;
    if (p->op == Op::Neg) {
        sign = -1;
        p = p->args[0].get();
    }
    if (p->op != Op::Number) return false;
    const double v = p->number;
    if (v != std::floor(v) || std::abs(v) > 1024.0) return false;
    n = sign * static_cast<long>(v);
    return true;
}

double ipow(double b, long n) {
    const bool inv = n < 0;
    unsigned long m = static_cast<unsigned long>(inv ? -n : n);
    double r = 1.0;
    while (m) {
        if (m & 1u) r *= b;
        b *= b;
        m >>= 1u;
    }
    return inv ? 1.0 / r : r;
}

double eval_node(const ExprNode& n, std::span<const double> slots) {
    switch (n.op) {
        case Op::Number: return n.number;
        case Op::Variable:
            if (n.slot < 0 || static_cast<std::size_t>(n.slot) >= slots.size()) {
                throw EvalError("unbound variable '" + n.name + "'");
            }
            return slots[static_cast<std::size_t>(n.slot)];
        case Op::Neg: return -eval_node(*n.args[0], slots);
        case Op::Add: return eval_node(*n.args[0], slots) + eval_node(*n.args[1], slots);
        case Op::Sub: return eval_node(*n.args[0], slots) - eval_node(*n.args[1], slots);
        case Op::Mul: return eval_node(*n.args[0], slots) * eval_node(*n.args[1], slots);
        case Op::Div: return eval_node(*n.args[0], slots) / eval_node(*n.args[1], slots);
        case Op::Pow: {
            const double b = eval_node(*n.args[0], slots);
            long k = 0;
            if (integer_exponent(*n.args[1], k)) return ipow(b, k);
            return std::pow(b, eval_node(*n.args[1], slots));
        }
        case Op::Call: {
            const double a = eval_node(*n.args[0], slots);
            if (n.name == "sin") return std::sin(a);
            if (n.name == "cos") return std::cos(a);
            if (n.name == "exp") return std::exp(a);
            if (n.name == "tanh") return std::tanh(a);
            if (n.name == "abs") return std::abs(a);
            throw EvalError("unknown function '" + n.name + "'");
        }
    }
    throw EvalError("corrupt expression tree");
}

void print_node(const ExprNode& n, std::string& out) {
    auto bin = [&](const char* op) {
        out += '(';
        print_node(*n.args[0], out);
        out += op;
        print_node(*n.args[1], out);
        out += ')';
    };
    switch (n.op) {
        case Op::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        }
        case Op::Variable: out += n.name; return;
        case Op::Neg:
            out += "(-";
            print_node(*n.args[0], out);
            out += ')';
            return;
        case Op::Add: bin(" + "); return;
        case Op::Sub: bin(" - "); return;
        case Op::Mul: bin(" * "); return;
        case Op::Div: bin(" / "); return;
        case Op::Pow: bin("^"); return;
        case Op::Call:
            out += n.name;
            out += '(';
            print_node(*n.args[0], out);
            out += ')';
            return;
    }
}

}  // namespace

const std::vector<std::string>& known_functions() {
    static const std::vector<std::string> fns = {"sin", "cos", "exp", "tanh", "abs"};
    return fns;
}

std::vector<std::string> system_variables(std::size_t k) {
    std::vector<std::string> v;
    if (k == 1) {
        v.push_back("x");
    } else {
        for (std::size_t i = 1; i <= k; ++i) v.push_back("x" + std::to_string(i));
    }
    v.push_back("y");
    v.push_back("u");
    return v;
}

Expr parse_expr(const std::string& text, const std::vector<std::string>& variables) {
    Parser p(text, variables);
    return Expr(p.parse(), variables);
}

double Expr::operator()(std::span<const double> slots) const {
    const double v = eval_node(*root_, slots);
    if (!std::isfinite(v)) throw NonFiniteError("expression evaluated to a non-finite value");
    return v;
}

double eval_expr(const Expr& e, const std::map<std::string, double>& bindings) {
    std::vector<double> slots(e.variables().size(), std::nan(""));
    std::vector<bool> bound(slots.size(), false);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto it = bindings.find(e.variables()[i]);
        if (it != bindings.end()) {
            slots[i] = it->second;
            bound[i] = true;
        }
    }
    // Report the first referenced variable without a binding.
    std::vector<const ExprNode*> stack{&e.root()};
    while (!stack.empty()) {
        const ExprNode* n = stack.back();
        stack.pop_back();
        if (n->op == Op::Variable && !bound[static_cast<std::size_t>(n->slot)]) {
            auto alias = bindings.find(n->name);
            if (alias == bindings.end()) throw EvalError("unbound variable '" + n->name + "'");
            slots[static_cast<std::size_t>(n->slot)] = alias->second;
            bound[static_cast<std::size_t>(n->slot)] = true;
        }
        for (const auto& a : n->args) stack.push_back(a.get());
    }
    return e(slots);
}

std::string print_expr(const Expr& e) {
    std::string out;
    print_node(e.root(), out);
    return out;
}

bool same_tree(const ExprNode& a, const ExprNode& b) {
    if (a.op != b.op || a.args.size() != b.args.size()) return false;
    if (a.op == Op::Number && !(a.number == b.number || (std::isnan(a.number) && std::isnan(b.number)))) {
        return false;
    }
    if ((a.op == Op::Variable || a.op == Op::Call) && (a.name != b.name || a.slot != b.slot)) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!same_tree(*a.args[i], *b.args[i])) return false;
    }
    return true;
}

}  // namespace nslab::cli
