#include "dualgen/expression.hpp"

#include <boost/math/constants/constants.hpp>

#include <cctype>
#include <cmath>
#include <sstream>

namespace dualgen {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Abs, Sin, Cos, Sqrt, Min, Max, Sign, Step };

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;
    std::size_t var = 0;
    std::vector<std::shared_ptr<const ExprNode>> args;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_const(double c) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

NodePtr make_var(std::size_t v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = v;
    return n;
}

bool is_const(const NodePtr& n, double c) { return n->op == Op::Const && n->value == c; }

double eval_node(const ExprNode& n, const Vec& x);

NodePtr make(Op op, std::vector<NodePtr> args) {
    bool all_const = true;
    for (const auto& a : args) all_const = all_const && a->op == Op::Const;
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->args = std::move(args);
    if (all_const) return make_const(eval_node(*n, Vec()));
    const auto& a = n->args;
    switch (op) {
        case Op::Add:
            if (is_const(a[0], 0.0)) return a[1];
            if (is_const(a[1], 0.0)) return a[0];
            break;
        case Op::Sub:
            if (is_const(a[1], 0.0)) return a[0];
            if (is_const(a[0], 0.0)) return make(Op::Neg, {a[1]});
            break;
        case Op::Mul:
            if (is_const(a[0], 0.0) || is_const(a[1], 0.0)) return make_const(0.0);
            if (is_const(a[0], 1.0)) return a[1];
            if (is_const(a[1], 1.0)) return a[0];
            break;
        case Op::Div:
            if (is_const(a[0], 0.0)) return make_const(0.0);
            if (is_const(a[1], 1.0)) return a[0];
            break;
        case Op::Pow:
            if (is_const(a[1], 1.0)) return a[0];
            if (is_const(a[1], 0.0)) return make_const(1.0);
            break;
        default:
            break;
    }
    return n;
}

double eval_node(const ExprNode& n, const Vec& x) {
    auto arg = [&](std::size_t i) { return eval_node(*n.args[i], x); };
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x[static_cast<Eigen::Index>(n.var)];
        case Op::Add: return arg(0) + arg(1);
        case Op::Sub: return arg(0) - arg(1);
        case Op::Mul: return arg(0) * arg(1);
        case Op::Div: return arg(0) / arg(1);
        case Op::Pow: return std::pow(arg(0), arg(1));
        case Op::Neg: return -arg(0);
        case Op::Exp: return std::exp(arg(0));
        case Op::Log: return std::log(arg(0));
        case Op::Abs: return std::abs(arg(0));
        case Op::Sin: return std::sin(arg(0));
        case Op::Cos: return std::cos(arg(0));
        case Op::Sqrt: return std::sqrt(arg(0));
        case Op::Min: return std::min(arg(0), arg(1));
        case Op::Max: return std::max(arg(0), arg(1));
        case Op::Sign: {
            const double v = arg(0);
            return static_cast<double>((v > 0.0) - (v < 0.0));
        }
        case Op::Step: return arg(0) >= 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

bool depends(const ExprNode& n, std::size_t v) {
    if (n.op == Op::Var) return n.var == v;
    for (const auto& a : n.args)
        if (depends(*a, v)) return true;
    return false;
}

NodePtr diff(const NodePtr& n, std::size_t v) {
    if (!depends(*n, v)) return make_const(0.0);
    const auto& a = n->args;
    auto d = [&](std::size_t i) { return diff(a[i], v); };
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(1.0);
        case Op::Add: return make(Op::Add, {d(0), d(1)});
        case Op::Sub: return make(Op::Sub, {d(0), d(1)});
        case Op::Neg: return make(Op::Neg, {d(0)});
        case Op::Mul: return make(Op::Add, {make(Op::Mul, {d(0), a[1]}), make(Op::Mul, {a[0], d(1)})});
        case Op::Div:
            return make(Op::Div, {make(Op::Sub, {make(Op::Mul, {d(0), a[1]}), make(Op::Mul, {a[0], d(1)})}),
                                  make(Op::Mul, {a[1], a[1]})});
        case Op::Pow:
            if (!depends(*a[1], v))
                return make(Op::Mul, {make(Op::Mul, {a[1], make(Op::Pow, {a[0], make(Op::Sub, {a[1], make_const(1.0)})})}),
                                      d(0)});
            // u^w (w' log u + w u'/u)
            return make(Op::Mul, {n, make(Op::Add, {make(Op::Mul, {d(1), make(Op::Log, {a[0]})}),
                                                    make(Op::Div, {make(Op::Mul, {a[1], d(0)}), a[0]})})});
        case Op::Exp: return make(Op::Mul, {n, d(0)});
        case Op::Log: return make(Op::Div, {d(0), a[0]});
        case Op::Abs: return make(Op::Mul, {make(Op::Sign, {a[0]}), d(0)});
        case Op::Sin: return make(Op::Mul, {make(Op::Cos, {a[0]}), d(0)});
        case Op::Cos: return make(Op::Neg, {make(Op::Mul, {make(Op::Sin, {a[0]}), d(0)})});
        case Op::Sqrt: return make(Op::Div, {d(0), make(Op::Mul, {make_const(2.0), n})});
        case Op::Min:
        case Op::Max: {
            // step(b - a) picks the first argument for min, the second for max.
            auto s = make(Op::Step, {make(Op::Sub, {a[1], a[0]})});
            auto first = n->op == Op::Min ? d(0) : d(1);
            auto second = n->op == Op::Min ? d(1) : d(0);
            return make(Op::Add, {make(Op::Mul, {s, first}),
                                  make(Op::Mul, {make(Op::Sub, {make_const(1.0), s}), second})});
        }
        case Op::Sign:
        case Op::Step: return make_const(0.0);
    }
    return make_const(0.0);
}

NodePtr subst(const NodePtr& n, const std::vector<NodePtr>& vars) {
    if (n->op == Op::Var) {
        if (n->var >= vars.size()) throw Error(ErrorCode::DimensionMismatch, "substitution misses a variable");
        return vars[n->var];
    }
    if (n->args.empty()) return n;
    std::vector<NodePtr> args;
    for (const auto& a : n->args) args.push_back(subst(a, vars));
    return make(n->op, std::move(args));
}

const char* func_name(Op op) {
    switch (op) {
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Abs: return "abs";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sqrt: return "sqrt";
        case Op::Min: return "min";
        case Op::Max: return "max";
        case Op::Pow: return "pow";
        case Op::Sign: return "sign";
        case Op::Step: return "step";
        default: return "";
    }
}

void print(const ExprNode& n, std::ostringstream& os) {
    auto binary = [&](const char* sym) {
        os << '(';
        print(*n.args[0], os);
        os << sym;
        print(*n.args[1], os);
        os << ')';
    };
    switch (n.op) {
        case Op::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            if (n.value < 0) os << '(' << tmp.str() << ')';
            else os << tmp.str();
            break;
        }
        case Op::Var: os << 'x' << (n.var + 1); break;
        case Op::Add: binary(" + "); break;
        case Op::Sub: binary(" - "); break;
        case Op::Mul: binary("*"); break;
        case Op::Div: binary("/"); break;
        case Op::Pow: binary("^"); break;
        case Op::Neg:
            os << "(-";
            print(*n.args[0], os);
            os << ')';
            break;
        default:
            os << func_name(n.op) << '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) os << ", ";
                print(*n.args[i], os);
            }
            os << ')';
    }
}

class Parser {
public:
    Parser(const std::string& s, std::size_t dim) : s_(s), dim_(dim) {}

    NodePtr run() {
        skip();
        if (pos_ >= s_.size()) fail("empty expression");
        auto n = expr();
        skip();
        if (pos_ < s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::ExpressionParseError, msg + " at offset " + std::to_string(pos_) + " in \"" + s_ + "\"");
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            if (std::string("+-*/^").find(c) != std::string::npos) last_op_ = pos_;
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto n = term();
        for (;;) {
            if (accept('+')) n = make(Op::Add, {n, term()});
            else if (accept('-')) n = make(Op::Sub, {n, term()});
            else return n;
        }
    }

    NodePtr term() {
        auto n = unary();
        for (;;) {
            if (accept('*')) n = make(Op::Mul, {n, unary()});
            else if (accept('/')) n = make(Op::Div, {n, unary()});
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Op::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) {
            if (last_op_ != std::string::npos) {
                pos_ = last_op_;
                fail("dangling operator '" + std::string(1, s_[pos_]) + "'");
            }
            fail("expected operand");
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return make_const(v);
        }
        if (accept('(')) {
            auto n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "pi") return make_const(boost::math::constants::pi<double>());
            if (id == "x" && dim_ == 1) return make_var(0);
            if (id.size() > 1 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
                const std::size_t k = std::stoul(id.substr(1));
                if (k < 1 || k > dim_) {
                    pos_ = start;
                    fail("variable " + id + " outside x1..x" + std::to_string(dim_));
                }
                return make_var(k - 1);
            }
            return call(id, start);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    NodePtr call(const std::string& id, std::size_t start) {
        static const std::pair<const char*, Op> unary_fns[] = {
            {"exp", Op::Exp}, {"log", Op::Log}, {"abs", Op::Abs}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"sqrt", Op::Sqrt}};
        static const std::pair<const char*, Op> binary_fns[] = {{"pow", Op::Pow}, {"min", Op::Min}, {"max", Op::Max}};
        std::size_t arity = 0;
        Op op = Op::Const;
        for (const auto& [name, o] : unary_fns)
            if (id == name) arity = 1, op = o;
        for (const auto& [name, o] : binary_fns)
            if (id == name) arity = 2, op = o;
        if (arity == 0) {
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        if (!accept('(')) fail("expected '(' after " + id);
        std::vector<NodePtr> args{expr()};
        while (accept(',')) args.push_back(expr());
        if (!accept(')')) fail("expected ')'");
        if (args.size() != arity) fail(id + " takes " + std::to_string(arity) + " argument(s)");
        return make(op, std::move(args));
    }

    const std::string& s_;
    std::size_t dim_;
    std::size_t pos_ = 0;
    std::size_t last_op_ = std::string::npos;
};

}  // namespace

Expr::Expr() : node_(make_const(0.0)), source_("0") {}

Expr::Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) { source_ = str(); }

Expr Expr::constant(double c) { return Expr(make_const(c)); }
Expr Expr::variable(std::size_t index) { return Expr(make_var(index)); }

Expr Expr::parse(const std::string& text, std::size_t dim) {
    Parser p(text, dim);
    Expr e(p.run());
    e.source_ = text;
    return e;
}

double Expr::operator()(const Vec& x) const { return eval_node(*node_, x); }

double Expr::eval1(double x) const {
    Vec v(1);
    v[0] = x;
    return eval_node(*node_, v);
}

Expr Expr::derivative(std::size_t var) const { return Expr(diff(node_, var)); }
Expr Expr::substitute(const std::vector<Expr>& vars) const {
    std::vector<NodePtr> nodes;
    for (const auto& v : vars) nodes.push_back(v.node());
    return Expr(subst(node_, nodes));
}

bool Expr::depends_on(std::size_t var) const { return depends(*node_, var); }
bool Expr::is_constant() const { return node_->op == Op::Const; }

std::string Expr::str() const {
    std::ostringstream os;
    print(*node_, os);
    return os.str();
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make(Op::Add, {a.node(), b.node()})); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make(Op::Sub, {a.node(), b.node()})); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make(Op::Mul, {a.node(), b.node()})); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make(Op::Div, {a.node(), b.node()})); }
Expr operator-(const Expr& a) { return Expr(make(Op::Neg, {a.node()})); }

}  // namespace dualgen
