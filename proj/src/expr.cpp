#include "curv2d/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <map>

namespace curv2d {

const char* errc_name(Errc code)
{
    switch (code) {
        case Errc::syntax_error: return "SyntaxError";
        case Errc::unknown_identifier: return "UnknownIdentifier";
        case Errc::domain_error: return "DomainError";
        case Errc::unknown_family: return "UnknownFamily";
        case Errc::singular_basis: return "SingularBasis";
        case Errc::non_convex: return "NonConvex";
        case Errc::no_root: return "NoRoot";
        case Errc::derivative_unavailable: return "DerivativeUnavailable";
        case Errc::verticality_violated: return "VerticalityViolated";
        case Errc::evaluation_failed: return "EvaluationFailed";
        case Errc::step_underflow: return "StepUnderflow";
        case Errc::chart_singular: return "ChartSingular";
        case Errc::newton_failed: return "NewtonFailed";
        case Errc::root_failed: return "RootFailed";
        case Errc::non_positive_argument: return "NonPositiveArgument";
        case Errc::wrong_family: return "WrongFamily";
        case Errc::inversion_failed: return "InversionFailed";
        case Errc::no_convergence: return "NoConvergence";
        case Errc::io_error: return "IoError";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

namespace {

struct Token {
    enum class Kind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };
    Kind kind;
    double number = 0.0;
    std::string ident;
    int line = 1;
    int column = 1;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take()
    {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const Token& at, const std::string& msg, Errc code = Errc::syntax_error) const
    {
        throw Error(code, msg + " at line " + std::to_string(at.line) + ", column " +
                              std::to_string(at.column));
    }

  private:
    void advance()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
        tok_.line = line_;
        tok_.column = column_;
        if (pos_ >= src_.size()) {
            tok_.kind = Token::Kind::end;
            return;
        }
        char c = src_[pos_];
        switch (c) {
            case '+': bump(); tok_.kind = Token::Kind::plus; return;
            case '-': bump(); tok_.kind = Token::Kind::minus; return;
            case '*': bump(); tok_.kind = Token::Kind::star; return;
            case '/': bump(); tok_.kind = Token::Kind::slash; return;
            case '^': bump(); tok_.kind = Token::Kind::caret; return;
            case '(': bump(); tok_.kind = Token::Kind::lparen; return;
            case ')': bump(); tok_.kind = Token::Kind::rparen; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            lexNumber();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            tok_.kind = Token::Kind::ident;
            tok_.ident.clear();
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                tok_.ident.push_back(src_[pos_]);
                bump();
            }
            return;
        }
        fail(tok_, std::string("unexpected character '") + c + "'");
    }

    void lexNumber()
    {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            bump();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t mark = pos_;
            bump();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    bump();
            } else {
                pos_ = mark;  // 'e' belongs to something else; not a valid exponent
            }
        }
        std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        tok_.number = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0') fail(tok_, "malformed number '" + text + "'");
        tok_.kind = Token::Kind::number;
    }

    void bump()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
    Token tok_;
};

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprPtr constant(double v)
{
    Expr e;
    e.op = Expr::Op::constant;
    e.value = v;
    return make(std::move(e));
}

ExprPtr unary(Expr::Op op, ExprPtr a)
{
    Expr e;
    e.op = op;
    e.a = std::move(a);
    return make(std::move(e));
}

ExprPtr binary(Expr::Op op, ExprPtr a, ExprPtr b)
{
    Expr e;
    e.op = op;
    e.a = std::move(a);
    e.b = std::move(b);
    return make(std::move(e));
}

class Parser {
  public:
    explicit Parser(std::string_view src) : lex_(src) {}

    ExprPtr parse()
    {
        ExprPtr e = sum();
        if (lex_.peek().kind != Token::Kind::end)
            lex_.fail(lex_.peek(), "unexpected trailing input");
        return e;
    }

  private:
    ExprPtr sum()
    {
        ExprPtr e = product();
        for (;;) {
            auto k = lex_.peek().kind;
            if (k == Token::Kind::plus) {
                lex_.take();
                e = binary(Expr::Op::add, e, product());
            } else if (k == Token::Kind::minus) {
                lex_.take();
                e = binary(Expr::Op::sub, e, product());
            } else {
                return e;
            }
        }
    }

    ExprPtr product()
    {
        ExprPtr e = unaryExpr();
        for (;;) {
            auto k = lex_.peek().kind;
            if (k == Token::Kind::star) {
                lex_.take();
                e = binary(Expr::Op::mul, e, unaryExpr());
            } else if (k == Token::Kind::slash) {
                lex_.take();
                e = binary(Expr::Op::div, e, unaryExpr());
            } else {
                return e;
            }
        }
    }

    ExprPtr unaryExpr()
    {
        if (lex_.peek().kind == Token::Kind::minus) {
            lex_.take();
            return unary(Expr::Op::neg, unaryExpr());
        }
        return power();
    }

    ExprPtr power()
    {
        ExprPtr base = atom();
        if (lex_.peek().kind != Token::Kind::caret) return base;
        Token caret = lex_.take();
        Expr e;
        e.op = Expr::Op::pow_int;
        e.a = base;
        e.exponent = integerExponent(caret);
        return make(std::move(e));
    }

    int integerExponent(const Token& caret)
    {
        bool neg = false;
        bool paren = false;
        if (lex_.peek().kind == Token::Kind::lparen) {
            paren = true;
            lex_.take();
        }
        if (lex_.peek().kind == Token::Kind::minus) {
            neg = true;
            lex_.take();
        }
        if (lex_.peek().kind != Token::Kind::number)
            lex_.fail(caret, "exponent must be a constant integer");
        Token num = lex_.take();
        double v = num.number;
        int n = static_cast<int>(v);
        if (static_cast<double>(n) != v)
            lex_.fail(num, "exponent must be a constant integer");
        if (paren && lex_.take().kind != Token::Kind::rparen)
            lex_.fail(num, "expected ')' after exponent");
        return neg ? -n : n;
    }

    ExprPtr atom()
    {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Kind::number: return constant(t.number);
            case Token::Kind::lparen: {
                ExprPtr e = sum();
                if (lex_.peek().kind != Token::Kind::rparen)
                    lex_.fail(lex_.peek(), "expected ')'");
                lex_.take();
                return e;
            }
            case Token::Kind::ident: return identifier(t);
            default: lex_.fail(t, "expected a value");
        }
    }

    ExprPtr identifier(const Token& t)
    {
        static const std::map<std::string, int> vars = {{"q1", 0}, {"q2", 1}, {"u", 2}};
        static const std::map<std::string, Expr::Fn> fns = {
            {"sin", Expr::Fn::sin}, {"cos", Expr::Fn::cos},   {"tan", Expr::Fn::tan},
            {"exp", Expr::Fn::exp}, {"log", Expr::Fn::log},   {"sqrt", Expr::Fn::sqrt},
            {"atan", Expr::Fn::atan}};
        if (auto it = vars.find(t.ident); it != vars.end()) {
            Expr e;
            e.op = Expr::Op::variable;
            e.var = it->second;
            return make(std::move(e));
        }
        if (auto it = fns.find(t.ident); it != fns.end()) {
            if (lex_.peek().kind != Token::Kind::lparen)
                lex_.fail(lex_.peek(), "expected '(' after function '" + t.ident + "'");
            lex_.take();
            ExprPtr arg = sum();
            if (lex_.peek().kind != Token::Kind::rparen) lex_.fail(lex_.peek(), "expected ')'");
            lex_.take();
            Expr e;
            e.op = Expr::Op::call;
            e.fn = it->second;
            e.a = std::move(arg);
            return make(std::move(e));
        }
        lex_.fail(t, "unknown identifier '" + t.ident + "'", Errc::unknown_identifier);
    }

    Lexer lex_;
};

}  // namespace

ExprPtr parse_expression(std::string_view source) { return Parser(source).parse(); }

bool depends_on_u(const Expr& e)
{
    if (e.op == Expr::Op::variable) return e.var == 2;
    if (e.a && depends_on_u(*e.a)) return true;
    if (e.b && depends_on_u(*e.b)) return true;
    return false;
}

}  // namespace curv2d
