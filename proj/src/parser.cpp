#include "focl/parser.hpp"

#include <cctype>

#include "focl/locality.hpp"

namespace focl {

namespace {

enum class Tok {
    kEnd, kIdent, kName, kInt, kLParen, kRParen, kComma, kDot, kHash,
    kBang, kAmp, kPipe, kPlus, kMinus, kStar, kEq, kLeq, kGt,
};

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;
    Tok tok = Tok::kEnd;
    std::string ident;
    i64 number = 0;
    std::size_t tok_pos = 0;

    explicit Lexer(std::string_view t) : text(t) { next(); }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_pos); }

    void next() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        tok_pos = pos;
        if (pos >= text.size()) {
            tok = Tok::kEnd;
            return;
        }
        char c = text[pos];
        auto one = [&](Tok t) { tok = t; ++pos; };
        switch (c) {
            case '(': one(Tok::kLParen); return;
            case ')': one(Tok::kRParen); return;
            case ',': one(Tok::kComma); return;
            case '.': one(Tok::kDot); return;
            case '#': one(Tok::kHash); return;
            case '!': one(Tok::kBang); return;
            case '&': one(Tok::kAmp); return;
            case '|': one(Tok::kPipe); return;
            case '+': one(Tok::kPlus); return;
            case '-': one(Tok::kMinus); return;
            case '*': one(Tok::kStar); return;
            case '=': one(Tok::kEq); return;
            case '>': one(Tok::kGt); return;
            case '<':
                if (pos + 1 < text.size() && text[pos + 1] == '=') {
                    tok = Tok::kLeq;
                    pos += 2;
                    return;
                }
                fail("unexpected '<'");
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            i64 v = 0;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                v = v * 10 + (text[pos] - '0');
                ++pos;
            }
            tok = Tok::kInt;
            number = v;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t b = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            ident.assign(text.substr(b, pos - b));
            tok = (std::islower(static_cast<unsigned char>(c))) ? Tok::kIdent : Tok::kName;
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    bool accept(Tok t) {
        if (tok != t) return false;
        next();
        return true;
    }

    void expect(Tok t, const char* what) {
        if (tok != t) fail(std::string("expected ") + what);
        next();
    }
};

struct Parser {
    Lexer lx;
    const NumericalPredicateRegistry& reg;
    const Signature* sig;

    Parser(std::string_view text, const NumericalPredicateRegistry& r, const Signature* s)
        : lx(text), reg(r), sig(s) {}

    bool starts_formula() const {
        switch (lx.tok) {
            case Tok::kBang:
            case Tok::kName:
                return true;
            case Tok::kIdent:
                return true;  // keyword, dist sugar, or `var = var`
            default:
                return false;
        }
    }

    bool starts_term() const {
        return lx.tok == Tok::kInt || lx.tok == Tok::kHash || lx.tok == Tok::kMinus;
    }

    ExprPtr parse_any() {
        if (starts_term()) return parse_term();
        if (starts_formula()) return parse_formula();
        if (lx.tok == Tok::kLParen) {
            std::size_t at = lx.tok_pos;
            lx.next();
            ExprPtr inner = parse_any();
            lx.expect(Tok::kRParen, "')'");
            // the parenthesized value may continue as a binary expression
            if (inner->is_formula()) return continue_formula(inner, at);
            return continue_term(inner);
        }
        lx.fail("expected an expression");
    }

    // ---- formulas

    ExprPtr parse_formula() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr f = parse_and();
        while (lx.accept(Tok::kPipe)) f = Expr::disjunction(f, parse_and());
        return f;
    }

    ExprPtr parse_and() {
        ExprPtr f = parse_unary();
        while (lx.accept(Tok::kAmp)) f = Expr::conjunction(f, parse_unary());
        return f;
    }

    ExprPtr continue_formula(ExprPtr f, std::size_t at) {
        if (!f->is_formula()) throw ParseError("expected a formula", at);
        while (true) {
            if (lx.accept(Tok::kAmp))
                f = Expr::conjunction(f, parse_unary());
            else if (lx.accept(Tok::kPipe))
                f = Expr::disjunction(f, parse_and());
            else
                break;
        }
        return f;
    }

    ExprPtr continue_term(ExprPtr t) {
        while (true) {
            if (lx.accept(Tok::kStar))
                t = Expr::mul(t, parse_factor());
            else if (lx.accept(Tok::kPlus))
                t = Expr::add(t, parse_mul());
            else if (lx.accept(Tok::kMinus))
                t = Expr::sub(t, parse_mul());
            else
                break;
        }
        return t;
    }

    ExprPtr parse_unary() {
        std::size_t at = lx.tok_pos;
        if (lx.accept(Tok::kBang)) return Expr::negation(parse_unary());
        if (lx.tok == Tok::kIdent && (lx.ident == "exists" || lx.ident == "forall")) {
            bool uni = lx.ident == "forall";
            lx.next();
            if (lx.tok != Tok::kIdent) lx.fail("expected a variable after quantifier");
            std::string var = lx.ident;
            lx.next();
            lx.expect(Tok::kDot, "'.'");
            ExprPtr body = parse_unary();
            return uni ? Expr::forall(var, body) : Expr::exists(var, body);
        }
        if (lx.tok == Tok::kIdent && lx.ident == "true") {
            lx.next();
            return Expr::truth();
        }
        if (lx.tok == Tok::kIdent && lx.ident == "false") {
            lx.next();
            return Expr::falsity();
        }
        if (lx.tok == Tok::kIdent && lx.ident == "dist") return parse_dist(at);
        if (lx.tok == Tok::kLParen) {
            lx.next();
            ExprPtr inner = parse_any();
            lx.expect(Tok::kRParen, "')'");
            if (!inner->is_formula()) throw ParseError("expected a formula", at);
            return inner;
        }
        if (lx.tok == Tok::kName) {
            std::string name = lx.ident;
            lx.next();
            lx.expect(Tok::kLParen, "'('");
            if (reg.contains(name)) {
                std::vector<ExprPtr> args;
                if (lx.tok != Tok::kRParen) {
                    do args.push_back(parse_term());
                    while (lx.accept(Tok::kComma));
                }
                lx.expect(Tok::kRParen, "')'");
                if (args.size() != reg.entry(name).arity)
                    throw ParseError("wrong argument count for predicate " + name, at);
                try {
                    return Expr::num_pred(name, std::move(args));
                } catch (const Error& e) {
                    throw ParseError(e.what(), at);
                }
            }
            std::vector<std::string> vars;
            if (lx.tok != Tok::kRParen) {
                do {
                    if (lx.tok != Tok::kIdent) lx.fail("expected a variable");
                    vars.push_back(lx.ident);
                    lx.next();
                } while (lx.accept(Tok::kComma));
            }
            lx.expect(Tok::kRParen, "')'");
            return Expr::atom(name, std::move(vars));
        }
        if (lx.tok == Tok::kIdent) {
            std::string v1 = lx.ident;
            lx.next();
            lx.expect(Tok::kEq, "'=' (equality)");
            if (lx.tok != Tok::kIdent) lx.fail("expected a variable");
            std::string v2 = lx.ident;
            lx.next();
            return Expr::equality(v1, v2);
        }
        lx.fail("expected a formula");
    }

    // dist <= K (x, y)  |  dist > K (x, y); expands over the signature.
    ExprPtr parse_dist(std::size_t at) {
        lx.next();  // 'dist'
        bool leq;
        if (lx.accept(Tok::kLeq))
            leq = true;
        else if (lx.accept(Tok::kGt))
            leq = false;
        else
            lx.fail("expected '<=' or '>' after dist");
        if (lx.tok != Tok::kInt) lx.fail("expected a radius");
        Dist r = Dist(lx.number);
        lx.next();
        lx.expect(Tok::kLParen, "'('");
        if (lx.tok != Tok::kIdent) lx.fail("expected a variable");
        std::string v1 = lx.ident;
        lx.next();
        lx.expect(Tok::kComma, "','");
        if (lx.tok != Tok::kIdent) lx.fail("expected a variable");
        std::string v2 = lx.ident;
        lx.next();
        lx.expect(Tok::kRParen, "')'");
        if (!sig)
            throw ParseError("dist sugar needs a signature to expand", at);
        ExprPtr f = dist_formula(*sig, r, v1, v2);
        return leq ? f : Expr::negation(f);
    }

    // ---- terms

    ExprPtr parse_term() { return continue_term_entry(); }

    ExprPtr continue_term_entry() {
        ExprPtr t = parse_mul();
        while (true) {
            if (lx.accept(Tok::kPlus))
                t = Expr::add(t, parse_mul());
            else if (lx.accept(Tok::kMinus))
                t = Expr::sub(t, parse_mul());
            else
                return t;
        }
    }

    ExprPtr parse_mul() {
        ExprPtr t = parse_factor();
        while (lx.accept(Tok::kStar)) t = Expr::mul(t, parse_factor());
        return t;
    }

    ExprPtr parse_factor() {
        std::size_t at = lx.tok_pos;
        if (lx.tok == Tok::kInt) {
            i64 v = lx.number;
            lx.next();
            return Expr::int_const(v);
        }
        if (lx.accept(Tok::kMinus)) {
            if (lx.tok == Tok::kInt) {
                i64 v = lx.number;
                lx.next();
                return Expr::int_const(-v);
            }
            return Expr::mul(Expr::int_const(-1), parse_factor());
        }
        if (lx.tok == Tok::kHash) return parse_count();
        if (lx.tok == Tok::kLParen) {
            lx.next();
            ExprPtr inner = parse_any();
            lx.expect(Tok::kRParen, "')'");
            if (!inner->is_term()) throw ParseError("expected a counting term", at);
            return inner;
        }
        lx.fail("expected a counting term");
    }

    ExprPtr parse_count() {
        std::size_t at = lx.tok_pos;
        lx.expect(Tok::kHash, "'#'");
        lx.expect(Tok::kLParen, "'('");
        std::vector<std::string> bound;
        if (lx.tok != Tok::kRParen) {
            do {
                if (lx.tok != Tok::kIdent) lx.fail("expected a variable");
                bound.push_back(lx.ident);
                lx.next();
            } while (lx.accept(Tok::kComma));
        }
        lx.expect(Tok::kRParen, "')'");
        lx.expect(Tok::kDot, "'.'");
        lx.expect(Tok::kLParen, "'('");
        ExprPtr body = parse_formula();
        lx.expect(Tok::kRParen, "')'");
        try {
            return Expr::count(std::move(bound), body);
        } catch (const Error& e) {
            throw ParseError(e.what(), at);
        }
    }
};

}  // namespace

ExprPtr parse(std::string_view text, const NumericalPredicateRegistry& reg,
              const Signature* sig) {
    Parser p(text, reg, sig);
    ExprPtr e = p.parse_any();
    if (p.lx.tok != Tok::kEnd) p.lx.fail("trailing input after expression");
    return e;
}

}  // namespace focl
