#include "focl/ast.hpp"

#include <algorithm>
#include <set>

namespace focl {

bool Expr::is_formula() const {
    switch (kind) {
        case NodeKind::Equality:
        case NodeKind::Atom:
        case NodeKind::Not:
        case NodeKind::Or:
        case NodeKind::Exists:
        case NodeKind::NumPred:
            return true;
        default:
            return false;
    }
}

ExprPtr Expr::make(Expr e) {
    e.finalize();
    return std::make_shared<const Expr>(std::move(e));
}

void Expr::finalize() {
    std::set<std::string> fv;
    auto merge_children = [&] {
        for (const auto& c : children)
            fv.insert(c->free_vars().begin(), c->free_vars().end());
    };
    switch (kind) {
        case NodeKind::Equality:
            fv.insert(vars.begin(), vars.end());
            size_ = 3;
            break;
        case NodeKind::Atom:
            fv.insert(vars.begin(), vars.end());
            size_ = 1 + vars.size();
            break;
        case NodeKind::Not:
            merge_children();
            size_ = 1 + children[0]->size();
            break;
        case NodeKind::Or:
            merge_children();
            size_ = 1 + children[0]->size() + children[1]->size();
            break;
        case NodeKind::Exists:
            merge_children();
            fv.erase(vars[0]);
            size_ = 2 + children[0]->size();
            break;
        case NodeKind::NumPred: {
            merge_children();
            size_ = 1;
            for (const auto& c : children) size_ += c->size();
            if (fv.size() > 1)
                throw Error("numerical predicate arguments use more than one free "
                            "variable jointly");
            break;
        }
        case NodeKind::Count: {
            merge_children();
            std::set<std::string> bound(vars.begin(), vars.end());
            if (bound.size() != vars.size())
                throw Error("counting term binds a variable twice");
            for (const auto& v : vars) fv.erase(v);
            size_ = 1 + vars.size() + children[0]->size();
            break;
        }
        case NodeKind::IntConst:
            size_ = 1;
            break;
        case NodeKind::Add:
        case NodeKind::Mul:
            merge_children();
            size_ = 1 + children[0]->size() + children[1]->size();
            break;
    }
    free_.assign(fv.begin(), fv.end());
}

ExprPtr Expr::equality(std::string x1, std::string x2) {
    Expr e;
    e.kind = NodeKind::Equality;
    e.vars = {std::move(x1), std::move(x2)};
    return make(std::move(e));
}

ExprPtr Expr::atom(std::string rel, std::vector<std::string> vars) {
    Expr e;
    e.kind = NodeKind::Atom;
    e.rel_name = std::move(rel);
    e.vars = std::move(vars);
    return make(std::move(e));
}

ExprPtr Expr::negation(ExprPtr f) {
    FOCL_CHECK(f->is_formula(), "negation applies to formulas");
    Expr e;
    e.kind = NodeKind::Not;
    e.children = {std::move(f)};
    return make(std::move(e));
}

ExprPtr Expr::disjunction(ExprPtr f, ExprPtr g) {
    FOCL_CHECK(f->is_formula() && g->is_formula(), "disjunction applies to formulas");
    Expr e;
    e.kind = NodeKind::Or;
    e.children = {std::move(f), std::move(g)};
    return make(std::move(e));
}

ExprPtr Expr::conjunction(ExprPtr f, ExprPtr g) {
    // (phi & psi) desugars to !(!phi | !psi)
    return negation(disjunction(negation(std::move(f)), negation(std::move(g))));
}

ExprPtr Expr::conjunction(const std::vector<ExprPtr>& fs) {
    if (fs.empty()) return truth();
    ExprPtr acc = fs[0];
    for (std::size_t i = 1; i < fs.size(); ++i) acc = conjunction(acc, fs[i]);
    return acc;
}

ExprPtr Expr::exists(std::string var, ExprPtr body) {
    FOCL_CHECK(body->is_formula(), "exists applies to formulas");
    Expr e;
    e.kind = NodeKind::Exists;
    e.vars = {std::move(var)};
    e.children = {std::move(body)};
    return make(std::move(e));
}

ExprPtr Expr::forall(std::string var, ExprPtr body) {
    // forall x phi desugars to !exists x !phi
    return negation(exists(std::move(var), negation(std::move(body))));
}

ExprPtr Expr::num_pred(std::string name, std::vector<ExprPtr> args) {
    for (const auto& a : args) FOCL_CHECK(a->is_term(), "predicate arguments are terms");
    Expr e;
    e.kind = NodeKind::NumPred;
    e.rel_name = std::move(name);
    e.children = std::move(args);
    return make(std::move(e));
}

ExprPtr Expr::count(std::vector<std::string> bound, ExprPtr body) {
    FOCL_CHECK(body->is_formula(), "counting applies to formulas");
    Expr e;
    e.kind = NodeKind::Count;
    e.vars = std::move(bound);
    e.children = {std::move(body)};
    return make(std::move(e));
}

ExprPtr Expr::int_const(i64 v) {
    Expr e;
    e.kind = NodeKind::IntConst;
    e.value = v;
    return make(std::move(e));
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) {
    FOCL_CHECK(a->is_term() && b->is_term(), "addition applies to terms");
    Expr e;
    e.kind = NodeKind::Add;
    e.children = {std::move(a), std::move(b)};
    return make(std::move(e));
}

ExprPtr Expr::mul(ExprPtr a, ExprPtr b) {
    FOCL_CHECK(a->is_term() && b->is_term(), "multiplication applies to terms");
    Expr e;
    e.kind = NodeKind::Mul;
    e.children = {std::move(a), std::move(b)};
    return make(std::move(e));
}

ExprPtr Expr::sub(ExprPtr a, ExprPtr b) {
    // (t1 - t2) desugars to (t1 + ((-1) * t2))
    return add(std::move(a), mul(int_const(-1), std::move(b)));
}

ExprPtr Expr::truth() { return num_pred("Peq", {int_const(0), int_const(0)}); }
ExprPtr Expr::falsity() { return num_pred("Peq", {int_const(0), int_const(1)}); }

static bool is_eq_consts(const Expr& e, i64 a, i64 b) {
    return e.kind == NodeKind::NumPred && e.rel_name == "Peq" &&
           e.children.size() == 2 &&
           e.children[0]->kind == NodeKind::IntConst && e.children[0]->value == a &&
           e.children[1]->kind == NodeKind::IntConst && e.children[1]->value == b;
}

bool Expr::is_truth(const Expr& e) { return is_eq_consts(e, 0, 0); }
bool Expr::is_falsity(const Expr& e) { return is_eq_consts(e, 0, 1); }

// ---------------------------------------------------------------- printer

namespace {

void print_rec(const Expr& e, std::string& out) {
    switch (e.kind) {
        case NodeKind::Equality:
            out += e.vars[0];
            out += " = ";
            out += e.vars[1];
            break;
        case NodeKind::Atom:
            out += e.rel_name;
            out += '(';
            for (std::size_t i = 0; i < e.vars.size(); ++i) {
                if (i) out += ", ";
                out += e.vars[i];
            }
            out += ')';
            break;
        case NodeKind::Not:
            out += "!(";
            print_rec(*e.children[0], out);
            out += ')';
            break;
        case NodeKind::Or:
            out += '(';
            print_rec(*e.children[0], out);
            out += " | ";
            print_rec(*e.children[1], out);
            out += ')';
            break;
        case NodeKind::Exists:
            out += "exists ";
            out += e.vars[0];
            out += ". (";
            print_rec(*e.children[0], out);
            out += ')';
            break;
        case NodeKind::NumPred:
            if (Expr::is_truth(e)) {
                out += "true";
                break;
            }
            if (Expr::is_falsity(e)) {
                out += "false";
                break;
            }
            out += e.rel_name;
            out += '(';
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += ", ";
                print_rec(*e.children[i], out);
            }
            out += ')';
            break;
        case NodeKind::Count:
            out += "#(";
            for (std::size_t i = 0; i < e.vars.size(); ++i) {
                if (i) out += ", ";
                out += e.vars[i];
            }
            out += ").(";
            print_rec(*e.children[0], out);
            out += ')';
            break;
        case NodeKind::IntConst:
            out += std::to_string(e.value);
            break;
        case NodeKind::Add:
            out += '(';
            print_rec(*e.children[0], out);
            out += " + ";
            print_rec(*e.children[1], out);
            out += ')';
            break;
        case NodeKind::Mul:
            out += '(';
            print_rec(*e.children[0], out);
            out += " * ";
            print_rec(*e.children[1], out);
            out += ')';
            break;
    }
}

}  // namespace

std::string print(const Expr& e) {
    std::string out;
    print_rec(e, out);
    return out;
}

// ---------------------------------------------------------------- registry

void NumericalPredicateRegistry::register_pred(
    const std::string& name, unsigned arity,
    std::function<bool(std::span<const i128>)> decide) {
    if (entries_.count(name)) throw Error("duplicate numerical predicate: " + name);
    if (arity == 0) throw Error("numerical predicates have arity >= 1");
    entries_[name] = Entry{arity, std::move(decide)};
}

const NumericalPredicateRegistry::Entry& NumericalPredicateRegistry::entry(
    const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw Error("unknown numerical predicate: " + name);
    return it->second;
}

static bool prime_test(i128 v) {
    if (v < 2) return false;
    for (i128 p = 2; p * p <= v; ++p)
        if (v % p == 0) return false;
    return true;
}

const NumericalPredicateRegistry& builtin_registry() {
    static const NumericalPredicateRegistry reg = [] {
        NumericalPredicateRegistry r;
        r.register_pred("Peq", 2,
                        [](std::span<const i128> a) { return a[0] == a[1]; });
        r.register_pred("Pleq", 2,
                        [](std::span<const i128> a) { return a[0] <= a[1]; });
        r.register_pred("Pprime", 1,
                        [](std::span<const i128> a) { return prime_test(a[0]); });
        r.register_pred("Pdivides", 2, [](std::span<const i128> a) {
            return a[0] != 0 && a[1] % a[0] == 0;
        });
        return r;
    }();
    return reg;
}

}  // namespace focl
