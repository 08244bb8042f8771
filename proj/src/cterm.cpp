#include "focl/cterm.hpp"

#include <algorithm>

namespace focl {

bool CountingLeaf::holds_at(const Access& acc, std::span<const Elem> all_vals) const {
    FOCL_CHECK(all_vals.size() == xs.size() + ys.size() + zs.size(),
               "assignment arity mismatch");
    if (!psi.eval(acc, all_vals)) return false;
    if (!has_delta) return true;
    for (unsigned j = 0; j < h.size(); ++j) {
        for (unsigned i = 0; i < j; ++i) {
            Dist d = acc.bounded_distance(all_vals[i], all_vals[j], threshold);
            if ((d <= threshold) != h.edge(i, j)) return false;
        }
    }
    return true;
}

i128 CountingLeaf::count_global(const Access& acc, std::span<const Elem> ax,
                                std::span<const Elem> by) const {
    FOCL_CHECK(ax.size() == xs.size() && by.size() == ys.size(), "argument arity");
    std::vector<Elem> vals(xs.size() + ys.size() + zs.size(), kNoElem);
    std::copy(ax.begin(), ax.end(), vals.begin());
    std::copy(by.begin(), by.end(), vals.begin() + long(xs.size()));
    const std::size_t m = zs.size();
    if (m == 0) return holds_at(acc, vals) ? 1 : 0;
    const std::size_t n = acc.s->universe_size();
    if (n == 0) return 0;
    i128 total = 0;
    std::vector<Elem> idx(m, 0);
    const std::size_t base = xs.size() + ys.size();
    while (true) {
        for (std::size_t i = 0; i < m; ++i) vals[base + i] = idx[i];
        if (holds_at(acc, vals)) total = checked_add(total, 1);
        std::size_t i = 0;
        for (; i < m; ++i) {
            if (++idx[i] < n) break;
            idx[i] = 0;
        }
        if (i == m) break;
    }
    return total;
}

i128 CountingLeaf::count_local(const Access& acc, std::span<const Elem> ax,
                               std::span<const Elem> by) const {
    FOCL_CHECK(has_delta, "local counting needs a delta pattern");
    FOCL_CHECK(!xs.empty() || !ys.empty(), "ground leaves are served by the lookup table");
    FOCL_CHECK(ax.size() == xs.size() && by.size() == ys.size(), "argument arity");
    std::vector<Elem> vals(xs.size() + ys.size() + zs.size(), kNoElem);
    std::copy(ax.begin(), ax.end(), vals.begin());
    std::copy(by.begin(), by.end(), vals.begin() + long(xs.size()));
    const std::size_t m = zs.size();
    if (m == 0) return holds_at(acc, vals) ? 1 : 0;
    std::vector<Elem> anchors(vals.begin(), vals.begin() + long(xs.size() + ys.size()));
    std::vector<Elem> b = acc.bounded_ball(anchors, Dist(threshold * m));
    if (b.empty()) return 0;
    i128 total = 0;
    std::vector<std::size_t> idx(m, 0);
    const std::size_t base = xs.size() + ys.size();
    while (true) {
        for (std::size_t i = 0; i < m; ++i) vals[base + i] = b[idx[i]];
        if (holds_at(acc, vals)) total = checked_add(total, 1);
        std::size_t i = 0;
        for (; i < m; ++i) {
            if (++idx[i] < b.size()) break;
            idx[i] = 0;
        }
        if (i == m) break;
    }
    return total;
}

std::string CountingLeaf::print() const {
    std::string s = "#(";
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (i) s += ",";
        s += zs[i];
    }
    s += ")[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += xs[i] + ",";
    s += ";";
    for (std::size_t i = 0; i < ys.size(); ++i) s += ys[i] + ",";
    s += "].(" + psi.print();
    if (has_delta) s += " @ " + h.print() + "<=" + std::to_string(threshold);
    return s + ")";
}

std::string CountingLeaf::pretty(const Signature& sig) const {
    std::vector<std::string> names;
    names.insert(names.end(), xs.begin(), xs.end());
    names.insert(names.end(), ys.begin(), ys.end());
    names.insert(names.end(), zs.begin(), zs.end());
    std::vector<std::string> conj;
    std::vector<int> leaves;
    psi.skel.collect_leaves(leaves);
    for (int l : leaves) {
        const Constituent& c = psi.parts[std::size_t(l)];
        if (c.kind != Constituent::Kind::Lit) {
            conj.push_back(psi.print());
            break;
        }
        std::string s = c.lit.positive ? "" : "!";
        if (c.lit.is_eq) {
            s += names[std::size_t(c.lit.vars[0])] + " = " +
                 names[std::size_t(c.lit.vars[1])];
        } else {
            s += sig.symbol(c.lit.rel).name + "(";
            for (std::size_t i = 0; i < c.lit.vars.size(); ++i) {
                if (i) s += ", ";
                s += names[std::size_t(c.lit.vars[i])];
            }
            s += ")";
        }
        conj.push_back(std::move(s));
    }
    if (has_delta) {
        for (unsigned j = 0; j < h.size(); ++j)
            for (unsigned i = 0; i < j; ++i) {
                std::string d = h.edge(i, j) ? "dist<=" : "dist>";
                d += std::to_string(threshold) + "(" + names[i] + ", " + names[j] + ")";
                conj.push_back(std::move(d));
            }
    }
    std::string body = conj.empty() ? "true" : conj[0];
    for (std::size_t i = 1; i < conj.size(); ++i) body += " & " + conj[i];
    std::string s = "#(";
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (i) s += ", ";
        s += zs[i];
    }
    return s + ").(" + body + ")";
}

ExprPtr CountingLeaf::to_ast(const Signature& sig) const {
    ExprPtr body = psi.to_ast(sig);
    if (has_delta) {
        std::vector<std::string> vars;
        vars.insert(vars.end(), xs.begin(), xs.end());
        vars.insert(vars.end(), ys.begin(), ys.end());
        vars.insert(vars.end(), zs.begin(), zs.end());
        body = Expr::conjunction(body, delta_formula(sig, {h, threshold}, vars));
    }
    return Expr::count(zs, body);
}

std::size_t CountingLeaf::size_tokens() const {
    // counted per the term-size convention used across the candidate class:
    // the count former, its bound variables, and the body literal tokens
    std::size_t s = 1 + zs.size();
    std::vector<int> leaves;
    psi.skel.collect_leaves(leaves);
    for (int l : leaves) {
        const Constituent& c = psi.parts[std::size_t(l)];
        if (c.kind == Constituent::Kind::Lit)
            s += 1 + c.lit.vars.size() + (c.lit.positive ? 0 : 1);
        else
            s += 3;
    }
    if (has_delta) s += 2 * h.num_pairs();
    return s;
}

// ---------------------------------------------------------------- CTerm

CTerm CTerm::constant(i128 v) {
    CTerm t;
    t.kind = Kind::Const;
    t.value = v;
    return t;
}

CTerm CTerm::of_leaf(LeafPtr l) {
    CTerm t;
    t.kind = Kind::Leaf;
    t.leaf = std::move(l);
    return t;
}

CTerm CTerm::sum(std::vector<CTerm> xs) {
    if (xs.empty()) return constant(0);
    if (xs.size() == 1) return std::move(xs[0]);
    CTerm t;
    t.kind = Kind::Add;
    for (auto& x : xs) {
        if (x.kind == Kind::Add)
            for (auto& k : x.kids) t.kids.push_back(std::move(k));
        else
            t.kids.push_back(std::move(x));
    }
    return t;
}

CTerm CTerm::product(std::vector<CTerm> xs) {
    if (xs.empty()) return constant(1);
    if (xs.size() == 1) return std::move(xs[0]);
    CTerm t;
    t.kind = Kind::Mul;
    for (auto& x : xs) {
        if (x.kind == Kind::Mul)
            for (auto& k : x.kids) t.kids.push_back(std::move(k));
        else
            t.kids.push_back(std::move(x));
    }
    return t;
}

CTerm CTerm::scaled(i128 c, CTerm t) {
    if (c == 1) return t;
    return product({constant(c), std::move(t)});
}

std::string CTerm::print() const {
    switch (kind) {
        case Kind::Const:
            return i128_to_string(value);
        case Kind::Leaf:
            return leaf->print();
        case Kind::Add: {
            std::string s = "(";
            for (std::size_t i = 0; i < kids.size(); ++i) {
                if (i) s += " + ";
                s += kids[i].print();
            }
            return s + ")";
        }
        case Kind::Mul: {
            std::string s = "(";
            for (std::size_t i = 0; i < kids.size(); ++i) {
                if (i) s += " * ";
                s += kids[i].print();
            }
            return s + ")";
        }
    }
    return "?";
}

std::string CTerm::pretty(const Signature& sig) const {
    switch (kind) {
        case Kind::Const:
            return i128_to_string(value);
        case Kind::Leaf:
            return leaf->pretty(sig);
        case Kind::Add:
        case Kind::Mul: {
            const char* op = kind == Kind::Add ? " + " : " * ";
            std::string s = "(";
            for (std::size_t i = 0; i < kids.size(); ++i) {
                if (i) s += op;
                s += kids[i].pretty(sig);
            }
            return s + ")";
        }
    }
    return "?";
}

ExprPtr CTerm::to_ast(const Signature& sig) const {
    switch (kind) {
        case Kind::Const:
            return Expr::int_const(to_i64(value, "term constant"));
        case Kind::Leaf:
            return leaf->to_ast(sig);
        case Kind::Add: {
            ExprPtr e = kids[0].to_ast(sig);
            for (std::size_t i = 1; i < kids.size(); ++i)
                e = Expr::add(e, kids[i].to_ast(sig));
            return e;
        }
        case Kind::Mul: {
            ExprPtr e = kids[0].to_ast(sig);
            for (std::size_t i = 1; i < kids.size(); ++i)
                e = Expr::mul(e, kids[i].to_ast(sig));
            return e;
        }
    }
    throw InternalError("unhandled term kind");
}

std::size_t CTerm::size_tokens() const {
    switch (kind) {
        case Kind::Const:
            return 1;
        case Kind::Leaf:
            return leaf->size_tokens();
        case Kind::Add:
        case Kind::Mul: {
            std::size_t s = kids.size() - 1;
            for (const auto& k : kids) s += k.size_tokens();
            return s;
        }
    }
    return 0;
}

void CTerm::collect_leaves(std::vector<LeafPtr>& out) const {
    if (kind == Kind::Leaf) {
        out.push_back(leaf);
        return;
    }
    for (const auto& k : kids) k.collect_leaves(out);
}

i128 CTerm::eval(const LeafEval& leaf_eval) const {
    switch (kind) {
        case Kind::Const:
            return value;
        case Kind::Leaf:
            return leaf_eval(*leaf);
        case Kind::Add: {
            i128 acc = 0;
            for (const auto& k : kids) acc = checked_add(acc, k.eval(leaf_eval));
            return acc;
        }
        case Kind::Mul: {
            i128 acc = 1;
            for (const auto& k : kids) acc = checked_mul(acc, k.eval(leaf_eval));
            return acc;
        }
    }
    throw InternalError("unhandled term kind");
}

std::pair<std::vector<Elem>, std::vector<Elem>> leaf_args(
    const CountingLeaf& leaf, const std::map<std::string, Elem>& ctx) {
    std::vector<Elem> ax, by;
    for (const auto& v : leaf.xs) {
        auto it = ctx.find(v);
        if (it == ctx.end()) throw EvalError("unassigned leaf variable: " + v);
        ax.push_back(it->second);
    }
    for (const auto& v : leaf.ys) {
        auto it = ctx.find(v);
        if (it == ctx.end()) throw EvalError("unassigned leaf variable: " + v);
        by.push_back(it->second);
    }
    return {std::move(ax), std::move(by)};
}

i128 CTerm::eval_global(const Access& acc, const std::map<std::string, Elem>& ctx) const {
    return eval([&](const CountingLeaf& l) {
        auto [ax, by] = leaf_args(l, ctx);
        return l.count_global(acc, ax, by);
    });
}

}  // namespace focl
