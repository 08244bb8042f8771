#include "focl/localform.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "focl/eval.hpp"
#include "focl/locality.hpp"

namespace focl {

// ---------------------------------------------------------------- Access

Dist Access::bounded_distance(Elem a, Elem b, Dist cap) const {
    if (a == b) return 0;
    if (cap == 0) return kInfDist;
    std::vector<Dist> dist(s->universe_size(), kInfDist);
    std::deque<Elem> q;
    dist[a] = 0;
    q.push_back(a);
    while (!q.empty()) {
        Elem v = q.front();
        q.pop_front();
        if (dist[v] >= cap) continue;
        for (Elem w : neighbors(v)) {
            if (dist[w] != kInfDist) continue;
            dist[w] = dist[v] + 1;
            if (w == b) return dist[w];
            q.push_back(w);
        }
    }
    return kInfDist;
}

std::vector<Elem> Access::bounded_ball(std::span<const Elem> tuple, Dist r) const {
    std::vector<Dist> dist(s->universe_size(), kInfDist);
    std::vector<Elem> out;
    std::deque<Elem> q;
    for (Elem e : tuple) {
        if (e >= s->universe_size()) throw Error("unknown element handle");
        if (dist[e] != kInfDist) continue;
        dist[e] = 0;
        out.push_back(e);
        q.push_back(e);
    }
    while (!q.empty()) {
        Elem v = q.front();
        q.pop_front();
        if (dist[v] >= r) continue;
        for (Elem w : neighbors(v)) {
            if (dist[w] != kInfDist) continue;
            dist[w] = dist[v] + 1;
            out.push_back(w);
            q.push_back(w);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- Skeleton

Skeleton Skeleton::negate(Skeleton a) {
    if (a.is_true()) return falsity();
    if (a.is_false()) return truth();
    if (a.op == Op::Not) return std::move(a.kids[0]);
    Skeleton s;
    s.op = Op::Not;
    s.kids.push_back(std::move(a));
    return s;
}

Skeleton Skeleton::conj(Skeleton a, Skeleton b) {
    return conj_all({std::move(a), std::move(b)});
}

Skeleton Skeleton::disj(Skeleton a, Skeleton b) {
    return disj_all({std::move(a), std::move(b)});
}

Skeleton Skeleton::conj_all(std::vector<Skeleton> xs) {
    Skeleton s;
    s.op = Op::And;
    for (auto& x : xs) {
        if (x.is_false()) return falsity();
        if (x.is_true()) continue;
        if (x.op == Op::And)
            for (auto& k : x.kids) s.kids.push_back(std::move(k));
        else
            s.kids.push_back(std::move(x));
    }
    if (s.kids.empty()) return truth();
    if (s.kids.size() == 1) return std::move(s.kids[0]);
    return s;
}

Skeleton Skeleton::disj_all(std::vector<Skeleton> xs) {
    Skeleton s;
    s.op = Op::Or;
    for (auto& x : xs) {
        if (x.is_true()) return truth();
        if (x.is_false()) continue;
        if (x.op == Op::Or)
            for (auto& k : x.kids) s.kids.push_back(std::move(k));
        else
            s.kids.push_back(std::move(x));
    }
    if (s.kids.empty()) return falsity();
    if (s.kids.size() == 1) return std::move(s.kids[0]);
    return s;
}

void Skeleton::collect_leaves(std::vector<int>& out) const {
    if (op == Op::Leaf) {
        out.push_back(leaf);
        return;
    }
    for (const auto& k : kids) k.collect_leaves(out);
}

Skeleton Skeleton::substitute(const std::vector<int>& truth_val) const {
    switch (op) {
        case Op::True:
        case Op::False:
            return *this;
        case Op::Leaf: {
            int t = leaf < int(truth_val.size()) ? truth_val[std::size_t(leaf)] : -1;
            if (t == 0) return falsity();
            if (t == 1) return truth();
            return *this;
        }
        case Op::Not:
            return negate(kids[0].substitute(truth_val));
        case Op::And: {
            std::vector<Skeleton> xs;
            for (const auto& k : kids) xs.push_back(k.substitute(truth_val));
            return conj_all(std::move(xs));
        }
        case Op::Or: {
            std::vector<Skeleton> xs;
            for (const auto& k : kids) xs.push_back(k.substitute(truth_val));
            return disj_all(std::move(xs));
        }
    }
    return falsity();
}

Skeleton Skeleton::remap_leaves(const std::vector<int>& new_idx) const {
    switch (op) {
        case Op::True:
        case Op::False:
            return *this;
        case Op::Leaf:
            return leaf_of(new_idx.at(std::size_t(leaf)));
        case Op::Not:
            return negate(kids[0].remap_leaves(new_idx));
        case Op::And: {
            std::vector<Skeleton> xs;
            for (const auto& k : kids) xs.push_back(k.remap_leaves(new_idx));
            return conj_all(std::move(xs));
        }
        case Op::Or: {
            std::vector<Skeleton> xs;
            for (const auto& k : kids) xs.push_back(k.remap_leaves(new_idx));
            return disj_all(std::move(xs));
        }
    }
    return falsity();
}

// ---------------------------------------------------------------- Constituent

Dist Constituent::radius() const {
    switch (kind) {
        case Kind::Lit:
            return lit.is_eq ? 0 : 1;
        case Kind::Dist:
            return bound;
        case Kind::NearCount:
            return bound;
        case Kind::Global:
            return 0;
        case Kind::ExistsNear: {
            Dist extra = 0;
            std::vector<int> leaves;
            inner->skel.collect_leaves(leaves);
            for (int l : leaves) {
                const Constituent& c = inner->parts[std::size_t(l)];
                if (c.kind != Kind::Lit) extra = std::max(extra, c.radius());
            }
            return bound + extra;
        }
        case Kind::Opaque:
            return declared_radius;
    }
    return 0;
}

std::vector<int> Constituent::free_vars() const {
    std::set<int> vs;
    switch (kind) {
        case Kind::Lit:
            vs.insert(lit.vars.begin(), lit.vars.end());
            break;
        case Kind::Dist:
            vs.insert(a);
            vs.insert(b);
            break;
        case Kind::NearCount:
            vs.insert(anchors.begin(), anchors.end());
            break;
        case Kind::Global:
            break;
        case Kind::ExistsNear: {
            vs.insert(anchors.begin(), anchors.end());
            for (int v : inner->free_vars()) vs.insert(v);
            vs.erase(quant_var);
            break;
        }
        case Kind::Opaque:
            vs.insert(anchors.begin(), anchors.end());
            break;
    }
    return {vs.begin(), vs.end()};
}

// ---------------------------------------------------------------- LocalFormula

Dist LocalFormula::radius() const {
    Dist r = 0;
    std::vector<int> leaves;
    skel.collect_leaves(leaves);
    for (int l : leaves) r = std::max(r, parts[std::size_t(l)].radius());
    return r;
}

std::vector<int> LocalFormula::free_vars() const {
    std::set<int> vs;
    std::vector<int> leaves;
    skel.collect_leaves(leaves);
    for (int l : leaves)
        for (int v : parts[std::size_t(l)].free_vars()) vs.insert(v);
    return {vs.begin(), vs.end()};
}

bool LocalFormula::uses_var(int v) const {
    auto fv = free_vars();
    return std::binary_search(fv.begin(), fv.end(), v);
}

int LocalFormula::add_var(const std::string& name) {
    for (std::size_t i = 0; i < var_names.size(); ++i)
        if (var_names[i] == name) return int(i);
    var_names.push_back(name);
    return int(var_names.size()) - 1;
}

int LocalFormula::add_part(Constituent c) {
    parts.push_back(std::move(c));
    return int(parts.size()) - 1;
}

LocalFormula LocalFormula::lit_conj(std::vector<std::string> vars, std::vector<Lit> lits) {
    // canonical conjunct order, cheapest checks first: equalities, then atoms
    // by arity; doubles as the sorted normal form used for table keys
    std::sort(lits.begin(), lits.end(), [](const Lit& a, const Lit& b) {
        auto key = [](const Lit& l) {
            return std::make_tuple(l.is_eq ? 0 : int(l.vars.size()) + 1, l.rel, l.vars,
                                   !l.positive);
        };
        return key(a) < key(b);
    });
    LocalFormula f;
    f.var_names = std::move(vars);
    std::vector<Skeleton> leaves;
    for (auto& l : lits) {
        Constituent c;
        c.kind = Constituent::Kind::Lit;
        c.lit = std::move(l);
        leaves.push_back(Skeleton::leaf_of(f.add_part(std::move(c))));
    }
    f.skel = Skeleton::conj_all(std::move(leaves));
    return f;
}

namespace {

Elem need(std::span<const Elem> assignment, int var) {
    FOCL_CHECK(var >= 0 && var < int(assignment.size()), "variable index out of range");
    Elem e = assignment[std::size_t(var)];
    if (e == kNoElem) throw EvalError("unassigned variable in structured evaluation");
    return e;
}

// Induced neighborhood of the anchor elements via membership probes only.
Structure materialize(const Access& acc, std::span<const Elem> anchors, Dist r) {
    std::vector<Elem> b = acc.bounded_ball(anchors, r);
    StructureBuilder builder(acc.s->signature());
    for (Elem e : b) builder.add_element(acc.s->name_of(e));
    const Signature& sig = acc.s->signature();
    for (int rel = 0; rel < int(sig.size()); ++rel) {
        unsigned ar = sig.symbol(rel).arity;
        if (ar == 0) {
            if (acc.membership(rel, Tuple{})) builder.add_tuple(rel, Tuple{});
            continue;
        }
        if (b.empty()) continue;
        Tuple probe(ar), local(ar);
        std::vector<std::size_t> idx(ar, 0);
        while (true) {
            for (unsigned p = 0; p < ar; ++p) {
                probe[p] = b[idx[p]];
                local[p] = Elem(idx[p]);
            }
            if (acc.membership(rel, probe)) builder.add_tuple(rel, local);
            unsigned p = 0;
            for (; p < ar; ++p) {
                if (++idx[p] < b.size()) break;
                idx[p] = 0;
            }
            if (p == ar) break;
        }
    }
    return builder.finish();
}

}  // namespace

bool LocalFormula::eval(const Access& acc, std::span<const Elem> assignment) const {
    auto eval_part = [&](int idx) -> bool {
        const Constituent& c = parts[std::size_t(idx)];
        switch (c.kind) {
            case Constituent::Kind::Lit: {
                bool v;
                if (c.lit.is_eq) {
                    v = need(assignment, c.lit.vars[0]) == need(assignment, c.lit.vars[1]);
                } else {
                    Tuple t;
                    t.reserve(c.lit.vars.size());
                    for (int var : c.lit.vars) t.push_back(need(assignment, var));
                    v = acc.membership(c.lit.rel, t);
                }
                return c.lit.positive ? v : !v;
            }
            case Constituent::Kind::Dist:
                return acc.bounded_distance(need(assignment, c.a), need(assignment, c.b),
                                            c.bound) <= c.bound;
            case Constituent::Kind::NearCount: {
                std::vector<Elem> anchor_elems;
                for (int var : c.anchors) anchor_elems.push_back(need(assignment, var));
                std::vector<Elem> b = acc.bounded_ball(anchor_elems, c.bound);
                i64 found = 0;
                for (Elem e : b) {
                    for (int sym : c.type_syms) {
                        if (acc.membership(sym, Tuple{e})) {
                            ++found;
                            break;
                        }
                    }
                    if (found >= c.count) return true;
                }
                return found >= c.count;
            }
            case Constituent::Kind::Global:
                return acc.membership(c.sym0, Tuple{});
            case Constituent::Kind::ExistsNear: {
                std::vector<Elem> anchor_elems;
                for (int var : c.anchors) anchor_elems.push_back(need(assignment, var));
                std::vector<Elem> b = acc.bounded_ball(anchor_elems, c.bound);
                std::vector<Elem> ext(assignment.begin(), assignment.end());
                if (c.quant_var >= int(ext.size())) ext.resize(std::size_t(c.quant_var) + 1, kNoElem);
                for (Elem z : b) {
                    ext[std::size_t(c.quant_var)] = z;
                    if (c.inner->eval(acc, ext)) return true;
                }
                return false;
            }
            case Constituent::Kind::Opaque: {
                std::vector<Elem> anchor_elems;
                for (int var : c.anchors) anchor_elems.push_back(need(assignment, var));
                std::sort(anchor_elems.begin(), anchor_elems.end());
                anchor_elems.erase(std::unique(anchor_elems.begin(), anchor_elems.end()),
                                   anchor_elems.end());
                Structure sub = materialize(acc, anchor_elems, c.declared_radius);
                Interpretation it;
                it.s = &sub;
                for (int var : c.anchors) {
                    auto h = sub.handle_of(acc.s->name_of(assignment[std::size_t(var)]));
                    FOCL_CHECK(h.has_value(), "anchor element missing from neighborhood");
                    it.assignment[var_names[std::size_t(var)]] = *h;
                }
                return eval_formula(*c.expr, it);
            }
        }
        return false;
    };
    return skel.eval(eval_part);
}

// ---------------------------------------------------------------- to_ast

namespace {

std::string fresh_var(const std::vector<std::string>& taken, const std::string& base,
                      int i) {
    std::string v = base + std::to_string(i);
    while (std::find(taken.begin(), taken.end(), v) != taken.end()) v += "q";
    return v;
}

ExprPtr dist_to_tuple(const Signature& sig, Dist r, const std::string& z,
                      const std::vector<std::string>& anchors) {
    std::vector<ExprPtr> ds;
    for (const auto& a : anchors) ds.push_back(dist_formula(sig, r, z, a));
    FOCL_CHECK(!ds.empty(), "empty anchor set");
    ExprPtr f = ds[0];
    for (std::size_t i = 1; i < ds.size(); ++i) f = Expr::disjunction(f, ds[i]);
    return f;
}

}  // namespace

ExprPtr LocalFormula::to_ast(const Signature& sig) const {
    auto part_ast = [&](int idx) -> ExprPtr {
        const Constituent& c = parts[std::size_t(idx)];
        switch (c.kind) {
            case Constituent::Kind::Lit: {
                ExprPtr e;
                if (c.lit.is_eq)
                    e = Expr::equality(var_names[std::size_t(c.lit.vars[0])],
                                       var_names[std::size_t(c.lit.vars[1])]);
                else {
                    std::vector<std::string> vs;
                    for (int v : c.lit.vars) vs.push_back(var_names[std::size_t(v)]);
                    e = Expr::atom(sig.symbol(c.lit.rel).name, std::move(vs));
                }
                return c.lit.positive ? e : Expr::negation(e);
            }
            case Constituent::Kind::Dist:
                return dist_formula(sig, c.bound, var_names[std::size_t(c.a)],
                                    var_names[std::size_t(c.b)]);
            case Constituent::Kind::NearCount: {
                // exists v1..vj: pairwise distinct, each near the anchors and
                // of one of the listed types
                std::vector<std::string> anchors;
                for (int v : c.anchors) anchors.push_back(var_names[std::size_t(v)]);
                std::vector<std::string> ws;
                for (i64 i = 0; i < c.count; ++i)
                    ws.push_back(fresh_var(var_names, "w", int(i) + 1));
                std::vector<ExprPtr> conjuncts;
                for (i64 i = 0; i < c.count; ++i) {
                    conjuncts.push_back(dist_to_tuple(sig, c.bound, ws[std::size_t(i)], anchors));
                    std::vector<ExprPtr> types;
                    for (int sym : c.type_syms)
                        types.push_back(Expr::atom(sig.symbol(sym).name, {ws[std::size_t(i)]}));
                    FOCL_CHECK(!types.empty(), "empty type set in near-count");
                    ExprPtr td = types[0];
                    for (std::size_t t = 1; t < types.size(); ++t)
                        td = Expr::disjunction(td, types[t]);
                    conjuncts.push_back(td);
                    for (i64 j = 0; j < i; ++j)
                        conjuncts.push_back(Expr::negation(
                            Expr::equality(ws[std::size_t(j)], ws[std::size_t(i)])));
                }
                ExprPtr body = Expr::conjunction(conjuncts);
                for (auto it = ws.rbegin(); it != ws.rend(); ++it)
                    body = Expr::exists(*it, body);
                return body;
            }
            case Constituent::Kind::Global:
                return Expr::atom(sig.symbol(c.sym0).name, {});
            case Constituent::Kind::ExistsNear: {
                std::vector<std::string> anchors;
                for (int v : c.anchors) anchors.push_back(var_names[std::size_t(v)]);
                const std::string& z = var_names[std::size_t(c.quant_var)];
                ExprPtr body = Expr::conjunction(dist_to_tuple(sig, c.bound, z, anchors),
                                                 c.inner->to_ast(sig));
                return Expr::exists(z, body);
            }
            case Constituent::Kind::Opaque:
                return c.expr;
        }
        throw InternalError("unhandled constituent kind");
    };

    std::function<ExprPtr(const Skeleton&)> rec = [&](const Skeleton& sk) -> ExprPtr {
        switch (sk.op) {
            case Skeleton::Op::True:
                return Expr::truth();
            case Skeleton::Op::False:
                return Expr::falsity();
            case Skeleton::Op::Leaf:
                return part_ast(sk.leaf);
            case Skeleton::Op::Not:
                return Expr::negation(rec(sk.kids[0]));
            case Skeleton::Op::And: {
                std::vector<ExprPtr> xs;
                for (const auto& k : sk.kids) xs.push_back(rec(k));
                return Expr::conjunction(xs);
            }
            case Skeleton::Op::Or: {
                ExprPtr e = rec(sk.kids[0]);
                for (std::size_t i = 1; i < sk.kids.size(); ++i)
                    e = Expr::disjunction(e, rec(sk.kids[i]));
                return e;
            }
        }
        throw InternalError("unhandled skeleton op");
    };
    return rec(skel);
}

// ---------------------------------------------------------------- print

std::string LocalFormula::print() const {
    auto var = [&](int v) { return var_names.at(std::size_t(v)); };
    auto part_str = [&](int idx) -> std::string {
        const Constituent& c = parts[std::size_t(idx)];
        switch (c.kind) {
            case Constituent::Kind::Lit: {
                std::string s = c.lit.positive ? "" : "!";
                if (c.lit.is_eq) return s + var(c.lit.vars[0]) + "=" + var(c.lit.vars[1]);
                s += "R" + std::to_string(c.lit.rel) + "(";
                for (std::size_t i = 0; i < c.lit.vars.size(); ++i) {
                    if (i) s += ",";
                    s += var(c.lit.vars[i]);
                }
                return s + ")";
            }
            case Constituent::Kind::Dist:
                return "d<=" + std::to_string(c.bound) + "(" + var(c.a) + "," + var(c.b) + ")";
            case Constituent::Kind::NearCount: {
                std::string s = "nc>=" + std::to_string(c.count) + "[" +
                                std::to_string(c.bound) + "](";
                for (std::size_t i = 0; i < c.anchors.size(); ++i) {
                    if (i) s += ",";
                    s += var(c.anchors[i]);
                }
                s += ";";
                for (std::size_t i = 0; i < c.type_syms.size(); ++i) {
                    if (i) s += "|";
                    s += "R" + std::to_string(c.type_syms[i]);
                }
                return s + ")";
            }
            case Constituent::Kind::Global:
                return "R" + std::to_string(c.sym0) + "()";
            case Constituent::Kind::ExistsNear:
                return "en " + var(c.quant_var) + "<=" + std::to_string(c.bound) + ".(" +
                       c.inner->print() + ")";
            case Constituent::Kind::Opaque:
                return "op[" + std::to_string(c.declared_radius) + "]{" +
                       focl::print(*c.expr) + "}";
        }
        return "?";
    };
    std::function<std::string(const Skeleton&)> rec = [&](const Skeleton& sk) -> std::string {
        switch (sk.op) {
            case Skeleton::Op::True:
                return "T";
            case Skeleton::Op::False:
                return "F";
            case Skeleton::Op::Leaf:
                return part_str(sk.leaf);
            case Skeleton::Op::Not:
                return "!(" + rec(sk.kids[0]) + ")";
            case Skeleton::Op::And: {
                std::string s = "(";
                for (std::size_t i = 0; i < sk.kids.size(); ++i) {
                    if (i) s += " & ";
                    s += rec(sk.kids[i]);
                }
                return s + ")";
            }
            case Skeleton::Op::Or: {
                std::string s = "(";
                for (std::size_t i = 0; i < sk.kids.size(); ++i) {
                    if (i) s += " | ";
                    s += rec(sk.kids[i]);
                }
                return s + ")";
            }
        }
        return "?";
    };
    return rec(skel);
}

void LocalFormula::shift_symbols(int base, int offset) {
    for (auto& c : parts) {
        switch (c.kind) {
            case Constituent::Kind::Lit:
                if (!c.lit.is_eq && c.lit.rel >= base) c.lit.rel += offset;
                break;
            case Constituent::Kind::NearCount:
                for (int& sym : c.type_syms)
                    if (sym >= base) sym += offset;
                break;
            case Constituent::Kind::Global:
                if (c.sym0 >= base) c.sym0 += offset;
                break;
            case Constituent::Kind::ExistsNear: {
                auto copy = std::make_shared<LocalFormula>(*c.inner);
                copy->shift_symbols(base, offset);
                c.inner = copy;
                break;
            }
            default:
                break;
        }
    }
}

LocalFormula LocalFormula::negated() const {
    LocalFormula f = *this;
    f.skel = Skeleton::negate(f.skel);
    return f;
}

LocalFormula LocalFormula::conj2(const LocalFormula& a, const LocalFormula& b) {
    FOCL_CHECK(a.var_names == b.var_names, "conj2 requires a shared variable table");
    LocalFormula f = a;
    std::vector<int> remap;
    for (const auto& part : b.parts) {
        remap.push_back(int(f.parts.size()));
        f.parts.push_back(part);
    }
    f.skel = Skeleton::conj(f.skel, b.skel.remap_leaves(remap));
    return f;
}

// ---------------------------------------------------------------- separate

bool constituent_side_pure(const Constituent& c, const std::vector<int>& side_of,
                           int* side_out) {
    int side = -1;
    for (int v : c.free_vars()) {
        int s = side_of.at(std::size_t(v));
        FOCL_CHECK(s == 0 || s == 1, "separate: variable without a side");
        if (side == -1)
            side = s;
        else if (side != s)
            return false;
    }
    if (side_out) *side_out = side;  // -1 when the constituent has no variables
    return true;
}

namespace {

struct Separator {
    const std::vector<int>& side_of;
    Dist sep;
    LocalFormula& out;

    // Rewrites one constituent into a skeleton over side-pure constituents
    // appended to `out`.
    Skeleton rewrite(const Constituent& c) {
        if (constituent_side_pure(c, side_of, nullptr))
            return Skeleton::leaf_of(out.add_part(c));
        switch (c.kind) {
            case Constituent::Kind::Lit: {
                // a cross-side atom needs co-occurrence in a tuple (distance
                // <= 1) and a cross-side equality needs distance 0
                FOCL_CHECK(sep >= 1, "separation too small for literals");
                return c.lit.positive ? Skeleton::falsity() : Skeleton::truth();
            }
            case Constituent::Kind::Dist: {
                FOCL_CHECK(sep >= c.bound, "separation too small for dist constituent");
                return Skeleton::falsity();
            }
            case Constituent::Kind::NearCount: {
                FOCL_CHECK(sep > 2 * c.bound, "separation too small for near-count split");
                std::vector<int> a0, a1;
                for (int v : c.anchors)
                    (side_of[std::size_t(v)] == 0 ? a0 : a1).push_back(v);
                auto mk = [&](const std::vector<int>& anchors, i64 j) -> Skeleton {
                    if (j <= 0) return Skeleton::truth();
                    Constituent nc = c;
                    nc.anchors = anchors;
                    nc.count = j;
                    return Skeleton::leaf_of(out.add_part(std::move(nc)));
                };
                std::vector<Skeleton> cases;
                for (i64 j0 = 0; j0 <= c.count; ++j0)
                    cases.push_back(Skeleton::conj(mk(a0, j0), mk(a1, c.count - j0)));
                return Skeleton::disj_all(std::move(cases));
            }
            case Constituent::Kind::ExistsNear: {
                // the witness sits near exactly one side's anchors; within
                // that branch the quantified variable joins that side
                std::vector<int> a0, a1;
                for (int v : c.anchors)
                    (side_of[std::size_t(v)] == 0 ? a0 : a1).push_back(v);
                FOCL_CHECK(sep > c.bound, "separation too small for exists-near split");
                std::vector<Skeleton> branches;
                for (int side = 0; side < 2; ++side) {
                    const auto& anchors = side == 0 ? a0 : a1;
                    if (anchors.empty()) continue;
                    std::vector<int> sides2 = side_of;
                    if (c.quant_var >= int(sides2.size()))
                        sides2.resize(std::size_t(c.quant_var) + 1, -1);
                    sides2[std::size_t(c.quant_var)] = side;
                    LocalFormula inner2 =
                        separate(*c.inner, sides2, Dist(sep - c.bound));
                    // fold constants: a dead inner would otherwise keep
                    // referencing variables of the other side
                    if (inner2.skel.is_false()) continue;
                    if (inner2.skel.is_true()) {
                        // some witness is always within reach of an anchor
                        branches.push_back(Skeleton::truth());
                        continue;
                    }
                    Constituent en = c;
                    en.anchors = anchors;
                    en.inner = std::make_shared<const LocalFormula>(std::move(inner2));
                    branches.push_back(Skeleton::leaf_of(out.add_part(std::move(en))));
                }
                return Skeleton::disj_all(std::move(branches));
            }
            case Constituent::Kind::Global:
                throw InternalError("global fact cannot mix sides");
            case Constituent::Kind::Opaque:
                throw LocalityError(
                    "formula outside the component-separable fragment: opaque local "
                    "subformula spans both sides");
        }
        throw InternalError("unhandled constituent kind in separate");
    }
};

}  // namespace

LocalFormula separate(const LocalFormula& f, const std::vector<int>& side_of, Dist sep) {
    LocalFormula out;
    out.var_names = f.var_names;
    Separator sp{side_of, sep, out};
    std::vector<int> leaves;
    f.skel.collect_leaves(leaves);
    std::sort(leaves.begin(), leaves.end());
    leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
    // rewrite each reachable constituent once, then substitute skeleton leaves
    std::vector<Skeleton> rewritten(f.parts.size(), Skeleton::falsity());
    std::vector<bool> have(f.parts.size(), false);
    for (int l : leaves) {
        rewritten[std::size_t(l)] = sp.rewrite(f.parts[std::size_t(l)]);
        have[std::size_t(l)] = true;
    }
    std::function<Skeleton(const Skeleton&)> rec = [&](const Skeleton& sk) -> Skeleton {
        switch (sk.op) {
            case Skeleton::Op::True:
            case Skeleton::Op::False:
                return sk;
            case Skeleton::Op::Leaf:
                FOCL_CHECK(have[std::size_t(sk.leaf)], "unrewritten leaf");
                return rewritten[std::size_t(sk.leaf)];
            case Skeleton::Op::Not:
                return Skeleton::negate(rec(sk.kids[0]));
            case Skeleton::Op::And: {
                std::vector<Skeleton> xs;
                for (const auto& k : sk.kids) xs.push_back(rec(k));
                return Skeleton::conj_all(std::move(xs));
            }
            case Skeleton::Op::Or: {
                std::vector<Skeleton> xs;
                for (const auto& k : sk.kids) xs.push_back(rec(k));
                return Skeleton::disj_all(std::move(xs));
            }
        }
        return Skeleton::falsity();
    };
    out.skel = rec(f.skel);
    return out;
}

}  // namespace focl
