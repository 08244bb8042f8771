#include <doctest.h>

#include "focl/parser.hpp"
#include "focl/synth.hpp"

using namespace focl;

TEST_CASE("parsing the citations counting term") {
    ExprPtr e = parse("#(z1,z2).(Author(x,z1) & Citation(z2,z1))");
    CHECK(e->kind == NodeKind::Count);
    CHECK(e->vars == std::vector<std::string>{"z1", "z2"});
    CHECK(e->free_vars() == std::vector<std::string>{"x"});
}

TEST_CASE("integers parse to constants") {
    ExprPtr e = parse("3");
    CHECK(e->kind == NodeKind::IntConst);
    CHECK(e->value == 3);
    CHECK(e->free_vars().empty());
    CHECK(parse("-7")->value == -7);
}

TEST_CASE("predicate arguments share at most one free variable") {
    CHECK_THROWS_AS(parse("Pleq(#(z).(E(x,z)), #(z).(E(y,z)))"), ParseError);
    CHECK_NOTHROW(parse("Pleq(#(z).(E(x,z)), #(w).(E(x,w)))"));
}

TEST_CASE("free variables and sizes follow the rules") {
    ExprPtr e = parse("exists x. (E(x, y))");
    CHECK(e->free_vars() == std::vector<std::string>{"y"});

    CHECK(parse("1000000")->size() == 1);  // integers have length 1

    Signature sig;
    sig.add("R", 0);
    ExprPtr c = Expr::count({}, Expr::atom("R", {}));
    CHECK(c->free_vars().empty());
    CHECK(c->size() == 2);  // the count former plus the 0-ary atom
}

TEST_CASE("size is positive and strictly grows with embedding") {
    Rng rng(3);
    Signature sig;
    sig.add("E", 2);
    sig.add("B", 1);
    for (int i = 0; i < 200; ++i) {
        ExprPtr e = random_expression(rng, sig, 8, i % 2 == 0);
        CHECK(e->size() >= 1);
        for (const auto& child : e->children) CHECK(child->size() < e->size());
    }
}

TEST_CASE("counting terms reject repeated bound variables") {
    CHECK_THROWS_AS(parse("#(z,z).(E(z,z))"), ParseError);
    CHECK_NOTHROW(parse("#().(true)"));
}

TEST_CASE("builtin registry") {
    const auto& reg = builtin_registry();
    std::vector<i128> two{4, 4};
    CHECK(reg.entry("Peq").decide(two));
    std::vector<i128> le{3, 2};
    CHECK_FALSE(reg.entry("Pleq").decide(le));
    std::vector<i128> seven{7};
    CHECK(reg.entry("Pprime").decide(seven));
    std::vector<i128> div{3, 9};
    CHECK(reg.entry("Pdivides").decide(div));

    NumericalPredicateRegistry mine;
    mine.register_pred("Podd", 1, [](std::span<const i128> a) { return a[0] % 2 != 0; });
    CHECK_THROWS_AS(
        mine.register_pred("Podd", 1, [](std::span<const i128>) { return true; }), Error);
}

TEST_CASE("printer is a fixpoint of parse-print") {
    for (const char* text : {
             "#(z1, z2).(Author(x, z1) & Citation(z2, z1))",
             "(1 + (2 * #(z).(E(x, z))))",
             "exists y. ((E(x, y) | !(B(y))))",
             "Pleq(#(z).(E(x, z)), 4)",
             "forall v. (B(v))",
             "(#(z).(B(z)) - 2)",
             "true",
             "x = y",
         }) {
        ExprPtr once = parse(text);
        std::string p1 = print(*once);
        std::string p2 = print(*parse(p1));
        CHECK(p1 == p2);
    }
    Rng rng(11);
    Signature sig;
    sig.add("E", 2);
    sig.add("B", 1);
    for (int i = 0; i < 300; ++i) {
        ExprPtr e = random_expression(rng, sig, 8, i % 2 == 0);
        std::string p1 = print(*e);
        std::string p2 = print(*parse(p1));
        CHECK(p1 == p2);
    }
}

TEST_CASE("desugaring") {
    // conjunction, universal quantification and subtraction are shorthands
    CHECK(print(*parse("A(x) & B(x)")) == print(*Expr::conjunction(
                                              Expr::atom("A", {"x"}),
                                              Expr::atom("B", {"x"}))));
    CHECK(print(*parse("1 - 2")) ==
          print(*Expr::add(Expr::int_const(1),
                           Expr::mul(Expr::int_const(-1), Expr::int_const(2)))));
    CHECK(parse("forall x. (B(x))")->kind == NodeKind::Not);
}

TEST_CASE("dist sugar requires a signature") {
    Signature sig;
    sig.add("E", 2);
    CHECK_THROWS_AS(parse("dist<=2(x, y)"), ParseError);
    ExprPtr d = parse("dist<=2(x, y)", builtin_registry(), &sig);
    CHECK(d->is_formula());
    auto fv = d->free_vars();
    CHECK(std::find(fv.begin(), fv.end(), "x") != fv.end());
    CHECK(std::find(fv.begin(), fv.end(), "y") != fv.end());
    CHECK(parse("dist>1(x, y)", builtin_registry(), &sig)->kind == NodeKind::Not);
}

TEST_CASE("parse errors carry offsets") {
    try {
        parse("#(z).(E(x,z) &");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() > 0);
    }
    CHECK_THROWS_AS(parse("E(x,y) extra"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
}
