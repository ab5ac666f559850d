import pytest
from hypothesis import given, settings, strategies as st

from wstarlab import dsl
from wstarlab.algebra import commutative_space, diagonal_space, random_faithful_space, tracial_space
from wstarlab.dsl import Node, binder, check, const, one, op, parse, to_text, var
from wstarlab.errors import ParseError, SortError, UnboundVariable
from wstarlab.logic import chi_factor_estimate
from wstarlab.search import OptConfig, evaluate

numbers = st.one_of(
    st.integers(-50, 50).map(float),
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
    st.floats(1e-9, 1e-3),
)
NAMES = ("x", "y", "p", "q1", "z_2")


def terms(scope, depth):
    leaves = [st.just(one())] + ([st.sampled_from([var(n) for n in scope])] if scope else [])
    leaf = st.one_of(*leaves)
    if depth <= 0:
        return leaf
    sub = st.deferred(lambda: terms(scope, depth - 1))
    return st.one_of(
        leaf,
        st.builds(lambda c, t: op("tscale", t, value=c), numbers, sub),
        st.builds(lambda k, a, b: op(k, a, b), st.sampled_from(["tadd", "tsub", "tmul", "comm"]), sub, sub),
        st.builds(lambda a: op("adj", a), sub),
        st.builds(lambda c, t: op("sigma", t, value=c), numbers, sub),
    )


def reals(scope, depth):
    t = terms(scope, max(depth - 1, 0))
    leaf = st.one_of(st.builds(const, numbers),
                     st.builds(lambda k, a: op(k, a), st.sampled_from(["sharp", "re_state", "im_state"]), t))
    if depth <= 0:
        return leaf
    sub = st.deferred(lambda: reals(scope, depth - 1))
    fresh = [n for n in NAMES if n not in scope]
    options = [
        leaf,
        st.builds(lambda k, a: op(k, a), st.sampled_from(["abs", "sqrt"]), sub),
        st.builds(lambda k, a, b: op(k, a, b), st.sampled_from(["add", "sub", "mul"]), sub, sub),
        st.builds(lambda k, xs: op(k, *xs), st.sampled_from(["max", "min"]), st.lists(sub, min_size=2, max_size=3)),
        st.builds(lambda c, a: op("scale", a, value=c), numbers, sub),
    ]
    if fresh:
        options.append(st.sampled_from(fresh).flatmap(
            lambda n: st.builds(lambda k, d, body: binder(k, n, d, body), st.sampled_from(["sup", "inf"]),
                                st.sampled_from(["S1", "Proj"]), reals(scope + (n,), depth - 1))))
    return st.one_of(*options)


formulas = reals((), 6)


class TestParse:
    def test_sharp_one(self):
        ast = parse("sharp(one)")
        assert ast == op("sharp", one())
        assert evaluate(ast, tracial_space(2)).value == pytest.approx(1)

    def test_phi_t_sentence(self):
        ast = parse("sup x:S1. sharp(sigma[1.5](x) - x)")
        assert ast == dsl.library("phi_t", 1.5)
        assert ast.kind == "sup" and ast.domain == "S1"
        assert ast.children[0].children[0].children[0].value == 1.5

    def test_precedence(self):
        ast = parse("sharp(x + y * x)")
        assert ast.children[0].kind == "tadd" and ast.children[0].children[1].kind == "tmul"
        ast = parse("1 - 2 - 3")
        assert ast.kind == "sub" and ast.children[0].kind == "sub"

    def test_unbalanced_parenthesis(self):
        text = "sup x:S1. max(0, sqrt(sharp(x) * sharp(x))"
        with pytest.raises(ParseError) as info:
            parse(text)
        assert info.value.offset == len(text)
        assert info.value.found == "end of input"

    @pytest.mark.parametrize("text,offset", [
        ("sharp(x) +", 10),
        ("sup x:Foo. 1", 6),
        ("sharp(one) )", 11),
        ("sharp(one $)", 10),
        ("max(1)", 5),
        ("sigma[1](one)", 0),
    ])
    def test_error_offsets(self, text, offset):
        with pytest.raises(ParseError) as info:
            parse(text)
        assert info.value.offset == offset
        assert 0 <= info.value.offset <= len(text.encode()) + 1

    def test_sort_error_in_parse(self):
        with pytest.raises(ParseError):
            parse("sharp(sharp(one))")

    def test_unknown_builtin(self):
        with pytest.raises(ParseError):
            parse("@nope")

    def test_builtins(self):
        assert parse("@chi_factor") == dsl.library("chi_factor")
        assert parse("@phi_t(2.5)") == dsl.library("phi_t", 2.5)
        assert parse("@theta") == dsl.library("theta")

    def test_whitespace_normalized(self):
        a = parse("sup   x :S1 .\n\tsharp( comm(x,one) )")
        assert to_text(a) == "sup x:S1. sharp(comm(x, one))"


class TestRoundTrip:
    @pytest.mark.parametrize("ast", [dsl.library("chi_factor"), dsl.library("phi_t", 0.7),
                                     dsl.library("phi_t", -1e-5), dsl.library("theta")])
    def test_library(self, ast):
        assert parse(to_text(ast)) == ast

    @settings(max_examples=1000)
    @given(formulas)
    def test_random_asts(self, ast):
        check(ast)
        text = to_text(ast)
        again = parse(text)
        assert again == ast
        assert to_text(again) == text


def mutations(node, path=()):
    """Every position paired with a node of the opposite sort."""
    for i, c in enumerate(node.children):
        wrong = const(1.0) if c.sort == dsl.TERM else one()
        yield path + (i,), wrong
        yield from mutations(c, path + (i,))


def replace(node, path, new):
    if not path:
        return new
    kids = list(node.children)
    kids[path[0]] = replace(kids[path[0]], path[1:], new)
    return Node(node.kind, tuple(kids), node.value, node.name, node.domain)


class TestCheck:
    @settings(max_examples=200)
    @given(formulas)
    def test_sort_mutations_rejected(self, ast):
        for path, wrong in mutations(ast):
            with pytest.raises(SortError):
                check(replace(ast, path, wrong))

    def test_root_must_be_real(self):
        with pytest.raises(SortError):
            check(one())

    def test_unbound(self):
        with pytest.raises(UnboundVariable):
            check(parse("sharp(x)"))
        check(parse("sharp(x)"), free={"x"})

    def test_double_binding(self):
        inner = binder("sup", "x", "S1", op("sharp", var("x")))
        with pytest.raises(SortError):
            check(binder("sup", "x", "S1", inner))

    def test_free_vars_and_binders(self):
        ast = parse("sup y:S1. sharp(comm(x, y))")
        assert dsl.free_vars(ast) == {"x"}
        assert [b.name for b in dsl.binders(dsl.library("theta"))] == ["x", "p"]


class TestEval:
    def test_constant(self):
        est = evaluate(parse("max(0, 1 - 2)"), tracial_space(2))
        assert est.value == 0 and est.certified

    def test_phi_zero(self):
        sp = random_faithful_space([3], seed=4)
        assert evaluate(dsl.library("phi_t", 0.0), sp).value == pytest.approx(0, abs=1e-12)

    def test_chi_on_two_points(self):
        sp = commutative_space([0.5, 0.5])
        assert evaluate(dsl.library("chi_factor"), sp).value >= 0.5 - 1e-9

    @pytest.mark.parametrize("seed", [0, 3])
    def test_chi_matches_estimator_on_factor(self, seed):
        sp = random_faithful_space([2], seed=seed)
        cfg = OptConfig(sample_budget=300, restarts=1, ascent_steps=15, seed=seed)
        a = evaluate(dsl.library("chi_factor"), sp, cfg)
        b = chi_factor_estimate(sp, cfg)
        assert abs(a.value - b.value) <= 1e-12

    def test_unbound_at_eval(self):
        with pytest.raises(UnboundVariable):
            evaluate(parse("sharp(x)"), tracial_space(2))

    def test_free_variable_from_env(self):
        sp = diagonal_space([1 / 3, 2 / 3])
        x = sp.identity() * 2
        assert evaluate(parse("sharp(x)"), sp, env={"x": x}).value == pytest.approx(2)
