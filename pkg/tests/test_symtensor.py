"""Exact tensor algebra: brackets, the bracket-power operator, dimensions."""

import random
from fractions import Fraction
from itertools import combinations_with_replacement, permutations
from math import factorial

import pytest

from ktweb.errors import InputError
from ktweb.exprlang import parse_expr
from ktweb.symtensor import (
    FlatMetric,
    MultiPoly,
    SymPolyTensor,
    gkt_operator,
    npe_dimension,
    rational_nullspace,
    schouten_bracket,
    solve_gkt,
)


def metric_tensor(m=2, signature=None):
    return FlatMetric(m, signature or (1,) * m)


def gkt_family_member(beta):
    """Tensor of the six-parameter plane family with rational parameters."""
    b1, b2, b3, b4, b5, b6 = [Fraction(b) for b in beta]
    x1 = MultiPoly.variable(2, 1)
    x2 = MultiPoly.variable(2, 2)
    one = MultiPoly.constant(2, 1)
    return SymPolyTensor(2, 2, {
        (1, 1): one.scale(b1) + x2.scale(2 * b4) + (x2 * x2).scale(b6),
        (1, 2): one.scale(b3) + x1.scale(-b4) + x2.scale(-b5) + (x1 * x2).scale(-b6),
        (2, 2): one.scale(b2) + x1.scale(2 * b5) + (x1 * x1).scale(b6),
    })


def naive_bracket(a, b):
    """Reference bracket: full-permutation symmetrization, no shortcuts."""
    m = a.m
    p, q = a.valence, b.valence
    r = p + q - 1
    out = {}
    for idx in combinations_with_replacement(range(1, m + 1), r):
        acc = MultiPoly.zero(m)
        for sigma in permutations(idx):
            term = MultiPoly.zero(m)
            if p >= 1:
                for k in range(1, m + 1):
                    part = a.component((k,) + sigma[:p - 1]) * b.component(sigma[p - 1:]).diff(k)
                    term = term + part.scale(p)
            if q >= 1:
                for k in range(1, m + 1):
                    part = b.component((k,) + sigma[:q - 1]) * a.component(sigma[q - 1:]).diff(k)
                    term = term - part.scale(q)
            acc = acc + term.scale(Fraction(1, factorial(r)))
        if not acc.is_zero():
            out[idx] = acc
    return SymPolyTensor(m, r, out)


def random_tensor(rng, m, valence, degree=2):
    comps = {}
    for idx in combinations_with_replacement(range(1, m + 1), valence):
        terms = {}
        for expo in combinations_with_replacement(range(m), degree):
            exps = [0] * m
            for e in expo:
                exps[e] += 1
            if rng.random() < 0.5:
                terms[tuple(exps)] = Fraction(rng.randint(-3, 3))
        comps[idx] = MultiPoly(m, terms)
    return SymPolyTensor(m, valence, comps)


class TestMultiPoly:
    def test_arithmetic_exact(self):
        x1 = MultiPoly.variable(2, 1)
        x2 = MultiPoly.variable(2, 2)
        p = (x1 + x2) * (x1 - x2)
        assert p == x1 * x1 - x2 * x2
        assert p.diff(1) == x1.scale(2)
        assert p.degree() == 2

    def test_no_zero_terms_stored(self):
        x1 = MultiPoly.variable(2, 1)
        assert (x1 - x1).terms == {}
        assert (x1 - x1).is_zero()

    def test_evaluate_rational(self):
        p = MultiPoly(2, {(2, 1): Fraction(3, 2)})
        assert p.evaluate((Fraction(2), Fraction(1, 3))) == Fraction(2)

    def test_text_parses_in_expression_grammar(self):
        p = (MultiPoly.variable(2, 2) * MultiPoly.variable(2, 2)
             - MultiPoly.variable(2, 1).scale(Fraction(1, 2))
             + MultiPoly.constant(2, -3))
        text = p.to_text()
        expr = parse_expr(text)
        assert expr.evaluate(2.0, 5.0) == pytest.approx(float(p.evaluate((2.0, 5.0))))


class TestSchoutenBracket:
    def test_metric_with_metric_vanishes(self):
        g = metric_tensor().tensor()
        out = schouten_bracket(g, g)
        assert out.valence == 3
        assert out.is_zero()

    def test_rotation_field_is_killing(self):
        rot = SymPolyTensor(2, 1, {
            (1,): MultiPoly.variable(2, 2).scale(-1),
            (2,): MultiPoly.variable(2, 1),
        })
        assert schouten_bracket(rot, metric_tensor().tensor()).is_zero()

    def test_single_linear_component_survives(self):
        a = SymPolyTensor(2, 2, {(1, 1): MultiPoly.variable(2, 1)})
        out = schouten_bracket(a, metric_tensor().tensor())
        assert not out.is_zero()
        assert out.component((1, 1, 1)) == MultiPoly.constant(2, -2)

    def test_dimension_mismatch_rejected(self):
        a = SymPolyTensor(2, 2, {(1, 1): MultiPoly.constant(2, 1)})
        with pytest.raises(InputError):
            schouten_bracket(a, metric_tensor(m=3).tensor())

    def test_matches_permutation_reference(self):
        rng = random.Random(7)
        g = metric_tensor().tensor()
        for _ in range(10):
            a = random_tensor(rng, 2, 2)
            b = random_tensor(rng, 2, 1)
            for left, right in ((a, g), (a, b), (b, a), (b, g)):
                assert schouten_bracket(left, right) == naive_bracket(left, right)

    def test_antisymmetric_for_equal_valence(self):
        rng = random.Random(19)
        for _ in range(5):
            a = random_tensor(rng, 2, 2)
            b = random_tensor(rng, 2, 2)
            lhs = schouten_bracket(a, b)
            rhs = schouten_bracket(b, a).scale(-1)
            assert lhs == rhs

    def test_linear_in_first_slot(self):
        rng = random.Random(3)
        g = metric_tensor().tensor()
        a = random_tensor(rng, 2, 2)
        b = random_tensor(rng, 2, 2)
        combo = a.scale(Fraction(2, 3)) + b.scale(Fraction(-5, 7))
        lhs = schouten_bracket(combo, g)
        rhs = (schouten_bracket(a, g).scale(Fraction(2, 3))
               + schouten_bracket(b, g).scale(Fraction(-5, 7)))
        assert lhs == rhs


class TestGktOperator:
    def test_metric_in_kernel(self):
        g = metric_tensor()
        assert gkt_operator(g.tensor(), g, 0).is_zero()

    def test_plane_family_in_kernel(self):
        g = metric_tensor()
        k = gkt_family_member((1, -2, Fraction(3, 2), 4, -5, 7))
        assert gkt_operator(k, g, 0).is_zero()

    def test_order_raises_degree_threshold(self):
        g = metric_tensor()
        x1 = MultiPoly.variable(2, 1)
        k = SymPolyTensor(2, 2, {(1, 1): x1 * x1})
        assert not gkt_operator(k, g, 0).is_zero()
        assert not gkt_operator(k, g, 1).is_zero()
        assert gkt_operator(k, g, 2).is_zero()

    def test_valence_bookkeeping(self):
        g = metric_tensor()
        k = gkt_family_member((1, 0, 0, 0, 0, 0))
        assert gkt_operator(k, g, 2).valence == 2 + 3


class TestNpeDimension:
    @pytest.mark.parametrize("m,n,p,expected", [
        (2, 0, 2, 6),
        (3, 0, 2, 20),
        (2, 1, 2, 15),
        (2, 0, 1, 3),
        (1, 0, 3, 1),
        (2, 2, 0, 6),
    ])
    def test_values(self, m, n, p, expected):
        assert npe_dimension(m, n, p) == expected

    def test_rejects_bad_arguments(self):
        with pytest.raises(InputError):
            npe_dimension(0, 0, 2)
        with pytest.raises(InputError):
            npe_dimension(2, -1, 2)


class TestRationalNullspace:
    def test_known_kernel(self):
        rows = [{0: Fraction(1), 1: Fraction(2)},
                {0: Fraction(2), 1: Fraction(4)}]
        basis = rational_nullspace(rows, 3)
        assert len(basis) == 2
        for vec in basis:
            for row in rows:
                total = sum(row.get(c, Fraction(0)) * v for c, v in vec.items())
                assert total == 0

    def test_random_exactness(self):
        rng = random.Random(11)
        for _ in range(20):
            ncols = rng.randint(3, 8)
            rows = []
            for _ in range(rng.randint(2, 6)):
                row = {c: Fraction(rng.randint(-4, 4)) for c in range(ncols)
                       if rng.random() < 0.6}
                rows.append({c: v for c, v in row.items() if v != 0})
            basis = rational_nullspace(rows, ncols)
            for vec in basis:
                for row in rows:
                    assert sum(row.get(c, Fraction(0)) * v for c, v in vec.items()) == 0
            # rank + nullity bookkeeping
            dense = [[row.get(c, Fraction(0)) for c in range(ncols)] for row in rows]
            assert len(basis) == ncols - _rank(dense)


def _rank(matrix):
    matrix = [row[:] for row in matrix]
    rank = 0
    cols = len(matrix[0]) if matrix else 0
    for col in range(cols):
        pivot = next((i for i in range(rank, len(matrix)) if matrix[i][col] != 0), None)
        if pivot is None:
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        factor = matrix[rank][col]
        matrix[rank] = [v / factor for v in matrix[rank]]
        for i in range(len(matrix)):
            if i != rank and matrix[i][col] != 0:
                f = matrix[i][col]
                matrix[i] = [a - f * b for a, b in zip(matrix[i], matrix[rank])]
        rank += 1
    return rank


class TestSolveGkt:
    def test_plane_killing_tensors(self):
        sol = solve_gkt(2, 0, 2)
        assert sol.dimension == 6
        # The six families: constants on each component, the two rotational
        # mixes, and the quadratic one.
        keys = sorted(tuple(sorted(t.components)) for t in sol.basis)
        assert (((1, 1),),) != keys  # not all concentrated on one component
        spans = {frozenset(t.components) for t in sol.basis}
        assert frozenset({(1, 1)}) in spans
        assert frozenset({(2, 2)}) in spans
        assert frozenset({(1, 2)}) in spans
        assert frozenset({(1, 1), (1, 2), (2, 2)}) in spans

    def test_killing_vectors_match_group_dimension(self):
        assert solve_gkt(2, 0, 1).dimension == 3

    def test_mixed_signature_same_dimension(self):
        assert solve_gkt(2, 0, 2, signature=(1, -1)).dimension == 6

    def test_basis_in_kernel_exactly(self):
        sol = solve_gkt(2, 1, 1)
        assert sol.dimension == npe_dimension(2, 1, 1)
        for tensor in sol.basis:
            assert gkt_operator(tensor, sol.metric, sol.n).is_zero()

    def test_leading_coefficient_normalized(self):
        for tensor in solve_gkt(2, 0, 2).basis:
            leading = min(
                (idx, expo, coeff)
                for idx, poly in tensor.components.items()
                for expo, coeff in poly.terms.items())
            assert leading[2] == 1

    @pytest.mark.parametrize("m,n,p", [(2, 0, 2), (2, 1, 1), (3, 0, 1)])
    def test_degree_bound_stability(self, m, n, p):
        base = solve_gkt(m, n, p)
        widened = solve_gkt(m, n, p, degree_bound=p + n + 1)
        assert base.dimension == widened.dimension == npe_dimension(m, n, p)

    def test_size_guard(self):
        with pytest.raises(InputError):
            solve_gkt(5, 0, 2)

    def test_kernel_normalization_independent(self):
        # Any rescaled bracket has the same kernel: basis members stay in the
        # kernel of the doubled operator.
        sol = solve_gkt(2, 0, 2)
        for tensor in sol.basis:
            image = gkt_operator(tensor.scale(2), sol.metric, 0)
            assert image.is_zero()

    def test_json_serialization(self):
        sol = solve_gkt(2, 0, 2)
        doc = sol.basis[0].to_json_dict()
        assert doc["m"] == 2 and doc["p"] == 2
        for text in doc["components"].values():
            parse_expr(text)  # must be valid in the expression grammar
