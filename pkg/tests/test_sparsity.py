import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_bsos.bench import gen_rosenbrock
from sparse_bsos.poly import Polynomial
from sparse_bsos.sparsity import (PopProblem, SparsityPattern, add_ball_constraints,
                                  assign_constraints, banded_blocks, banded_pattern,
                                  check_normalization, decompose_objective, detect_pattern,
                                  rip_check, scale_constraints, validate)


def x(n, i):
    return Polynomial.var(n, i)


def box_problem(n):
    cons = [x(n, i) for i in range(n)] + [1 - x(n, i) for i in range(n)]
    f = sum((x(n, i) * x(n, i + 1) for i in range(n - 1)), Polynomial(n))
    return PopProblem(n, f, tuple(cons))


class TestPattern:
    def test_normalizes_blocks(self):
        pat = SparsityPattern(((2, 0, 1, 1),))
        assert pat.blocks == ((0, 1, 2),)
        assert pat.cons_blocks == ((),)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SparsityPattern(((0,), (1,)), ((0,),))

    def test_json_roundtrip(self):
        pat = SparsityPattern(((0, 1), (1, 2)), ((0,), (1, 2)))
        assert SparsityPattern.from_json(json.loads(json.dumps(pat.to_json()))) == pat

    def test_problem_json_roundtrip(self):
        prob = box_problem(3)
        prob = prob.with_pattern(assign_constraints(prob, [(0, 1), (1, 2)]))
        back = PopProblem.from_json(json.loads(json.dumps(prob.to_json())))
        assert back.objective == prob.objective
        assert back.constraints == prob.constraints
        assert back.pattern == prob.pattern

    def test_problem_checks_num_vars(self):
        with pytest.raises(ValueError):
            PopProblem(2, x(3, 0))


class TestRip:
    def test_cycle_fails(self):
        assert rip_check([(0, 1), (1, 2), (0, 2)]) == (False, 2)

    def test_two_overlapping_blocks(self):
        assert rip_check([tuple(range(50)), tuple(range(10, 60))]) == (True, None)

    def test_single_block(self):
        assert rip_check([tuple(range(7))]) == (True, None)

    @given(st.lists(st.integers(1, 8), min_size=1, max_size=6), st.integers(0, 7))
    def test_banded_always_satisfies(self, sizes, o):
        sizes = [s + o for s in sizes]
        assert rip_check(banded_blocks(sizes, o))[0]


class TestValidate:
    def test_cycle_pattern_reported(self):
        prob = PopProblem(3, x(3, 0) * x(3, 1) + x(3, 1) * x(3, 2) + x(3, 0) * x(3, 2))
        rep = validate(SparsityPattern(((0, 1), (1, 2), (0, 2))), prob)
        assert not rep.ok
        assert any("running intersection" in f for f in rep.failures)

    def test_trivial_pattern_ok(self):
        prob = box_problem(4)
        assert validate(SparsityPattern.trivial(4, prob.m), prob).ok

    @pytest.mark.parametrize("nvec,o", [((50, 50), 40), ((10,) * 11, 2), ((5, 6, 7), 3)])
    def test_banded_ok(self, nvec, o):
        pat = banded_pattern(nvec, o)
        n = pat.n
        prob = PopProblem(n, sum((x(n, i) for i in range(n)), Polynomial(n)))
        assert validate(pat, prob).ok

    def test_uncovered_variable(self):
        prob = box_problem(3)
        rep = validate(SparsityPattern(((0, 1),), (tuple(range(prob.m)),)), prob)
        assert any("variable cover" in f for f in rep.failures)

    def test_constraint_outside_block(self):
        prob = box_problem(3)
        pat = SparsityPattern(((0, 1), (1, 2)), ((0, 1, 2, 3, 4, 5), ()))
        rep = validate(pat, prob)
        assert any("constraint 2 not supported" in f for f in rep.failures)

    def test_objective_coupling(self):
        prob = PopProblem(3, x(3, 0) * x(3, 2))
        rep = validate(SparsityPattern(((0, 1), (1, 2))), prob)
        assert any("objective monomial" in f for f in rep.failures)


class TestBanded:
    def test_table_two_shape(self):
        pat = banded_pattern((50, 50), 40)
        assert pat.blocks[0] == tuple(range(50))
        assert pat.blocks[1] == tuple(range(10, 60))
        assert pat.n == 60

    def test_eleven_blocks(self):
        assert banded_pattern((10,) * 11, 2).n == 90

    def test_disjoint_partition(self):
        blocks = banded_blocks((3, 4, 2), 0)
        flat = [i for b in blocks for i in b]
        assert flat == list(range(9))

    def test_overlap_too_large(self):
        with pytest.raises(ValueError):
            banded_blocks((3, 3), 3)


class TestDetect:
    def test_path(self):
        prob = PopProblem(3, x(3, 0) * x(3, 1) + x(3, 1) * x(3, 2))
        assert detect_pattern(prob).blocks == ((0, 1), (1, 2))

    def test_dense(self):
        n = 5
        f = sum((x(n, i) * x(n, j) for i in range(n) for j in range(i + 1, n)), Polynomial(n))
        assert detect_pattern(PopProblem(n, f)).blocks == (tuple(range(n)),)

    def test_rosenbrock(self):
        n = 8
        pat = detect_pattern(PopProblem(n, gen_rosenbrock(n)))
        assert len(pat.blocks) == n - 1
        assert all(len(b) == 2 for b in pat.blocks)
        assert set(pat.blocks) == {(i, i + 1) for i in range(n - 1)}
        assert rip_check(pat.blocks)[0]

    def test_cycle_gets_chordal_extension(self):
        # 4-cycle: triangulation yields two triangles
        n = 4
        f = x(n, 0) * x(n, 1) + x(n, 1) * x(n, 2) + x(n, 2) * x(n, 3) + x(n, 3) * x(n, 0)
        pat = detect_pattern(PopProblem(n, f))
        assert all(len(b) == 3 for b in pat.blocks) and len(pat.blocks) == 2
        assert rip_check(pat.blocks)[0]

    def test_constraints_assigned_once(self):
        prob = box_problem(4)
        pat = detect_pattern(prob)
        flat = [j for c in pat.cons_blocks for j in c]
        assert sorted(flat) == list(range(prob.m))
        assert validate(pat, prob).ok


class TestAssign:
    def test_all_vs_first(self):
        prob = box_problem(3)
        blocks = [(0, 1), (1, 2)]
        every = assign_constraints(prob, blocks, "all")
        first = assign_constraints(prob, blocks, "first")
        # x_1 and 1 - x_1 live in both blocks
        assert 1 in every.cons_blocks[0] and 1 in every.cons_blocks[1]
        assert 1 in first.cons_blocks[0] and 1 not in first.cons_blocks[1]

    def test_unsupported_constraint(self):
        prob = PopProblem(3, Polynomial(3), (x(3, 0) * x(3, 2),))
        with pytest.raises(ValueError):
            assign_constraints(prob, [(0, 1), (1, 2)])


class TestDecompose:
    def test_split(self):
        prob = PopProblem(3, x(3, 0) ** 2 + x(3, 2) ** 2)
        f1, f2 = decompose_objective(prob, SparsityPattern(((0, 1), (1, 2))))
        assert f1 == x(3, 0) ** 2 and f2 == x(3, 2) ** 2

    def test_tie_goes_to_first_block(self):
        prob = PopProblem(3, x(3, 1) ** 2)
        f1, f2 = decompose_objective(prob, SparsityPattern(((0, 1), (1, 2))))
        assert f1 == x(3, 1) ** 2 and f2.is_zero()

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_reconstructs(self, seed):
        rng = np.random.default_rng(seed)
        blocks = banded_blocks((4, 4, 4), 2)
        n = blocks[-1][-1] + 1
        terms = {}
        for _ in range(10):
            blk = blocks[rng.integers(len(blocks))]
            vs = rng.choice(blk, size=2, replace=False)
            e = tuple(sorted((int(v), int(rng.integers(1, 3))) for v in vs))
            terms[e] = rng.normal()
        prob = PopProblem(n, Polynomial(n, terms))
        parts = decompose_objective(prob, SparsityPattern(tuple(blocks)))
        assert sum(parts, Polynomial(n)) == prob.objective


class TestBall:
    def test_formula(self):
        prob = PopProblem(2, x(2, 0), (x(2, 0), x(2, 1)),
                          pattern=SparsityPattern(((0, 1),), ((0, 1),)))
        out = add_ball_constraints(prob, [2.0])
        assert out.m == 3
        assert out.constraints[-1] == 1 - (x(2, 0) ** 2 + x(2, 1) ** 2) / 2
        assert out.pattern.cons_blocks == ((0, 1, 2),)

    def test_adds_one_per_block(self):
        prob = box_problem(4)
        prob = prob.with_pattern(assign_constraints(prob, [(0, 1), (1, 2), (2, 3)]))
        out = add_ball_constraints(prob, [2, 2, 2])
        assert out.m == prob.m + 3
        assert validate(out.pattern, out).ok

    def test_box_gives_unit_range(self):
        prob = box_problem(3)
        blocks = [(0, 1), (1, 2)]
        prob = prob.with_pattern(assign_constraints(prob, blocks))
        out = add_ball_constraints(prob, [len(b) for b in blocks])
        pts = np.random.default_rng(0).uniform(0, 1, size=(200, 3))
        for g in out.constraints[prob.m:]:
            vals = [g.evaluate(p) for p in pts]
            assert min(vals) >= 0 and max(vals) <= 1


class TestScale:
    def test_divides(self):
        prob = PopProblem(1, x(1, 0), (2 * x(1, 0),))
        assert scale_constraints(prob, [2.0]).constraints[0] == x(1, 0)

    def test_identity(self):
        prob = box_problem(2)
        assert scale_constraints(prob, [1.0] * prob.m).constraints == prob.constraints

    def test_feasible_set_preserved(self):
        n = 2
        prob = PopProblem(n, Polynomial(n), (3 - x(n, 0) - 2 * x(n, 1), 4 * x(n, 0), x(n, 1)))
        scaled = scale_constraints(prob, [3.0, 6.0, 1.5])
        pts = np.random.default_rng(1).uniform(-0.5, 1.5, size=(500, 2))
        for p in pts:
            assert prob.is_feasible(p, upper=False) == scaled.is_feasible(p, upper=False)
        # after scaling the upper bounds hold on K
        assert check_normalization(scaled, pts) == []
        assert check_normalization(prob, pts) != []
