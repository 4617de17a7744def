from fractions import Fraction as F

import numpy as np
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from mck import exact

small = st.integers(-4, 4)


def test_is_exact():
    assert exact.is_exact(1, F(1, 2), [3, (F(2), 4)])
    assert not exact.is_exact(1, 0.5)
    assert not exact.is_exact(True)
    assert exact.is_exact(np.array([F(1), 2], dtype=object))


def test_rref_and_rank():
    m, piv = exact.rref([[F(1), F(2)], [F(2), F(4)]])
    assert piv == [0]
    assert m[0] == [1, 2] and m[1] == [0, 0]
    assert exact.rank([(1, 0, 0), (0, 1, 0), (1, 1, 0)]) == 2
    assert exact.rank([]) == 0


def test_solve_unique_statuses():
    cols = [[F(1), F(0)], [F(0), F(1)]]
    assert exact.solve_unique(cols, [F(3), F(-2)]) == ("unique", [3, -2])
    assert exact.solve_unique([[F(1), F(1)]], [F(1), F(0)])[0] == "none"
    assert exact.solve_unique([[F(1), F(0)], [F(2), F(0)]], [F(1), F(0)])[0] == "many"


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=2, max_size=3),
       st.lists(small, min_size=2, max_size=3))
def test_feasible_nonneg_matches_linprog(rows, b):
    k = min(len(rows), len(b))
    rows, b = rows[:k], b[:k]
    got = exact.feasible_nonneg([[F(x) for x in r] for r in rows], [F(x) for x in b])
    res = linprog(np.zeros(4), A_eq=np.array(rows, float), b_eq=np.array(b, float),
                  bounds=[(0, None)] * 4, method="highs")
    assert got == (res.status == 0)
