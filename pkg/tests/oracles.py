"""Closed-form oracles for the shipped fixtures.

Nothing here imports the package: every value is computed from its closed
form with exact rational arithmetic and then frozen as JSON.  The test
suite checks that the shipped fixtures equal this output, and the pipelines
reproduce the fixtures.

Run ``python3 tests/oracles.py`` to rewrite the fixture files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "dualerg" / "fixtures"


def _f(x):
    return float(Fraction(x))


def stationary_distribution(P):
    """Exact stationary row vector of an irreducible stochastic matrix by Gaussian elimination."""
    n = len(P)
    P = [[Fraction(x).limit_denominator(10 ** 9) for x in row] for row in P]
    # pi (P - I) = 0 with sum(pi) = 1: solve A^T pi = b
    a = [[P[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[-1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    for c in range(n):
        piv = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        b[c], b[piv] = b[piv], b[c]
        for r in range(n):
            if r != c and a[r][c] != 0:
                k = a[r][c] / a[c][c]
                a[r] = [x - k * y for x, y in zip(a[r], a[c])]
                b[r] -= k * b[c]
    return [b[i] / a[i][i] for i in range(n)]


def summing_l1(N=64):
    ns = [1, 2, 3, 4, 8, 64, 1000]
    return {
        "params": {"N": N},
        # adjoint Cesaro average of e_2: ((n-1)/n) e_1 + (1/n) e_2
        "A_n_e2": {str(n): {"1": _f(Fraction(n - 1, n)), "2": _f(Fraction(1, n))} for n in ns},
        # forward Cesaro average of the first coordinate functional
        "adjoint_avg_e1": {str(n): [_f(Fraction(max(n - k + 1, 0), n)) for k in range(1, N + 1)]
                           for n in [1, 4, 10, 64, 100]},
        "tail_escape": {"eps": 0.01, "factor": 100},
        "verdict": {"forward_sigma_convergent": True, "adjoint_limit_in_c0": False},
    }


def z_infinity(N=64):
    ns = [1, 2, 5, 64, 100, 1024]
    return {
        "params": {"N": N},
        "fixed_function_dim": 1,
        "fixed_measure": {"inf": 1.0},
        "backward_indicator": {str(n): {str(k): _f(Fraction(min(n, k + 1), n)) for k in range(N + 1)}
                               for n in ns},
        "backward_modulus_floor_min": 0.5,
        "verdict": {"forward_e_property": True, "backward_e_property": False,
                    "backward_limit_continuous": False, "forward_equivalences": True},
    }


def cycles_line(M=8, W=16):
    cycles = {str(n): [f"K{n}:{k}" for k in range(n + 1)] for n in range(1, M + 1)}
    return {
        "params": {"M": M, "W": W},
        "fixed_function_dim": M,
        "fixed_measure_dim": M,
        "cycle_supports": cycles,
        "cycle_measure_weight": {str(n): _f(Fraction(1, n + 1)) for n in range(1, M + 1)},
        "gram": [[1.0 if i == j else 0.0 for j in range(M)] for i in range(M)],
        "target": "K0:0",
        "target_total": 1.0,
        "verdict": {"fixed_spaces_separate": True, "target_decomposes": False},
    }


def irreducible3():
    P = [[Fraction(5, 10), Fraction(3, 10), Fraction(2, 10)],
         [Fraction(2, 10), Fraction(6, 10), Fraction(2, 10)],
         [Fraction(3, 10), Fraction(3, 10), Fraction(4, 10)]]
    pi = stationary_distribution(P)
    return {"P": [[_f(x) for x in row] for row in P], "pi": [_f(x) for x in pi],
            "pi_exact": [str(x) for x in pi], "fixed_function_dim": 1, "fixed_measure_dim": 1}


def swap2(n_max=16):
    # A_n - P = (1/(2n)) (I - S) for odd n and 0 for even n
    op = [_f(Fraction(1, n)) if n % 2 else 0.0 for n in range(1, n_max + 1)]
    entry = [_f(Fraction(1, 2 * n)) if n % 2 else 0.0 for n in range(1, n_max + 1)]
    return {"P": [[0.5, 0.5], [0.5, 0.5]], "avg_minus_P_opnorm": op, "avg_minus_P_max_entry": entry}


def shift_Z():
    return {"beta0_equicontinuous": False, "e_property": True}


def ctmc2():
    # Q = [[-a, a], [b, -b]] has stationary law (b, a) / (a + b)
    a, b = Fraction(1), Fraction(2)
    return {"Q": [[-1.0, 1.0], [2.0, -2.0]], "pi": [_f(b / (a + b)), _f(a / (a + b))]}


ALL = {"summing_l1": summing_l1, "z_infinity": z_infinity, "cycles_line": cycles_line,
       "irreducible3": irreducible3, "swap2": swap2, "shift_Z": shift_Z, "ctmc2": ctmc2}


def render(name):
    return json.dumps(ALL[name](), indent=2, sort_keys=True) + "\n"


if __name__ == "__main__":
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for name in ALL:
        (FIXTURE_DIR / f"{name}.json").write_text(render(name))
