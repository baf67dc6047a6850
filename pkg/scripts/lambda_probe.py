"""Scan the growth-rate exponent lambda for r = (K/P)^lambda on the ex4.4 fields.

Prints, per lambda, the profile shape of M(d), its maximum and where it is
attained, and the fast-dispersal limit.  Useful for locating the exponents at
which the profile switches between decreasing, unimodal and increasing.

Usage: python3 scripts/lambda_probe.py [LAMBDA_MIN LAMBDA_MAX STEPS]
"""
import sys

import numpy as np

from popdisp.analysis import classify_profile, lambda_sweep, m_infinity
from popdisp.scenario import builtin_example


def main(lo=-1.0, hi=3.0, steps=17):
    sc = builtin_example("ex4.4")
    K, P, _ = sc.fields()
    lams = np.linspace(float(lo), float(hi), int(steps))
    print(f"{'lambda':>8} {'shape':>13} {'max M':>12} {'argmax d':>10} {'M(inf)':>12}")
    previous = None
    for lam, table in lambda_sweep(K, P, 1.0, lams, sc.d_grid(), sc.opts):
        prof = classify_profile(table)
        flag = "  <- shape change" if previous is not None and prof.shape != previous else ""
        print(f"{lam:8.3f} {prof.shape:>13} {table.M.max():12.8f} {prof.argmax_d:10.4g} "
              f"{m_infinity(lam, K, P):12.8f}{flag}")
        previous = prof.shape


if __name__ == "__main__":
    main(*sys.argv[1:])
