"""Total-population functionals, M(d) profile shapes and per-claim verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .expr import evaluate
from .grid import ScalarField, gradient, integrate, inf_norm_diff
from .solver import Problem, SolveResult, SolverOptions, continuation_sweep, pseudo_transient

__all__ = [
    "SweepRow", "SweepTable", "ProfileClass", "VerdictReport", "Moments", "TooFewPoints",
    "total_population", "correlation_integral", "beta_limit", "m_infinity",
    "weighted_moments", "classify_profile", "build_sweep_table", "run_sweep",
    "lambda_sweep", "verdicts", "oracle_agreement", "CLAIM_IDS", "DEFAULT_LAMBDA_GRID",
    "PANEL_LAMBDAS",
]

CLAIM_IDS = ("thm31", "thm32", "lem33_pos", "lem33_neg", "cor34", "thm35_pos", "thm35_neg",
             "thm36", "thmA1", "thmA2_upper", "thmA2_lower", "cor23_limit", "lou_conjecture_probe")
DEFAULT_LAMBDA_GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
PANEL_LAMBDAS = (-1.0, 0.0, 0.5, 1.0, 1.4, 2.3)

PROPORTIONAL_TOL = 1e-10
CONSTANT_TOL = 1e-12
PROFILE_EPS = 1e-6
LIMIT_TOL = 0.01        # relative, for the d -> 0 and d -> inf endpoints
QUAD_MARGIN = 1e-4      # relative to int K
SLACK_TOL = 1e-6        # h'(t) - h(t)/t closer to zero than this counts as zero


class TooFewPoints(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    d: float
    M: float
    M_minus_intK: float
    iterations: int
    residual: float
    method: str


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    int_K: float
    beta: float
    m_infinity: float
    name: str = ""

    def __post_init__(self):
        ds = [row.d for row in self.rows]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError("rows must have strictly increasing d")

    @property
    def d(self) -> np.ndarray:
        return np.array([row.d for row in self.rows])

    @property
    def M(self) -> np.ndarray:
        return np.array([row.M for row in self.rows])


@dataclass(frozen=True)
class ProfileClass:
    shape: str
    n_interior_maxima: int
    n_sign_changes_of_slope: int
    argmax_d: float


@dataclass(frozen=True)
class Moments:
    int_Pu: float
    int_PK: float
    int_ru2: float
    int_rKu: float
    int_rK2: float


@dataclass(frozen=True)
class VerdictReport:
    claim_id: str
    scenario: str
    hypotheses_hold: Optional[bool]   # None: hypothesis sign undecidable at working precision
    hypotheses: dict
    predicted: str
    observed: str
    verdict: str                      # confirmed | violated | inapplicable | indeterminate
    witnesses: tuple = field(default=())

    def line(self) -> str:
        hyp = "; ".join(f"{k}: {v}" for k, v in self.hypotheses.items())
        text = (f"[{self.verdict.upper():13s}] {self.scenario:22s} {self.claim_id:21s} "
                f"hypotheses={{{hyp}}} predicted={self.predicted!r} observed={self.observed!r}")
        if self.witnesses:
            text += " witnesses=" + ",".join(f"{d:.6g}" for d in self.witnesses)
        return text


def total_population(u: ScalarField) -> float:
    return integrate(u)


def correlation_integral(K: ScalarField, P: ScalarField, r: ScalarField) -> float:
    """Integral of grad(K/P) * grad(r)."""
    return integrate(gradient(K / P) * gradient(r))


def _correlation_band(K, P, r) -> float:
    gq = gradient(K / P)
    gr = gradient(r)
    return 1e-8 * math.sqrt(integrate(gq * gq)) * math.sqrt(integrate(gr * gr))


def beta_limit(r: ScalarField, K: ScalarField, P: ScalarField) -> float:
    """Amplitude of the fast-dispersal limit u -> beta*P."""
    return integrate(r * P) / integrate(r / K * P * P)


def m_infinity(lam: float, K: ScalarField, P: ScalarField) -> float:
    """Fast-dispersal total population for r = alpha*(K/P)^lam (alpha cancels)."""
    q = K.values / P.values
    num = integrate(ScalarField(K.grid, K.values * q ** (lam - 1.0)))
    den = integrate(ScalarField(K.grid, K.values * q ** (lam - 2.0)))
    return num / den * integrate(P)


def weighted_moments(u: ScalarField, r: ScalarField, K: ScalarField, P: ScalarField) -> Moments:
    return Moments(
        int_Pu=integrate(P * u),
        int_PK=integrate(P * K),
        int_ru2=integrate(r * u * u),
        int_rKu=integrate(r * K * u),
        int_rK2=integrate(r * K * K),
    )


def classify_profile(t, d: Sequence[float] | None = None, eps_rel: float = PROFILE_EPS) -> ProfileClass:
    """Shape of M(d) from the signs of consecutive differences.

    Differences below ``eps_rel`` times the range of M count as zero and are
    skipped when counting slope sign changes.
    """
    if isinstance(t, SweepTable):
        M, d = t.M, t.d
    else:
        M = np.asarray(t, dtype=float)
        d = np.arange(M.size, dtype=float) if d is None else np.asarray(d, dtype=float)
    if M.size < 5:
        raise TooFewPoints(f"need at least 5 rows, got {M.size}")
    dM = np.diff(M)
    thr = eps_rel * (M.max() - M.min())
    signs = np.sign(np.where(np.abs(dM) <= thr, 0.0, dM))
    signs = signs[signs != 0]
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    n_max = int(np.count_nonzero((signs[:-1] > 0) & (signs[1:] < 0)))
    if signs.size == 0:
        shape = "flat"
    elif changes == 0:
        shape = "increasing" if signs[0] > 0 else "decreasing"
    elif changes == 1:
        shape = "unimodal_max" if signs[0] > 0 else "unimodal_min"
    else:
        shape = "multimodal"
    return ProfileClass(shape, n_max, changes, float(d[int(np.argmax(M))]))


def build_sweep_table(d_grid, results: Sequence[SolveResult], K, P, r, name: str = "") -> SweepTable:
    int_K = integrate(K)
    beta = beta_limit(r, K, P)
    rows = []
    for d, res in zip(d_grid, results):
        M = total_population(res.u)
        rows.append(SweepRow(float(d), M, M - int_K, res.iterations, res.residual_norm, res.method))
    return SweepTable(tuple(rows), int_K, beta, beta * integrate(P), name)


def run_sweep(scenario, d_grid=None, grid=None):
    """Continuation sweep for a scenario; returns (table, results, fields)."""
    K, P, r = scenario.fields(grid)
    d_grid = scenario.d_grid() if d_grid is None else np.asarray(d_grid, dtype=float)
    lam = scenario.power.lam if scenario.power else None
    results = continuation_sweep(K, P, r, d_grid, scenario.opts, lam=lam)
    return build_sweep_table(d_grid, results, K, P, r, scenario.name), results, (K, P, r)


def lambda_sweep(K: ScalarField, P: ScalarField, alpha: float, lam_grid, d_grid,
                 opts: SolverOptions = SolverOptions(), name: str = ""):
    """One d-sweep per exponent with r = alpha*(K/P)^lam; returns [(lam, table)]."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    out = []
    for lam in lam_grid:
        lam = float(lam)
        r = ScalarField(K.grid, alpha * (K.values / P.values) ** lam)
        results = continuation_sweep(K, P, r, d_grid, opts, lam=lam)
        table = build_sweep_table(d_grid, results, K, P, r, f"{name}[lambda={lam:g}]")
        out.append((lam, table))
    return out


def oracle_agreement(K, P, r, ds=(1e-2, 1.0, 1e2), opts: SolverOptions = SolverOptions()):
    """Newton (warm-started by continuation) vs pseudo-transient from K, at each d.

    Returns [(d, relative sup-norm difference)].
    """
    out = []
    newton = continuation_sweep(K, P, r, sorted(ds), opts)
    for d, res in zip(sorted(ds), newton):
        pt = pseudo_transient(Problem(d, K, P, r), K, opts)
        out.append((d, inf_norm_diff(res.u, pt.u) / K.sup_norm()))
    return out


def _rel_spread(f: np.ndarray) -> float:
    mean = f.mean()
    return float(np.abs(f - mean).max() / abs(mean))


def _is_constant(f: np.ndarray) -> bool:
    return (f.max() - f.min()) / abs(f.max()) <= CONSTANT_TOL


def _h_slack(h_expr, K: ScalarField, n: int = 257):
    """h'(t) - h(t)/t over the range of K, relative to max |h(t)/t|.

    h' comes from central differences of the declared expression.
    """
    lo, hi = K.min(), K.max()
    ts = np.linspace(lo, hi, n)
    step = 1e-6 * max(1.0, hi)
    out = []
    for t in ts:
        dh = (evaluate(h_expr, t + step) - evaluate(h_expr, t - step)) / (2 * step)
        out.append(dh - evaluate(h_expr, t) / t)
    out = np.array(out)
    scale = max(abs(evaluate(h_expr, t) / t) for t in ts)
    return out / scale


def _sign_word(x: float) -> str:
    return "positive" if x > 0 else "negative" if x < 0 else "zero"


def verdicts(scenario, t: SweepTable, small_d_results: Sequence[SolveResult], fields,
             lambda_grid=DEFAULT_LAMBDA_GRID) -> list[VerdictReport]:
    """Check every claim against one converged sweep of ``scenario``.

    ``small_d_results`` are the solutions at the two smallest d of ``t``.
    """
    K, P, r = fields
    Kv, Pv, rv = K.values, P.values, r.values
    name = scenario.name
    decl = scenario.declared
    power = scenario.power
    rows = t.rows
    int_K = t.int_K
    small = rows[:2]
    margin = QUAD_MARGIN * int_K
    out: list[VerdictReport] = []

    def report(cid, hyp_ok, hyp, predicted, observed, verdict, witnesses=()):
        if hyp_ok is not None:
            hyp_ok = bool(hyp_ok)
        if hyp_ok is False:
            verdict = "inapplicable"
        out.append(VerdictReport(cid, name, hyp_ok, hyp, predicted, observed, verdict, tuple(witnesses)))

    r_const = bool(_is_constant(rv))
    kp_spread = _rel_spread(Kv / Pv)
    kp_const = kp_spread <= PROPORTIONAL_TOL
    prk_spread = _rel_spread(Pv * rv / Kv)
    p_prop_k_over_r = prk_spread <= PROPORTIONAL_TOL
    diffs = np.array([row.M_minus_intK for row in rows])
    small_obs = ", ".join(f"M-intK={row.M_minus_intK:+.3e} at d={row.d:.3g}" for row in small)

    # thm31: P proportional to K/r with r non-constant => M(d) > int K for all d.
    hyp = {"P*r/K constant": f"{p_prop_k_over_r} (spread {prk_spread:.1e})",
           "r non-constant": str(not r_const)}
    ok = p_prop_k_over_r and not r_const
    bad = [row.d for row in rows if row.M_minus_intK < -margin]
    low = [row.d for row in rows if row.M_minus_intK <= 0]
    verdict = "violated" if bad else "indeterminate" if low else "confirmed"
    report("thm31", ok, hyp, "M(d) > int K for every d",
           f"min(M-intK)={diffs.min():+.3e} over {len(rows)} rows", verdict, bad or low)

    # thm32: r constant, K and P not proportional => M(d) < int K for all d.
    hyp = {"r constant": str(r_const), "K/P non-constant": f"{not kp_const} (spread {kp_spread:.1e})"}
    ok = r_const and not kp_const
    bad = [row.d for row in rows if row.M_minus_intK > margin]
    high = [row.d for row in rows if row.M_minus_intK >= 0]
    verdict = "violated" if bad else "indeterminate" if high else "confirmed"
    report("thm32", ok, hyp, "M(d) < int K for every d",
           f"max(M-intK)={diffs.max():+.3e} over {len(rows)} rows", verdict, bad or high)

    # lem33_*: sign of the correlation integral fixes the small-d sign of M - int K.
    I = correlation_integral(K, P, r)
    band = _correlation_band(K, P, r)
    decided = abs(I) > band
    small_signs = {_sign_word(row.M_minus_intK) for row in small}
    observed = f"I={I:+.3e} (band {band:.1e}); {small_obs}"
    for cid, sign in (("lem33_pos", 1), ("lem33_neg", -1)):
        hyp = {"correlation integral": f"{I:+.3e}", "band": f"{band:.1e}"}
        if not decided:
            report(cid, None, hyp, "no prediction: integral within numerical band", observed, "indeterminate")
            continue
        ok = sign * I > 0
        want = "positive" if sign > 0 else "negative"
        wrong = [row.d for row in small if _sign_word(row.M_minus_intK) != want]
        verdict = "confirmed" if not wrong else "violated"
        report(cid, ok, hyp, f"M - int K {want} for small d", observed, verdict, wrong)

    # cor34: r = K and P = h(K); the sign of h'(t) - h(t)/t decides.
    r_is_K = float(np.abs(rv - Kv).max()) <= CONSTANT_TOL * float(np.abs(Kv).max())
    hyp = {"r == K": str(r_is_K), "P = h(K) declared": str(decl.p_of_k is not None)}
    ok = r_is_K and decl.p_of_k is not None
    predicted, verdict, wrong = "n/a", "indeterminate", []
    if ok:
        h_matches = _declared_h_matches(decl.p_of_k, K, P)
        slack = _h_slack(decl.p_of_k, K)
        hyp["P == h(K) on grid"] = str(h_matches)
        if not h_matches:
            ok = False
        elif np.all(slack > SLACK_TOL):
            predicted, want = "M < int K for small d (h' > h/t)", "negative"
        elif np.all(slack < -SLACK_TOL):
            predicted, want = "M > int K for small d (h' < h/t)", "positive"
        else:
            ok = False
            hyp["strict h' vs h/t"] = "neither branch"
        if ok:
            wrong = [row.d for row in small if _sign_word(row.M_minus_intK) != want]
            verdict = "confirmed" if not wrong else "violated"
    report("cor34", ok, hyp, predicted, small_obs, verdict, wrong)

    # thm35_*: monotone correlation of r with K/P.
    corr = decl.r_vs_kp
    if power is not None and not r_const:
        corr = "positive" if power.lam > 0 else "negative" if power.lam < 0 else None
    for cid, want_corr, want in (("thm35_pos", "positive", "positive"), ("thm35_neg", "negative", "negative")):
        hyp = {"r vs K/P correlation": str(corr), "r non-constant": str(not r_const),
               "K/P non-constant": str(not kp_const)}
        ok = corr == want_corr and not r_const and not kp_const
        wrong = [row.d for row in small if _sign_word(row.M_minus_intK) != want]
        verdict = "confirmed" if not wrong else "violated"
        report(cid, ok, hyp, f"M - int K {want} for small d", small_obs, verdict, wrong)

    # thm36: lambda -> M_lambda(inf) strictly increasing.
    hyp = {"power family": str(power is not None), "K/P non-constant": str(not kp_const)}
    ok = power is not None and not kp_const
    m_vals = [m_infinity(lam, K, P) for lam in lambda_grid]
    inc = np.diff(m_vals)
    observed = (f"min increment {inc.min():.3e} over lambda grid; "
                + ", ".join(f"{lam:g}:{m:.6f}" for lam, m in zip(lambda_grid, m_vals)))
    if power is not None:
        observed += f"; M(d_max)={rows[-1].M:.6f} vs m_inf({power.lam:g})={m_infinity(power.lam, K, P):.6f}"
    bad = [lam for lam, step in zip(lambda_grid[1:], inc) if step <= 0]
    report("thm36", ok, hyp, "M_lambda(inf) strictly increasing in lambda", observed,
           "violated" if bad else "confirmed", bad)

    mom = [weighted_moments(res.u, r, K, P) for res in small_d_results[:2]]

    # thmA1: r, K positively correlated and int grad K . grad P < 0 => int P u > int P K.
    gkgp = integrate(gradient(K) * gradient(P))
    band_kp = 1e-8 * math.sqrt(integrate(gradient(K) ** 2)) * math.sqrt(integrate(gradient(P) ** 2))
    r_vs_k = decl.r_vs_k or ("positive" if _rel_spread(rv / Kv) <= PROPORTIONAL_TOL else None)
    hyp = {"r vs K correlation": str(r_vs_k), "int gradK.gradP": f"{gkgp:+.3e}"}
    ok = r_vs_k == "positive" and gkgp < -band_kp
    wrong = [row.d for row, m in zip(small, mom) if not m.int_Pu > m.int_PK]
    report("thmA1", ok, hyp, "int P u > int P K for small d",
           "; ".join(f"int Pu - int PK = {m.int_Pu - m.int_PK:+.3e}" for m in mom),
           "confirmed" if not wrong else "violated", wrong)

    # thmA2_*: P = h(K) with K, P independent.
    h_ok = decl.p_of_k is not None and not kp_const and _declared_h_matches(decl.p_of_k, K, P)
    slack = _h_slack(decl.p_of_k, K) if h_ok else np.zeros(1)
    obs = "; ".join(f"ru2={m.int_ru2:.10g} rKu={m.int_rKu:.10g} rK2={m.int_rK2:.10g}" for m in mom)
    hyp = {"P = h(K), independent": str(h_ok), "max(h' - h/t)": f"{slack.max():+.3e}"}
    wrong = [row.d for row, m in zip(small, mom) if not m.int_ru2 > m.int_rKu]
    report("thmA2_upper", h_ok and bool(np.all(slack >= -SLACK_TOL)), hyp, "int r u^2 > int r K u for small d",
           obs, "confirmed" if not wrong else "violated", wrong)
    hyp = {"P = h(K), independent": str(h_ok), "min(h/t - h')": f"{(-slack).min():+.3e}"}
    wrong = [row.d for row, m in zip(small, mom) if not (m.int_ru2 < m.int_rKu < m.int_rK2)]
    report("thmA2_lower", h_ok and bool(np.all(slack <= SLACK_TOL)), hyp,
           "int r u^2 < int r K u < int r K^2 for small d", obs,
           "confirmed" if not wrong else "violated", wrong)

    # cor23_limit: P proportional to K/r => M(d) -> int K as d -> inf.
    hyp = {"P*r/K constant": f"{p_prop_k_over_r} (spread {prk_spread:.1e})"}
    gap = abs(rows[-1].M - int_K)
    report("cor23_limit", p_prop_k_over_r, hyp, f"|M(d_max) - int K| <= {LIMIT_TOL:.0%} of int K",
           f"M(d_max)={rows[-1].M:.8f}, int K={int_K:.8f}, beta*int P={t.m_infinity:.8f}",
           "confirmed" if gap <= LIMIT_TOL * abs(int_K) else "violated",
           [] if gap <= LIMIT_TOL * abs(int_K) else [rows[-1].d])

    # lou_conjecture_probe: (P constant, r proportional to K): M(d) unimodal.
    prof = classify_profile(t) if len(rows) >= 5 else None
    P_const = _is_constant(Pv)
    hyp = {"P*r/K constant": str(p_prop_k_over_r), "r non-constant": str(not r_const),
           "P constant": str(P_const)}
    ok = p_prop_k_over_r and not r_const
    if prof is None:
        observed, verdict = "too few rows to classify", "indeterminate"
    else:
        observed = (f"shape={prof.shape}, interior maxima={prof.n_interior_maxima}, "
                    f"slope sign changes={prof.n_sign_changes_of_slope}, argmax d={prof.argmax_d:.4g}, "
                    f"max M={t.M.max():.6f}")
        if prof.shape == "unimodal_max":
            verdict = "confirmed"
        else:
            # the conjecture only speaks about constant P
            verdict = "violated" if P_const else "indeterminate"
    report("lou_conjecture_probe", ok, hyp,
           "unimodal M(d) (conjectured for constant P; not implied for non-constant P)",
           observed, verdict)
    return out


def _declared_h_matches(h_expr, K: ScalarField, P: ScalarField) -> bool:
    hk = np.array([evaluate(h_expr, k) for k in K.values])
    return float(np.abs(hk - P.values).max()) <= 1e-10 * P.sup_norm()
