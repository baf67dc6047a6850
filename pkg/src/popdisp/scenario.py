"""Scenario definitions: coefficient expressions, grids, d-ranges, solver options.

A scenario file is UTF-8 text with one ``key = value`` per line and ``#``
comments.  Expressions are double-quoted strings, everything else is a
number::

    name = "ex4.4"
    K = "2+cos(pi*x)"
    P = "2-cos(2*pi*x)"
    r_lambda = 1
    r_alpha = 1
    n_cells = 512
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .expr import DomainError, Expression, ExpressionSyntaxError, parse, sample, to_text
from .grid import GridSpec, ScalarField
from .solver import SolverOptions

__all__ = [
    "Scenario", "RExpr", "RPower", "DGridSpec", "Declarations",
    "ConfigError", "UnknownExample",
    "load_scenario", "load_scenario_file", "serialize", "builtin_example", "BUILTIN_IDS",
]


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, position=None):
        where = []
        if key is not None:
            where.append(f"key {key}")
        if position is not None:
            where.append(f"position {position}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))
        self.key = key
        self.position = position


class UnknownExample(KeyError):
    pass


@dataclass(frozen=True)
class RExpr:
    expr: Expression


@dataclass(frozen=True)
class RPower:
    """r = alpha * (K/P)^lam."""
    lam: float
    alpha: float = 1.0


@dataclass(frozen=True)
class DGridSpec:
    d_min: float = 1e-4
    d_max: float = 1e4
    points: int = 81

    def values(self) -> np.ndarray:
        return np.logspace(math.log10(self.d_min), math.log10(self.d_max), self.points)


@dataclass(frozen=True)
class Declarations:
    """Structural facts about a scenario that samples alone cannot certify.

    r_vs_kp / r_vs_k: "positive" or "negative" when r is a monotone function
    of K/P (resp. K).  p_of_k: expression h in the variable x with P = h(K).
    """
    r_vs_kp: Optional[str] = None
    r_vs_k: Optional[str] = None
    p_of_k: Optional[Expression] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    K_expr: Expression
    P_expr: Expression
    r_spec: Union[RExpr, RPower]
    grid: GridSpec = GridSpec()
    d_grid_spec: DGridSpec = DGridSpec()
    opts: SolverOptions = SolverOptions()
    declared: Declarations = field(default_factory=Declarations, compare=False)

    @property
    def power(self) -> Optional[RPower]:
        return self.r_spec if isinstance(self.r_spec, RPower) else None

    def d_grid(self) -> np.ndarray:
        return self.d_grid_spec.values()

    def fields(self, grid: GridSpec | None = None) -> tuple[ScalarField, ScalarField, ScalarField]:
        """Sample (K, P, r) on ``grid`` (default: the scenario grid)."""
        g = grid or self.grid
        K = sample(self.K_expr, g)
        P = sample(self.P_expr, g)
        if isinstance(self.r_spec, RPower):
            r = ScalarField(g, self.r_spec.alpha * (K.values / P.values) ** self.r_spec.lam)
        else:
            r = sample(self.r_spec.expr, g)
        return K, P, r

    def with_lambda(self, lam: float, alpha: float | None = None) -> "Scenario":
        if alpha is None:
            alpha = self.power.alpha if self.power else 1.0
        base = self.name.split("[")[0]
        return replace(self, name=f"{base}[lambda={lam:g}]", r_spec=RPower(float(lam), float(alpha)))

    def with_grid(self, n_cells: int) -> "Scenario":
        return replace(self, grid=GridSpec(self.grid.x0, self.grid.x1, n_cells))

    def validate(self) -> None:
        """Sampled K, P, r must be strictly positive (checked at 4x resolution too)."""
        for g in (self.grid, self.grid.refined(4)):
            try:
                fields = self.fields(g)
            except DomainError as exc:
                key = _which_failed(self, g)
                raise ConfigError(f"{key} cannot be evaluated: {exc}", key=key) from exc
            for key, f in zip(("K", "P", "r"), fields):
                if f.min() <= 0:
                    i = int(np.argmin(f.values))
                    raise ConfigError(f"{key} non-positive at x={f.x[i]:g} (value {f.values[i]:g})", key=key)


def _which_failed(sc: Scenario, g: GridSpec) -> str:
    for key, e in (("K", sc.K_expr), ("P", sc.P_expr)):
        try:
            sample(e, g)
        except DomainError:
            return key
    return "r"


_KNOWN_KEYS = ("name", "K", "P", "r", "r_lambda", "r_alpha", "x0", "x1", "n_cells",
               "d_min", "d_max", "d_points", "newton_tol", "pt_tol")
_EXPR_KEYS = ("K", "P", "r")


def _split_line(line: str, lineno: int):
    """Return (key, raw_value, value_column) or None for blank/comment lines."""
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            break
        out.append(ch)
    text = "".join(out).strip()
    if not text:
        return None
    if in_str:
        raise ConfigError("unterminated string", position=f"line {lineno}")
    if "=" not in text:
        raise ConfigError("expected 'key = value'", position=f"line {lineno}")
    key, _, value = text.partition("=")
    key, value = key.strip(), value.strip()
    col = line.index("=") + 1 + (len(line[line.index("=") + 1:]) - len(line[line.index("=") + 1:].lstrip()))
    return key, value, col


def _parse_number(key: str, raw: str, lineno: int, integer=False):
    try:
        if integer:
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError
        return v
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{key} must be {kind}, got {raw!r}", key=key, position=f"line {lineno}") from None


def load_scenario(text: str) -> Scenario:
    """Parse scenario-file text, compile expressions and check positivity."""
    raw: dict[str, tuple[str, int, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        item = _split_line(line, lineno)
        if item is None:
            continue
        key, value, col = item
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key}", key=key, position=f"line {lineno}")
        if key in raw:
            raise ConfigError(f"duplicate key {key}", key=key, position=f"line {lineno}")
        raw[key] = (value, lineno, col)

    for key in ("K", "P"):
        if key not in raw:
            raise ConfigError(f"missing key {key}", key=key)
    if "r" in raw and ("r_lambda" in raw or "r_alpha" in raw):
        raise ConfigError("give either r or r_lambda/r_alpha, not both", key="r")
    if "r" not in raw and "r_lambda" not in raw:
        raise ConfigError("missing key r (or r_lambda)", key="r")

    def string(key):
        value, lineno, col = raw[key]
        if len(value) < 2 or value[0] != '"' or value[-1] != '"':
            raise ConfigError(f"{key} must be a double-quoted string", key=key, position=f"line {lineno}")
        return value[1:-1], lineno, col + 1

    def expression(key):
        src, lineno, col = string(key)
        try:
            return parse(src)
        except ExpressionSyntaxError as exc:
            raise ConfigError(f"bad expression for {key}: {exc.message}", key=key,
                              position=f"line {lineno}, column {col + exc.position + 1}") from exc

    def number(key, default, integer=False):
        if key not in raw:
            return default
        value, lineno, _ = raw[key]
        return _parse_number(key, value, lineno, integer)

    name = string("name")[0] if "name" in raw else "scenario"
    K_expr, P_expr = expression("K"), expression("P")
    if "r" in raw:
        r_spec = RExpr(expression("r"))
    else:
        alpha = number("r_alpha", 1.0)
        if not alpha > 0:
            raise ConfigError("r_alpha must be positive", key="r_alpha")
        r_spec = RPower(number("r_lambda", 1.0), alpha)

    try:
        grid = GridSpec(number("x0", 0.0), number("x1", 1.0), number("n_cells", 512, integer=True))
    except ValueError as exc:
        raise ConfigError(str(exc), key="n_cells") from exc

    d_min, d_max = number("d_min", 1e-4), number("d_max", 1e4)
    points = number("d_points", 81, integer=True)
    if not d_min > 0:
        raise ConfigError("d_min must be positive", key="d_min")
    if not d_max > d_min:
        raise ConfigError("d_max must exceed d_min", key="d_max")
    if points < 2:
        raise ConfigError("d_points must be at least 2", key="d_points")

    defaults = SolverOptions()
    newton_tol = number("newton_tol", defaults.newton_tol)
    pt_tol = number("pt_tol", defaults.pt_tol)
    if not (newton_tol > 0 and pt_tol > 0):
        raise ConfigError("tolerances must be positive", key="newton_tol" if not newton_tol > 0 else "pt_tol")

    sc = Scenario(name, K_expr, P_expr, r_spec, grid, DGridSpec(d_min, d_max, points),
                  replace(defaults, newton_tol=newton_tol, pt_tol=pt_tol))
    sc.validate()
    return sc


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def serialize(sc: Scenario) -> str:
    """Scenario-file text that loads back to an equal scenario."""
    lines = [
        f'name = "{sc.name}"',
        f'K = "{to_text(sc.K_expr)}"',
        f'P = "{to_text(sc.P_expr)}"',
    ]
    if isinstance(sc.r_spec, RPower):
        lines += [f"r_lambda = {sc.r_spec.lam!r}", f"r_alpha = {sc.r_spec.alpha!r}"]
    else:
        lines.append(f'r = "{to_text(sc.r_spec.expr)}"')
    lines += [
        f"x0 = {sc.grid.x0!r}",
        f"x1 = {sc.grid.x1!r}",
        f"n_cells = {sc.grid.n_cells}",
        f"d_min = {sc.d_grid_spec.d_min!r}",
        f"d_max = {sc.d_grid_spec.d_max!r}",
        f"d_points = {sc.d_grid_spec.points}",
        f"newton_tol = {sc.opts.newton_tol!r}",
        f"pt_tol = {sc.opts.pt_tol!r}",
    ]
    return "\n".join(lines) + "\n"


_EX43_K = "0.1+cos(pi*x)+5*cos(pi*x)^2-2*cos(pi*x)^3"
_EX43_P = "1.5-3*cos(pi*x)+cos(pi*x)^2+3*cos(pi*x)^6"

# id -> (K, P, r or lambda, declarations)
_BUILTINS = {
    "ex4.1a": ("(cos(2*pi*x)+2)^2", "sqrt((cos(2*pi*x)+2)^2)", "cos(pi*x)+2",
               dict(p_of_k="sqrt(x)")),
    "ex4.1b": ("(2*x^3-3*x^2+3)*exp(2*x^3-3*x^2)", "exp(2*x^3-3*x^2)", "cos(2*pi*x)+3", {}),
    "ex4.2a": ("2+cos(pi*x)", "1+cos(pi*x)/5", "5/4+cos(pi*x)/4", dict(r_vs_kp="positive")),
    "ex4.2b": ("2+cos(pi*x)", "1+cos(pi*x)/5", "exp(4*cos(pi*x))", dict(r_vs_kp="positive")),
    "ex4.3": (_EX43_K, _EX43_P, f"({_EX43_K})/({_EX43_P})", dict(r_vs_kp="positive")),
    "ex4.4": ("2+cos(pi*x)", "2-cos(2*pi*x)", 1.0, {}),
    "pk_manufactured": ("2+cos(pi*x)", "2+cos(pi*x)", "2+cos(pi*x)",
                        dict(p_of_k="x", r_vs_k="positive")),
    "a1_demo": ("2+cos(pi*x)", "2-cos(pi*x)", "2+cos(pi*x)",
                dict(p_of_k="4-x", r_vs_k="positive", r_vs_kp="positive")),
}

BUILTIN_IDS = tuple(_BUILTINS)


def builtin_example(example_id: str, lam: float | None = None) -> Scenario:
    """One of the built-in parameterizations on (0, 1).

    ``lam`` overrides the exponent of the power family (ex4.4 only).
    """
    try:
        K, P, r, decl = _BUILTINS[example_id]
    except KeyError:
        raise UnknownExample(f"unknown example {example_id!r}; choose from {', '.join(BUILTIN_IDS)}") from None
    if isinstance(r, float):
        r_spec = RPower(r if lam is None else float(lam), 1.0)
    elif lam is not None:
        raise ValueError(f"{example_id} does not use the power family")
    else:
        r_spec = RExpr(parse(r))
    if "p_of_k" in decl:
        decl = dict(decl, p_of_k=parse(decl["p_of_k"]))
    sc = Scenario(example_id, parse(K), parse(P), r_spec, declared=Declarations(**decl))
    if lam is not None:
        sc = sc.with_lambda(lam)
    return sc
