"""Scenario files.

A scenario is a TOML document with tables ``run``, ``domain``, ``A``,
``exponents``, ``K1``, ``K2``, ``f``, ``g`` (all required) and optional
``alpha``, ``beta``, ``sweep``, ``continuation``, ``direction``,
``hypotheses`` and ``output``.  Reals may be written as numbers or as strings
such as ``"pi"``, ``"pi/2"``, ``"2*pi"`` or ``"3/2"``; the exponents ``p``,
``q`` and ``gamma`` are kept as exact rationals.  See the files shipped in
``nonlocal_logistic/scenarios`` for complete examples.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .continuation import ContinuationSettings
from .errors import ConfigurationError
from .geometry import VectorFieldSpec, build_grid
from .nonlocal_terms import KernelSpec, ReactionSpec
from .spectral import CouplingMatrix
from .system import LINEAR, POWER, ProblemSpec

__all__ = [
    "RUN_KINDS",
    "ScenarioConfig",
    "DirectionSettings",
    "load_config",
    "parse_config",
    "shipped_scenarios",
    "parse_real",
    "parse_rational",
]

RUN_KINDS = ("eig", "verify", "branch", "direction", "hypotheses", "identity-check")

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_PI_EXPR = re.compile(rf"^\s*(?:({_NUM})\s*\*\s*)?pi\s*(?:/\s*({_NUM}))?\s*$")


def parse_real(value: Any, name: str) -> float:
    """Number, rational string ``"3/2"`` or multiple of pi (``"pi/2"``, ``"2*pi"``)."""
    if isinstance(value, bool):
        raise ConfigurationError(f"expected a number, got {value!r}", name)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_EXPR.match(value)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigurationError(f"cannot read {value!r} as a real number", name)


def parse_rational(value: Any, name: str) -> Fraction:
    """Exact rational from an int, a decimal float or a string such as ``"5/2"``."""
    if isinstance(value, bool):
        raise ConfigurationError(f"expected a rational, got {value!r}", name)
    try:
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(repr(value))
        if isinstance(value, str):
            return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigurationError(f"cannot read {value!r} as a rational", name)


@dataclass(frozen=True)
class DirectionSettings:
    """Short natural-parameter branch used for direction runs."""

    initial_epsilon: float = 0.0025
    step: float = 0.0025
    max_points: int = 8
    newton_tol: float = 1e-11
    rel_tol: float = 0.25
    benchmark: float | None = None

    def continuation(self) -> ContinuationSettings:
        return ContinuationSettings(
            initial_epsilon=self.initial_epsilon,
            step=self.step,
            max_points=self.max_points,
            newton_tol=self.newton_tol,
            arclength=False,
        )


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    kind: str
    spec: ProblemSpec
    seed: int = 0
    multipliers: tuple[float, ...] = ()
    seed_amplitudes: tuple[float, ...] = (0.05, 0.2)
    check_t_one: bool = False
    newton_tol: float = 1e-10
    continuation: ContinuationSettings = field(default_factory=ContinuationSettings)
    direction: DirectionSettings = field(default_factory=DirectionSettings)
    kernel_eps: float | None = None
    n_random: int = 50
    mode_errors: tuple[tuple[str, str], ...] = ()
    out_dir: str = "out"
    source: str = ""


def _table(doc: dict, key: str, required: bool = True) -> dict:
    if key not in doc:
        if required:
            raise ConfigurationError("missing required table", key)
        return {}
    val = doc[key]
    if not isinstance(val, dict):
        raise ConfigurationError("expected a table", key)
    return val


def _get(table: dict, key: str, prefix: str, default: Any = ...) -> Any:
    if key not in table:
        if default is ...:
            raise ConfigurationError("missing required entry", f"{prefix}.{key}")
        return default
    return table[key]


def _real_array(value: Any, name: str) -> np.ndarray:
    if isinstance(value, (list, tuple)):
        return np.array([_real_array(v, name) for v in value], dtype=float)
    return np.asarray(parse_real(value, name))


def _vector_field(doc: dict, key: str, dim: int) -> VectorFieldSpec:
    tab = _table(doc, key, required=False)
    if not tab:
        return VectorFieldSpec.zero(dim)
    kind = _get(tab, "kind", key)
    params = _real_array(_get(tab, "params", key, []), f"{key}.params")
    try:
        vf = VectorFieldSpec(kind, params)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key) from exc
    return vf


def _kernel(doc: dict, key: str) -> KernelSpec:
    tab = _table(doc, key)
    kind = _get(tab, "kind", key)
    params = _real_array(_get(tab, "params", key), f"{key}.params")
    try:
        return KernelSpec(kind, params)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), key) from exc


def _reaction(doc: dict, key: str, gamma: Fraction) -> ReactionSpec:
    tab = _table(doc, key)
    family = _get(tab, "family", key)
    kw = {}
    for name in ("mu", "c1", "c2"):
        if name in tab:
            kw[name] = parse_real(tab[name], f"{key}.{name}")
    try:
        return ReactionSpec(family, gamma, **kw)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), f"{key}.{exc.field or 'family'}") from exc


def parse_config(
    doc: dict, mesh_scale: int = 1, seed: int | None = None, source: str = "", kind: str | None = None
) -> ScenarioConfig:
    """Validate a parsed TOML document and build the :class:`ScenarioConfig`.

    ``kind`` overrides ``run.kind`` so one scenario file can serve several
    run types.
    """
    run = _table(doc, "run")
    kind = kind or _get(run, "kind", "run")
    if kind not in RUN_KINDS:
        raise ConfigurationError(f"unknown run kind {kind!r}; expected one of {RUN_KINDS}", "run.kind")
    mode = _get(run, "mode", "run")
    if mode not in (LINEAR, POWER):
        raise ConfigurationError(f"unknown mode {mode!r}", "run.mode")

    dom = _table(doc, "domain")
    bounds = _get(dom, "bounds", "domain")
    n = _get(dom, "n", "domain")
    if not isinstance(bounds, list) or not bounds:
        raise ConfigurationError("expected a list of [low, high] pairs", "domain.bounds")
    bounds = [[parse_real(b, "domain.bounds") for b in pair] for pair in bounds]
    n = [int(k) for k in (n if isinstance(n, list) else [n] * len(bounds))]
    if mesh_scale < 1:
        raise ConfigurationError("mesh scale must be a positive integer", "mesh_scale")
    n = [k * int(mesh_scale) for k in n]
    grid = build_grid(len(bounds), bounds, n)

    atab = _table(doc, "A")
    vals = {}
    for name in "abcd":
        vals[name] = parse_real(_get(atab, name, "A"), f"A.{name}")
    A = CouplingMatrix(**vals)

    ex = _table(doc, "exponents")
    p = parse_rational(_get(ex, "p", "exponents"), "exponents.p")
    q = parse_rational(_get(ex, "q", "exponents"), "exponents.q")
    gamma = parse_rational(_get(ex, "gamma", "exponents"), "exponents.gamma")
    if gamma <= 0:
        raise ConfigurationError("must be positive", "exponents.gamma")

    alpha = _vector_field(doc, "alpha", grid.dim)
    beta = _vector_field(doc, "beta", grid.dim)
    K1, K2 = _kernel(doc, "K1"), _kernel(doc, "K2")
    f, g = _reaction(doc, "f", gamma), _reaction(doc, "g", gamma)

    lenient = kind in ("hypotheses", "identity-check")
    theorem_run = bool(run.get("theorem_run", kind == "verify"))
    spec = ProblemSpec(
        mode, grid, A, p, q, alpha, beta, K1, K2, f, g, gamma,
        theorem_run=theorem_run, validate_kernels=not lenient, strict=not lenient,
    )

    sweep = _table(doc, "sweep", required=False)
    cont = _table(doc, "continuation", required=False)
    dirt = _table(doc, "direction", required=False)
    hyp = _table(doc, "hypotheses", required=False)
    out = _table(doc, "output", required=False)
    try:
        settings = ContinuationSettings(**{k: v for k, v in cont.items()})
        dsettings = DirectionSettings(**{k: v for k, v in dirt.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), "continuation") from exc

    return ScenarioConfig(
        name=str(run.get("name", Path(source).stem or "scenario")),
        kind=kind,
        spec=spec,
        seed=int(seed if seed is not None else run.get("seed", 0)),
        multipliers=tuple(parse_real(m, "sweep.multipliers") for m in sweep.get("multipliers", [])),
        seed_amplitudes=tuple(
            parse_real(m, "sweep.seed_amplitudes") for m in sweep.get("seed_amplitudes", [0.05, 0.2])
        ),
        check_t_one=bool(sweep.get("check_t_one", False)),
        newton_tol=parse_real(sweep.get("newton_tol", 1e-10), "sweep.newton_tol"),
        continuation=settings,
        direction=dsettings,
        kernel_eps=parse_real(hyp["kernel_eps"], "hypotheses.kernel_eps") if "kernel_eps" in hyp else None,
        n_random=int(hyp.get("n_random", 50)),
        mode_errors=tuple(spec.mode_violations()),
        out_dir=str(out.get("dir", "out")),
        source=source,
    )


def load_config(
    path, mesh_scale: int = 1, seed: int | None = None, kind: str | None = None
) -> ScenarioConfig:
    """Read and validate a scenario file.

    TOML syntax errors and constraint violations raise
    :class:`ConfigurationError`; syntax errors carry the line and column.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}", "config") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}", "config") from exc
    return parse_config(doc, mesh_scale, seed, source=str(path), kind=kind)


def shipped_scenarios() -> dict[str, Path]:
    """Scenario files bundled with the package, by stem."""
    root = resources.files("nonlocal_logistic") / "scenarios"
    return {Path(str(p)).stem: Path(str(p)) for p in sorted(root.iterdir(), key=str) if str(p).endswith(".toml")}
