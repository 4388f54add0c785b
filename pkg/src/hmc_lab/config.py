"""Experiment configuration files.

A configuration is an INI file with three required sections and one optional
one::

    [experiment]
    experiment = couple          ; sample | couple | integrate-check | convergence
    repetitions = 1
    output_dir = runs/couple     ; optional
    x0 = 1, 0                    ; optional start position

    [potential]
    kind = diagonal              ; spherical | diagonal | dense | perturbed
    dim = 2
    coefficients = 0.5, 2        ; diagonal only

    [sampler]
    sampler = idealized_hmc      ; idealized_hmc | unadjusted_hmc | rwm | ula
    T = pi / 2
    k = 10
    seed = 0

    [expectations]
    distance_step_1 = <= 1e-10

Real-valued fields accept arithmetic on numbers, ``pi``, ``e`` and ``sqrt``.
Unknown sections and keys are rejected.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field, fields

from .dynamics import Scheme
from .potentials import PotentialKind
from .samplers import HMC_KINDS, SamplerKind

EXPERIMENTS = ("sample", "couple", "integrate-check", "convergence")
COMPARATORS = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "==": operator.eq, "!=": operator.ne,
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    dim: int
    coefficients: tuple[float, ...] | None = None
    spectrum: tuple[float, ...] | None = None
    perturbation: float | None = None
    spectrum_seed: int | None = None


@dataclass(frozen=True)
class SamplerSpec:
    sampler: str | None = None
    T: float | None = None
    eta: float | None = None
    k: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class Expectation:
    metric: str
    comparator: str
    threshold: float

    def holds(self, value: float) -> bool:
        return bool(COMPARATORS[self.comparator](value, self.threshold))

    def __str__(self):
        return f"{self.metric} {self.comparator} {_fmt(self.threshold)}"


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description.

    Attributes:
        experiment: One of ``EXPERIMENTS``.
        potential: Target potential description.
        sampler: Chain description (integrate-check uses only T and eta).
        repetitions: Independent chains or coupled pairs.
        output_dir: Where CSV files go; ``None`` defers to the runner.
        overwrite: Allow replacing existing output files.
        x0: Start position (default: origin; random for integrate-check).
        v0: Start velocity for integrate-check.
        scheme: Integrator checked by integrate-check.
        y0_seed: Seed of the stationary Y-chain starts in couple.
        epsilon: Distance threshold for steps-to-epsilon metrics.
        burn_in: Leading steps dropped from sample statistics.
        expectations: Pass/fail conditions on summary metrics.
    """

    experiment: str
    potential: PotentialSpec
    sampler: SamplerSpec
    repetitions: int = 1
    output_dir: str | None = None
    overwrite: bool = False
    x0: tuple[float, ...] | None = None
    v0: tuple[float, ...] | None = None
    scheme: str | None = None
    y0_seed: int | None = None
    epsilon: float | None = None
    burn_in: int = 0
    expectations: tuple[Expectation, ...] = field(default_factory=tuple)


_NESTED = {"potential", "sampler", "expectations", "experiment"}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def _eval_real(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value,
                                                         (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(
                node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1
                and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot evaluate {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_vector(text: str) -> tuple[float, ...]:
    parts = [s for s in text.replace("\n", ",").split(",") if s.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_eval_real(s) for s in parts)


_PARSERS = {
    ("experiment", "experiment"): str.strip,
    ("experiment", "repetitions"): _parse_int,
    ("experiment", "output_dir"): str.strip,
    ("experiment", "overwrite"): _parse_bool,
    ("experiment", "x0"): _parse_vector,
    ("experiment", "v0"): _parse_vector,
    ("experiment", "scheme"): str.strip,
    ("experiment", "y0_seed"): _parse_int,
    ("experiment", "epsilon"): _eval_real,
    ("experiment", "burn_in"): _parse_int,
    ("potential", "kind"): str.strip,
    ("potential", "dim"): _parse_int,
    ("potential", "coefficients"): _parse_vector,
    ("potential", "spectrum"): _parse_vector,
    ("potential", "perturbation"): _eval_real,
    ("potential", "spectrum_seed"): _parse_int,
    ("sampler", "sampler"): str.strip,
    ("sampler", "t"): _eval_real,
    ("sampler", "eta"): _eval_real,
    ("sampler", "k"): _parse_int,
    ("sampler", "seed"): _parse_int,
}


def _parse_expectation(metric: str, text: str) -> Expectation:
    text = text.strip()
    for op in sorted(COMPARATORS, key=len, reverse=True):
        if text.startswith(op):
            return Expectation(metric, op, _eval_real(text[len(op):]))
    raise ValueError(f"expected '<op> <number>' with op in "
                     f"{', '.join(COMPARATORS)}, got {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises:
        ConfigError: listing every malformed, missing, unknown or
            inconsistent field (``section.key: reason``).
    """
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"),
        strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None

    errors = []
    values = {"experiment": {}, "potential": {}, "sampler": {}}
    expectations = []
    for section in cp.sections():
        if section not in _NESTED:
            errors.append(f"{section}: unknown section")
            continue
        for key, raw in cp.items(section):
            if section == "expectations":
                try:
                    expectations.append(_parse_expectation(key, raw))
                except ValueError as exc:
                    errors.append(f"expectations.{key}: {exc}")
                continue
            parser = _PARSERS.get((section, key.lower()))
            if parser is None:
                errors.append(f"{section}.{key}: unknown key")
                continue
            name = "T" if (section, key.lower()) == ("sampler", "t") else (
                key.lower())
            try:
                values[section][name] = parser(raw)
            except ValueError as exc:
                errors.append(f"{section}.{key}: {exc}")
    for section in ("experiment", "potential", "sampler"):
        if not cp.has_section(section):
            errors.append(f"{section}: missing section")

    errors.extend(_validate(values))
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        potential=PotentialSpec(**values["potential"]),
        sampler=SamplerSpec(**values["sampler"]),
        expectations=tuple(expectations),
        **values["experiment"])


def _validate(values) -> list[str]:
    errors = []
    exp, pot, smp = values["experiment"], values["potential"], values["sampler"]

    experiment = exp.get("experiment")
    if experiment is None:
        errors.append("experiment.experiment: missing")
    elif experiment not in EXPERIMENTS:
        errors.append(f"experiment.experiment: must be one of "
                      f"{', '.join(EXPERIMENTS)}")
    if exp.get("repetitions", 1) < 1:
        errors.append("experiment.repetitions: must be positive")
    if exp.get("burn_in", 0) < 0:
        errors.append("experiment.burn_in: must be non-negative")
    if "epsilon" in exp and not exp["epsilon"] > 0:
        errors.append("experiment.epsilon: must be positive")

    kind = pot.get("kind")
    dim = pot.get("dim")
    kinds = [k.value for k in PotentialKind]
    if kind is None:
        errors.append("potential.kind: missing")
    elif kind not in kinds:
        errors.append(f"potential.kind: must be one of {', '.join(kinds)}")
        kind = None
    if dim is None:
        errors.append("potential.dim: missing")
    elif dim < 1:
        errors.append("potential.dim: must be positive")
        dim = None
    need = {"spherical": (), "diagonal": ("coefficients",),
            "dense": ("spectrum",), "perturbed": ("spectrum", "perturbation")}
    allowed = {"spherical": set(), "diagonal": {"coefficients"},
               "dense": {"spectrum", "spectrum_seed"},
               "perturbed": {"spectrum", "perturbation"}}
    if kind is not None:
        for key in need[kind]:
            if key not in pot:
                errors.append(f"potential.{key}: required for {kind}")
        for key in ("coefficients", "spectrum", "perturbation",
                    "spectrum_seed"):
            if key in pot and key not in allowed[kind]:
                errors.append(f"potential.{key}: not used by {kind}")
        for key in ("coefficients", "spectrum"):
            vec = pot.get(key)
            if vec is None:
                continue
            if dim is not None and len(vec) != dim:
                errors.append(f"potential.{key}: has {len(vec)} entries, "
                              f"dim is {dim}")
            if any(c <= 0 for c in vec):
                errors.append(f"potential.{key}: entries must be positive")
        if pot.get("perturbation", 0.0) < 0:
            errors.append("potential.perturbation: must be non-negative")

    for key in ("x0", "v0"):
        if key in exp and dim is not None and len(exp[key]) != dim:
            errors.append(f"experiment.{key}: has {len(exp[key])} entries, "
                          f"dim is {dim}")

    sampler = smp.get("sampler")
    samplers = [s.value for s in SamplerKind]
    if sampler is not None and sampler not in samplers:
        errors.append(f"sampler.sampler: must be one of {', '.join(samplers)}")
        sampler = None
    for key in ("T", "eta"):
        if key in smp and not smp[key] > 0:
            errors.append(f"sampler.{key}: must be > 0")
    if "k" in smp and smp["k"] < 0:
        errors.append("sampler.k: must be non-negative")
    if not 0 <= smp.get("seed", 0) < 2 ** 64:
        errors.append("sampler.seed: must fit in an unsigned 64-bit integer")

    if experiment == "integrate-check":
        scheme = exp.get("scheme")
        schemes = [s.value for s in Scheme]
        if scheme is None:
            errors.append("experiment.scheme: required for integrate-check")
        elif scheme not in schemes:
            errors.append(f"experiment.scheme: must be one of "
                          f"{', '.join(schemes)}")
        else:
            if "T" not in smp:
                errors.append("sampler.T: required for integrate-check")
            if scheme != "exact" and "eta" not in smp:
                errors.append(f"sampler.eta: required for {scheme}")
            if scheme == "exact" and kind == "perturbed":
                errors.append("experiment.scheme: exact flow needs a "
                              "quadratic potential")
    elif experiment in EXPERIMENTS:
        if "scheme" in exp:
            errors.append(f"experiment.scheme: not used by {experiment}")
        if sampler is None and "sampler" not in smp:
            errors.append(f"sampler.sampler: required for {experiment}")
        if "k" not in smp:
            errors.append(f"sampler.k: required for {experiment}")
        if sampler is not None:
            skind = SamplerKind(sampler)
            if skind in HMC_KINDS and "T" not in smp:
                errors.append(f"sampler.T: required for {sampler}")
            if skind is SamplerKind.IDEALIZED_HMC and "eta" in smp:
                errors.append(f"sampler.eta: not used by {sampler}")
            if skind not in HMC_KINDS and "T" in smp:
                errors.append(f"sampler.T: not used by {sampler}")
            if skind is not SamplerKind.IDEALIZED_HMC and "eta" not in smp:
                errors.append(f"sampler.eta: required for {sampler}")
            if experiment == "couple" and skind not in HMC_KINDS:
                errors.append("sampler.sampler: couple needs an HMC sampler")
        if experiment == "convergence" and kind == "perturbed":
            errors.append("potential.kind: convergence needs a Gaussian "
                          "(quadratic) target")
    return errors


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` as configuration text that parses back to ``cfg``."""
    lines = ["[experiment]"]
    for f in fields(ExperimentConfig):
        if f.name in ("potential", "sampler", "expectations"):
            continue
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"{f.name} = {_fmt(v)}")
    for section, obj in (("potential", cfg.potential),
                         ("sampler", cfg.sampler)):
        lines += ["", f"[{section}]"]
        for f in fields(obj):
            v = getattr(obj, f.name)
            if v is not None:
                lines.append(f"{f.name} = {_fmt(v)}")
    if cfg.expectations:
        lines += ["", "[expectations]"]
        lines += [f"{e.metric} = {e.comparator} {_fmt(e.threshold)}"
                  for e in cfg.expectations]
    return "\n".join(lines) + "\n"
