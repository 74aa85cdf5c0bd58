"""Monte Carlo engine: declarative configs, rejection-frequency tables, presets."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, EllsymError
from .estimators import EstimatorChoice
from .procedures import run_test, validate_test_name
from .radial import DENSITY_SCALES
from .samplers import AlternativeSpec, RngStream
from .statdist import cached_null_table

log = logging.getLogger(__name__)

FAILURE_SHARE = 0.01
REJECT, ACCEPT, FAILED = 1, 0, -1


@dataclass(frozen=True)
class TestSpec:
    """One test of the battery together with its estimator and reference options.

    ``theta0`` is the hypothesized center of the specified-location tests;
    ``None`` means the center of each alternative.
    """

    __test__ = False

    name: str
    estimators: EstimatorChoice = field(default_factory=EstimatorChoice)
    reference_scaling: str = "standardized"
    theta0: tuple | None = None

    def __post_init__(self):
        validate_test_name(self.name)
        if self.reference_scaling not in DENSITY_SCALES:
            raise ConfigError(f"reference_scaling must be one of {DENSITY_SCALES}")
        if self.theta0 is not None:
            object.__setattr__(self, "theta0", tuple(float(v) for v in self.theta0))

    @property
    def label(self) -> str:
        if self.reference_scaling == "standardized":
            return self.name
        return f"{self.name}[{self.reference_scaling}]"

    def run(self, data, center):
        theta0 = self.theta0 if self.theta0 is not None else center
        return run_test(self.name, data, theta0, self.estimators, reference_scaling=self.reference_scaling)

    def to_dict(self) -> dict:
        out = {"name": self.name, "location": self.estimators.location, "scatter": self.estimators.scatter}
        if self.reference_scaling != "standardized":
            out["reference_scaling"] = self.reference_scaling
        if self.theta0 is not None:
            out["theta0"] = list(self.theta0)
        return out

    @classmethod
    def from_obj(cls, obj) -> "TestSpec":
        """Accepts a bare test name or a dict with ``name`` and options."""
        if isinstance(obj, str):
            return cls(obj)
        if not isinstance(obj, dict) or "name" not in obj:
            raise ConfigError(f"test entry must be a name or an object with 'name', got {obj!r}")
        unknown = set(obj) - {"name", "location", "scatter", "reference_scaling", "theta0"}
        if unknown:
            raise ConfigError(f"unknown test options {sorted(unknown)}")
        choice = EstimatorChoice(obj.get("location", "mean"), obj.get("scatter", "tyler"))
        return cls(obj["name"], choice, obj.get("reference_scaling", "standardized"), obj.get("theta0"))


@dataclass(frozen=True)
class SimulationConfig:
    """Declarative Monte Carlo experiment.

    Every alternative is sampled ``replications`` times with ``RngStream(seed, r)``
    for replication ``r``, and every test of the battery runs on the same draw.
    """

    d: int
    n: int
    replications: int
    alternatives: tuple
    tests: tuple
    alpha: float = 0.05
    seed: int = 0
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(self, "tests", tuple(self.tests))
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.n < 2 or self.d < 1:
            raise ConfigError("need n >= 2 and d >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not self.alternatives or not self.tests:
            raise ConfigError("a simulation needs at least one alternative and one test")
        for alt in self.alternatives:
            if alt.dim != self.d:
                raise ConfigError(f"alternative {alt.label!r} has dimension {alt.dim}, config has d={self.d}")
        for t in self.tests:
            validate_test_name(t.name, self.d)
            if t.theta0 is not None and len(t.theta0) != self.d:
                raise ConfigError(f"test {t.name!r} has theta0 of length {len(t.theta0)}, config has d={self.d}")
        labels = [a.label for a in self.alternatives]
        if len(set(labels)) != len(labels):
            raise ConfigError("alternative labels must be unique")

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "n": self.n,
            "replications": self.replications,
            "alpha": self.alpha,
            "seed": self.seed,
            "alternatives": [a.to_dict() for a in self.alternatives],
            "tests": [t.to_dict() for t in self.tests],
            "workers": self.workers,
        }
        if self.output is not None:
            out["output"] = self.output
        return out

    def digest(self) -> str:
        """Hash of the fields that determine the results (output path and workers excluded)."""
        obj = self.to_dict()
        obj.pop("output", None)
        obj.pop("workers", None)
        return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, obj: dict, **overrides) -> "SimulationConfig":
        """Build from parsed JSON; non-``None`` keyword overrides replace fields."""
        obj = {**obj, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(obj) - {"d", "n", "replications", "alpha", "seed", "alternatives", "tests", "output", "workers"}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        try:
            return cls(
                d=int(obj["d"]),
                n=int(obj["n"]),
                replications=int(obj["replications"]),
                alternatives=tuple(AlternativeSpec.from_dict(a) for a in obj["alternatives"]),
                tests=tuple(TestSpec.from_obj(t) for t in obj["tests"]),
                alpha=float(obj.get("alpha", 0.05)),
                seed=int(obj.get("seed", 0)),
                output=obj.get("output"),
                workers=int(obj.get("workers", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"config is missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, EllsymError):
                raise
            raise ConfigError(f"malformed config: {exc}") from None

    @classmethod
    def load(cls, path, **overrides) -> "SimulationConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(obj, **overrides)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

ROW_FIELDS = ("alternative", "parameter", "test", "rejection_frequency", "rejections", "valid", "failures", "N", "seed", "error")


@dataclass(frozen=True)
class ResultRow:
    alternative: str
    parameter: str
    test: str
    rejection_frequency: float | None
    rejections: int
    valid: int
    failures: int
    N: int
    seed: int
    error: str = ""


@dataclass(frozen=True)
class ResultTable:
    rows: tuple
    config_hash: str
    version: str = __version__

    @property
    def failed_cells(self) -> list[ResultRow]:
        return [r for r in self.rows if r.rejection_frequency is None]

    def frequency(self, alternative: str, test: str) -> float | None:
        for r in self.rows:
            if r.alternative == alternative and r.test == test:
                return r.rejection_frequency
        raise KeyError((alternative, test))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={self.config_hash},version={self.version}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            freq = "" if r.rejection_frequency is None else repr(r.rejection_frequency)
            w.writerow([r.alternative, r.parameter, r.test, freq, r.rejections, r.valid, r.failures, r.N, r.seed, r.error])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ConfigError("result table lacks its metadata line")
        meta = dict(kv.split("=", 1) for kv in lines[0][2:].split(","))
        reader = csv.reader(lines[1:])
        header = next(reader)
        if tuple(header) != ROW_FIELDS:
            raise ConfigError(f"unexpected result columns {header}")
        rows = []
        for rec in reader:
            a, p, t, freq, rej, val, fail, N, seed, err = rec
            rows.append(
                ResultRow(a, p, t, None if freq == "" else float(freq), int(rej), int(val), int(fail), int(N), int(seed), err)
            )
        return cls(tuple(rows), meta["config_hash"], meta.get("version", ""))

    @classmethod
    def load(cls, path) -> "ResultTable":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def parameter_label(alt: AlternativeSpec) -> str:
    """Short description of the asymmetry parameter of an alternative."""
    p = alt.params
    if alt.family == "gse":
        return "lam=(" + ",".join(f"{v:g}" for v in p["lam"]) + ")"
    if alt.family == "sas":
        return "eps=(" + ",".join(f"{v:g}" for v in p["eps"]) + ")"
    if alt.family == "gauss_mixture":
        return "w=(" + ",".join(f"{v:g}" for v in p["weights"]) + ")"
    return ""


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


def _outcomes(cfg: SimulationConfig, alt: AlternativeSpec, reps: range) -> np.ndarray:
    """Outcome codes (reject/accept/failed) for ``reps`` x tests."""
    out = np.empty((len(reps), len(cfg.tests)), dtype=np.int8)
    for i, r in enumerate(reps):
        x = alt.sample(cfg.n, RngStream(cfg.seed, r))
        for j, t in enumerate(cfg.tests):
            try:
                res = t.run(x, alt.theta)
                out[i, j] = REJECT if res.p_value < cfg.alpha else ACCEPT
            except EllsymError as exc:
                log.debug("replication %d, %s failed: %s", r, t.label, exc)
                out[i, j] = FAILED
    return out


def _chunk_job(args):
    cfg, k, start, stop = args
    return _outcomes(cfg, cfg.alternatives[k], range(start, stop))


def _warm_null_tables(cfg: SimulationConfig) -> None:
    # populate the Baringhaus cache once, before any worker reads it
    if any(t.name == "baringhaus" for t in cfg.tests):
        cached_null_table("baringhaus", cfg.d, cfg.n)


def _cell(alt, test, codes, cfg) -> ResultRow:
    N = cfg.replications
    failures = int(np.sum(codes == FAILED))
    valid = N - failures
    rejections = int(np.sum(codes == REJECT))
    if failures and failures >= FAILURE_SHARE * N:
        msg = f"{failures} of {N} replications failed (limit: below {FAILURE_SHARE:.0%})"
        log.error("%s / %s: %s", alt.label, test.label, msg)
        return ResultRow(alt.label, parameter_label(alt), test.label, None, rejections, valid, failures, N, cfg.seed, msg)
    if failures:
        log.warning("%s / %s: %d failed replications excluded", alt.label, test.label, failures)
    return ResultRow(alt.label, parameter_label(alt), test.label, rejections / valid, rejections, valid, failures, N, cfg.seed)


def run_simulation(cfg: SimulationConfig) -> ResultTable:
    """Rejection frequency of every test under every alternative.

    Replications that raise a package error are counted as failures and left
    out of the denominator when they are fewer than 1% of ``N``; otherwise the
    cell carries an error message and no frequency. The result does not depend
    on ``cfg.workers``.
    """
    _warm_null_tables(cfg)
    N = cfg.replications
    if cfg.workers == 1:
        blocks = [_outcomes(cfg, alt, range(N)) for alt in cfg.alternatives]
    else:
        size = max(1, math.ceil(N / (4 * cfg.workers)))
        jobs = [(cfg, k, s, min(s + size, N)) for k in range(len(cfg.alternatives)) for s in range(0, N, size)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
        per_alt = -(-N // size)
        blocks = [np.concatenate(parts[k * per_alt : (k + 1) * per_alt]) for k in range(len(cfg.alternatives))]
    rows = []
    for alt, codes in zip(cfg.alternatives, blocks):
        for j, t in enumerate(cfg.tests):
            rows.append(_cell(alt, t, codes[:, j], cfg))
    table = ResultTable(tuple(rows), cfg.digest())
    if cfg.output:
        table.save(cfg.output)
    return table


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

SIGMA3 = ((2.0, 1.0, 1.0), (1.0, 3.0, 2.0), (1.0, 2.0, 5.0))
ORIGIN3 = (0.0, 0.0, 0.0)


def _gse(kernel: str, lam, label: str) -> AlternativeSpec:
    scaling = "standardized" if kernel == "gaussian" else "raw"
    params = {"kernel": kernel, "lam": list(lam), "lam_metric": "marginal"}
    return AlternativeSpec("gse", ORIGIN3, SIGMA3, params, label, scaling)


SPECIFIED_LAMBDAS = ((0, 0, 0), (0.1, -0.2, 0), (0.3, -0.6, 0), (0.1, 0.1, 0.1), (0.2, 0.2, 0.2), (0.3, 0.3, 0.3))
UNSPECIFIED_LAMBDAS = ((0, 0, 0), (1, -2, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3))
SAS_EPS = ((0, 0, 0), (0.15, -0.2, 0), (0.15, 0.15, 0.15), (0.3, 0.3, 0.3), (0.45, 0.45, 0.45))


def _lam_tag(lam) -> str:
    return ",".join(f"{v:g}" for v in lam)


def preset_specified(replications: int = 1000, seed: int = 0, kernels=("gaussian", "t2.1", "t4.1", "t8")) -> SimulationConfig:
    """Specified-location battery at ``theta0 = 0`` on skew-normal and skew-t alternatives, d=3, n=100."""
    alts = [_gse(k, lam, f"skew-{k}({_lam_tag(lam)})") for k in kernels for lam in SPECIFIED_LAMBDAS]
    tests = (TestSpec("specified"), TestSpec("baringhaus"), TestSpec("cassart-pg-specified"))
    return SimulationConfig(3, 100, replications, tuple(alts), tests, seed=seed)


def _unspecified_tests() -> tuple:
    refs = ("t2.1", "t4", "t8")
    return tuple(TestSpec(f"semiparam-{r}", reference_scaling="raw") for r in refs) + (TestSpec("cassart-pg"),)


def preset_unspecified(
    replications: int = 1000, seed: int = 0, kernels=("gaussian", "t2.1", "t4.1", "t8", "t10")
) -> SimulationConfig:
    """Semiparametric and pseudo-Gaussian battery on skew alternatives, d=3, n=100."""
    alts = [_gse(k, lam, f"skew-{k}({_lam_tag(lam)})") for k in kernels for lam in UNSPECIFIED_LAMBDAS]
    return SimulationConfig(3, 100, replications, tuple(alts), _unspecified_tests(), seed=seed)


def preset_sas(replications: int = 1000, seed: int = 0) -> SimulationConfig:
    """Semiparametric and pseudo-Gaussian battery on sinh-arcsinh alternatives, d=3, n=100."""
    alts = []
    for kernel in ("gaussian", "t4.1"):
        for eps in SAS_EPS:
            alts.append(AlternativeSpec("sas", ORIGIN3, SIGMA3, {"kernel": kernel, "eps": list(eps)}, f"sas-{kernel}({_lam_tag(eps)})"))
    return SimulationConfig(3, 100, replications, tuple(alts), _unspecified_tests(), seed=seed)


PRESETS = {"specified": preset_specified, "unspecified": preset_unspecified, "sas": preset_sas}


# ---------------------------------------------------------------------------
# pitfall experiment
# ---------------------------------------------------------------------------

PITFALL_DIM = 10
PITFALL_SHIFT = 6.0


@dataclass(frozen=True)
class PitfallReport:
    """2 x 2 rejection frequencies: scenarios (a)/(b) by specified/semiparametric test."""

    table: ResultTable
    replications: int
    seed: int

    def frequency(self, scenario: str, test: str) -> float | None:
        name = {"specified": "specified", "semiparam": "semiparam-t4[raw]"}[test]
        return self.table.frequency(f"scenario-{scenario}", name)

    def render(self) -> str:
        lines = [f"scenario,specified,semiparam-t4  (N={self.replications}, seed={self.seed})"]
        for sc in ("a", "b"):
            vals = [self.frequency(sc, t) for t in ("specified", "semiparam")]
            lines.append(f"{sc}," + ",".join("error" if v is None else f"{v:.3f}" for v in vals))
        return "\n".join(lines)


def pitfall_config(replications: int = 500, seed: int = 0, n: int = 100, workers: int = 1) -> SimulationConfig:
    """Mixture ``0.8 N(10 e1, I) + 0.2 N(-10 e1, I)`` shifted by ``-(+6) e1`` (a) and ``-(-6) e1`` (b).

    Scenario (a) has mean zero, so the specified test at the origin holds its
    level although the law is far from elliptical; scenario (b) moves the mean
    away from the origin. The unspecified test sees the same shape in both.
    """
    d = PITFALL_DIM
    e1 = np.eye(d)[0]
    eye = np.eye(d).tolist()
    base = {"weights": [0.8, 0.2], "mu1": (10 * e1).tolist(), "mu2": (-10 * e1).tolist(), "sigma1": eye, "sigma2": eye}
    alts = tuple(
        AlternativeSpec("gauss_mixture", tuple(-shift * e1), None, dict(base), f"scenario-{tag}")
        for tag, shift in (("a", PITFALL_SHIFT), ("b", -PITFALL_SHIFT))
    )
    tests = (TestSpec("specified", theta0=(0.0,) * d), TestSpec("semiparam-t4", reference_scaling="raw"))
    return SimulationConfig(d, n, replications, alts, tests, seed=seed, workers=workers)


def run_pitfall(replications: int = 500, seed: int = 0, n: int = 100, workers: int = 1) -> PitfallReport:
    cfg = pitfall_config(replications, seed, n, workers)
    return PitfallReport(run_simulation(cfg), replications, seed)


def with_overrides(cfg: SimulationConfig, **kw) -> SimulationConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
