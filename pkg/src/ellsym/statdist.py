"""Central and noncentral chi-square laws, Marcum Q, simulated null tables."""

from __future__ import annotations

import hashlib
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .errors import ConfigError, ContractViolation, NumericalFailure

log = logging.getLogger(__name__)

NC_MAX_TERMS = 10_000
NC_REL_TAIL = 1e-12
MIN_TABLE_REPLICATIONS = 1000


def _check_df(d):
    if not d > 0:
        raise ContractViolation(f"degrees of freedom must be positive, got {d}")


def chi2_cdf(x: float, d: float) -> float:
    """Distribution function of the central chi-square law with ``d`` df."""
    _check_df(d)
    if x < 0:
        raise ContractViolation("chi2_cdf requires x >= 0")
    return float(special.gammainc(0.5 * d, 0.5 * x))


def chi2_sf(x: float, d: float) -> float:
    _check_df(d)
    if x < 0:
        raise ContractViolation("chi2_sf requires x >= 0")
    return float(special.gammaincc(0.5 * d, 0.5 * x))


def chi2_quantile(p: float, d: float) -> float:
    """Inverse of :func:`chi2_cdf`; ``p`` must lie strictly inside (0, 1)."""
    _check_df(d)
    if not 0.0 < p < 1.0:
        raise ContractViolation(f"probability must lie in (0, 1), got {p}")
    return float(2.0 * special.gammaincinv(0.5 * d, p))


def noncentral_chi2_sf(x: float, d: float, delta: float) -> float:
    """Survival function of the noncentral chi-square law.

    Evaluated as the Poisson(``delta/2``) mixture of central chi-square
    survival functions with ``d + 2j`` degrees of freedom. Summation starts
    at the Poisson mode and extends in both directions until the Poisson
    mass left outside the summed range is below ``1e-12`` relative to the
    running total.

    Raises
    ------
    NumericalFailure
        If more than 10**4 terms would be required.
    """
    _check_df(d)
    if x < 0 or delta < 0:
        raise ContractViolation("noncentral_chi2_sf requires x >= 0 and delta >= 0")
    if delta == 0:
        return chi2_sf(x, d)
    if x == 0:
        return 1.0
    lam = 0.5 * delta
    h = 0.5 * x

    def weight(j):
        return math.exp(j * math.log(lam) - lam - math.lgamma(j + 1))

    mode = int(math.floor(lam))
    total = weight(mode) * special.gammaincc(0.5 * d + mode, h)
    lo, hi, terms = mode - 1, mode + 1, 1
    up_done = down_done = False
    while not (up_done and down_done):
        if terms > NC_MAX_TERMS:
            raise NumericalFailure("noncentral chi-square series did not converge")
        if not up_done:
            total += weight(hi) * special.gammaincc(0.5 * d + hi, h)
            # P(J > hi) bounds every remaining upper term since the sf is <= 1
            up_done = special.pdtrc(hi, lam) <= NC_REL_TAIL * total
            hi += 1
            terms += 1
        if not down_done:
            if lo < 0:
                down_done = True
            else:
                total += weight(lo) * special.gammaincc(0.5 * d + lo, h)
                down_done = lo == 0 or special.pdtr(lo - 1, lam) <= NC_REL_TAIL * total
                lo -= 1
                terms += 1
        if total == 0.0 and terms > 50 and special.pdtrc(hi, lam) < 1e-300:
            break
    return float(min(1.0, total))


def marcum_q(m: float, a: float, b: float) -> float:
    """Generalized Marcum Q function ``Q_m(a, b)``.

    Uses the identity ``Q_m(a, b) = P(chi'^2_{2m}(a^2) > b^2)``.
    """
    if m < 0.5 or a < 0 or b < 0:
        raise ContractViolation("marcum_q requires m >= 1/2, a >= 0, b >= 0")
    return noncentral_chi2_sf(b * b, 2.0 * m, a * a)


# ---------------------------------------------------------------------------
# simulated null tables
# ---------------------------------------------------------------------------

StatisticFn = Callable[[np.ndarray], float]
_STATISTICS: dict[str, StatisticFn] = {}


def register_null_statistic(name: str, fn: StatisticFn) -> None:
    """Make ``fn`` available to :func:`simulate_null_table` under ``name``.

    ``fn`` receives an ``n x d`` sample from the spherical Gaussian centred
    at the origin and returns the statistic computed with specified
    location 0.
    """
    _STATISTICS[name] = fn


@dataclass(frozen=True)
class NullTable:
    statistic_name: str
    dim: int
    sample_size: int
    quantiles: np.ndarray = field(repr=False)
    seed: int
    replications: int

    def __post_init__(self):
        q = np.asarray(self.quantiles, dtype=float)
        if q.ndim != 1 or len(q) != self.replications:
            raise ContractViolation("table length must equal the replication count")
        if np.any(np.diff(q) < 0):
            raise ContractViolation("null table values must be sorted ascending")
        q.setflags(write=False)
        object.__setattr__(self, "quantiles", q)

    @property
    def key(self) -> tuple:
        return (self.statistic_name, self.dim, self.sample_size, self.replications, self.seed)

    def save(self, path) -> None:
        """Write the table as a one-column CSV with a commented metadata line."""
        header = (
            f"statistic={self.statistic_name},dim={self.dim},n={self.sample_size},"
            f"replications={self.replications},seed={self.seed}"
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            np.savetxt(fh, self.quantiles, fmt="%.17g", header=header)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "NullTable":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
        if not first.startswith("#"):
            raise ConfigError(f"{path}: missing null-table header")
        meta = dict(item.split("=", 1) for item in first[1:].strip().split(","))
        values = np.atleast_1d(np.loadtxt(path, comments="#"))
        return cls(
            statistic_name=meta["statistic"],
            dim=int(meta["dim"]),
            sample_size=int(meta["n"]),
            quantiles=values,
            seed=int(meta["seed"]),
            replications=int(meta["replications"]),
        )


def table_pvalue(table: NullTable, observed: float) -> float:
    """Add-one Monte Carlo p-value ``(1 + #{T >= observed}) / (N + 1)``."""
    exceed = table.replications - int(np.searchsorted(table.quantiles, observed, side="left"))
    return (1.0 + exceed) / (table.replications + 1.0)


def simulate_null_table(
    statistic: str | StatisticFn,
    d: int,
    n: int,
    replications: int = 10_000,
    seed: int = 0,
    name: str | None = None,
) -> NullTable:
    """Simulate the null distribution of ``statistic`` under N(0, I_d).

    Replication ``k`` draws its sample from the substream ``(seed, k)``, so
    the table does not depend on evaluation order.
    """
    from .samplers import RngStream  # local: samplers imports radial, not statdist

    if replications < MIN_TABLE_REPLICATIONS:
        raise ConfigError(f"null tables need at least {MIN_TABLE_REPLICATIONS} replications")
    if isinstance(statistic, str):
        try:
            fn = _STATISTICS[statistic]
        except KeyError:
            raise ConfigError(f"no null statistic registered as {statistic!r}") from None
        name = name or statistic
    else:
        fn = statistic
        name = name or getattr(statistic, "__name__", "statistic")
    values = np.empty(replications)
    for k in range(replications):
        x = RngStream(seed, k).generator().standard_normal((n, d))
        values[k] = fn(x)
    values.sort()
    return NullTable(name, d, n, values, seed, replications)


def default_cache_dir() -> Path:
    env = os.environ.get("ELLSYM_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "ellsym"


def _cache_path(cache_dir: Path, key: tuple) -> Path:
    stem = "_".join(str(k) for k in key)
    digest = hashlib.sha1(stem.encode()).hexdigest()[:8]
    return cache_dir / f"null_{stem}_{digest}.csv"


_MEMORY_CACHE: dict[tuple, NullTable] = {}


def cached_null_table(
    statistic: str,
    d: int,
    n: int,
    replications: int = 10_000,
    seed: int = 0,
    cache_dir: str | Path | None = None,
) -> NullTable:
    """Return the null table for ``statistic``, simulating it once per key.

    Tables are kept in memory and written to ``cache_dir`` (default
    ``$ELLSYM_CACHE`` or ``~/.cache/ellsym``). Files are written through an
    atomic rename, so concurrent readers never see a partial table.
    """
    key = (statistic, d, n, replications, seed)
    if key in _MEMORY_CACHE:
        return _MEMORY_CACHE[key]
    path = _cache_path(Path(cache_dir) if cache_dir else default_cache_dir(), key)
    table = None
    if path.exists():
        try:
            table = NullTable.load(path)
            if table.key != key:
                table = None
        except (OSError, ValueError, KeyError) as exc:
            log.warning("ignoring unreadable null table %s: %s", path, exc)
            table = None
    if table is None:
        log.info("simulating %s null table (d=%d, n=%d, N=%d)", statistic, d, n, replications)
        table = simulate_null_table(statistic, d, n, replications, seed)
        try:
            table.save(path)
        except OSError as exc:
            log.warning("could not write null table cache %s: %s", path, exc)
    _MEMORY_CACHE[key] = table
    return table
