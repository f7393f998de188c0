"""Selection settings and their flat ``key=value`` text format.

Grammar (one entry per line, ``#`` starts a comment, blank lines ignored;
output and input numbers are 1-based in the file)::

    p=3
    p_tilde=1
    objective=average | weighted | quadratic | min | percentile
    weights=1,1,0.5,...          # one per DMU, weighted objective
    pi=50                        # percentile objective, 1..100
    bounds.<o>=L,U               # weight bounds for output o; U may be inf
    cost.c=1,2,1,...             # one per output
    cost.C=4
    cluster.<name>=o1,o2,...:pmin,pmax
    corr.tau=0.9                 # flag pairs with correlation >= tau
    corr.pairs=1-2,3-4           # or list conflicting pairs directly
    bigm=1000
    time_limit=300
    gap=1e-6

Inside the library every index is 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BadPercentile, BadWeights, ConfigError

OBJECTIVES = ("average", "weighted", "quadratic", "min", "percentile")


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    p_min: int
    p_max: int
    name: str = ""


@dataclass(frozen=True)
class SelectionConfig:
    p: int
    p_tilde: int | None = None
    objective: str = "average"
    weights: tuple[float, ...] | None = None
    pi: float | None = None
    weight_bounds: dict[int, tuple[float, float]] = field(default_factory=dict)
    costs: tuple[float, ...] | None = None
    budget: float | None = None
    clusters: tuple[Cluster, ...] = ()
    corr_tau: float | None = None
    conflict_pairs: tuple[tuple[int, int], ...] = ()
    big_m: float = 1000.0
    time_limit: float = 300.0
    gap_tol: float = 1e-6
    tighten: bool = True

    def with_(self, **kw) -> "SelectionConfig":
        return replace(self, **kw)

    @property
    def has_extensions(self) -> bool:
        return bool(
            self.weight_bounds or self.costs is not None or self.clusters or self.corr_tau is not None or self.conflict_pairs
        )

    def percentile_count(self, K: int) -> int:
        """DMUs that must reach the percentile level: floor(K * pi / 100).

        The optimal level is the count-th largest efficiency, counted from
        the top. This is not the same as the pi-th order statistic counted
        from the bottom, which some definitions use.
        """
        return int(math.floor(K * float(self.pi) / 100.0 + 1e-9))

    def validate(self, K: int, I: int, O: int) -> "SelectionConfig":  # noqa: E741
        """Check ranges and shapes against a K x I x O dataset."""
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {', '.join(OBJECTIVES)}; got {self.objective!r}")
        if not 1 <= self.p <= O:
            raise ConfigError(f"p={self.p} outside 1..{O}")
        if self.p_tilde is not None and not 1 <= self.p_tilde <= I:
            raise ConfigError(f"p_tilde={self.p_tilde} outside 1..{I}")
        if self.objective == "weighted":
            if self.weights is None or len(self.weights) != K:
                raise BadWeights(f"weighted objective needs {K} weights")
            w = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise BadWeights("weights must be finite and nonnegative")
        if self.objective == "percentile":
            if self.pi is None or not 1 <= self.pi <= 100:
                raise BadPercentile(f"pi must lie in 1..100; got {self.pi}")
            if self.percentile_count(K) < 1:
                raise BadPercentile(f"floor(K*pi/100) = floor({K}*{self.pi}/100) = 0; raise pi")
        for o, (lo, hi) in self.weight_bounds.items():
            if not 0 <= o < O:
                raise ConfigError(f"weight bound on unknown output {o + 1}")
            if lo < 0 or hi < lo:
                raise ConfigError(f"output {o + 1}: weight bounds need 0 <= L <= U, got ({lo}, {hi})")
        if self.costs is not None:
            if len(self.costs) != O:
                raise ConfigError(f"cost.c needs {O} entries, got {len(self.costs)}")
            if any(c < 0 for c in self.costs):
                raise ConfigError("costs must be nonnegative")
            if self.budget is None:
                raise ConfigError("cost.c given without cost.C")
        elif self.budget is not None:
            raise ConfigError("cost.C given without cost.c")
        if self.clusters:
            seen: list[int] = []
            for cl in self.clusters:
                if not 0 <= cl.p_min <= cl.p_max:
                    raise ConfigError(f"cluster {cl.name}: need 0 <= pmin <= pmax")
                seen.extend(cl.members)
            if sorted(seen) != list(range(O)):
                raise ConfigError("clusters must partition the outputs (disjoint, covering all)")
        if self.corr_tau is not None and not -1 <= self.corr_tau <= 1:
            raise ConfigError("corr.tau must lie in [-1, 1]")
        for a, b in self.conflict_pairs:
            if not (0 <= a < O and 0 <= b < O) or a == b:
                raise ConfigError(f"bad conflict pair ({a + 1}, {b + 1})")
        if self.big_m <= 0 or self.time_limit <= 0 or self.gap_tol < 0:
            raise ConfigError("bigm and time_limit must be positive, gap nonnegative")
        return self


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _index(text, what):
    v = int(text)
    if v < 1:
        raise ConfigError(f"{what} numbers start at 1, got {v}")
    return v - 1


def parse_config(text: str) -> SelectionConfig:
    kw: dict = {}
    bounds: dict[int, tuple[float, float]] = {}
    clusters: list[Cluster] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key == "p":
                kw["p"] = int(val)
            elif key == "p_tilde":
                kw["p_tilde"] = int(val)
            elif key == "objective":
                kw["objective"] = val
            elif key == "pi":
                kw["pi"] = float(val)
            elif key == "weights":
                kw["weights"] = _floats(val)
            elif key.startswith("bounds."):
                lo, hi = _floats(val)
                bounds[_index(key[7:], "output")] = (lo, hi)
            elif key == "cost.c":
                kw["costs"] = _floats(val)
            elif key == "cost.C":
                kw["budget"] = float(val)
            elif key.startswith("cluster."):
                mem, lim = val.split(":")
                pmin, pmax = (int(t) for t in lim.split(","))
                members = tuple(_index(t, "output") for t in mem.split(",") if t.strip())
                clusters.append(Cluster(members, pmin, pmax, key[8:]))
            elif key == "corr.tau":
                kw["corr_tau"] = float(val)
            elif key == "corr.pairs":
                pairs = []
                for tok in val.split(","):
                    a, b = tok.split("-")
                    pairs.append((_index(a, "output"), _index(b, "output")))
                kw["conflict_pairs"] = tuple(pairs)
            elif key == "bigm":
                kw["big_m"] = float(val)
            elif key == "time_limit":
                kw["time_limit"] = float(val)
            elif key == "gap":
                kw["gap_tol"] = float(val)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse {raw.strip()!r} ({exc})") from exc
    if "p" not in kw:
        raise ConfigError("config lacks p=")
    return SelectionConfig(weight_bounds=bounds, clusters=tuple(clusters), **kw)


def load_config(path) -> SelectionConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _g(v):
    return format(float(v), ".12g")


def dump_config(cfg: SelectionConfig) -> str:
    lines = [f"p={cfg.p}"]
    if cfg.p_tilde is not None:
        lines.append(f"p_tilde={cfg.p_tilde}")
    lines.append(f"objective={cfg.objective}")
    if cfg.weights is not None:
        lines.append("weights=" + ",".join(_g(w) for w in cfg.weights))
    if cfg.pi is not None:
        lines.append(f"pi={_g(cfg.pi)}")
    for o, (lo, hi) in sorted(cfg.weight_bounds.items()):
        lines.append(f"bounds.{o + 1}={_g(lo)},{_g(hi)}")
    if cfg.costs is not None:
        lines.append("cost.c=" + ",".join(_g(c) for c in cfg.costs))
        lines.append(f"cost.C={_g(cfg.budget)}")
    for n, cl in enumerate(cfg.clusters, start=1):
        mem = ",".join(str(o + 1) for o in cl.members)
        lines.append(f"cluster.{cl.name or n}={mem}:{cl.p_min},{cl.p_max}")
    if cfg.corr_tau is not None:
        lines.append(f"corr.tau={_g(cfg.corr_tau)}")
    if cfg.conflict_pairs:
        lines.append("corr.pairs=" + ",".join(f"{a + 1}-{b + 1}" for a, b in cfg.conflict_pairs))
    lines += [f"bigm={_g(cfg.big_m)}", f"time_limit={_g(cfg.time_limit)}", f"gap={_g(cfg.gap_tol)}"]
    return "\n".join(lines) + "\n"
