"""Monte Carlo experiments: scenarios, method runners and aggregation.

Every replicate is a pure function of ``(spec.seed, r)``: the noise, a random
truth if any, and method seeds all derive from ``SeedSequence([seed, r])``,
so results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import limits
from .amoc import Method, run_test
from .distance import config_distance
from .penalized import Criterion, GaParams, ga_search
from .segmentation import SegmentationParams, binary_segment, wbs
from .series import ArModel, ChangepointConfig, StepMeanFunction, fit_ar_differenced, select_order, simulate_ar

DEFAULT_N = 500

# Keyblade: a fixed illustrative pattern of nine uneven changepoints with
# mixed-sign, mixed-size shifts. Not taken from any published values.
KEYBLADE_FRACTIONS = (0.06, 0.14, 0.30, 0.36, 0.50, 0.58, 0.72, 0.80, 0.92)
KEYBLADE_LEVELS = (0.0, 1.0, -0.5, 1.5, 0.5, 2.0, 0.0, 1.0, -1.0, 0.5)

SCENARIOS = ("none", "single-middle", "staircase-3", "alternating-3", "staircase-9",
             "alternating-9", "keyblade", "random")


@dataclass(frozen=True)
class RandomTruthSpec:
    """Poisson number of changepoints at uniform distinct times in ``{2..N}``
    (a regime starting at ``t`` means a changepoint at ``t - 1``), Gaussian
    regime means."""

    count_mean: float = 5.0
    mean_std: float = 1.5
    min_spacing: int = 1

    def draw(self, n: int, rng: np.random.Generator) -> StepMeanFunction:
        s = self.min_spacing
        cap = (n - s) // s  # most changepoints that fit with spacing s from each other and both ends
        m = int(rng.poisson(self.count_mean))
        while m > cap:
            m = int(rng.poisson(self.count_mean))
        # v_i = tau_i - i (s - 1) maps admissible spaced sets one-to-one onto plain
        # m-subsets of {1..n - s - (s - 1) m}, so this is uniform over admissible sets
        v = np.sort(rng.choice(np.arange(1, n - s - (s - 1) * m + 1), size=m, replace=False))
        taus = v + (s - 1) * np.arange(1, m + 1)
        mus = rng.normal(0.0, self.mean_std, size=m + 1)
        return StepMeanFunction(ChangepointConfig(tuple(int(t) for t in taus)), tuple(mus))


@dataclass(frozen=True)
class ScenarioSpec:
    noise: ArModel
    n: int
    truth: StepMeanFunction | RandomTruthSpec
    replications: int = 200
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if isinstance(self.truth, StepMeanFunction):
            self.truth.config.validate(self.n)

    def to_dict(self) -> dict:
        if isinstance(self.truth, StepMeanFunction):
            truth = {"taus": list(self.truth.config.taus), "means": list(self.truth.mus)}
        else:
            truth = {"random": asdict(self.truth)}
        return {"name": self.name, "n": self.n, "phi": list(self.noise.phi),
                "sigma2": self.noise.sigma2, "truth": truth,
                "replications": self.replications, "seed": self.seed}


def equally_spaced(n: int, m: int) -> ChangepointConfig:
    """``tau_k = 1 + floor(k N / (m + 1))``: 251 for one change at N=500, 126/251/376 for three."""
    return ChangepointConfig(tuple(1 + (k * n) // (m + 1) for k in range(1, m + 1)))


def builtin_scenario(name: str, phi=(0.5,), delta: float = 1.0, n: int = DEFAULT_N,
                     replications: int = 200, seed: int = 0, sigma2: float = 1.0) -> ScenarioSpec:
    noise = ArModel(tuple(phi), sigma2)
    if name == "random":
        return ScenarioSpec(noise, n, RandomTruthSpec(), replications, seed, name)
    if name == "none":
        config, levels = ChangepointConfig(), (0.0,)
    elif name == "single-middle":
        config, levels = equally_spaced(n, 1), (0.0, 1.0)
    elif name in ("staircase-3", "staircase-9", "alternating-3", "alternating-9"):
        m = int(name[-1])
        config = equally_spaced(n, m)
        levels = tuple(float(i) for i in range(m + 1)) if name.startswith("staircase") \
            else tuple(float(i % 2) for i in range(m + 1))
    elif name == "keyblade":
        config = ChangepointConfig(tuple(int(round(f * n)) for f in KEYBLADE_FRACTIONS))
        levels = KEYBLADE_LEVELS
    else:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    truth = StepMeanFunction(config, tuple(delta * v for v in levels))
    return ScenarioSpec(noise, n, truth, replications, seed, name)


@dataclass(frozen=True)
class MethodSpec:
    """A changepoint method: ``bs``, ``wbs``, ``ga:<criterion>`` or an AMOC test name.

    ``order=None`` uses the noise order of the scenario; ``order="auto"``
    selects it by AIC. AMOC tests report ``(location,)`` when they reject.
    """

    name: str
    order: int | str | None = None
    alpha: float = 0.05
    ga: GaParams = field(default_factory=GaParams)
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)

    def __post_init__(self):
        kind = self.kind
        if kind == "ga":
            Criterion(self.name.split(":", 1)[1])
        elif kind == "amoc":
            Method(self.name)

    @property
    def kind(self) -> str:
        if self.name in ("bs", "wbs"):
            return self.name
        if self.name.startswith("ga:"):
            return "ga"
        return "amoc"

    @classmethod
    def parse(cls, text: str, **kwargs) -> "MethodSpec":
        text = text.strip().lower()
        if text in {c.value for c in Criterion}:
            text = "ga:" + text
        return cls(text, **kwargs)

    def laws(self) -> list[limits.LimitLaw]:
        if self.kind == "bs" or self.name == Method.SCUSUM_X.value or self.name == Method.SCUSUM_Z.value:
            return [limits.INT_SQ]
        if self.name == Method.LRT_CROPPED.value:
            return [limits.cropped(0.05, 0.95)]
        return []

    def run(self, x: np.ndarray, p: int, seed: int) -> ChangepointConfig:
        if self.order == "auto":
            p = select_order(x)
        elif self.order is not None:
            p = int(self.order)
        if self.kind == "amoc":
            res = run_test(self.name, x, p=p, alpha=self.alpha)
            return ChangepointConfig((res.location,)) if res.reject else ChangepointConfig()
        model = fit_ar_differenced(x, p)
        if self.kind == "ga":
            crit = self.name.split(":", 1)[1]
            return ga_search(x, crit, replace(self.ga, seed=seed), p=p, model=model).config
        params = replace(self.segmentation, alpha=self.alpha, seed=seed)
        search = binary_segment if self.kind == "bs" else wbs
        return search(x, p, params, model=model).config


@dataclass(frozen=True)
class Record:
    replicate: int
    seed: int
    method: str
    truth: tuple[int, ...]
    config: tuple[int, ...] | None
    distance: float | None
    runtime: float = field(default=0.0, compare=False)
    error: str | None = None

    @property
    def m_hat(self) -> int | None:
        return None if self.config is None else len(self.config)


@dataclass(frozen=True)
class ExperimentResult:
    spec: ScenarioSpec
    methods: tuple[str, ...]
    records: tuple[Record, ...]


def replicate_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, r]).generate_state(1)[0])


def simulate_replicate(spec: ScenarioSpec, r: int) -> tuple[np.ndarray, ChangepointConfig, int]:
    """The series, its true configuration and the replicate seed."""
    base = replicate_seed(spec.seed, r)
    truth = spec.truth
    if isinstance(truth, RandomTruthSpec):
        truth = truth.draw(spec.n, np.random.default_rng([base, 1]))
    x = simulate_ar(spec.noise, truth, spec.n, base).values
    return x, truth.config, base


def _run_replicate(spec: ScenarioSpec, methods: tuple[MethodSpec, ...], r: int) -> list[Record]:
    x, truth, base = simulate_replicate(spec, r)
    out = []
    for k, method in enumerate(methods):
        seed = int(np.random.SeedSequence([base, 2, k]).generate_state(1)[0])
        start = time.perf_counter()
        try:
            found = method.run(x.copy(), spec.noise.p, seed)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append(Record(r, base, method.name, truth.taus, None, None,
                              time.perf_counter() - start, f"{type(exc).__name__}: {exc}"))
            continue
        out.append(Record(r, base, method.name, truth.taus, found.taus,
                          config_distance(found, truth, spec.n), time.perf_counter() - start))
    return out


def _run_block(args) -> list[Record]:
    spec, methods, rs = args
    return [rec for r in rs for rec in _run_replicate(spec, methods, r)]


def run_experiment(spec: ScenarioSpec, methods, jobs: int = 1) -> ExperimentResult:
    """Run every method on every replicate; records are ordered by replicate, then method."""
    methods = tuple(m if isinstance(m, MethodSpec) else MethodSpec.parse(m) for m in methods)
    if not methods:
        raise ValueError("at least one method is required")
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ValueError("method names must be distinct")
    # tabulate critical values up front so workers only ever read the cache
    for m in methods:
        for law in m.laws():
            limits.quantile_table(law)
    reps = range(spec.replications)
    if jobs <= 1:
        records = _run_block((spec, methods, reps))
    else:
        blocks = [(spec, methods, reps[i::jobs]) for i in range(jobs)]
        with ProcessPoolExecutor(jobs) as pool:
            parts = list(pool.map(_run_block, blocks))
        records = sorted((rec for part in parts for rec in part),
                         key=lambda rec: (rec.replicate, names.index(rec.method)))
    return ExperimentResult(spec, tuple(names), tuple(records))


@dataclass(frozen=True)
class MethodSummary:
    method: str
    replicates: int
    errors: int
    rejection_rate: float
    mean_distance: float
    se_distance: float
    mean_m_hat: float
    correct_count_rate: float
    mean_runtime: float

    @property
    def false_positive_rate(self) -> float:
        """Share of replicates with at least one detection; the power when the truth has changes."""
        return self.rejection_rate


def summarize(result: ExperimentResult) -> list[MethodSummary]:
    """Per-method aggregates over the replicates without errors."""
    out = []
    for name in result.methods:
        recs = [r for r in result.records if r.method == name]
        ok = [r for r in recs if r.error is None]
        if not ok:
            out.append(MethodSummary(name, 0, len(recs), *([math.nan] * 6)))
            continue
        d = np.array([r.distance for r in ok])
        m_hat = np.array([r.m_hat for r in ok])
        m_true = np.array([len(r.truth) for r in ok])
        se = float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0
        out.append(MethodSummary(name, len(ok), len(recs) - len(ok), float(np.mean(m_hat > 0)),
                                 float(d.mean()), se, float(m_hat.mean()),
                                 float(np.mean(m_hat == m_true)),
                                 float(np.mean([r.runtime for r in ok]))))
    return out


def _join(taus) -> str:
    return "" if taus is None else ";".join(str(t) for t in taus)


CSV_FIELDS = ("scenario", "replicate", "seed", "method", "m_true", "m_hat", "truth", "config",
              "distance", "runtime", "error")


def records_rows(result: ExperimentResult) -> list[dict]:
    return [{"scenario": result.spec.name, "replicate": r.replicate, "seed": r.seed,
             "method": r.method, "m_true": len(r.truth), "m_hat": r.m_hat, "truth": _join(r.truth),
             "config": _join(r.config), "distance": r.distance, "runtime": f"{r.runtime:.6f}",
             "error": r.error or ""} for r in result.records]


def write_csv(result: ExperimentResult, path_or_file) -> None:
    """Tidy table, one row per replicate and method."""
    def dump(fh):
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records_rows(result))

    if hasattr(path_or_file, "write"):
        dump(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            dump(fh)


def summary_dict(result: ExperimentResult) -> dict:
    return {"scenario": result.spec.to_dict(), "methods": list(result.methods),
            "summary": [asdict(s) for s in summarize(result)]}


def write_summary(result: ExperimentResult, path) -> None:
    Path(path).write_text(json.dumps(summary_dict(result), indent=2) + "\n")


def load_experiment(path) -> tuple[ScenarioSpec, list[MethodSpec]]:
    """Read a JSON experiment description.

    Keys: ``scenario`` (a builtin name) or ``taus``/``means`` for an explicit
    truth; ``phi``, ``sigma2``, ``delta``, ``n``, ``replications``, ``seed``;
    ``methods`` (list of names) with optional ``alpha``, ``order``, ``ga`` and
    ``segmentation`` parameter objects applied to every method.
    """
    data = json.loads(Path(path).read_text())
    known = {"scenario", "taus", "means", "phi", "sigma2", "delta", "n", "replications", "seed",
             "methods", "alpha", "order", "ga", "segmentation"}
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown experiment keys: {sorted(extra)}")
    phi = tuple(data.get("phi", (0.5,)))
    n = int(data.get("n", DEFAULT_N))
    reps = int(data.get("replications", 200))
    seed = int(data.get("seed", 0))
    sigma2 = float(data.get("sigma2", 1.0))
    if "taus" in data:
        config = ChangepointConfig(tuple(int(t) for t in data["taus"]))
        truth = StepMeanFunction(config, tuple(data["means"]))
        spec = ScenarioSpec(ArModel(phi, sigma2), n, truth, reps, seed)
    else:
        spec = builtin_scenario(data.get("scenario", "none"), phi, float(data.get("delta", 1.0)),
                                n, reps, seed, sigma2)
    kwargs = {"alpha": float(data.get("alpha", 0.05)), "order": data.get("order"),
              "ga": GaParams(**data.get("ga", {})),
              "segmentation": SegmentationParams(**data.get("segmentation", {}))}
    methods = [MethodSpec.parse(name, **kwargs) for name in data.get("methods", [])]
    if not methods:
        raise ValueError("experiment lists no methods")
    return spec, methods
