"""Per-country orchestration: indicators -> table1 -> ccf -> irf, plus the run manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bvar import (
    MinnesotaHyper,
    VarSpec,
    bic_select,
    bic_values,
    hc_se,
    irf_bands,
    minnesota_posterior,
    ols_var,
    spectral_radius,
)
from .config import ConfigError, PipelineConfig
from .indicators import aggregate, indicator_series, write_indicator_csv
from .ingest import (
    AGENTS,
    QUESTIONS,
    AlignedMatrix,
    MacroSeries,
    SurveySchema,
    align_frequency,
    collapse_panel,
    join_for_var,
    parse_macro_csv,
    parse_survey_csv,
    simulate_share_panel,
    write_macro_csv,
    write_survey_csv,
)
from .months import Month
from .plots import correlogram_svg, irf_svg
from .stats import cross_correlogram, pearson, summary

log = logging.getLogger(__name__)

AGG_LABEL = {"business": "DB", "consumer": "DC"}
GROWTH = "gdp_growth"


def derive_seed(seed: int, *labels) -> int:
    """Stable 63-bit seed from a base seed and string/int labels."""
    words = [int(seed)]
    for lab in labels:
        words.append(zlib.crc32(lab.encode()) if isinstance(lab, str) else int(lab))
    return int(np.random.SeedSequence(words).generate_state(2, np.uint64)[0] >> np.uint64(1))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# run state


@dataclass
class Run:
    """Mutable orchestrator state. Only the main thread touches it."""

    config: PipelineConfig
    out_dir: Path
    outputs: list[Path] = field(default_factory=list)
    status: dict[str, dict[str, str]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    _panels: dict | None = None
    _macro: dict | None = None
    _indicators: dict | None = None

    def write(self, relpath: str, text: str) -> None:
        path = self.out_dir / relpath
        atomic_write(path, text)
        if path not in self.outputs:
            self.outputs.append(path)

    def mark(self, country: str, stage: str, status: str) -> None:
        self.status.setdefault(country, {})[stage] = status

    def ok(self, country: str) -> bool:
        return all(s == "ok" for s in self.status.get(country, {}).values())

    def usable(self, country: str) -> bool:
        """Later stages need only the indicators; their own failures stay local."""
        return self.status.get(country, {}).get("indicators", "ok") == "ok"

    # -- data loading -------------------------------------------------------

    def load(self):
        if self._panels is not None:
            return self._panels, self._macro
        cfg = self.config
        cfg.check_inputs()
        schema = SurveySchema(unit=cfg.input.share_unit, tol=cfg.input.renorm_tol)
        panels: dict[str, list] = {}
        seen = set()
        for path in cfg.input.survey:
            for panel in parse_survey_csv(path, schema):
                if panel.key in seen:
                    raise ConfigError(f"{'/'.join(panel.key)} appears in more than one survey file")
                seen.add(panel.key)
                panels.setdefault(panel.country, []).append(panel)
        macro = parse_macro_csv(cfg.input.macro)
        wanted = cfg.run.countries or tuple(sorted(panels))
        missing = [c for c in wanted if c not in panels]
        if missing:
            raise ConfigError(f"countries not in survey data: {', '.join(missing)}")
        self._panels = {c: panels[c] for c in sorted(wanted)}
        self._macro = macro
        for c in self._panels:
            self.status.setdefault(c, {})
        return self._panels, self._macro

    def countries(self) -> list[str]:
        return list(self.load()[0])

    def indicators(self, country: str) -> dict:
        """Per-agent (indicator series list, aggregate) for one country."""
        if self._indicators is None:
            self._indicators = {}
        if country not in self._indicators:
            self._indicators[country] = compute_country_indicators(self.config, self.load()[0][country])
        return self._indicators[country]

    def growth(self, country: str) -> MacroSeries:
        macro = self.load()[1]
        if country not in macro:
            raise ValueError(f"no macro series for {country}")
        g = macro[country]
        if g.frequency == "quarterly":
            g = align_frequency(g, self.config.align.method)
        return g


def compute_country_indicators(cfg: PipelineConfig, panels) -> dict:
    out = {}
    for agent in AGENTS:
        group = [p for p in panels if p.agent == agent]
        if not group:
            continue
        qs = sorted(p.question for p in group)
        if qs != sorted(QUESTIONS):
            raise ValueError(f"{group[0].country}/{agent}: need questions {QUESTIONS}, have {tuple(qs)}")
        if agent == "consumer" and cfg.input.collapse_consumer:
            group = [collapse_panel(p) if p.n_categories == 6 else p for p in group]
        series = [indicator_series(p, cfg.indicators.metric) for p in sorted(group, key=lambda p: QUESTIONS.index(p.question))]
        out[agent] = (series, aggregate(series))
    if not out:
        raise ValueError("no survey panels")
    return out


# ---------------------------------------------------------------------------
# stages


def _for_countries(run: Run, stage: str, fn):
    """Apply ``fn(country)`` to countries that have not failed, recording status."""
    results = {}
    for c in run.countries():
        if not run.usable(c):
            run.mark(c, stage, "skipped")
            continue
        try:
            results[c] = fn(c)
            run.mark(c, stage, "ok")
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            log.warning("%s %s failed: %s", stage, c, exc)
            run.mark(c, stage, f"failed: {exc}")
    return results


def cmd_indicators(run: Run) -> None:
    t0 = time.perf_counter()

    def one(c):
        ind = run.indicators(c)
        for agent, (series, agg) in ind.items():
            for s in series:
                buf = io.StringIO(newline="")
                write_indicator_csv(s, buf)
                run.write(f"indicators/{c}_{agent}_{s.question}.csv", buf.getvalue())
            buf = io.StringIO(newline="")
            write_indicator_csv(agg, buf)
            run.write(f"indicators/{c}_{AGG_LABEL[agent]}.csv", buf.getvalue())

    _for_countries(run, "indicators", one)
    run.timings["indicators"] = time.perf_counter() - t0


def table1_rows(run: Run, country: str):
    rows = []
    growth = run.growth(country)
    for agent, (_, agg) in run.indicators(country).items():
        s = summary(agg.values)
        aligned = join_for_var(agg, growth)
        r = pearson(aligned.data[:, 0], aligned.data[:, 1])
        rows.append([country, agent, _num(s.mean), _num(s.sd), _num(r)])
    return rows


def cmd_table1(run: Run) -> None:
    t0 = time.perf_counter()
    results = _for_countries(run, "table1", lambda c: table1_rows(run, c))
    rows = [r for c in sorted(results) for r in results[c]]
    run.write("table1.csv", _csv_text(["country", "agent", "mean", "sd", "corr_with_gdp"], rows))
    run.timings["table1"] = time.perf_counter() - t0


def ccf_for_country(run: Run, country: str, max_lag: int):
    ind = run.indicators(country)
    if "business" not in ind or "consumer" not in ind:
        raise ValueError(f"{country}: cross-correlogram needs both DB and DC")
    db, dc = ind["business"][1], ind["consumer"][1]
    lo = max(db.dates[0].ordinal, dc.dates[0].ordinal)
    hi = min(db.dates[-1].ordinal, dc.dates[-1].ordinal)
    if hi < lo:
        raise ValueError("insufficient overlap: DB and DC do not overlap")
    a = db.values[lo - db.dates[0].ordinal : hi - db.dates[0].ordinal + 1]
    b = dc.values[lo - dc.dates[0].ordinal : hi - dc.dates[0].ordinal + 1]
    return cross_correlogram(a, b, max_lag)


def cmd_ccf(run: Run, max_lag: int | None = None) -> None:
    t0 = time.perf_counter()
    K = run.config.ccf.max_lag if max_lag is None else max_lag

    def one(c):
        cc = ccf_for_country(run, c, K)
        text = "# value(k) = corr(DB_t, DC_t+k)\n"
        text += _csv_text(["country", "lag", "value"], [[c, k, _num(cc.values[k])] for k in cc.lags])
        run.write(f"ccf/{c}_ccf.csv", text)
        title = f"{c}: DB vs lagged DC, k = lead of DC ({cc.values[0]:.3f})"
        run.write(f"ccf/{c}_ccf.svg", correlogram_svg(cc.lags, cc.as_array(), title))

    _for_countries(run, "ccf", one)
    run.timings["ccf"] = time.perf_counter() - t0


@dataclass
class AgentFit:
    agent: str
    columns: tuple[str, str]
    p: int
    bic: float
    ols: object
    hc: np.ndarray
    posterior: object
    bundle: object
    radius_ols: float
    radius_posterior: float


def prepare_var_data(aligned: AlignedMatrix, transform: str) -> AlignedMatrix:
    if transform == "levels":
        return aligned
    data = aligned.data.copy()
    d = np.diff(data[:, 0])
    return AlignedMatrix(aligned.dates[1:], aligned.columns, np.column_stack([d, data[1:, 1]]))


def fit_agent(cfg: PipelineConfig, country: str, agent: str, agg, growth: MacroSeries) -> AgentFit:
    """Pure per-(country, agent) estimation; safe to run in a worker thread."""
    columns = (AGG_LABEL[agent], GROWTH)
    aligned = prepare_var_data(join_for_var(agg, growth, columns), cfg.var.transform)
    pmax = cfg.var.pmax
    p = bic_select(aligned, pmax, cfg.var.intercept)
    bic = float(bic_values(aligned, pmax, cfg.var.intercept)[p - 1])
    spec = VarSpec(p, cfg.var.intercept, 2)
    ols = ols_var(aligned, spec)
    m = cfg.minnesota
    hyper = MinnesotaHyper(m.delta, m.lambda1, m.lambda2, m.lambda3, m.lambda4)
    post = minnesota_posterior(aligned, spec, hyper)
    bundle = irf_bands(
        post,
        H=cfg.irf.horizon,
        draws=cfg.irf.draws,
        seed=derive_seed(cfg.run.seed, country, agent),
        quantiles=tuple(cfg.irf.quantiles),
        stability_rule=cfg.irf.stability_rule,
        ordering=(0, 1),
    )
    return AgentFit(
        agent, columns, p, bic, ols, hc_se(ols), post, bundle, spectral_radius(ols), spectral_radius(post)
    )


def _regressor_names(columns, p: int, intercept: bool):
    names = ["const"] if intercept else []
    for lag in range(1, p + 1):
        names += [f"{c}_lag{lag}" for c in columns]
    return names


def irf_outputs(run: Run, country: str, fits: list[AgentFit]) -> None:
    irf_rows, summary_rows, curves = [], [], []
    for fit in fits:
        b = fit.bundle
        for s, shock in enumerate(fit.columns):
            for r, resp in enumerate(fit.columns):
                for h in range(b.horizon + 1):
                    irf_rows.append(
                        [country, fit.agent, shock, resp, h,
                         _num(b.point[r, s, h]), _num(b.lower[r, s, h]), _num(b.upper[r, s, h])]
                    )
        curves.append((f"GDP growth to {fit.columns[0]} shock", b.point[1, 0], b.lower[1, 0], b.upper[1, 0]))
        names = _regressor_names(fit.columns, fit.p, fit.ols.spec.intercept)
        for i, eq in enumerate(fit.columns):
            post = fit.posterior.equations[i]
            for j, reg in enumerate(names):
                summary_rows.append(
                    [country, fit.agent, fit.p, _num(fit.bic), _num(fit.radius_ols), _num(fit.radius_posterior),
                     b.draws, b.rejected_explosive, b.attempts, eq, reg,
                     _num(fit.ols.beta[j, i]), _num(fit.hc[i, j]), _num(post.mean[j]), _num(np.sqrt(post.cov[j, j]))]
                )
    run.write(
        f"irf/{country}_irf.csv",
        _csv_text(["country", "agent", "shock", "response_variable", "horizon", "point", "lower", "upper"], irf_rows),
    )
    run.write(
        f"irf/{country}_model_summary.csv",
        _csv_text(
            ["country", "agent", "p", "bic", "spectral_radius_ols", "spectral_radius_posterior", "draws",
             "rejected_explosive", "attempts", "equation", "regressor", "ols_coef", "hc0_se",
             "posterior_mean", "posterior_sd"],
            summary_rows,
        ),
    )
    q = fits[0].bundle.quantiles
    title = f"{country}: GDP growth response, {fits[0].bundle.horizon}-month horizon, bands {q[0]:g}-{q[1]:g}"
    run.write(f"irf/{country}_irf.svg", irf_svg(curves, title))


def cmd_irf(run: Run) -> None:
    t0 = time.perf_counter()
    cfg = run.config
    todo = []
    for c in run.countries():
        if not run.usable(c):
            run.mark(c, "irf", "skipped")
            continue
        try:
            growth = run.growth(c)
            for agent, (_, agg) in run.indicators(c).items():
                todo.append((c, agent, agg, growth))
        except ValueError as exc:
            run.mark(c, "irf", f"failed: {exc}")

    def work(item):
        c, agent, agg, growth = item
        try:
            return fit_agent(cfg, c, agent, agg, growth)
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=cfg.run.jobs) as pool:
        results = list(pool.map(work, todo))

    by_country: dict[str, list] = {}
    for (c, agent, _, _), res in zip(todo, results):
        by_country.setdefault(c, []).append((agent, res))
    for c in sorted(by_country):
        errors = [f"{a}: {r}" for a, r in by_country[c] if isinstance(r, Exception)]
        if errors:
            log.warning("irf %s failed: %s", c, "; ".join(errors))
            run.mark(c, "irf", "failed: " + "; ".join(errors))
            continue
        irf_outputs(run, c, [r for _, r in by_country[c]])
        run.mark(c, "irf", "ok")
    run.timings["irf"] = time.perf_counter() - t0


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def exit_code(run: Run) -> int:
    stages = [s for st in run.status.values() for s in st.values()]
    failed = [s for s in stages if s.startswith("failed")]
    if not failed:
        return 0
    if all(s != "ok" for s in stages):
        return 1
    return 2


def write_manifest(run: Run, command: str) -> int:
    cfg = run.config
    code = exit_code(run)
    manifest_path = run.out_dir / "manifest.json"
    outputs = sorted(str(p.relative_to(run.out_dir)) for p in run.outputs)
    doc = {
        "artifact_version": __version__,
        "command": command,
        "config_hash": cfg.digest(),
        "config": {k: v for k, v in (line.split(" = ", 1) for line in cfg.to_text().splitlines() if line)},
        "inputs": {p: _sha256(p) for p in (*cfg.input.survey, cfg.input.macro) if p and os.path.isfile(p)},
        "countries": run.status,
        "timings_seconds": {k: round(v, 4) for k, v in run.timings.items()},
        "outputs": outputs + ["manifest.json"],
        "exit_code": code,
    }
    atomic_write(manifest_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return code


def cmd_pipeline(run: Run) -> int:
    cmd_indicators(run)
    cmd_table1(run)
    cmd_ccf(run)
    cmd_irf(run)
    return write_manifest(run, "pipeline")


# ---------------------------------------------------------------------------
# synthetic fixture


BUSINESS_CENTERS = {
    "activity": (0.30, 0.50, 0.20),
    "prices": (0.25, 0.60, 0.15),
    "employment": (0.15, 0.65, 0.20),
}
CONSUMER_CENTERS = {
    "activity": (0.03, 0.22, 0.30, 0.30, 0.10, 0.05),
    "prices": (0.15, 0.40, 0.25, 0.10, 0.02, 0.08),
    "employment": (0.10, 0.35, 0.30, 0.15, 0.03, 0.07),
}
BUSINESS_CATEGORIES = ("up", "unchanged", "down")
CONSUMER_CATEGORIES = ("much_better", "better", "same", "worse", "much_worse", "dont_know")


def synthetic_inputs(seed: int, countries=("AA", "BB", "CC"), months: int = 152, start: Month = Month(2005, 5)):
    """Seeded survey panels (business N=3, consumer N=6) and quarterly growth.

    Growth is driven by lagged DB and DC so the VARs have something to find.
    """
    business, consumer, macro = [], [], []
    for country in countries:
        for agent, centers, bucket in (
            ("business", BUSINESS_CENTERS, business),
            ("consumer", CONSUMER_CENTERS, consumer),
        ):
            for question in QUESTIONS:
                bucket.append(
                    simulate_share_panel(
                        derive_seed(seed, country, agent, question), months, len(centers[question]),
                        persistence=0.85, concentration=400.0, volatility=0.15,
                        center=centers[question], start=start,
                        country=country, agent=agent, question=question,
                    )
                )
        db = aggregate([indicator_series(p) for p in business[-3:]]).values
        dc = aggregate([indicator_series(collapse_panel(p)) for p in consumer[-3:]]).values
        q0 = Month(start.year, 3 * (start.quarter - 1) + 1)
        end = start.shift(months - 1)
        q_end = Month(end.year, 3 * end.quarter)
        n_m = q_end.ordinal - q0.ordinal + 1
        lead = start.ordinal - q0.ordinal
        drive_db = np.concatenate([np.full(lead, db.mean()), db, np.full(n_m - lead - months, db.mean())])
        drive_dc = np.concatenate([np.full(lead, dc.mean()), dc, np.full(n_m - lead - months, dc.mean())])
        rng = np.random.default_rng(derive_seed(seed, country, "growth"))
        g = np.empty(n_m)
        prev = 1.5
        for t in range(n_m):
            shock = (
                -10.0 * (drive_db[t - 1] - db.mean()) + 6.0 * (drive_dc[t - 1] - dc.mean()) if t else 0.0
            )
            prev = 1.5 + 0.85 * (prev - 1.5) + shock + 0.3 * rng.standard_normal()
            g[t] = prev
        quarterly = g.reshape(-1, 3).mean(axis=1)
        dates = tuple(q0.shift(3 * i) for i in range(len(quarterly)))
        macro.append(MacroSeries(country, dates, np.round(quarterly, 6), "quarterly"))
    return business, consumer, macro


def write_synthetic_fixture(out_dir, seed: int = 0, countries=("AA", "BB", "CC"), months: int = 152,
                            draws: int = 1000) -> Path:
    """Write survey/macro CSVs and a matching config; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    business, consumer, macro = synthetic_inputs(seed, countries, months)
    write_survey_csv(business, out / "survey_business.csv", BUSINESS_CATEGORIES)
    write_survey_csv(consumer, out / "survey_consumer.csv", CONSUMER_CATEGORIES)
    write_macro_csv(macro, out / "macro.csv")
    cfg = PipelineConfig().with_overrides(
        **{"input.survey": "survey_business.csv,survey_consumer.csv", "input.macro": "macro.csv",
           "run.seed": str(seed), "run.out": "out", "irf.draws": str(draws)}
    )
    text = "# synthetic fixture; relative paths resolve against this file\n" + cfg.to_text()
    path = out / "config.ini"
    path.write_text(text, encoding="utf-8")
    return path
