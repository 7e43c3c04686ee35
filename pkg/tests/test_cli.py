import csv
import io
import json
import statistics
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from surveydisagree.cli import main
from surveydisagree.config import ConfigError, PipelineConfig, load_config, parse_config_text
from surveydisagree.ingest import MacroSeries, SurveyPanel, simulate_share_panel, write_macro_csv, write_survey_csv
from surveydisagree.months import Month
from surveydisagree.pipeline import synthetic_inputs

GOLDEN = Path(__file__).parent / "golden"


def read_rows(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def write_config(path: Path, **overrides):
    cfg = PipelineConfig().with_overrides(**overrides)
    path.write_text(cfg.to_text())
    return path


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fixture")
    assert main(["simulate", "--out", str(d), "--seed", "0", "--draws", "200", "--countries", "AA,BB"]) == 0
    return d


@pytest.fixture(scope="module")
def business_only(tmp_path_factory):
    d = tmp_path_factory.mktemp("business")
    business, _, macro = synthetic_inputs(3, ("AA", "BB"), 60)
    write_survey_csv(business, d / "survey.csv", ("up", "same", "down"))
    write_macro_csv(macro, d / "macro.csv")
    cfg = write_config(d / "config.ini", **{"input.survey": "survey.csv", "input.macro": "macro.csv", "irf.draws": "100"})
    return cfg


# -- config ----------------------------------------------------------------------------


def test_print_config_round_trips(capsys):
    assert main(["print-config"]) == 0
    text = capsys.readouterr().out
    assert "irf.horizon = 24" in text and "irf.quantiles = 0.16,0.84" in text
    assert "minnesota.lambda1 = 0.2" in text and "align.method = step" in text
    assert parse_config_text(text) == PipelineConfig()


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("irf.bogus = 1")
    with pytest.raises(ConfigError, match="draws"):
        parse_config_text("irf.draws = 50")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("no equals sign")


def test_draws_below_minimum_is_validation_error(fixture_dir, tmp_path):
    text = (fixture_dir / "config.ini").read_text().replace("irf.draws = 200", "irf.draws = 50")
    cfg = tmp_path / "c.ini"
    cfg.write_text(text.replace("survey_business.csv", str(fixture_dir / "survey_business.csv"))
                   .replace("survey_consumer.csv", str(fixture_dir / "survey_consumer.csv"))
                   .replace("macro.csv", str(fixture_dir / "macro.csv")))
    assert main(["irf", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_missing_input_is_io_error(tmp_path):
    cfg = write_config(tmp_path / "c.ini", **{"input.survey": "nope.csv", "input.macro": "nope2.csv"})
    assert main(["indicators", "--config", str(cfg)]) == 3


def test_malformed_input_is_validation_error(tmp_path, capsys):
    (tmp_path / "s.csv").write_text("date,country,agent,question,a,b,c\n2010-01,AA,business,activity,0.5,x,0.5\n")
    (tmp_path / "m.csv").write_text("date,country,gdp_growth\n2010-01,AA,1.0\n")
    cfg = write_config(tmp_path / "c.ini", **{"input.survey": "s.csv", "input.macro": "m.csv"})
    assert main(["indicators", "--config", str(cfg)]) == 1
    assert "line 2" in capsys.readouterr().err


# -- indicators ------------------------------------------------------------------------


def test_indicator_file_contract(business_only, tmp_path):
    out = tmp_path / "out"
    assert main(["indicators", "--config", str(business_only), "--out", str(out)]) == 0
    files = sorted(p.name for p in (out / "indicators").iterdir())
    for c in ("AA", "BB"):
        mine = [f for f in files if f.startswith(c + "_")]
        assert sorted(mine) == [f"{c}_DB.csv", f"{c}_business_activity.csv", f"{c}_business_employment.csv",
                                f"{c}_business_prices.csv"]
    rows = read_rows(out / "indicators" / "AA_DB.csv")
    assert list(rows[0]) == ["date", "country", "agent", "question", "metric", "value"]
    assert rows[0]["question"] == "aggregate" and rows[0]["metric"] == "D"


def test_indicators_rerun_is_byte_identical(fixture_dir, tmp_path):
    cfg = fixture_dir / "config.ini"
    for d in ("a", "b"):
        assert main(["indicators", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a" / "indicators").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / "indicators" / f.name).read_bytes()


def test_disp_on_uncollapsed_consumer_panel_fails(fixture_dir, tmp_path):
    text = (fixture_dir / "config.ini").read_text()
    text = text.replace("indicators.metric = D", "indicators.metric = DISP")
    text = text.replace("input.collapse_consumer = true", "input.collapse_consumer = false")
    cfg = fixture_dir / "disp.ini"
    cfg.write_text(text)
    out = tmp_path / "out"
    assert main(["indicators", "--config", str(cfg), "--out", str(out)]) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert "collapse" in manifest["countries"]["AA"]["indicators"]


# -- table1 ----------------------------------------------------------------------------


def test_table1_two_countries(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["table1", "--config", str(fixture_dir / "config.ini"), "--out", str(out), "--countries", "AA,BB"]) == 0
    rows = read_rows(out / "table1.csv")
    assert len(rows) == 4
    assert list(rows[0]) == ["country", "agent", "mean", "sd", "corr_with_gdp"]
    assert [(r["country"], r["agent"]) for r in rows] == [
        ("AA", "business"), ("AA", "consumer"), ("BB", "business"), ("BB", "consumer")
    ]


def test_table1_constant_indicator(tmp_path):
    dates = tuple(Month(2010, 1).shift(i) for i in range(24))
    panels = [SurveyPanel("AA", "business", q, dates, np.tile([0.2, 0.5, 0.3], (24, 1))) for q in
              ("activity", "prices", "employment")]
    write_survey_csv(panels, tmp_path / "s.csv")
    write_macro_csv([MacroSeries("AA", dates, np.linspace(0, 2, 24))], tmp_path / "m.csv")
    cfg = write_config(tmp_path / "c.ini", **{"input.survey": "s.csv", "input.macro": "m.csv"})
    out = tmp_path / "out"
    assert main(["table1", "--config", str(cfg), "--out", str(out)]) == 1
    status = json.loads((out / "manifest.json").read_text())["countries"]["AA"]["table1"]
    assert "constant series" in status


def test_table1_audit_against_indicator_files(tmp_path):
    """Golden table1 rows recomputed from the emitted indicator CSVs with the stdlib."""
    fixture = tmp_path / "fx"
    main(["simulate", "--out", str(fixture), "--seed", "0", "--draws", "100", "--countries", "AA"])
    out = tmp_path / "out"
    assert main(["indicators", "--config", str(fixture / "config.ini"), "--out", str(out)]) == 0
    db = [float(r["value"]) for r in read_rows(out / "indicators" / "AA_DB.csv")]
    golden = read_rows(GOLDEN / "table1.csv")[0]
    assert float(golden["mean"]) == pytest.approx(statistics.fmean(db), abs=1e-12)
    assert float(golden["sd"]) == pytest.approx(statistics.stdev(db), abs=1e-12)


# -- ccf -------------------------------------------------------------------------------


@pytest.fixture
def shifted_inputs(tmp_path):
    """DC equals DB delayed by three months."""
    n = 80
    dates = tuple(Month(2010, 1).shift(i) for i in range(n))
    later = tuple(d.shift(3) for d in dates)
    panels = []
    for j, q in enumerate(("activity", "prices", "employment")):
        p = simulate_share_panel(100 + j, n, 3, 0.6, 30.0, start=dates[0], country="AA", question=q)
        panels.append(p)
        panels.append(SurveyPanel("AA", "consumer", q, later, p.shares))
    write_survey_csv(panels, tmp_path / "s.csv")
    write_macro_csv([MacroSeries("AA", tuple(Month(2010, 1).shift(i) for i in range(n + 3)),
                                 np.sin(np.arange(n + 3.0)))], tmp_path / "m.csv")
    return write_config(tmp_path / "c.ini", **{"input.survey": "s.csv", "input.macro": "m.csv"})


def test_ccf_peak_at_documented_lag(shifted_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(["ccf", "--config", str(shifted_inputs), "--out", str(out)]) == 0
    text = (out / "ccf" / "AA_ccf.csv").read_text()
    assert text.startswith("# value(k) = corr(DB_t, DC_t+k)")
    rows = read_rows(out / "ccf" / "AA_ccf.csv")
    assert [int(r["lag"]) for r in rows] == list(range(-12, 13))
    values = {int(r["lag"]): float(r["value"]) for r in rows}
    assert values[3] == pytest.approx(1.0, abs=1e-12)
    assert max(values, key=values.get) == 3
    root = ET.parse(out / "ccf" / "AA_ccf.svg").getroot()
    assert root.tag.endswith("svg")
    title = "".join(root.itertext())
    assert f"({values[0]:.3f})" in title


def test_ccf_lag_too_large(shifted_inputs, tmp_path):
    assert main(["ccf", "--config", str(shifted_inputs), "--out", str(tmp_path / "o"), "--max-lag", "75"]) == 1


# -- irf / pipeline ---------------------------------------------------------------------


def test_irf_golden(fixture_dir, tmp_path):
    """Golden is from the default (3 country, 1000 draw) fixture; compare numerically."""
    fx = tmp_path / "fx"
    main(["simulate", "--out", str(fx), "--seed", "0"])
    out = tmp_path / "out"
    assert main(["irf", "--config", str(fx / "config.ini"), "--out", str(out), "--countries", "AA"]) == 0
    got = read_rows(out / "irf" / "AA_irf.csv")
    want = read_rows(GOLDEN / "irf" / "AA_irf.csv")
    assert len(got) == len(want) == 2 * 4 * 25
    for g, w in zip(got, want):
        assert [g[k] for k in ("country", "agent", "shock", "response_variable", "horizon")] == \
               [w[k] for k in ("country", "agent", "shock", "response_variable", "horizon")]
        for k in ("point", "lower", "upper"):
            assert float(g[k]) == pytest.approx(float(w[k]), abs=1e-12)


def test_irf_outputs(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["irf", "--config", str(fixture_dir / "config.ini"), "--out", str(out)]) == 0
    rows = read_rows(out / "irf" / "AA_irf.csv")
    assert list(rows[0]) == ["country", "agent", "shock", "response_variable", "horizon", "point", "lower", "upper"]
    assert {r["shock"] for r in rows} == {"DB", "DC", "gdp_growth"}
    assert max(int(r["horizon"]) for r in rows) == 24
    for r in rows:
        assert float(r["lower"]) <= float(r["upper"])
    # growth does not move disagreement on impact: disagreement is ordered first
    impact = [r for r in rows if r["shock"] == "gdp_growth" and r["response_variable"] in ("DB", "DC")
              and r["horizon"] == "0"]
    assert all(float(r["point"]) == 0.0 for r in impact)
    summary = read_rows(out / "irf" / "AA_model_summary.csv")
    assert {"p", "bic", "hc0_se", "posterior_mean", "spectral_radius_ols", "rejected_explosive"} <= set(summary[0])
    ET.parse(out / "irf" / "AA_irf.svg")


def test_short_country_fails_in_isolation(tmp_path):
    business, consumer, macro = synthetic_inputs(5, ("AA", "BB"), 120)
    for name, panels in (("b.csv", business), ("c.csv", consumer)):
        trimmed = [p if p.country == "AA" else SurveyPanel(p.country, p.agent, p.question, p.dates[:20], p.shares[:20])
                   for p in panels]
        write_survey_csv(trimmed, tmp_path / name)
    write_macro_csv(macro, tmp_path / "m.csv")
    cfg = write_config(tmp_path / "c.ini", **{"input.survey": "b.csv,c.csv", "input.macro": "m.csv", "irf.draws": "100"})
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(cfg), "--out", str(out)]) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["countries"]["AA"]["irf"] == "ok"
    assert manifest["countries"]["BB"]["irf"].startswith("failed")
    assert (out / "irf" / "AA_irf.csv").exists()
    assert not (out / "irf" / "BB_irf.csv").exists()
    alone = tmp_path / "alone"
    assert main(["pipeline", "--config", str(cfg), "--out", str(alone), "--countries", "AA"]) == 0
    assert (alone / "irf" / "AA_irf.csv").read_bytes() == (out / "irf" / "AA_irf.csv").read_bytes()


def test_pipeline_manifest(fixture_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(fixture_dir / "config.ini"), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    listed = set(manifest["outputs"])
    on_disk = {str(p.relative_to(out)) for p in out.rglob("*") if p.is_file()}
    assert listed == on_disk
    assert manifest["exit_code"] == 0
    assert set(manifest["timings_seconds"]) == {"indicators", "table1", "ccf", "irf"}

    again = tmp_path / "again"
    assert main(["pipeline", "--config", str(fixture_dir / "config.ini"), "--out", str(again), "--jobs", "3"]) == 0
    second = json.loads((again / "manifest.json").read_text())
    assert second["config_hash"] == manifest["config_hash"]

    replay = tmp_path / "replay"
    cfg = load_config(out / "manifest.json")
    assert cfg.digest() == manifest["config_hash"]
    assert main(["pipeline", "--config", str(out / "manifest.json"), "--out", str(replay)]) == 0
    for rel in listed - {"manifest.json"}:
        assert (replay / rel).read_bytes() == (out / rel).read_bytes()
