import json
import math
import re
from pathlib import Path

import pytest

from paircredit import ScenarioError, ftd_default_leg, load_scenario
from paircredit.cli import main
from paircredit.pricing import _fee_per_unit_spread

DATA = Path(__file__).parent / "data"
REF_CDS = str(DATA / "reference_cds.json")
REF_FTD = str(DATA / "reference_ftd.json")


def write_scenario(tmp_path, name="scn.json", **edits):
    doc = json.loads(Path(REF_CDS).read_text())
    for dotted, value in edits.items():
        node = doc
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        if value is None:
            node.pop(parts[-1], None)
        else:
            node[parts[-1]] = value
    out = tmp_path / name
    out.write_text(json.dumps(doc, indent=2))
    return str(out)


def body_of(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.startswith("#"))


class TestScenarioLoading:
    def test_reference_roundtrip(self):
        scn = load_scenario(REF_CDS)
        assert scn.contract_kind == "cds"
        assert scn.market.rho == 0.4
        assert scn.mc.seed == 20240821

    def test_missing_section(self, tmp_path):
        path = write_scenario(tmp_path, **{"market": None})
        with pytest.raises(ScenarioError) as err:
            load_scenario(path)
        assert "market" in str(err.value)

    def test_dead_firm_names_field_and_line(self, tmp_path):
        path = write_scenario(tmp_path, **{"firm2.v0": 50.0})  # below k_barrier=100
        with pytest.raises(ScenarioError) as err:
            load_scenario(path)
        msg = str(err.value)
        assert "firm2" in msg and "v0" in msg
        assert re.search(r"line \d+", msg)

    def test_unknown_field(self, tmp_path):
        path = write_scenario(tmp_path, **{"firm1.volatility": 0.2})
        with pytest.raises(ScenarioError) as err:
            load_scenario(path)
        assert "volatility" in str(err.value)

    def test_bad_contract_kind(self, tmp_path):
        path = write_scenario(tmp_path, **{"contract.kind": "swap"})
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_invalid_json_reports_line(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "firm1": {,}\n}\n')
        with pytest.raises(ScenarioError) as err:
            load_scenario(str(p))
        assert err.value.line == 2


class TestExitCodes:
    def test_dead_firm_exits_2(self, tmp_path, capsys):
        path = write_scenario(tmp_path, **{"firm1.v0": 10.0})
        assert main(["price-cds", "--scenario", path]) == 2
        assert "firm1" in capsys.readouterr().err

    def test_degenerate_correlation_exits_2(self, tmp_path, capsys):
        path = write_scenario(tmp_path, **{"market.rho": 1.0})
        assert main(["price-cds", "--scenario", path]) == 2
        assert "rho" in capsys.readouterr().err

    def test_series_budget_exhaustion_exits_3(self, tmp_path, capsys):
        path = write_scenario(tmp_path, **{"numerics.series.max_terms": 8})
        code = main(["density", "--scenario", path,
                     "--t-grid", "0.5:1.0:2", "--coord-grid", "4.0:5.0:2"])
        assert code == 3
        assert "SeriesNoConvergence" in capsys.readouterr().err


class TestPriceFtd:
    def test_matches_library(self, capsys):
        assert main(["price-ftd", "--scenario", REF_FTD]) == 0
        out = capsys.readouterr().out
        scn = load_scenario(REF_FTD)
        leg = ftd_default_leg(scn.firm1, scn.firm2, scn.market, scn.contract, scn.quad, scn.series)
        fprime, _, _ = _fee_per_unit_spread(
            scn.firm1, scn.firm2, scn.market, scn.contract.maturity,
            scn.contract.notional, scn.quad, scn.series,
        )
        d_line = re.search(r"^D = ([\d.eE+-]+)", out, re.M).group(1)
        s_line = re.search(r"^fair_spread = ([\d.eE+-]+)", out, re.M).group(1)
        assert float(d_line) == pytest.approx(leg.value, rel=1e-10)
        assert float(s_line) == pytest.approx(leg.value / fprime, rel=1e-10)

    def test_wrong_contract_kind_is_validation_error(self, capsys):
        assert main(["price-ftd", "--scenario", REF_CDS]) == 2

    def test_json_format(self, capsys):
        assert main(["price-ftd", "--scenario", REF_FTD, "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert "generated" in doc["meta"]
        assert set(doc["report"]) == {"D", "fair_spread"}
        assert doc["report"]["D"]["value"] > 0.0


class TestPriceCds:
    def test_reports_all_five_numbers(self, tmp_path, capsys):
        # full counterparty recovery keeps the par computation on the exact-ratio path
        path = write_scenario(tmp_path, **{"contract.recovery_counterparty": 1.0})
        assert main(["price-cds", "--scenario", path, "--tol", "1e-5"]) == 0
        out = capsys.readouterr().out
        for key in ("D_s", "D_c", "F", "fair_value", "par_spread"):
            assert re.search(rf"^{key} = [\d.eE+-]+ \+- [\d.eE+-]+$", out, re.M), key
        d_c = float(re.search(r"^D_c = ([\d.eE+-]+)", out, re.M).group(1))
        assert d_c == 0.0


class TestDensityDump:
    def test_header_and_shape(self, capsys):
        code = main(["density", "--scenario", REF_CDS,
                     "--t-grid", "0.5:5:10", "--coord-grid", "0.5:6:10"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "t,coord,f_horizontal,f_slanted,f_survival"
        assert len(lines) == 101
        # t-major ordering: first ten rows share the first t
        first_t = {line.split(",")[0] for line in lines[1:11]}
        assert len(first_t) == 1

    def test_values_match_library(self, capsys):
        main(["density", "--scenario", REF_CDS, "--t-grid", "2:2:1", "--coord-grid", "3:3:1"])
        line = capsys.readouterr().out.strip().splitlines()[1]
        t, coord, fh, fs, fq = (float(v) for v in line.split(","))
        from paircredit import (WedgeDensityParams, derive_wedge, hitting_density_horizontal,
                                hitting_density_slanted, survival_density_q)
        scn = load_scenario(REF_CDS)
        p = WedgeDensityParams(derive_wedge(scn.firm1, scn.firm2, scn.market), scn.series)
        assert fh == pytest.approx(hitting_density_horizontal(2.0, 3.0, p), rel=1e-10)
        assert fs == pytest.approx(hitting_density_slanted(2.0, 3.0, p), rel=1e-10)
        assert fq == pytest.approx(survival_density_q(3.0, p.wedge.theta0, 2.0, p), rel=1e-10)


class TestValidate:
    @pytest.fixture()
    def fast_scenario(self, tmp_path):
        return write_scenario(
            tmp_path,
            **{
                "numerics.mc.n_paths": 20_000,
                "numerics.mc.steps_per_year": 250,
                "numerics.quad.rel_tol": 1e-5,
                "numerics.quad.abs_tol": 1e-9,
            },
        )

    def test_passes_and_echoes_seed(self, fast_scenario, capsys):
        assert main(["validate", "--scenario", fast_scenario]) == 0
        out = capsys.readouterr().out
        assert "seed = 20240821" in out
        assert "verdict = PASS" in out

    def test_byte_identical_reruns(self, fast_scenario, capsys):
        main(["validate", "--scenario", fast_scenario])
        first = body_of(capsys.readouterr().out)
        main(["validate", "--scenario", fast_scenario])
        second = body_of(capsys.readouterr().out)
        assert first == second

    def test_seed_override_changes_estimates(self, fast_scenario, capsys):
        main(["validate", "--scenario", fast_scenario, "--seed", "1"])
        a = body_of(capsys.readouterr().out)
        main(["validate", "--scenario", fast_scenario, "--seed", "2"])
        b = body_of(capsys.readouterr().out)
        assert a != b
        assert "seed = 1" in a and "seed = 2" in b

    def test_corrupted_wedge_angle_fails(self, fast_scenario, capsys):
        code = main(["validate", "--scenario", fast_scenario, "--corrupt-wedge-angle", "0.2"])
        assert code == 4
        out = capsys.readouterr().out
        assert "verdict = FAIL" in out
        assert "FLAG" in out

    def test_ftd_scenario(self, tmp_path, capsys):
        doc = json.loads(Path(REF_FTD).read_text())
        doc["numerics"]["mc"] = {"n_paths": 20_000, "steps_per_year": 250, "seed": 5}
        doc["numerics"]["quad"] = {"rel_tol": 1e-5, "abs_tol": 1e-9}
        path = tmp_path / "ftd.json"
        path.write_text(json.dumps(doc))
        assert main(["validate", "--scenario", str(path)]) == 0
        assert "D_ftd" in capsys.readouterr().out
