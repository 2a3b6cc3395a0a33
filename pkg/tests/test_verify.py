"""Statistical test kit: KS distances, bootstrap, report plumbing, and the
acceptance table."""

import json

import numpy as np
import pytest
from scipy import stats

from forge import verify
from forge.verify import (ACCEPTANCE, bootstrap_ci, ks_statistic,
                          make_report, write_jsonl, write_report_files)


class TestKsStatistic:
    def test_matches_scipy_on_uniform(self):
        gen = np.random.default_rng(30)
        s = gen.random(500)
        ref = stats.kstest(s, "uniform").statistic
        assert ks_statistic(s, lambda x: x) == pytest.approx(ref, abs=1e-12)

    def test_matches_scipy_on_normal(self):
        gen = np.random.default_rng(31)
        s = gen.normal(size=300)
        ref = stats.kstest(s, "norm").statistic
        assert ks_statistic(s, stats.norm.cdf) == pytest.approx(ref, abs=1e-12)

    def test_censoring_floor(self):
        gen = np.random.default_rng(32)
        s = gen.random(80)
        d = ks_statistic(s, lambda x: x, n_total=100)
        assert d >= 0.2  # at least the censored mass
        # uncensored value is recovered when n_total equals the sample size
        assert ks_statistic(s, lambda x: x, n_total=80) == \
            ks_statistic(s, lambda x: x)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_statistic([], lambda x: x)

    def test_detects_wrong_cdf(self):
        gen = np.random.default_rng(33)
        s = gen.random(2000)
        assert ks_statistic(s, lambda x: np.asarray(x) ** 2) > 0.2


class TestBootstrap:
    def test_deterministic_and_covering(self):
        gen = np.random.default_rng(34)
        s = gen.normal(10.0, 1.0, size=400)
        ci1 = bootstrap_ci(s, np.mean, 300, seed=5)
        ci2 = bootstrap_ci(s, np.mean, 300, seed=5)
        assert ci1 == ci2
        assert ci1[0] < 10.0 < ci1[1]
        assert ci1[1] - ci1[0] < 0.5

    def test_minimum_replicates(self):
        with pytest.raises(ValueError):
            bootstrap_ci([1.0, 2.0], np.mean, 100, seed=0)


class TestReports:
    def test_le_comparator(self):
        r = make_report("zu-ks", 0.03, 100, 1.0)
        assert r.passed and r.criterion == 10 and r.threshold == 0.06
        assert not make_report("zu-ks", 0.07, 100, 1.0).passed

    def test_ge_comparator(self):
        assert make_report("distortion-trend-frac", 0.95, 50, 1.0).passed
        assert not make_report("distortion-trend-frac", 0.5, 50, 1.0).passed

    def test_boolean_comparator(self):
        assert make_report("determinism-bytes", 1, 1, 0.0).passed
        assert not make_report("determinism-bytes", 0, 1, 0.0).passed

    def test_threshold_override(self):
        r = make_report("zu-ks", 0.07, 100, 1.0, threshold=0.1)
        assert r.passed and r.threshold == 0.1

    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError):
            make_report("no-such-statistic", 0.0, 1, 0.0)

    def test_acceptance_table_well_formed(self):
        for name, (crit, thr, cmp_kind) in ACCEPTANCE.items():
            assert isinstance(name, str) and name
            assert crit in range(1, 17)
            assert cmp_kind in ("le", "ge", "true")
        # every criterion 1..16 is covered by at least one statistic
        assert {c for c, _, _ in ACCEPTANCE.values()} == set(range(1, 17))


class TestOutputs:
    def test_jsonl_round_trip_and_key_order(self, tmp_path):
        path = tmp_path / "x.jsonl"
        write_jsonl(path, [{"b": 1, "a": 2}, {"z": [1, 2]}])
        lines = path.read_text().splitlines()
        assert lines[0] == '{"a": 2, "b": 1}'
        assert [json.loads(ln) for ln in lines] == [
            {"a": 2, "b": 1}, {"z": [1, 2]}]

    def test_report_files(self, tmp_path):
        reports = [make_report("zu-ks", 0.01, 100, 2.0)]
        records = [{"kind": "zu", "z": 1.5}]
        stem = str(tmp_path / "out")
        write_report_files(stem, reports, records)
        loaded = json.loads(open(f"{stem}.report.json").read())
        assert loaded[0]["name"] == "zu-ks" and loaded[0]["passed"]
        csv_text = open(f"{stem}.csv").read()
        assert csv_text.startswith("name,value,threshold,passed,n,runtime")
        assert "zu-ks" in csv_text
        assert open(f"{stem}.jsonl").read() == '{"kind": "zu", "z": 1.5}\n'

    def test_none_stem_writes_nothing(self, tmp_path):
        write_report_files(None, [], [])  # no exception, no files
        assert list(tmp_path.iterdir()) == []


class TestExperimentPlumbing:
    def test_emitted_names_are_in_the_table(self):
        reports, _ = verify.series_checks(lp_max=2, k_max=500)
        for r in reports:
            assert r.name in ACCEPTANCE

    def test_peel_limit_small(self):
        reports, records = verify.peel_limit(L_values=(8, 16), runs=300,
                                             seed=1)
        by_name = {r.name: r for r in reports}
        assert set(by_name) == {"peel-ks-L1024", "peel-ks-decreasing",
                                "peel-censored-frac", "peel-runtime"}
        assert all(rec["kind"] == "peel-limit" for rec in records)
        assert by_name["peel-censored-frac"].value <= 0.05

    def test_determinism_check(self, tmp_path):
        reports, _ = verify.determinism_check(str(tmp_path), runs=40, seed=3)
        assert reports[0].name == "determinism-bytes"
        assert reports[0].passed
