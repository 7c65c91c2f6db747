"""Scan plans, the point runner, determinism, and trend summaries."""

import csv
import json
import math

import pytest

from torus_hartree import (
    SCAN_COLUMNS,
    ScanPlan,
    ScanRecord,
    iterated_limit_summary,
    load_plan,
    run_scan,
)
from torus_hartree.scan import WORKERS_ENV, _trajectory_filename

POTENTIAL = {"family": "gaussian"}


def small_plan(**overrides):
    base = dict(potential=POTENTIAL, rho_values=[1.0, 4.0], L_values=[2.0],
                family="perturbed", family_params={"eps0": 0.2, "s": 6.0},
                t_final=0.0, dt=1e-3)
    base.update(overrides)
    return ScanPlan(**base)


class TestPlan:
    def test_cutoff_rule(self):
        assert small_plan().cutoff(4.0) == 4
        assert small_plan(kappa=0.6).cutoff(7.0) == 5

    def test_ladders_must_ascend(self):
        with pytest.raises(ValueError, match="ascending"):
            small_plan(rho_values=[4.0, 1.0])
        with pytest.raises(ValueError, match="ascending"):
            small_plan(L_values=[2.0, 2.0])
        with pytest.raises(ValueError, match="non-empty"):
            small_plan(L_values=[])

    def test_scalar_validation(self):
        with pytest.raises(ValueError):
            small_plan(kappa=0.0)
        with pytest.raises(ValueError):
            small_plan(dt=0.0)
        with pytest.raises(ValueError):
            small_plan(t_final=-1.0)

    def test_seed_belongs_to_master(self):
        with pytest.raises(ValueError, match="master_seed"):
            small_plan(family_params={"eps0": 0.1, "s": 6.0, "seed": 3})

    def test_eps_rule_default_is_inv_sqrt_rho(self):
        assert small_plan().resolve_params(4.0)["eps"] == pytest.approx(0.1)

    def test_eps_rule_fixed(self):
        plan = small_plan(
            family_params={"eps0": 0.2, "eps_rule": "fixed", "s": 6.0})
        assert plan.resolve_params(100.0)["eps"] == pytest.approx(0.2)

    def test_eps_rule_validation(self):
        with pytest.raises(ValueError, match="unknown eps_rule"):
            small_plan(family_params={"eps0": 0.1, "eps_rule": "sqrt"}
                       ).resolve_params(1.0)
        with pytest.raises(ValueError, match="requires eps0"):
            small_plan(family_params={"eps_rule": "fixed"}).resolve_params(1.0)

    def test_k0_coerced_to_int_tuple(self):
        plan = small_plan(family_params={"eps0": 0.1, "s": 5.0,
                                         "k0": [1.0, 0, 0]})
        assert plan.resolve_params(1.0)["k0"] == (1, 0, 0)


class TestLoadPlan:
    def write(self, tmp_path, doc):
        path = tmp_path / "plan.json"
        path.write_text(json.dumps(doc))
        return path

    def base_doc(self):
        return dict(potential=POTENTIAL, rho_values=[1.0], L_values=[2.0],
                    family="plane_wave", family_params={}, t_final=0.0,
                    dt=1e-3)

    def test_round_trip(self, tmp_path):
        plan = load_plan(self.write(tmp_path, self.base_doc()))
        assert plan.rho_values == [1.0]
        assert plan.method == "split_strang"

    def test_unknown_key(self, tmp_path):
        doc = self.base_doc()
        doc["worker_count"] = 4
        with pytest.raises(ValueError, match="worker_count"):
            load_plan(self.write(tmp_path, doc))

    def test_missing_key(self, tmp_path):
        doc = self.base_doc()
        del doc["dt"]
        with pytest.raises(ValueError, match="dt"):
            load_plan(self.write(tmp_path, doc))

    def test_top_level_must_be_object(self, tmp_path):
        with pytest.raises(ValueError, match="JSON object"):
            load_plan(self.write(tmp_path, [1, 2]))


def synthetic(rho, L, value, status="ok"):
    return ScanRecord(rho=rho, L=L, M=int(L), seed="s", status=status,
                      beta_gap=value)


class TestSummary:
    def test_largest_L_wins_and_trend_decreasing(self):
        records = [synthetic(1.0, 2.0, 0.9), synthetic(1.0, 4.0, 0.5),
                   synthetic(2.0, 2.0, 0.8), synthetic(2.0, 4.0, 0.3),
                   synthetic(4.0, 2.0, 0.7), synthetic(4.0, 4.0, 0.1)]
        out = iterated_limit_summary(records, columns=("beta_gap",))
        col = out["columns"]["beta_gap"]
        assert [p["value"] for p in col["proxies"]] == [0.5, 0.3, 0.1]
        assert [p["L"] for p in col["proxies"]] == [4.0, 4.0, 4.0]
        assert col["trend"] == "decreasing"

    @pytest.mark.parametrize("values,trend", [
        ([0.1, 0.2, 0.4], "increasing"),
        ([0.5, 0.5 + 1e-12, 0.5], "flat"),
        ([0.1, 0.4, 0.2], "mixed"),
        ([0.1, math.nan, 0.2], "undefined"),
    ])
    def test_trend_classification(self, values, trend):
        records = [synthetic(float(i + 1), 2.0, v)
                   for i, v in enumerate(values)]
        out = iterated_limit_summary(records, columns=("beta_gap",))
        assert out["columns"]["beta_gap"]["trend"] == trend

    def test_flat_reports_value(self):
        records = [synthetic(1.0, 2.0, 0.5), synthetic(2.0, 2.0, 0.5)]
        out = iterated_limit_summary(records, columns=("beta_gap",))
        assert out["columns"]["beta_gap"]["value"] == 0.5

    def test_single_rho_is_undefined(self):
        out = iterated_limit_summary([synthetic(1.0, 2.0, 0.5)],
                                     columns=("beta_gap",))
        assert out["columns"]["beta_gap"]["trend"] == "undefined"

    def test_failed_rows_are_excluded(self):
        records = [synthetic(1.0, 2.0, 0.5), synthetic(2.0, 2.0, 0.4),
                   synthetic(2.0, 4.0, math.nan, status="failed: boom")]
        out = iterated_limit_summary(records, columns=("beta_gap",))
        col = out["columns"]["beta_gap"]
        # the failed L=4 row must not displace the ok L=2 proxy
        assert [p["L"] for p in col["proxies"]] == [2.0, 2.0]
        assert out["points_failed"] == 1
        assert out["points_total"] == 3


class TestRunScan:
    def test_static_scan_rows_and_files(self, tmp_path):
        plan = small_plan(rho_values=[1.0, 4.0], L_values=[2.0, 4.0])
        out = tmp_path / "scan"
        records = run_scan(plan, out_dir=out)
        assert [(r.rho, r.L) for r in records] == [
            (1.0, 2.0), (1.0, 4.0), (4.0, 2.0), (4.0, 4.0)]
        assert all(r.status == "ok" for r in records)
        assert records[1].M == 4
        assert records[2].seed == "0:1:0"
        assert records[3].n_particles == pytest.approx(4.0 * 64.0)
        assert records[0].final_t == 0.0
        assert (out / "table.csv").exists()
        assert (out / "summary.json").exists()
        for rho, L in [(1, 2), (1, 4), (4, 2), (4, 4)]:
            assert (out / _trajectory_filename(rho, L)).exists()
        with open(out / "table.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == SCAN_COLUMNS
        assert len(rows) == 5

    def test_eps_shrinks_along_rho_ladder(self):
        records = run_scan(small_plan())
        # eps = eps0 / sqrt(rho): the rho=4 point sits closer to the
        # pure condensate than the rho=1 point
        assert records[1].l2_dev < records[0].l2_dev
        assert records[1].condensate_fraction > records[0].condensate_fraction

    def test_failure_is_isolated(self, tmp_path):
        plan = small_plan(
            rho_values=[1.0], L_values=[2.0, 4.0],
            family_params={"eps0": 0.1, "s": 6.0, "k0": [3, 0, 0]})
        out = tmp_path / "scan"
        records = run_scan(plan, out_dir=out)
        assert records[0].status.startswith("failed: ")
        assert records[1].status == "ok"
        assert math.isnan(records[0].mass)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["points_failed"] == 1
        # no trajectory file for the failed point
        assert not (out / _trajectory_filename(1.0, 2.0)).exists()
        assert (out / _trajectory_filename(1.0, 4.0)).exists()

    def test_summary_trends_for_quasi_condensate(self, tmp_path):
        # rho rungs far enough apart that the eps0/sqrt(rho) shrinkage
        # dominates the seed-to-seed variation of the perturbation
        plan = small_plan(rho_values=[1.0, 16.0, 256.0])
        out = tmp_path / "scan"
        run_scan(plan, out_dir=out)
        summary = json.loads((out / "summary.json").read_text())
        cols = summary["columns"]
        assert cols["beta_gap"]["trend"] == "decreasing"
        assert cols["condensate_fraction"]["trend"] == "increasing"

    def test_write_trajectories_toggle(self, tmp_path):
        plan = small_plan(write_trajectories=False)
        out = tmp_path / "scan"
        run_scan(plan, out_dir=out)
        assert (out / "table.csv").exists()
        assert not (out / _trajectory_filename(1.0, 2.0)).exists()


def strip_runtime(table_text):
    rows = [line.rsplit(",", 1)[0] for line in table_text.splitlines()]
    return "\n".join(rows)


class TestDeterminism:
    def dynamic_plan(self):
        return small_plan(rho_values=[1.0, 2.0], t_final=2e-3, dt=1e-3,
                          stride=1)

    def run_to(self, tmp_path, name, workers):
        out = tmp_path / name
        run_scan(self.dynamic_plan(), out_dir=out, workers=workers)
        return out

    def test_worker_count_does_not_change_results(self, tmp_path):
        serial = self.run_to(tmp_path, "serial", 1)
        threaded = self.run_to(tmp_path, "threaded", 3)
        for rho in (1.0, 2.0):
            name = _trajectory_filename(rho, 2.0)
            assert (serial / name).read_bytes() == \
                (threaded / name).read_bytes()
        assert strip_runtime((serial / "table.csv").read_text()) == \
            strip_runtime((threaded / "table.csv").read_text())
        assert SCAN_COLUMNS[-1] == "runtime_s"  # the stripped column

    def test_workers_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV, "2")
        env_out = self.run_to(tmp_path, "env", None)
        ref_out = self.run_to(tmp_path, "ref", 1)
        assert strip_runtime((env_out / "table.csv").read_text()) == \
            strip_runtime((ref_out / "table.csv").read_text())
