import pytest

from framecs import experiments
from framecs.errors import InvalidInput, PremiseFailed
from framecs.experiments import ExperimentConfig


def small_config(**overrides):
    base = dict(
        d=8, m=5, trials=3, sparsity_levels=(1, 2), perturbations=(0.0, 1e-3), seed=11
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_zero_sparsity_rejected(self):
        with pytest.raises(InvalidInput):
            small_config(sparsity_levels=(0,), trials=1)

    def test_oversized_m_rejected(self):
        with pytest.raises(InvalidInput):
            small_config(m=9)

    def test_zero_trials_rejected(self):
        with pytest.raises(InvalidInput):
            small_config(trials=0)

    def test_negative_perturbation_rejected(self):
        with pytest.raises(InvalidInput):
            small_config(perturbations=(-0.1,))


class TestRunExperiment:
    def test_rows_and_fields(self):
        table = experiments.run_recovery_experiment(small_config())
        assert len(table.rows) == 2
        for row in table.rows:
            assert set(row.e_z) == {1, 2}
            assert set(row.e_x) == {1, 2}
            assert 0.0 <= row.coherence <= 1.0
        assert table.metadata["seed"] == 11
        assert table.metadata["generator"] == "numpy-pcg64"

    def test_deterministic_body(self):
        cfg = small_config()
        t1 = experiments.run_recovery_experiment(cfg)
        t2 = experiments.run_recovery_experiment(cfg)
        body1 = experiments.format_report(t1).split("\n")
        body2 = experiments.format_report(t2).split("\n")
        strip = lambda lines: [l for l in lines if not l.startswith("# wall_time")]
        assert strip(body1) == strip(body2)

    def test_signal_coefficient_gap(self):
        # Unperturbed coherent frame: signals recover to solver precision
        # while coefficients stay wrong.  Needs enough measurements for the
        # effective 3s-atom sparsity, so this runs at the desk scale.
        cfg = ExperimentConfig(
            d=50, m=30, trials=100, sparsity_levels=(2,), perturbations=(0.0,), seed=3
        )
        row = experiments.run_recovery_experiment(cfg).rows[0]
        assert row.e_z[2] <= 1e-5
        assert row.e_x[2] >= 0.1


class TestDemo:
    def test_reference_premise_values(self):
        rec = experiments.run_inadmissibility_demo(10, 0.05, (0, 10), seed=7)
        assert rec.norm_on_support == pytest.approx(2.05)
        assert rec.norm_off_support == pytest.approx(0.45)
        assert rec.premise_holds
        assert rec.worst_error > 1e-5

    def test_premise_failure_reports_norms(self):
        with pytest.raises(PremiseFailed) as info:
            experiments.run_inadmissibility_demo(10, 0.5, (0, 10), seed=7)
        assert info.value.norm_on == pytest.approx(2.5)
        assert info.value.norm_off == pytest.approx(4.5)

    def test_support_must_include_endpoints(self):
        with pytest.raises(InvalidInput):
            experiments.run_inadmissibility_demo(10, 0.05, (0, 3), seed=7)


class TestReports:
    def test_round_trip(self, tmp_path):
        table = experiments.run_recovery_experiment(small_config())
        path = tmp_path / "report.csv"
        experiments.write_report(table, path)
        back = experiments.read_report(path)
        assert len(back.rows) == len(table.rows)
        for a, b in zip(back.rows, table.rows):
            assert a.perturbation == pytest.approx(b.perturbation, abs=1e-12)
            assert a.coherence == pytest.approx(b.coherence, abs=1e-12)
            for s in b.e_z:
                assert a.e_z[s] == pytest.approx(b.e_z[s], abs=1e-12)
                assert a.e_x[s] == pytest.approx(b.e_x[s], abs=1e-12)

    def test_header_only_when_no_sparsities(self, tmp_path):
        table = experiments.ReportTable(rows=(), metadata={"seed": 0})
        text = experiments.format_report(table)
        lines = [l for l in text.splitlines() if not l.startswith("#")]
        assert lines == ["perturbation,coherence"]

    def test_single_row_table(self):
        row = experiments.PerturbationRow(0.0, 0.5, {2: 1e-6}, {2: 0.8}, 0)
        table = experiments.ReportTable(rows=(row,), metadata={})
        lines = experiments.format_report(table).splitlines()
        assert lines[0] == "perturbation,coherence,E_z_2,E_x_2"
        assert len(lines) == 2
        assert len(lines[1].split(",")) == 4

    def test_write_error_has_path(self, tmp_path):
        table = experiments.ReportTable(rows=(), metadata={})
        with pytest.raises(InvalidInput, match="no/such"):
            experiments.write_report(table, tmp_path / "no" / "such" / "file.csv")


class TestConfigFile:
    def test_parse(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "d = 8\nm = 5\ntrials = 3\nsparsity_levels = 1,2\n"
            "perturbations = 0,0.001\nseed = 11\nnoise_eps = 0\n"
        )
        cfg = experiments.read_config(path)
        assert cfg == small_config()

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("d = 8\nm = 5\ntrials = 1\nsparsity_levels = 1\n"
                        "perturbations = 0\nseed = 1\nbogus = 3\n")
        with pytest.raises(InvalidInput, match="bogus"):
            experiments.read_config(path)

    def test_missing_required_key(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("d = 8\n")
        with pytest.raises(InvalidInput, match="missing required"):
            experiments.read_config(path)

    def test_solver_overrides(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "d = 8\nm = 5\ntrials = 1\nsparsity_levels = 1\nperturbations = 0\n"
            "seed = 1\nmax_iter = 5000\nfeas_tol = 1e-8\n"
        )
        cfg = experiments.read_config(path)
        assert cfg.solver.max_iter == 5000
        assert cfg.solver.feas_tol == 1e-8


def test_derived_seed_stability():
    # Frozen values: the derivation scheme must never silently change, or
    # published experiment outputs stop being reproducible.
    a = experiments.derived_seed(42, 0)
    b = experiments.derived_seed(42, 0)
    c = experiments.derived_seed(42, 1)
    assert a == b
    assert a != c
