"""Stochastic experiment protocols at desk scale."""
import numpy as np
import pytest
from scipy.special import logsumexp

from manifold_diffusion.diffusion import EmpiricalScore, schedule
from manifold_diffusion.experiments import (ExperimentRecord, PartitionSplit,
                                            collapse_crossing_experiment,
                                            free_energy_mc, model_hash,
                                            partition_split, records_to_csv,
                                            rem_derivative_check,
                                            sign_change_time,
                                            speciation_experiment,
                                            threshold_crossing,
                                            tilted_log_partition)
from manifold_diffusion.model import make_model, sample_dataset


def _record(t, value, **kw):
    base = dict(kind="x", stderr=0.0, n_rep=1, model_hash="abc", seed=0)
    base.update(kw)
    return ExperimentRecord(t=t, value=value, **base)


def test_model_hash_depends_on_embedding():
    a = make_model(d=8, p=4, seed=0)
    b = make_model(d=8, p=4, seed=0)
    c = make_model(d=8, p=4, seed=1)
    assert model_hash(a) == model_hash(b)
    assert model_hash(a) != model_hash(c)
    assert len(model_hash(a)) == 12


def test_record_validation():
    with pytest.raises(ValueError):
        _record(1.0, np.nan)
    with pytest.raises(ValueError):
        _record(1.0, 0.5, stderr=-1.0)
    with pytest.raises(ValueError):
        _record(1.0, 0.5, n_rep=0)


def test_partition_split_combination_identities():
    ps = PartitionSplit(log_z1=-1.0, log_z2_plus=-2.0, log_z2_minus=-3.0)
    assert ps.combined() == pytest.approx(logsumexp([-1.0, -2.0, -3.0]))
    assert ps.log_z2() == pytest.approx(logsumexp([-2.0, -3.0]))


def test_partition_split_recovers_full_normalizer():
    mdl = make_model(d=6, p=3)
    ds = sample_dataset(mdl, 20, seed=2)
    x = np.random.default_rng(0).standard_normal(6)
    ps = partition_split(x, 0.4, ds)
    _, logz = EmpiricalScore(ds)(x, 0.4)
    assert ps.combined() == pytest.approx(logz, abs=1e-10)
    with pytest.raises(ValueError, match="single point"):
        partition_split(np.zeros((2, 6)), 0.4, ds)


def test_partition_split_planted_term_dominates_near_its_sample():
    mdl = make_model(d=10, p=5)
    ds = sample_dataset(mdl, 50, seed=4)
    t = 0.05
    x = schedule(t).a * ds.ambient[0]
    ps = partition_split(x, t, ds, planted_index=0)
    assert ps.log_z1 > ps.log_z2()


def test_speciation_experiment_small_run():
    mdl = make_model(d=8, p=4, seed=1)
    recs = speciation_experiment(mdl, n_data=64, t_grid=[2.0, 0.8, 0.3],
                                 n_traj=4, n_clones=4, seed=5, dt=0.05,
                                 t_start=4.0)
    assert [r.t for r in recs] == [2.0, 0.8, 0.3]
    assert all(r.kind == "speciation_agreement" for r in recs)
    assert all(0.0 <= r.value <= 1.0 for r in recs)
    assert all(r.n_rep == 16 for r in recs)
    recs2 = speciation_experiment(mdl, n_data=64, t_grid=[2.0, 0.8, 0.3],
                                  n_traj=4, n_clones=4, seed=5, dt=0.05,
                                  t_start=4.0)
    assert [r.value for r in recs] == [r.value for r in recs2]


def test_speciation_experiment_validates_inputs():
    mdl = make_model(d=8, p=4)
    with pytest.raises(ValueError, match="decreasing"):
        speciation_experiment(mdl, 16, [0.5, 1.0], 2, 2, seed=0)
    with pytest.raises(ValueError, match="two clones"):
        speciation_experiment(mdl, 16, [1.0, 0.5], 2, 1, seed=0)


def test_threshold_crossing_interpolates():
    recs = [_record(2.0, 0.5), _record(1.0, 0.9), _record(0.5, 1.0)]
    # linear interpolation between (1.0, 0.9) and (0.5, 1.0) at level 0.95
    assert threshold_crossing(recs) == pytest.approx(0.75)
    assert threshold_crossing(recs, level=0.4) == 2.0
    with pytest.raises(ValueError, match="never reaches"):
        threshold_crossing(recs, level=1.01)


def test_collapse_crossing_experiment_and_sign_change():
    mdl = make_model(d=20, p=10, alpha=0.25)
    ds = sample_dataset(mdl, 150, seed=3)
    t_grid = np.linspace(1.2, 0.05, 8)
    recs = collapse_crossing_experiment(mdl, ds, t_grid, n_noise=40, seed=7)
    assert len(recs) == 8
    vals = [r.value for r in recs]
    # large t: bulk dominates (negative); small t: planted dominates
    assert vals[0] < 0 < vals[-1]
    t_cross = sign_change_time(recs)
    assert 0.05 < t_cross < 1.2


def test_collapse_crossing_flags_one_sided_grids():
    mdl = make_model(d=20, p=10, alpha=0.25)
    ds = sample_dataset(mdl, 150, seed=3)
    recs = collapse_crossing_experiment(mdl, ds, [2.0, 1.8], n_noise=20, seed=1)
    assert recs[-1].flags == ("all_one_sign_widen_grid",)
    with pytest.raises(ValueError, match="no sign change"):
        sign_change_time(recs)


def test_free_energy_mc_guards():
    big = make_model(d=64, p=32)
    with pytest.raises(ValueError, match="p <= 24"):
        free_energy_mc(big, 0.5, 10, 10_000, seed=0)
    small = make_model(d=8, p=4)
    with pytest.raises(ValueError, match="n_latent"):
        free_energy_mc(small, 0.5, 10, 100, seed=0)


def test_free_energy_mc_matches_gaussian_formula_cheaply():
    mdl = make_model(d=8, p=4, ensemble="gaussian_iid", seed=2)
    t = 0.5
    sch = schedule(t)
    F = mdl.embedding.entries
    sigma = sch.a**2 * F @ F.T / mdl.p + sch.h * np.eye(mdl.d)
    exact = -0.5 * np.log(2 * np.pi) - np.linalg.slogdet(sigma)[1] / (2 * mdl.d) - 0.5
    rec = free_energy_mc(mdl, t, n_x=40, n_latent=20_000, seed=12)
    assert rec.value == pytest.approx(exact, abs=4 * rec.stderr + 1e-3)
    assert "logmeanexp_downward_bias" in rec.flags


def test_free_energy_mc_mismatched_prior_lowers_value():
    mdl = make_model(d=8, p=4, ensemble="gaussian_iid", seed=2)
    matched = free_energy_mc(mdl, 0.5, 40, 20_000, seed=12)
    mismatched = free_energy_mc(mdl, 0.5, 40, 20_000, seed=12, mismatched=True)
    assert "mismatched_prior" in mismatched.flags
    gap = matched.value - mismatched.value
    assert gap > 2 * np.hypot(matched.stderr, mismatched.stderr)


def test_rem_derivative_is_half():
    mdl = make_model(d=24, p=12)
    rec = rem_derivative_check(mdl, 0.5, n_rep=20_000, seed=6)
    assert rec.value == pytest.approx(0.5, abs=4 * rec.stderr)


def test_tilted_log_partition_decreases_with_tilt():
    mdl = make_model(d=12, p=6, alpha=0.25)
    ds = sample_dataset(mdl, 80, seed=5)
    v1 = tilted_log_partition(mdl, ds, 0.4, lam=0.5, n_noise=30, seed=2)
    v2 = tilted_log_partition(mdl, ds, 0.4, lam=2.0, n_noise=30, seed=2)
    assert np.isfinite(v1) and np.isfinite(v2)
    # the per-sample log-weights are negative, so a stronger tilt lowers the sum
    assert v2 < v1
    with pytest.raises(ValueError):
        tilted_log_partition(mdl, ds, 0.4, lam=0.0, n_noise=10, seed=0)


def test_records_to_csv(tmp_path):
    recs = [_record(1.0, 0.5), _record(0.5, 0.9, flags=("a", "b"))]
    path = tmp_path / "records.csv"
    records_to_csv(recs, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("kind,t,value")
    assert lines[2].endswith("a;b")
