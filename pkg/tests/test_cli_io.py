"""Config, seeding, checkpoints, metrics, the training loop lifecycle and the CLI."""

import json
import math
import os
import struct
import subprocess
import sys

import numpy as np
import pytest
from scipy.stats import chisquare

from throwcatch import checkpoint as ckpt_mod
from throwcatch.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from throwcatch.cli import main
from throwcatch.config import RunConfig, config_from_dict, dump_config, parse_config
from throwcatch.errors import CheckpointError, ConfigError, NonFiniteError
from throwcatch.harl import make_agents
from throwcatch.harl import train as train_mod
from throwcatch.harl.train import CHECKPOINT_DIR, DIAGNOSTIC_FILE, METRICS_FILE, Trainer, checkpoint_name, train
from throwcatch.metrics import append_metrics, read_metrics
from throwcatch.nn import forward
from throwcatch.seeding import derive_seeds, restore_rng, rng_state

TINY = {
    "envs_per_batch": 3,
    "steps_per_env": 20,
    "checkpoint_every": 2,
    "actor": {"hidden_widths": [8, 8]},
    "critic": {"hidden_widths": [8, 8]},
    "ppo": {"epochs_per_update": 2, "minibatches": 2},
}


def tiny(**kw):
    data = json.loads(json.dumps(TINY))
    data.update(kw)
    return config_from_dict(data)


# --- config ----------------------------------------------------------------------


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("")
    cfg = parse_config(p)
    w = cfg.reward
    assert [w.w0, w.w1, w.w2, w.w3, w.w4, w.w5, w.w6] == [5.0, 1.0, 0.5, 0.5, 1e-3, 0.8, 0.2]
    assert w.alpha == 0.7 and cfg.throw.noise_half_width == 0.5
    assert cfg.throw.v_base_linear == [5.0, 4.0]
    assert cfg.gae.gamma == 0.99 and cfg.gae.lam == 0.95 and cfg.ppo.clip_eps == 0.2


def test_alpha_out_of_range_names_key(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("reward:\n  alpha: 1.3\n")
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert "alpha" in err.value.key


@pytest.mark.parametrize("text, key", [
    ("bogus: 1\n", "bogus"),
    ("ppo:\n  clip_epsilon: 0.1\n", "ppo.clip_epsilon"),
    ("iterations: lots\n", "iterations"),
    ("ppo:\n  clip_eps: -0.1\n", "ppo.clip_eps"),
])
def test_bad_config_names_key(tmp_path, text, key):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert err.value.key == key


def test_config_round_trip(tmp_path):
    cfg = tiny(mode="sa", seed=11, reward={"alpha": 0.9},
               alpha_schedule={"mode": "decay", "alpha_start": 1.0, "alpha_end": 0.7, "total_iters": 10})
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(cfg))
    assert parse_config(p) == cfg
    assert parse_config(p).digest() == cfg.digest()


# --- seeding ---------------------------------------------------------------------


def test_seed_streams_pure_and_distinct():
    assert np.array_equal(derive_seeds(5, "env:0").random(100), derive_seeds(5, "env:0").random(100))
    a, b = derive_seeds(5, "env:0").random(10_000), derive_seeds(5, "env:1").random(10_000)
    assert np.all(a != b)
    assert not np.array_equal(derive_seeds(5, "x").random(5), derive_seeds(6, "x").random(5))


def test_pooled_streams_uniform():
    pooled = np.concatenate([derive_seeds(123, f"s{i}").random(62_500) for i in range(16)])
    counts = np.bincount((pooled * 100).astype(int), minlength=100)
    assert chisquare(counts).pvalue > 0.001


def test_rng_state_round_trip():
    r = derive_seeds(1, "a")
    r.random(7)
    clone = restore_rng(json.loads(json.dumps(rng_state(r))))
    assert np.array_equal(r.random(5), clone.random(5))


# --- checkpoints -----------------------------------------------------------------


@pytest.fixture
def saved(tmp_path):
    cfg = tiny(mode="harl")
    agents, critic = make_agents(cfg)
    cp = Checkpoint(7, cfg.digest(), agents, critic, {"env:0": rng_state(derive_seeds(0, "env:0"))}, cfg.to_dict())
    path = tmp_path / "ck.bin"
    save_checkpoint(path, cp)
    return path, cp


def test_checkpoint_round_trip_forward_bit_identical(saved, rng):
    path, cp = saved
    back = load_checkpoint(path)
    assert back.iteration == 7 and back.config_digest == cp.config_digest
    for role, agent in cp.agents.items():
        x = rng.standard_normal((100, agent.spec.input_dim))
        assert np.array_equal(forward(agent.spec, agent.params, x), forward(back.agents[role].spec, back.agents[role].params, x))
        assert back.agents[role].opt.step_count == agent.opt.step_count
    gs = rng.standard_normal((100, cp.critic.spec.input_dim))
    assert np.array_equal(cp.critic.values(gs), back.critic.values(gs))
    assert back.rng_states == cp.rng_states


def test_checkpoint_truncated(saved):
    path, _ = saved
    data = path.read_bytes()
    for cut in (10, len(data) // 2, len(data) - 1):
        path.write_bytes(data[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


def test_checkpoint_version_and_magic(saved):
    path, _ = saved
    data = bytearray(path.read_bytes())
    bumped = data.copy()
    struct.pack_into("<I", bumped, 8, ckpt_mod.FORMAT_VERSION + 1)
    path.write_bytes(bytes(bumped))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)
    path.write_bytes(b"NOTACKPT" + bytes(data[8:]))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_write_leaves_no_temp_files(saved):
    path, _ = saved
    assert [p.name for p in path.parent.iterdir()] == [path.name]


def test_checkpoint_arrays_little_endian_f8(saved):
    path, cp = saved
    data = path.read_bytes()
    _, _, hlen = struct.unpack_from("<8sIQ", data)
    header = json.loads(data[20 : 20 + hlen])
    first_name, first_len = header["arrays"][0]
    first = np.frombuffer(data, dtype="<f8", count=first_len, offset=20 + hlen)
    assert first_name.endswith("/params")
    assert np.array_equal(first, cp.agents[header["agents"][0]].params)


# --- metrics ---------------------------------------------------------------------


def test_metrics_append_and_round_trip(tmp_path):
    p = tmp_path / "m.jsonl"
    r1 = {"iteration": 0, "x": 0.1 + 0.2, "tiny": 5e-324}
    r2 = {"iteration": 1, "x": math.pi}
    append_metrics(p, r1)
    append_metrics(p, r2)
    assert read_metrics(p) == [r1, r2]


def test_metrics_many_appends(tmp_path):
    p = tmp_path / "m.jsonl"
    for i in range(10_000):
        append_metrics(p, {"iteration": i})
    assert len(p.read_text().splitlines()) == 10_000


def test_metrics_reject_non_finite(tmp_path):
    p = tmp_path / "m.jsonl"
    with pytest.raises(NonFiniteError):
        append_metrics(p, {"loss": float("nan")})
    assert not p.exists() or p.read_text() == ""


# --- training lifecycle ------------------------------------------------------------


def test_zero_iterations_writes_initial_checkpoint_only(tmp_path):
    train(tiny(iterations=0), output_dir=tmp_path)
    assert [p.name for p in (tmp_path / CHECKPOINT_DIR).iterdir()] == [checkpoint_name(0)]
    assert (tmp_path / METRICS_FILE).read_text() == ""


def test_checkpoint_schedule(tmp_path):
    train(tiny(iterations=5, checkpoint_every=2), output_dir=tmp_path)
    names = sorted(p.name for p in (tmp_path / CHECKPOINT_DIR).iterdir())
    assert names == [checkpoint_name(i) for i in (0, 2, 4, 5)]
    assert len(read_metrics(tmp_path / METRICS_FILE)) == 5


def _strip_wall(path):
    out = []
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        rec.pop("wall_seconds")
        out.append(json.dumps(rec))
    return out


@pytest.mark.parametrize("mode", ["sa", "harl"])
def test_identical_runs_identical_metrics(tmp_path, mode):
    cfg = tiny(mode=mode, iterations=3)
    train(cfg, output_dir=tmp_path / "a")
    train(cfg, output_dir=tmp_path / "b")
    assert _strip_wall(tmp_path / "a" / METRICS_FILE) == _strip_wall(tmp_path / "b" / METRICS_FILE)


def test_resume_matches_uninterrupted(tmp_path):
    cfg = tiny(mode="harl", iterations=12, checkpoint_every=2)
    full = train(cfg, output_dir=tmp_path / "full")
    first = train(cfg, output_dir=tmp_path / "part", until=2)
    assert first.iteration == 2
    resumed = train(cfg, output_dir=tmp_path / "part", resume_from=tmp_path / "part" / CHECKPOINT_DIR / checkpoint_name(2))
    assert _strip_wall(tmp_path / "full" / METRICS_FILE) == _strip_wall(tmp_path / "part" / METRICS_FILE)
    for role in full.agents:
        assert np.array_equal(full.agents[role].params, resumed.agents[role].params)


def test_resume_with_other_config_warns(tmp_path):
    train(tiny(iterations=1), output_dir=tmp_path)
    other = tiny(iterations=2, seed=99)
    with pytest.warns(UserWarning):
        Trainer.from_checkpoint(other, load_checkpoint(tmp_path / CHECKPOINT_DIR / checkpoint_name(1)))


def test_non_finite_update_aborts_with_diagnostic(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NonFiniteError("catcher: non-finite policy loss")

    monkeypatch.setattr(train_mod, "happo_update", boom)
    with pytest.raises(NonFiniteError):
        train(tiny(iterations=3), output_dir=tmp_path)
    diag = json.loads((tmp_path / DIAGNOSTIC_FILE).read_text())
    assert diag["iteration"] == 0 and diag["error"] == "NonFiniteError"


def test_metrics_record_fields(tmp_path):
    train(tiny(mode="harl", iterations=1), output_dir=tmp_path)
    rec = read_metrics(tmp_path / METRICS_FILE)[0]
    for key in ("iteration", "wall_seconds", "alpha", "mean_r_total", "mean_r_catch", "mean_r_throw",
                "catcher_policy_loss", "thrower_policy_loss", "value_loss", "catcher_clip_fraction",
                "thrower_approx_kl", "mean_episode_length", "failure_rate", "thrower_mean_abs_v_action"):
        assert key in rec
    assert rec["alpha"] == 0.7


def test_sa_trains_catcher_only_with_unit_alpha(tmp_path):
    tr = train(tiny(mode="sa", iterations=1), output_dir=tmp_path)
    assert list(tr.agents) == ["catcher"] and tr.history[0]["alpha"] == 1.0
    assert tr.history[0]["mean_r_total"] == tr.history[0]["mean_r_catch"]


# --- CLI -------------------------------------------------------------------------


def _write_cfg(tmp_path, **kw):
    p = tmp_path / "run.yaml"
    p.write_text(dump_config(tiny(**kw)))
    return p


def test_cli_train_eval_and_sweeps(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, iterations=2)
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--mode", "harl", "--alpha", "0.8",
                 "--alpha-schedule", "decay", "--seed", "4", "--out", str(out)]) == 0
    saved = parse_config(out / "config.yaml")
    assert saved.seed == 4 and saved.alpha_schedule.mode == "decay" and saved.alpha_schedule.alpha_end == 0.8
    ck = out / CHECKPOINT_DIR / checkpoint_name(2)
    assert main(["eval", "--checkpoint", str(ck), "--episodes", "3", "--noise-scale", "1.2",
                 "--per-object", "--out", str(tmp_path / "ev")]) == 0
    for name in ("episodes.csv", "summary.csv", "per_object.csv"):
        assert (tmp_path / "ev" / name).exists()

    sweep_dir = tmp_path / "ck"
    sweep_dir.mkdir()
    (sweep_dir / "alpha_0.7.bin").write_bytes(ck.read_bytes())
    (sweep_dir / "sa.bin").write_bytes(ck.read_bytes())
    assert main(["sweep-alpha", "--checkpoints", str(sweep_dir), "--episodes", "2", "--out", str(tmp_path / "sa")]) == 0
    assert len((tmp_path / "sa" / "alpha_sweep.csv").read_text().splitlines()) == 8
    assert main(["sweep-noise", "--checkpoints", str(sweep_dir), "--scales", "1.0,1.5", "--episodes", "2",
                 "--out", str(tmp_path / "sn")]) == 0
    assert len((tmp_path / "sn" / "noise_sweep.csv").read_text().splitlines()) == 7


def test_cli_env_overrides(tmp_path, monkeypatch):
    cfg = _write_cfg(tmp_path, iterations=0)
    monkeypatch.setenv("SEED", "17")
    monkeypatch.setenv("OUT_DIR", str(tmp_path / "envout"))
    assert main(["train", "--config", str(cfg)]) == 0
    assert parse_config(tmp_path / "envout" / "config.yaml").seed == 17


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("reward:\n  alpha: 2.0\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) != 0
    assert "alpha" in capsys.readouterr().err
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"xx")
    assert main(["eval", "--checkpoint", str(junk), "--episodes", "1", "--out", str(tmp_path / "y")]) != 0
    assert main(["eval", "--checkpoint", str(tmp_path / "missing.bin"), "--episodes", "1", "--out", str(tmp_path)]) != 0


def test_cli_verify_subprocess():
    env = dict(os.environ)
    out = subprocess.run([sys.executable, "-m", "throwcatch", "verify"], capture_output=True, text=True, env=env)
    assert out.returncode == 0, out.stdout + out.stderr
    assert out.stdout.count("PASS") == 6
