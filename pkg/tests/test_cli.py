"""Command-line interface: workflows, parity with the API, exit codes."""

import json

import numpy as np
import pytest

from tokentrim import (
    PruneConfig,
    analyze,
    apply_selection,
    prune,
    read_bundle,
    report_document,
    resolve_config,
    result_document,
)
from tokentrim.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def gen_bundle(capsys, tmp_path, name="in.ttb", **kw):
    """Generate a small deterministic bundle file and return its path."""
    opts = {
        "images": 3, "tokens": 40, "dim": 16, "seed": 1,
        "clusters": 4, "noise": 0.2, "drift": 0.3, "text": 6,
    }
    opts.update(kw)
    path = tmp_path / name
    argv = ["gen", "--output", str(path)]
    for key, val in opts.items():
        argv += [f"--{key}", str(val)]
    code, _, err = run(capsys, *argv)
    assert code == 0 and err == ""
    return path


class TestWorkflows:
    def test_gen_analyze_prune_roundtrip(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        out = tmp_path / "result.json"
        pruned = tmp_path / "pruned.ttb"
        code, _, err = run(
            capsys, "prune", "--input", str(inp), "--output", str(out),
            "--emit-pruned", str(pruned),
        )
        assert code == 0 and err == ""
        doc = json.loads(out.read_text())
        assert doc["selection"]["stage_sizes"][0] == 120
        kept = doc["selection"]["kept_global"]
        assert len(kept) == doc["selection"]["stage_sizes"][3]
        small = read_bundle(pruned)
        assert small.total_tokens == len(kept)

    def test_analyze_stdout_matches_api(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        code, out, _ = run(capsys, "analyze", "--input", str(inp))
        assert code == 0
        doc = json.loads(out)
        bundle = read_bundle(inp)
        cfg = PruneConfig()
        want = report_document(analyze(bundle, cfg), cfg, resolve_config(cfg, bundle))
        assert doc == json.loads(json.dumps(want))

    def test_prune_output_matches_api(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        out = tmp_path / "result.json"
        code, _, _ = run(
            capsys, "prune", "--input", str(inp), "--output", str(out),
            "--final", "17",
        )
        assert code == 0
        bundle = read_bundle(inp)
        cfg = PruneConfig(final_tokens=17, retention_ratio=None)
        report, sel = prune(bundle, cfg)
        budgets = resolve_config(cfg, bundle, require_text=True)
        want = result_document(report, sel, cfg, budgets)
        assert json.loads(out.read_text()) == json.loads(json.dumps(want))

    def test_emit_pruned_matches_apply_selection(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        out = tmp_path / "result.json"
        pruned_path = tmp_path / "small.ttb"
        run(
            capsys, "prune", "--input", str(inp), "--output", str(out),
            "--emit-pruned", str(pruned_path),
        )
        bundle = read_bundle(inp)
        _, sel = prune(bundle, PruneConfig())
        want = apply_selection(bundle, sel)
        got = read_bundle(pruned_path)
        assert got.n_images == want.n_images
        for g, w in zip(got.images, want.images):
            np.testing.assert_array_equal(g.data, w.data)

    def test_ratio_flag_resolves_budget(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path, tokens=25, images=4)  # 100 tokens
        out = tmp_path / "result.json"
        code, _, _ = run(
            capsys, "prune", "--input", str(inp), "--output", str(out),
            "--ratio", "0.2",
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["retention_ratio"] == 0.2
        assert doc["config"]["resolved"]["m_final"] == 20
        assert doc["selection"]["stage_sizes"][3] == 20

    def test_config_file_and_flag_precedence(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"lambda": 0.9, "final_tokens": 30}))
        out = tmp_path / "result.json"
        code, _, _ = run(
            capsys, "prune", "--input", str(inp), "--output", str(out),
            "--config", str(cfg_path), "--final", "12",
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["lambda"] == 0.9  # file survives
        assert doc["config"]["final_tokens"] == 12  # flag wins
        assert doc["config"]["retention_ratio"] is None

    def test_no_fast_path_agrees_on_signals(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        fast = tmp_path / "fast.json"
        slow = tmp_path / "slow.json"
        run(capsys, "analyze", "--input", str(inp), "--output", str(fast))
        run(
            capsys, "analyze", "--input", str(inp), "--output", str(slow),
            "--no-fast-path",
        )
        a = json.loads(fast.read_text())["report"]
        b = json.loads(slow.read_text())["report"]
        np.testing.assert_allclose(
            a["d_intra_per_image"], b["d_intra_per_image"], atol=1e-6
        )
        assert a["m1"] == b["m1"]
        assert a["per_image_budgets"] == b["per_image_budgets"]

    def test_positionwise_variant_flag(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        code, out, _ = run(
            capsys, "analyze", "--input", str(inp),
            "--inter-variant", "positionwise",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["config"]["inter_variant"] == "position_wise"


class TestGenDeterminism:
    def test_same_seed_same_bytes(self, capsys, tmp_path):
        a = gen_bundle(capsys, tmp_path, name="a.ttb", seed=42)
        b = gen_bundle(capsys, tmp_path, name="b.ttb", seed=42)
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_fallback(self, capsys, tmp_path, monkeypatch):
        explicit = gen_bundle(capsys, tmp_path, name="flag.ttb", seed=42)
        monkeypatch.setenv("TOKENTRIM_SEED", "42")
        path = tmp_path / "env.ttb"
        code, _, _ = run(
            capsys, "gen", "--images", "3", "--tokens", "40", "--dim", "16",
            "--clusters", "4", "--noise", "0.2", "--drift", "0.3",
            "--text", "6", "--output", str(path),
        )
        assert code == 0
        assert path.read_bytes() == explicit.read_bytes()

    def test_flag_beats_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("TOKENTRIM_SEED", "7")
        a = gen_bundle(capsys, tmp_path, name="a.ttb", seed=3)
        monkeypatch.delenv("TOKENTRIM_SEED")
        b = gen_bundle(capsys, tmp_path, name="b.ttb", seed=3)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_env_seed(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("TOKENTRIM_SEED", "not-a-number")
        code, _, err = run(
            capsys, "gen", "--images", "1", "--tokens", "4", "--dim", "4",
            "--output", str(tmp_path / "x.ttb"),
        )
        assert code == 28
        assert "TOKENTRIM_SEED" in err


class TestBenchCommand:
    def test_tiny_run_emits_table_and_json(self, capsys, tmp_path):
        json_path = tmp_path / "bench.json"
        code, out, err = run(
            capsys, "bench", "--kernel", "pareto", "--n", "80", "--budget", "6",
            "--repeats", "1", "--seed", "0", "--json", str(json_path),
        )
        assert code == 0 and err == ""
        assert "kernel" in out and "pareto" in out
        doc = json.loads(json_path.read_text())
        (entry,) = doc["results"]
        assert entry["kernel"] == "pareto"
        assert entry["floor"] == 2.0
        assert entry["n"] == 80
        assert entry["speedup"] > 0

    def test_json_to_stdout_without_flag(self, capsys):
        code, out, _ = run(
            capsys, "bench", "--kernel", "pareto", "--n", "50", "--budget", "4",
            "--repeats", "1", "--seed", "1",
        )
        assert code == 0
        start = out.index("{")
        doc = json.loads(out[start:])
        assert doc["results"][0]["max_abs_err"] == 0.0  # identical index sets


class TestExitCodes:
    def test_missing_input(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "prune", "--input", str(tmp_path / "nope.ttb"),
            "--output", str(tmp_path / "out.json"),
        )
        assert code == 27
        assert err.startswith("tokentrim prune: stage load-input: IoFailure:")

    def test_bad_magic(self, capsys, tmp_path):
        bad = tmp_path / "bad.ttb"
        bad.write_bytes(b"NOPE" + b"\x00" * 32)
        code, _, err = run(
            capsys, "analyze", "--input", str(bad),
        )
        assert code == 23
        assert "BadMagic" in err

    def test_bad_spec_via_gen(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "gen", "--images", "0", "--tokens", "4", "--dim", "4",
            "--output", str(tmp_path / "x.ttb"),
        )
        assert code == 26
        assert "BadSpec" in err

    def test_config_file_errors(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path)
        bad_json = tmp_path / "bad.json"
        bad_json.write_text("{not json")
        code, _, err = run(
            capsys, "analyze", "--input", str(inp), "--config", str(bad_json)
        )
        assert code == 28 and "BadConfig" in err

        unknown = tmp_path / "unknown.json"
        unknown.write_text(json.dumps({"m_min": 4, "bogus_key": 1}))
        code, _, err = run(
            capsys, "analyze", "--input", str(inp), "--config", str(unknown)
        )
        assert code == 28 and "bogus_key" in err

        missing = tmp_path / "missing.json"
        code, _, err = run(
            capsys, "analyze", "--input", str(inp), "--config", str(missing)
        )
        assert code == 27

    def test_mutually_exclusive_budget_flags(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "prune", "--input", "x", "--output", "y",
                "--ratio", "0.5", "--final", "10",
            ])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_empty_text_exit(self, capsys, tmp_path):
        inp = gen_bundle(capsys, tmp_path, text=0)
        code, _, err = run(
            capsys, "prune", "--input", str(inp),
            "--output", str(tmp_path / "out.json"),
        )
        assert code == 12
        assert err.startswith("tokentrim prune: stage resolve-config: EmptyText:")
