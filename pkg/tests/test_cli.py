import json
import re

import pytest

from gamedyn import ConfigError, build_transition_model, decompose_model, g3
from gamedyn.cli import ExperimentConfig, main, run
from gamedyn.reporting import export_dot


def _read_all(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_empty_operations_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig(
            game={"type": "builtin", "name": "g2"},
            kernels=("ml",),
            temperatures=(1.0,),
            operations=(),
            output_dir=".",
        )


def test_seed_required_for_simulate():
    with pytest.raises(ConfigError):
        ExperimentConfig(
            game={"type": "builtin", "name": "g2"},
            kernels=("ml",),
            temperatures=(1.0,),
            operations=("simulate",),
            output_dir=".",
        )


def test_bad_inputs_exit_codes(tmp_path):
    assert main(["simulate", "--builtin", "g2", "--T", "1", "--out", str(tmp_path)]) == 1
    assert main(["stationary", "--fixture", "/does/not/exist.json", "--out", str(tmp_path)]) == 1
    bad_t = main(["stationary", "--builtin", "g2", "--T", "-1", "--out", str(tmp_path)])
    assert bad_t == 1


def test_capacity_exit_code(tmp_path):
    fixture = tmp_path / "big.json"
    fixture.write_text(
        json.dumps(
            {
                "type": "coverage",
                "d": 4,
                "alpha": 0.5,
                "sensors": [{"x": 2.0, "y": 2.0, "radii": [0, 1]} for _ in range(17)],
            }
        )
    )
    code = main(
        ["stationary", "--fixture", str(fixture), "--T", "1", "--out", str(tmp_path / "o")]
    )
    assert code == 2


def test_pipeline_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        config = ExperimentConfig(
            game={"type": "builtin", "name": "g3"},
            kernels=("lll", "ml"),
            temperatures=(1.0,),
            operations=("stationary", "hitting", "zerocost", "cda", "compare", "validate"),
            output_dir=str(out),
            seed=11,
        )
        manifest = run(config)
        assert manifest.all_verdicts_pass
    assert _read_all(out1) == _read_all(out2)


def test_compare_json_dominance(tmp_path):
    code = main(
        ["compare", "--builtin", "g3", "--T", "1", "--out", str(tmp_path), "--strict"]
    )
    assert code == 0
    doc = json.loads((tmp_path / "compare.json").read_text())
    entry = doc["1"]
    assert entry["regularity"]["passed"]
    assert entry["hierarchy_comparison"]["passed"]
    shared = entry["hierarchy_comparison"]["shared_cycles"]
    assert any(c["members"] == [1, 2] for c in shared)


def test_dot_export(tmp_path):
    h = decompose_model(build_transition_model(g3(), "ml", 1.0))
    path = tmp_path / "g3.dot"
    export_dot(h, path, g3())
    text = path.read_text()
    assert text.startswith("digraph")
    assert text.count("{") == text.count("}")
    assert "3/0" in text  # V^1/V_*^1 label from {1,2} to {0}
    assert len(re.findall(r"subgraph cluster", text)) == 2
    # re-export is byte-identical
    path2 = tmp_path / "g3b.dot"
    export_dot(h, path2, g3())
    assert path.read_bytes() == path2.read_bytes()


def test_dot_degenerate_no_clusters(tmp_path):
    import numpy as np

    from gamedyn import decompose

    V = np.array([[np.inf, 0.0], [0.0, np.inf]])
    h = decompose(V, [0.0, 0.0], rev_tol=1.0)
    path = tmp_path / "flat.dot"
    export_dot(h, path)
    text = path.read_text()
    assert "cluster" not in text
    assert text.count("s0") >= 1 and text.count("s1") >= 1


def test_manifest_contents(tmp_path):
    config = ExperimentConfig(
        game={"type": "builtin", "name": "g2"},
        kernels=("ml",),
        temperatures=(0.5,),
        operations=("zerocost",),
        output_dir=str(tmp_path),
    )
    manifest = run(config)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["config_digest"] == config.digest()
    assert "zerocost.csv" in doc["artifacts"]
    assert "zerocost.json" in doc["artifacts"]
    assert "elapsed" not in json.dumps(doc)  # timing kept out for determinism


def test_coverage_gen_roundtrip(tmp_path):
    out = tmp_path / "cov.json"
    assert main(
        [
            "coverage-gen", "--d", "6", "--n", "2", "--alpha", "0.5",
            "--radii", "0,2", "--seed", "5", "--out", str(out),
        ]
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["type"] == "coverage" and len(doc["sensors"]) == 2
    run_out = tmp_path / "run"
    assert main(
        ["stationary", "--fixture", str(out), "--T", "1", "--out", str(run_out)]
    ) == 0


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "game": {"type": "builtin", "name": "g3"},
                "kernels": "both",
                "temperatures": [2.0],
                "operations": ["zerocost"],
            }
        )
    )
    out = tmp_path / "o"
    assert main(["zerocost", "--config", str(cfg), "--T", "1", "--out", str(out)]) == 0
    doc = json.loads((out / "zerocost.json").read_text())
    assert set(doc) == {"lll", "ml"}
