import json

import pytest

from mattila_lab import cli
from mattila_lab.experiments import EXPERIMENTS, ConfigError, load_config
from mattila_lab.serialize import read_csv

QUICK = {
    "build-measure": {"measures": [{"bundled": "cantor-8"}, {"bundled": "two-point"}]},
    "fourier-profile": {"measures": [{"bundled": "cantor-dust-4"}],
                        "params": {"radii": [8, 16, 32, 64], "n_dirs": 64, "n_group": 32,
                                   "r_max": 4.0}},
    "mattila-verify": {"params": {"map": "signed-area", "n_pairs": 20000, "n_group": 500},
                       "epsilons": [0.125, 0.0625]},
    "falconer-distance": {"params": {"n_pairs": 20000, "r_max": 4.0, "sampler_radius": 48}, "epsilons": [0.125, 0.0625]},
    "product-distances": {"params": {"ks": [1], "n_pairs": 20000, "n_group": 16},
                          "epsilons": [0.125, 0.0625]},
    "sum-product": {"params": {"n_pairs": 20000}, "epsilons": [0.125, 0.0625]},
    "sl2-probes": {"params": {"n_pairs": 1, "n_group": 2000}},
}


def _write(tmp_path, name, body):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(body, indent=2))
    return p


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_every_subcommand_runs(tmp_path, exp, capsys):
    cfg = _write(tmp_path, exp, {"experiment": exp, **QUICK[exp]})
    out = tmp_path / "out"
    assert cli.main([exp, "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 3 and summary["experiment"] == exp
    for csv in out.glob("*.csv"):
        rows = read_csv(csv)
        if rows and "seed" in rows[0]:
            assert all("tolerance" in r for r in rows)
    assert json.loads(capsys.readouterr().out) is not None


def test_runs_are_reproducible(tmp_path):
    cfg = _write(tmp_path, "sp", {"experiment": "sum-product", **QUICK["sum-product"]})
    for d in ("a", "b"):
        assert cli.main(["sum-product", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "sum_product.csv").read_text() == (tmp_path / "b" / "sum_product.csv").read_text()


def test_bad_epsilon_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "experiment": "sum-product",\n  "epsilons": [0.3]\n}\n')
    assert cli.main(["sum-product", "--config", str(p)]) == 2
    assert "bad.json:3: epsilons" in capsys.readouterr().err


def test_invalid_json_reports_line_and_column(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "experiment": "sum-product",\n  "seed": ,\n}\n')
    with pytest.raises(ConfigError, match=r"broken.json:3:\d+: invalid JSON"):
        load_config(p)


def test_unknown_key_and_mismatched_experiment(tmp_path, capsys):
    p = _write(tmp_path, "u", {"experiment": "sum-product", "colour": 1})
    with pytest.raises(ConfigError, match="colour: unknown key"):
        load_config(p)
    q = _write(tmp_path, "m", {"experiment": "sum-product"})
    assert cli.main(["sl2-probes", "--config", str(q)]) == 2


@pytest.mark.parametrize("body,key", [
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "sum-product", "epsilons": [0.125, 0.25]}, "epsilons"),
    ({"experiment": "sum-product", "seed": -1}, "seed"),
    ({"experiment": "sum-product", "measures": [{"bundled": "nope"}]}, "measures"),
    ({"experiment": "sum-product", "measures": [{"file": "/no/such.json"}]}, "measures"),
    ({"experiment": "sum-product", "window": {"kind": "spiral"}}, "window"),
])
def test_validation_errors(tmp_path, body, key):
    with pytest.raises(ConfigError, match=f": {key}:"):
        load_config(_write(tmp_path, "c", body))


def test_threads_must_be_positive(tmp_path):
    assert cli.main(["sum-product", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_shipped_configs_validate():
    from pathlib import Path
    files = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))
    assert {load_config(f).experiment for f in files} == set(EXPERIMENTS)
