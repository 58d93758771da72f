import json

import jsonschema
import pytest

from quasiloc.cli import builtin_configs, load_config, main, resolve_config
from quasiloc.interaction import INTERACTION_SCHEMA, make_interaction

LR_SMALL = """
subcommand = "lr-check"
seed = 3
tol = 1e-10

[volume]
chain = [0, 6]

[interaction]
generator = "tfim"
params = { J = 1.0, h = 0.7, sites = 6 }

[lr]
samples = 6
delta_samples = 1
volume_samples = 1
"""

FACTORIZE_SMALL = """
subcommand = "factorize"
tol = 1e-9

[volume]
chain = [0, 6]

[sandwich]
gamma1p = [[5]]
gamma1 = [[4], [5]]
gamma2 = [[2], [3], [4], [5]]
gamma2p = [[1], [2], [3], [4], [5]]

[interaction]
generator = "random_2local"
params = { sites = 6, seed = 4 }
zone_respecting = true

[[interaction.terms]]
sites = [[3], [4]]
pauli = "ZZ"
coeff = 0.7

[factorize]
probes_per_zone = 3
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def csv_body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    return "\n".join(lines[1:])


def test_list_generators_catalog(capsys):
    assert main(["list-generators"]) == 0
    first = capsys.readouterr().out
    assert main(["list-generators"]) == 0
    assert capsys.readouterr().out == first
    cat = {g["name"]: g for g in json.loads(first)}
    assert set(cat["tfim"]["fields"]) == {"J", "h", "sites"}
    assert {"random_2local", "zone_respecting", "xxz"} <= set(cat)


def test_generators_validate_against_schema():
    for name, params in (("tfim", {"sites": 3}), ("xxz", {"sites": 3, "h": 0.2}),
                         ("random_2local", {"sites": 3})):
        jsonschema.validate(json.loads(make_interaction(name, **params).dumps()),
                            INTERACTION_SCHEMA)


def test_list_configs(capsys):
    assert main(["list-configs"]) == 0
    names = capsys.readouterr().out.split()
    assert names == builtin_configs() and "factorize-chain8" in names


def test_schema_error_names_field(tmp_path, capsys):
    path = write(tmp_path, 'subcommand = "gf-suite"\n[gf]\nm_lo = "two"\n')
    assert main(["gf-suite", "--config", path, "--out", str(tmp_path / "o")]) == 1
    assert "gf/m_lo" in capsys.readouterr().err
    with pytest.raises(ValueError, match="bogus"):
        resolve_config({"bogus": 1}, "gf-suite")


def test_subcommand_mismatch_and_missing_file(tmp_path):
    path = write(tmp_path, 'subcommand = "geometry"\n')
    assert main(["gf-suite", "--config", path]) == 1
    assert main(["gf-suite", "--config", str(tmp_path / "absent.toml")]) == 1
    assert main(["gf-suite", "--config", "builtin:absent"]) == 1
    bad = write(tmp_path, '[interaction]\nfile = "nope.json"\n', "f.toml")
    assert main(["lr-check", "--config", bad]) == 1


def test_lr_check_overlapping_supports_exit_1(tmp_path, capsys):
    text = LR_SMALL + 'a_support = [[2]]\nb_support = [[2], [3]]\n'
    assert main(["lr-check", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 1
    assert "disjoint" in capsys.readouterr().err


def test_parallel_cones_exit_1(tmp_path, capsys):
    assert main(["summability", "--config", "builtin:summability-parallel",
                 "--out", str(tmp_path)]) == 1
    assert "GeometryInfeasibleError" in capsys.readouterr().err


def test_lr_check_reproducible(tmp_path):
    path = write(tmp_path, LR_SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["lr-check", "--config", path, "--out", str(a)]) == 0
    assert main(["lr-check", "--config", path, "--out", str(b)]) == 0
    assert csv_body(a / "lr-check.csv") == csv_body(b / "lr-check.csv")
    report = json.loads((a / "lr-check.json").read_text())
    assert report["passed"] and report["config"]["seed"] == 3
    c = tmp_path / "c"
    assert main(["lr-check", "--config", path, "--out", str(c), "--seed", "4"]) == 0
    assert csv_body(c / "lr-check.csv") != csv_body(a / "lr-check.csv")
    assert json.loads((c / "lr-check.json").read_text())["config"]["seed"] == 4


def test_gf_suite_and_geometry(tmp_path):
    assert main(["gf-suite", "--config", "builtin:gf-suite", "--out", str(tmp_path)]) == 0
    rows = csv_body(tmp_path / "gf-suite.csv").splitlines()
    assert rows[0] == "check,index,lhs_log,rhs_log,passed"
    assert len(rows) == 1 + 199 + 49
    assert main(["geometry", "--config", "builtin:geometry-nn", "--out", str(tmp_path)]) == 0


def test_factorize_small(tmp_path):
    path = write(tmp_path, FACTORIZE_SMALL)
    assert main(["factorize", "--config", path, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "factorize.json").read_text())
    assert report["passed"] and report["config"]["tol"] == 1e-9


def test_builtin_configs_parse_and_validate():
    for name in builtin_configs():
        data, _ = load_config(f"builtin:{name}")
        resolve_config(data, data["subcommand"])
