"""Config schema and command line round trips on tiny workloads."""

import numpy as np
import pytest

from gpssm.cli import main
from gpssm.config import ExperimentConfig, load_config
from gpssm.errors import ConfigError
from gpssm.simulate import Dataset, simulate_linear


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.get("schedule", "exponent") == 0.7
    assert cfg.get("schedule", "burn_in") == 50
    assert cfg.get("pgas", "n_particles") == 15
    assert cfg.get("run", "iterations") == 300
    assert cfg.get("kernel", "family") == "se"
    assert cfg.get("obs", "learn_r") is True


def test_from_dict_rejects_unknown_section_and_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"nope": {}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kernel": {"bogus": 1.0}})


def test_get_set_roundtrip_and_validation():
    cfg = ExperimentConfig()
    cfg.set("run", "iterations", 7)
    assert cfg.get("run", "iterations") == 7
    with pytest.raises(ConfigError):
        cfg.get("run", "bogus")
    with pytest.raises(ConfigError):
        cfg.set("run", "bogus", 1)
    with pytest.raises(ConfigError):
        cfg.set("schedule", "exponent", 1.5)
    with pytest.raises(ConfigError):
        cfg.set("kernel", "family", "cubic")


def test_ini_parsing(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[kernel]\nfamily = product\norder = 52\n"
        "[obs]\nfamily = quadratic\ncoefficient = 0.05\nlearn_r = false\n"
        "[pgas]\nn_particles = 5\nancestor_truncation = none\n"
        "[run]\niterations = 12\nseed = 3\n")
    cfg = load_config(path)
    assert cfg.get("kernel", "family") == "product"
    assert cfg.get("kernel", "order") == 52
    assert cfg.get("obs", "learn_r") is False
    assert cfg.get("pgas", "ancestor_truncation") is None
    assert cfg.get("run", "iterations") == 12


def test_ini_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[kernel]\nfamilly = se\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_build_model_resolves_auto_values():
    data = simulate_linear(horizon=40, seed=2)
    cfg = ExperimentConfig.from_dict(
        {"obs": {"family": "linear", "gain": 2.0}})
    model, init = cfg.build_model(data)
    proxy = data.y / 2.0
    assert init.shape == (41, 1)
    np.testing.assert_allclose(init[:, 0], proxy)
    # auto lengthscales follow the proxy spread, auto r its variance
    assert model.kernel.log_params[0] == pytest.approx(np.log(np.std(proxy)))
    assert np.exp(model.obs.log_r) == pytest.approx(0.1 * np.var(proxy))
    assert np.exp(model.log_q[0]) == pytest.approx(0.1 * np.std(proxy) ** 2)


def test_build_model_rejects_vector_state():
    cfg = ExperimentConfig.from_dict({"run": {"state_dim": 2}})
    with pytest.raises(ConfigError):
        cfg.build_model(simulate_linear(horizon=10, seed=0))


# -- command line -----------------------------------------------------------

def _write_tiny_config(path, iterations=4, n_particles=3):
    path.write_text(
        "[kernel]\nfamily = linear\n"
        "[obs]\nfamily = linear\ngain = 2.0\n"
        "[schedule]\nburn_in = 2\n"
        f"[pgas]\nn_particles = {n_particles}\n"
        f"[run]\niterations = {iterations}\nseed = 1\n")


def test_cli_simulate_identify_predict_roundtrip(tmp_path):
    data_csv = tmp_path / "train.csv"
    test_csv = tmp_path / "test.csv"
    cfg_ini = tmp_path / "run.ini"
    run_dir = tmp_path / "run"
    _write_tiny_config(cfg_ini)

    assert main(["simulate", "--system", "linear", "--horizon", "15",
                 "--seed", "0", "--out", str(data_csv)]) == 0
    assert main(["simulate", "--system", "linear", "--horizon", "15",
                 "--seed", "99", "--out", str(test_csv)]) == 0
    assert main(["identify", "--data", str(data_csv), "--config", str(cfg_ini),
                 "--out", str(run_dir), "--quiet"]) == 0
    assert (run_dir / "trace.csv").exists()
    assert (run_dir / "state.npz").exists()
    assert (run_dir / "meta.json").exists()

    trace = np.loadtxt(run_dir / "trace.csv", delimiter=",", skiprows=1)
    assert trace.shape[0] == 4
    header = (run_dir / "trace.csv").read_text().splitlines()[0]
    assert header == "k,l_x,l_u,q,r,q_hat"

    one_csv = tmp_path / "onestep.csv"
    assert main(["predict", "--run", str(run_dir), "--data", str(data_csv),
                 "--mode", "onestep", "--test", str(test_csv),
                 "--out", str(one_csv)]) == 0
    table = np.genfromtxt(one_csv, delimiter=",", names=True)
    assert set(table.dtype.names) == {"x_star", "u_star", "mean", "std", "truth"}
    assert table.shape[0] == 15
    assert np.all(table["std"] > 0)

    surf_csv = tmp_path / "surface.csv"
    assert main(["predict", "--run", str(run_dir), "--data", str(data_csv),
                 "--mode", "surface", "--x-range=-4:4:5",
                 "--u-range=-1:1:3", "--out", str(surf_csv)]) == 0
    surf = np.genfromtxt(surf_csv, delimiter=",", names=True)
    assert surf.shape[0] == 15
    assert np.all(np.isnan(surf["truth"]))


def test_cli_identify_overrides(tmp_path):
    data_csv = tmp_path / "train.csv"
    cfg_ini = tmp_path / "run.ini"
    _write_tiny_config(cfg_ini, iterations=9)
    main(["simulate", "--system", "linear", "--horizon", "12",
          "--seed", "5", "--out", str(data_csv)])
    run_dir = tmp_path / "run"
    assert main(["identify", "--data", str(data_csv), "--config", str(cfg_ini),
                 "--out", str(run_dir), "--iterations", "3", "--quiet"]) == 0
    trace = np.loadtxt(run_dir / "trace.csv", delimiter=",", skiprows=1)
    assert trace.shape[0] == 3


def test_cli_missing_data_exits_2(tmp_path):
    cfg_ini = tmp_path / "run.ini"
    _write_tiny_config(cfg_ini)
    code = main(["identify", "--data", str(tmp_path / "absent.csv"),
                 "--config", str(cfg_ini), "--out", str(tmp_path / "run"),
                 "--quiet"])
    assert code == 2


def test_cli_bad_config_exits_2(tmp_path):
    cfg_ini = tmp_path / "run.ini"
    cfg_ini.write_text("[kernel]\nfamily = cubic\n")
    data_csv = tmp_path / "train.csv"
    main(["simulate", "--system", "linear", "--horizon", "10",
          "--seed", "0", "--out", str(data_csv)])
    assert main(["identify", "--data", str(data_csv), "--config", str(cfg_ini),
                 "--out", str(tmp_path / "run"), "--quiet"]) == 2


def test_cli_bad_range_exits_2(tmp_path):
    data_csv = tmp_path / "train.csv"
    cfg_ini = tmp_path / "run.ini"
    run_dir = tmp_path / "run"
    _write_tiny_config(cfg_ini)
    main(["simulate", "--system", "linear", "--horizon", "10",
          "--seed", "0", "--out", str(data_csv)])
    main(["identify", "--data", str(data_csv), "--config", str(cfg_ini),
          "--out", str(run_dir), "--quiet"])
    assert main(["predict", "--run", str(run_dir), "--data", str(data_csv),
                 "--mode", "surface", "--x-range=oops",
                 "--u-range=-1:1:3", "--out", str(tmp_path / "s.csv")]) == 2


def test_cli_degenerate_data_exits_3(tmp_path):
    # an infinite observation kills every particle weight at t=0
    data = simulate_linear(horizon=8, seed=0)
    data.y[0] = np.inf
    data_csv = tmp_path / "train.csv"
    data.save(data_csv)
    cfg_ini = tmp_path / "run.ini"
    _write_tiny_config(cfg_ini)
    assert main(["identify", "--data", str(data_csv), "--config", str(cfg_ini),
                 "--out", str(tmp_path / "run"), "--quiet"]) == 3


def test_cli_check_passes(capsys):
    assert main(["check", "--seed", "1234"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out
    assert "[FAIL]" not in out


def test_dataset_roundtrip_through_cli_formats(tmp_path):
    # simulate writes x_true; Dataset.load must surface it for scoring
    data_csv = tmp_path / "d.csv"
    main(["simulate", "--system", "nonlinear", "--horizon", "9",
          "--seed", "2", "--out", str(data_csv)])
    back = Dataset.load(data_csv)
    assert back.x_true is not None
    assert back.horizon == 9
