import json

import numpy as np
import pytest
from conftest import identity_net, p2_neuron_net, random_net

from henet.cli import main
from henet.extract import plan_depth
from henet.netcore import forward, load_weights_csv, save_weights_csv

TRAIN = ["train", "--function", "tanh(x)", "--radius", "2", "--precision", "0.05", "--train-step", "0.1",
         "--layers", "2", "--width", "4", "--epochs", "30", "--batch", "16", "--lr", "0.01"]


@pytest.fixture
def weights(tmp_path):
    path = tmp_path / "net.csv"
    save_weights_csv(random_net(6, 2, 4, 2), path)
    return path


class TestTrain:
    def test_writes_weights_and_report(self, tmp_path):
        out = tmp_path / "w.csv"
        assert main(TRAIN + ["--out", str(out)]) == 0
        net = load_weights_csv(out)
        assert net.hidden_layers == 2 and net.weights[0].shape == (4, 1)
        rep = json.loads((tmp_path / "w.train.json").read_text())
        assert rep["epochs_run"] <= 30 and rep["config"]["input_scale"] == 0.5
        # train step 0.1 is twice the precision: the 0.05 grid is split in half
        assert rep["train_points"] == 41 and rep["validation_points"] == 40

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(TRAIN + ["--out", str(a)])
        main(TRAIN + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.train.json").read_bytes() == (tmp_path / "b.train.json").read_bytes()

    def test_quantized_output(self, tmp_path):
        out = tmp_path / "q.csv"
        assert main(TRAIN + ["--quantize-bits", "3", "--out", str(out)]) == 0
        W = load_weights_csv(out).weights[1]
        assert len(np.unique(np.abs(W))) <= 4

    def test_missing_function(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_bad_expression(self, tmp_path, capsys):
        assert main(["train", "--function", "sin(x", "--out", str(tmp_path / "x.csv")]) == 2
        assert "error" in capsys.readouterr().err

    def test_diverged(self, tmp_path):
        args = ["train", "--function", "sign(x)", "--radius", "0.03", "--precision", "0.001", "--train-step",
                "0.001", "--layers", "8", "--width", "8", "--epochs", "20", "--lr", "1.0", "--out", str(tmp_path / "d.csv")]
        assert main(args) == 3


class TestEval:
    def test_predictions_and_report(self, tmp_path, weights):
        out = tmp_path / "pred.csv"
        assert main(["eval", "--function", "sigmoid", "--radius", "30", "--weights", str(weights), "--out", str(out)]) == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (6001, 4)
        net = load_weights_csv(weights)
        assert np.abs(data[:, 2] - forward(net, data[:, 0])).max() <= 1e-12
        rep = json.loads((tmp_path / "pred.json").read_text())
        plan = plan_depth(net.config)
        assert rep["levels_consumed"] == plan.depth
        assert rep["ct_mults"] == plan.ct_mults and rep["bootstraps"] == 0
        assert rep["max_abs_error"] == pytest.approx(data[:, 3].max(), rel=1e-15)

    def test_chunked_slots(self, tmp_path, weights):
        out = tmp_path / "pred.csv"
        args = ["eval", "--function", "sigmoid", "--radius", "1", "--weights", str(weights), "--slots", "50"]
        assert main(args + ["--out", str(out)]) == 0
        rep = json.loads((tmp_path / "pred.json").read_text())
        plan = plan_depth(load_weights_csv(weights).config)
        assert rep["ct_mults"] == 5 * plan.ct_mults

    def test_level_budget(self, tmp_path, weights):
        args = ["eval", "--function", "sigmoid", "--radius", "1", "--weights", str(weights), "--max-level", "5"]
        assert main(args + ["--out", str(tmp_path / "p.csv")]) == 4
        assert main(args + ["--auto-bootstrap", "--out", str(tmp_path / "p.csv")]) == 0
        assert json.loads((tmp_path / "p.json").read_text())["bootstraps"] > 0

    def test_missing_weights(self, tmp_path):
        args = ["eval", "--function", "sigmoid", "--weights", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "p.csv")]
        assert main(args) == 2


class TestExtract:
    def test_identity(self, tmp_path, capsys):
        path = tmp_path / "id.csv"
        save_weights_csv(identity_net(), path)
        assert main(["extract", "--weights", str(path)]) == 0
        captured = capsys.readouterr()
        assert captured.out == "0\n1\n"
        assert "degree=1" in captured.err and "plan_depth=4" in captured.err

    def test_p2_to_file(self, tmp_path):
        path, out = tmp_path / "p2.csv", tmp_path / "poly.txt"
        save_weights_csv(p2_neuron_net(), path)
        assert main(["extract", "--weights", str(path), "--out", str(out)]) == 0
        assert [float(v) for v in out.read_text().split()] == [1.1110537229, 0.5, 0.054235537]

    def test_cap(self, tmp_path, weights):
        assert main(["extract", "--weights", str(weights), "--cap", "3"]) == 5


class TestFourier:
    def test_pipeline(self, tmp_path):
        out = tmp_path / "f.txt"
        args = ["fourier", "--function", "sigmoid", "--radius", "30", "--precision", "0.05", "--fourier-n", "16", "--out", str(out)]
        assert main(args) == 0
        head = out.read_text().splitlines()[0]
        assert head == "40,16"
        rep = json.loads((tmp_path / "f.json").read_text())
        assert rep["config"]["N"] == 16 and rep["config"]["l"] == 40.0
        assert rep["config"]["encrypted_vs_plain_max"] <= 1e-6
        assert rep["levels_consumed"] == 36

    def test_budget_and_bootstrap(self, tmp_path):
        args = ["fourier", "--function", "sigmoid", "--radius", "5", "--precision", "0.1", "--fourier-n", "40", "--out", str(tmp_path / "f.txt")]
        assert main(args) == 4
        assert main(args + ["--auto-bootstrap"]) == 0
        assert json.loads((tmp_path / "f.json").read_text())["bootstraps"] > 0


class TestBaseline:
    @pytest.mark.parametrize("method", ["horner", "ps"])
    def test_methods(self, tmp_path, method):
        out = tmp_path / f"{method}.txt"
        args = ["baseline", "--function", "sigmoid", "--radius", "10", "--precision", "0.05", "--poly-degree", "15",
                "--method", method, "--out", str(out)]
        assert main(args) == 0
        rep = json.loads((tmp_path / f"{method}.json").read_text())
        assert rep["method"] == f"lsq-{method}" and rep["max_abs_error"] < 0.05
        assert rep["levels_consumed"] == (16 if method == "horner" else 7)


class TestReport:
    def _make(self, tmp_path, name, radius, method):
        payload = {"method": method, "radius": radius, "max_abs_error": 0.1, "mse": 0.01, "levels_consumed": 3,
                   "ct_mults": 4, "scalar_mults": 5, "bootstraps": 0, "config": {}, "wall_time_seconds": 0.5}
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    def test_sorted_rows(self, tmp_path):
        files = [self._make(tmp_path, "a.json", 70.0, "nn"), self._make(tmp_path, "b.json", 30.0, "nn"),
                 self._make(tmp_path, "c.json", 30.0, "fourier")]
        out = tmp_path / "cmp.csv"
        assert main(["report", *files, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "radius,method,max_abs_error,mse,levels_consumed,ct_mults,scalar_mults,bootstraps"
        assert [ln.split(",")[:2] for ln in lines[1:]] == [["30.0", "fourier"], ["30.0", "nn"], ["70.0", "nn"]]
        assert lines[1].split(",")[2:] == ["0.1", "0.01", "3", "4", "5", "0"]

    def test_round_trip_from_eval(self, tmp_path, weights):
        main(["eval", "--function", "sigmoid", "--radius", "1", "--weights", str(weights), "--out", str(tmp_path / "p.csv")])
        out = tmp_path / "cmp.csv"
        assert main(["report", str(tmp_path / "p.json"), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 2

    @pytest.mark.parametrize("content", ["{not json", "{}", '{"method": "nn"}'])
    def test_malformed(self, tmp_path, content):
        bad = tmp_path / "bad.json"
        bad.write_text(content)
        assert main(["report", str(bad), "--out", str(tmp_path / "o.csv")]) == 2
