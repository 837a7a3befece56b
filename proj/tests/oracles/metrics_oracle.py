"""Recomputes an evaluation report from the raw prediction dump and the
dataset's counterfactual split, and compares it with report.json."""

import json
import pathlib
import sys

import numpy as np

TOL = 1e-9


def read_manifest(path):
    lines = path.read_text().splitlines()
    head, echo = lines[: lines.index("echo")], lines[lines.index("echo") + 1 :]
    info = {}
    for line in head:
        key, _, rest = line.partition(" ")
        if key == "field":
            name, dtype, _, fname = rest.split()
            info.setdefault("fields", {})[name] = (dtype, fname)
        else:
            info[key] = rest
    sim = {}
    for line in echo:
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            sim[k] = v
    return info, sim


def load_cf(split_dir):
    info, sim = read_manifest(split_dir / "manifest.txt")
    n, T, K = int(info["count"]), int(info["T"]), int(info["K"])
    dtypes = {"f32": "<f4", "f64": "<f8", "u8": "u1", "i32": "<i4"}

    def field(name, shape):
        dtype, fname = info["fields"][name]
        return np.fromfile(split_dir / fname, dtype=dtypes[dtype]).astype(np.float64).reshape(shape)

    episodes = int(info["episodes"])
    arms = n // episodes
    x = field("x_local", (episodes, arms, T, K, 5))
    y = field("outcome", (episodes, arms, T))
    return x, y, int(sim["T_b"])


def load_pred(pred_dir):
    words = (pred_dir / "shape.txt").read_text().split()
    shape = dict(zip(words[::2], map(int, words[1::2])))
    n, arms, T, K = shape["episodes"], shape["arms"], shape["T"], shape["K"]
    y = np.fromfile(pred_dir / "y_hat.f64", dtype="<f8").reshape(n, arms, T)
    x = np.fromfile(pred_dir / "x_hat.f64", dtype="<f8").reshape(n, arms, T - 1, K, 5)
    return x, y


def se(values):
    return float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0


def metrics(x, y, x_hat, y_hat, T_b):
    n, arms, T = y.shape
    timings = arms - 1
    steps = np.arange(T_b, T)

    l_outcome = np.abs(y_hat[:, :, steps] - y[:, :, steps]).mean(axis=(1, 2))
    # x_hat[:, :, s] predicts the state at step s + 1.
    err = x_hat[:, :, steps - 1] - x[:, :, steps]
    l_cov = np.sqrt((err ** 2).sum(axis=-1)).mean(axis=(1, 2, 3))

    tau = y[:, :timings, -1] - y[:, -1:, -1]
    tau_hat = y_hat[:, :timings, -1] - y_hat[:, -1:, -1]
    d = tau_hat - tau
    pehe = np.sqrt((d ** 2).mean(axis=0)).mean()
    ate = np.abs(d.mean(axis=0)).mean()

    timing = np.abs(np.argmax(y_hat[:, :timings, -1], axis=1) - np.argmax(y[:, :timings, -1], axis=1))
    uplift = y_hat[:, :timings][:, :, steps].max(axis=(1, 2)) - y[:, -1, T_b - 1]

    return {
        "l_outcome": (l_outcome.mean(), se(l_outcome)),
        "l_covariates": (l_cov.mean(), se(l_cov)),
        "pehe_sqrt": (pehe, se(np.sqrt((d ** 2).mean(axis=1)))),
        "ate_abs_err": (ate, se(d.mean(axis=1))),
        "timing_err": (timing.mean(), se(timing.astype(np.float64))),
        "cf_uplift": (uplift.mean(), se(uplift)),
    }


def main():
    data_dir, eval_dir = map(pathlib.Path, sys.argv[1:3])
    x, y, T_b = load_cf(data_dir / "test_cf")
    x_hat, y_hat = load_pred(eval_dir / "predictions")
    report = json.loads((eval_dir / "report.json").read_text())
    expected = metrics(x, y, x_hat, y_hat, T_b)

    # The ground truth scored against itself.
    truth = metrics(x, y, x[:, :, 1:], y, T_b)

    failures = 0
    for name, (mean, err) in expected.items():
        got = report[name]
        ok = abs(got["mean"] - mean) <= TOL and abs(got["se"] - err) <= TOL
        failures += not ok
        print(f"{'ok  ' if ok else 'FAIL'} {name:13s} report {got['mean']:.12f} +- {got['se']:.12f}"
              f"  oracle {mean:.12f} +- {err:.12f}")
    for name in ("l_outcome", "l_covariates", "pehe_sqrt", "ate_abs_err", "timing_err"):
        if truth[name][0] != 0.0:
            failures += 1
            print(f"FAIL self-check {name} = {truth[name][0]}")
    if report["n_episodes"] != y.shape[0]:
        failures += 1
        print("FAIL episode count")
    print("metrics oracle:", "PASS" if failures == 0 else f"{failures} mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
