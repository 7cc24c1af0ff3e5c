"""Small experiment configs shared by the CLI and determinism tests."""

import json

STATIC = {"lam1": {"kind": "linear", "slope": 0.0},
          "lam2": {"kind": "linear", "slope": 0.0, "intercept": 1.0}, "t_min": 0.0, "t_max": 3.0}
EXPANDING = {"lam1": {"kind": "linear", "slope": 0.0}, "lam2": {"kind": "linear", "slope": 0.5},
             "t_min": 0.5, "t_max": 4.0}

SMALL = {
    "optimal-times": {"domain": EXPANDING, "window": [1.0, 3.0]},
    "region": {"domain": STATIC, "window": [0.0, 2.0], "center": [1.0, 0.5], "delta": 0.1,
               "region": {"samples": 41, "r_samples": 200}},
    "identity-check": {"identity_check": {"count": 20, "ns": [1, 2], "eps": [0.0, 0.05]}},
    "carleman-check": {"center": [0.5, -0.25], "grid": [100, 200],
                       "carleman": {"ns": [1], "a_factors": [1], "count": 50}},
    "simulate": {"domain": {**STATIC, "lam2": {"kind": "linear", "slope": 0.3, "intercept": 1.0}},
                 "coefficients": {"Xt": {"form": "const", "value": 0.1},
                                  "V": {"form": "affine", "c0": 0.5, "cx": 0.2}},
                 "window": [0.0, 1.0], "grid": [40, 120],
                 "simulate": {"data": {"kind": "modes", "a": [1.0, 0.3], "b": [0.5]},
                              "field_stride": 10}},
    "observability-scan": {"domain": EXPANDING, "window": [1.0, 3.4], "grid": [60, 180], "seed": 3,
                           "observability_scan": {"windows": [1.6, 2.4], "ensemble_size": 4,
                                                  "beam": {"kind": "beam", "x_c": 0.35,
                                                           "sigma": 0.025, "k": 40.0}, "beam_nx": 120}},
    "hum": {"domain": STATIC, "window": [0.0, 2.2], "grid": [30, 90], "seed": 5,
            "hum": {"gamma": [2], "initial": {"kind": "sine", "k": 1}, "tol": 0.05,
                    "minimality": True, "n_perturb": 3}},
}


def write(tmp_path, sub, overrides=None):
    cfg = dict(SMALL[sub], **(overrides or {}))
    path = tmp_path / f"{sub}.json"
    path.write_text(json.dumps(cfg, indent=1))
    return path
