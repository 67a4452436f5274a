#!/usr/bin/env python3
# Copyright 2026 The dpflow Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent numpy oracle for the frozen values in golden_values.json.

Run from this directory: python3 generate_golden.py > golden_values.json
"""

import json
import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss, hermeval


def hermite_coeffs(f, order, nodes=200):
    x, w = hermegauss(nodes)
    w = w / math.sqrt(2 * math.pi)
    out = []
    for l in range(order + 1):
        c = np.zeros(l + 1)
        c[l] = 1
        out.append(float(np.sum(w * f(x) * hermeval(x, c)) /
                         math.sqrt(math.factorial(l))))
    return out, float(np.sum(w * f(x) ** 2))


def calibrate_sigma(eps, delta, eta_t):
    return math.sqrt(eta_t) * math.sqrt(8 * math.log(1 / delta)) / eps


def scaled(n, d, p, eps, delta):
    ln = math.log(n)
    tau = d * ln * ln / p
    c = math.sqrt(p) * ln * ln
    sig = calibrate_sigma(eps, delta, tau)
    big = 2 * c * sig / n
    return {"tau": tau, "c_clip": c, "sigma": sig, "Sigma": big}


def fixed_problem():
    n, p = 6, 9
    i = np.arange(n)[:, None]
    j = np.arange(p)[None, :]
    feats = np.sin(1.0 + 0.7 * i + 1.3 * j) + 0.1 * np.cos(i * j)
    labels = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    return feats, labels


def dpgd_deterministic(feats, labels, eta, steps, c_clip):
    n = len(labels)
    theta = np.zeros(feats.shape[1])
    for _ in range(steps):
        g = 2 * feats * (feats @ theta - labels)[:, None]
        norms = np.linalg.norm(g, axis=1)
        g = g / np.maximum(1.0, norms / c_clip)[:, None]
        theta = theta - eta * g.mean(axis=0)
    return theta


def main():
    coeffs, second = hermite_coeffs(np.tanh, 7)
    feats, labels = fixed_problem()
    n = len(labels)
    eig = np.sort(np.linalg.eigvalsh(feats @ feats.T))[::-1]
    pinv = np.linalg.pinv(feats) @ labels
    u, s, vt = np.linalg.svd(feats, full_matrices=False)
    t = 0.7
    rate = 2 * s ** 2 / n
    flow = vt.T @ ((1 - np.exp(-rate * t)) * (u.T @ labels) / s)
    golden = {
        "hermite_tanh": {"coeffs": coeffs, "second_moment": second,
                         "nodes": 200},
        "calibrate_sigma": {"epsilon": 4.0, "delta": 1 / 2000, "eta_T": 0.01,
                            "sigma": calibrate_sigma(4.0, 1 / 2000, 0.01)},
        "scaled_hyperparams": [
            dict(n=2000, d=100, p=40000, epsilon=4.0, delta=1 / 2000,
                 **scaled(2000, 100, 40000, 4.0, 1 / 2000)),
            dict(n=500, d=50, p=20000, epsilon=4.0, delta=1 / 500,
                 **scaled(500, 50, 20000, 4.0, 1 / 500)),
        ],
        "moment_bound": {"lambda": 3.5, "eta": 0.01, "sigma": 0.4, "T": 50,
                         "value": 50 * 0.01 / (2 * 0.4 ** 2) * (3.5 + 3.5 ** 2)},
        "fixed_problem": {
            "features": feats.tolist(),
            "labels": labels.tolist(),
            "kernel_eigenvalues": eig.tolist(),
            "pseudoinverse_solution": pinv.tolist(),
            "flow_time": t,
            "gradient_flow": flow.tolist(),
            "dpgd": {"eta": 0.05, "steps": 40, "c_clip": 1.5,
                     "theta": dpgd_deterministic(feats, labels, 0.05, 40,
                                                 1.5).tolist()},
        },
        "spectral_gap": {
            "d": 20, "n": 400, "p": 4000,
            "oracle_gap_ratio_seeds_0_2": [78.0, 85.0, 83.0],
            "oracle_lambda_min_over_p_seeds_0_2": [0.0064, 0.0059, 0.0063],
            "gap_ratio_threshold": 3.0,
            "lambda_min_over_p_threshold": 0.05,
        },
    }
    print(json.dumps(golden, indent=2))


if __name__ == "__main__":
    main()
