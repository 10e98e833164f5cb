"""Bundled reference results used by the regression and acceptance suites.

These are published benchmark figures for a 16-scenario Wi-Fi fingerprinting
study: the plain 1-NN baseline per scenario, the per-trial results of
clustered 1-NN search (k-Means with the square-root cluster-count rule) and a
compression parameter sweep. They let the aggregation pipeline be checked
end-to-end without any external data. Printed values are rounded to two
decimals, so assertions against them need small absolute tolerances.
"""

from __future__ import annotations

#: Plain 1-NN baseline per scenario: (mean 3-D error in m, test-sweep time in s).
BASELINE_1NN = {
    "DSI1": (4.95, 12.21),
    "DSI2": (4.95, 5.15),
    "LIB1": (3.02, 46.19),
    "LIB2": (4.18, 46.39),
    "MAN1": (2.82, 155.46),
    "MAN2": (2.47, 14.26),
    "SIM": (3.24, 252.00),
    "TUT1": (9.59, 18.93),
    "TUT2": (14.37, 2.73),
    "TUT3": (9.59, 79.73),
    "TUT4": (6.36, 79.88),
    "TUT5": (6.92, 11.88),
    "TUT6": (1.94, 620.72),
    "TUT7": (2.69, 511.70),
    "UJI1": (10.81, 599.04),
    "UJI2": (8.05, 2924.69),
}

#: Clustered 1-NN (k-Means, sqrt cluster-count rule): per scenario, the ten
#: per-trial mean errors (m), the printed trial average and normalized value,
#: then the ten per-trial sweep times (s) with their printed average and
#: normalized value.
KMEANS_RFP1_TRIALS = {
    "DSI1": {
        "eps": [4.93, 4.97, 5.22, 5.21, 4.99, 5.40, 5.30, 5.29, 5.08, 4.85],
        "eps_mean": 5.13, "eps_norm": 1.04,
        "tau": [0.79, 0.86, 0.97, 0.86, 0.79, 0.81, 0.81, 1.01, 0.90, 0.91],
        "tau_mean": 0.87, "tau_norm": 0.07,
    },
    "DSI2": {
        "eps": [4.94, 5.13, 5.01, 5.25, 4.72, 4.88, 5.10, 5.75, 4.92, 4.78],
        "eps_mean": 5.05, "eps_norm": 1.02,
        "tau": [0.59, 0.52, 0.53, 0.54, 0.53, 0.53, 0.60, 0.52, 0.62, 0.58],
        "tau_mean": 0.56, "tau_norm": 0.11,
    },
    "LIB1": {
        "eps": [3.10, 3.16, 3.14, 3.10, 3.13, 3.11, 3.11, 3.12, 3.12, 3.19],
        "eps_mean": 3.13, "eps_norm": 1.04,
        "tau": [4.32, 4.77, 4.21, 4.17, 4.42, 4.17, 4.40, 4.50, 4.55, 4.33],
        "tau_mean": 4.38, "tau_norm": 0.09,
    },
    "LIB2": {
        "eps": [4.29, 4.18, 4.26, 4.54, 4.07, 4.27, 4.22, 4.19, 4.16, 4.42],
        "eps_mean": 4.26, "eps_norm": 1.02,
        "tau": [4.79, 5.64, 4.54, 4.47, 5.45, 4.62, 4.98, 4.92, 5.67, 4.81],
        "tau_mean": 4.99, "tau_norm": 0.11,
    },
    "MAN1": {
        "eps": [2.85, 2.89, 2.82, 2.88, 2.95, 2.84, 2.97, 2.84, 2.94, 2.82],
        "eps_mean": 2.88, "eps_norm": 1.02,
        "tau": [2.96, 3.08, 2.92, 2.92, 2.82, 2.89, 2.95, 3.02, 2.98, 2.92],
        "tau_mean": 2.95, "tau_norm": 0.02,
    },
    "MAN2": {
        "eps": [2.62, 2.46, 2.48, 2.56, 2.45, 2.43, 2.40, 2.60, 2.35, 2.45],
        "eps_mean": 2.48, "eps_norm": 1.01,
        "tau": [0.96, 0.93, 0.92, 1.04, 0.98, 0.94, 0.88, 0.92, 0.98, 1.02],
        "tau_mean": 0.96, "tau_norm": 0.07,
    },
    "SIM": {
        "eps": [3.27, 3.28, 3.36, 3.33, 3.28, 3.35, 3.31, 3.27, 3.37, 3.35],
        "eps_mean": 3.32, "eps_norm": 1.03,
        "tau": [5.00, 4.95, 4.93, 5.02, 4.88, 4.88, 4.98, 4.94, 4.89, 4.85],
        "tau_mean": 4.93, "tau_norm": 0.02,
    },
    "TUT1": {
        "eps": [10.06, 9.43, 9.76, 10.03, 8.99, 10.12, 10.77, 9.79, 9.37, 10.36],
        "eps_mean": 9.87, "eps_norm": 1.03,
        "tau": [1.25, 1.15, 1.11, 1.11, 1.06, 1.15, 1.39, 1.17, 1.12, 1.19],
        "tau_mean": 1.17, "tau_norm": 0.06,
    },
    "TUT2": {
        "eps": [13.84, 13.39, 16.02, 12.42, 13.98, 14.19, 13.33, 14.35, 13.91, 16.83],
        "eps_mean": 14.22, "eps_norm": 0.99,
        "tau": [0.29, 0.33, 0.29, 0.29, 0.31, 0.30, 0.28, 0.35, 0.30, 0.30],
        "tau_mean": 0.30, "tau_norm": 0.11,
    },
    "TUT3": {
        "eps": [9.96, 10.02, 10.02, 10.10, 9.92, 9.86, 10.14, 9.88, 10.05, 9.94],
        "eps_mean": 9.99, "eps_norm": 1.04,
        "tau": [16.99, 11.62, 13.30, 10.79, 13.69, 13.29, 12.20, 13.28, 11.52, 13.25],
        "tau_mean": 12.99, "tau_norm": 0.16,
    },
    "TUT4": {
        "eps": [6.62, 6.74, 6.64, 6.67, 6.74, 6.48, 6.54, 6.60, 6.59, 6.69],
        "eps_mean": 6.63, "eps_norm": 1.04,
        "tau": [5.12, 5.31, 5.12, 4.84, 8.17, 4.82, 5.50, 4.88, 6.08, 4.94],
        "tau_mean": 5.48, "tau_norm": 0.07,
    },
    "TUT5": {
        "eps": [7.74, 7.29, 7.14, 7.13, 7.12, 7.50, 7.51, 7.40, 7.37, 7.10],
        "eps_mean": 7.33, "eps_norm": 1.06,
        "tau": [1.36, 1.30, 1.49, 1.53, 1.39, 1.37, 1.46, 1.63, 1.35, 1.62],
        "tau_mean": 1.45, "tau_norm": 0.12,
    },
    "TUT6": {
        "eps": [2.25, 2.14, 2.20, 2.11, 2.17, 2.19, 2.21, 2.27, 2.20, 2.13],
        "eps_mean": 2.19, "eps_norm": 1.13,
        "tau": [37.47, 31.15, 35.34, 45.38, 40.16, 33.18, 40.99, 39.89, 33.41, 41.70],
        "tau_mean": 37.87, "tau_norm": 0.06,
    },
    "TUT7": {
        "eps": [2.91, 2.84, 2.92, 2.87, 2.92, 2.90, 2.88, 2.87, 2.84, 2.93],
        "eps_mean": 2.89, "eps_norm": 1.07,
        "tau": [30.48, 42.74, 29.63, 27.72, 33.01, 31.98, 31.57, 34.87, 29.53, 35.86],
        "tau_mean": 32.74, "tau_norm": 0.06,
    },
    "UJI1": {
        "eps": [12.76, 12.49, 13.01, 13.10, 12.28, 12.78, 12.72, 12.85, 13.06, 13.23],
        "eps_mean": 12.83, "eps_norm": 1.19,
        "tau": [11.75, 15.42, 12.34, 12.76, 12.40, 11.61, 13.61, 13.38, 10.52, 11.95],
        "tau_mean": 12.57, "tau_norm": 0.02,
    },
    "UJI2": {
        "eps": [8.72, 8.36, 8.89, 8.54, 8.43, 8.40, 8.51, 8.36, 8.53, 8.61],
        "eps_mean": 8.54, "eps_norm": 1.06,
        "tau": [43.39, 50.69, 48.61, 44.23, 44.27, 49.47, 44.85, 44.20, 49.26, 47.02],
        "tau_mean": 46.60, "tau_norm": 0.02,
    },
}

#: Printed cross-scenario footer of the clustered-search study: (mean, std).
KMEANS_RFP1_EPS_AGG = (1.05, 0.05)
KMEANS_RFP1_TAU_AGG = (0.07, 0.04)

#: Compression sweep, normalized to the K=2 run:
#: K -> (mse_s1, mse_s2, epsilon_3d, cr, combined score).
AKM_SWEEP = {
    2: (1.000, 1.000, 1.00, 1.00, 1.00),
    4: (0.163, 0.164, 0.84, 0.50, 0.76),
    7: (0.050, 0.051, 0.81, 0.33, 0.73),
    15: (0.010, 0.010, 0.79, 0.25, 0.72),
    25: (0.003, 0.003, 0.79, 0.20, 0.72),
    35: (0.001, 0.001, 0.79, 0.17, 0.73),
}

#: Weight vector and transforms of the compression study's combined score.
AKM_WEIGHTS = {"mse_s1": 0.05, "mse_s2": 0.05, "epsilon_3d": 0.9, "cr": 0.2}
AKM_TRANSFORMS = {"epsilon_3d": "square", "cr": "one_minus"}

#: Published example cells of the comparison plot: (v_shape, v_color) pairs,
#: i.e. (normalized error driving the aspect, normalized time driving the fill).
GMMS_EXAMPLE_CELLS = [(0.88, 1.45), (0.99, 0.09), (7.18, 0.16), (1.00, 1.00)]
