"""Reference values for the sine-product benchmark.

Errors are relative L2 errors ``||u - u_h|| / ||u||`` and
``||sigma - sigma_h|| / ||sigma||`` on uniform ``n x n`` meshes with
``n = 4, 8, 16, 32, 64``; rates are the printed observed orders (``None``
on the coarsest mesh). Trace dof counts exclude boundary dofs.
"""
from __future__ import annotations

LEVELS = (4, 8, 16, 32, 64)

# (family, method, k) -> rows of (err_u, rate_u, err_sigma, rate_sigma)
REFERENCE_ERRORS = {
    ("tri", "edg", 0): [
        (8.076e-2, None, 3.820e-1, None),
        (2.084e-2, 1.954, 1.966e-1, 0.958),
        (5.274e-3, 1.982, 9.907e-2, 0.989),
        (1.323e-3, 1.995, 4.963e-2, 0.997),
        (3.310e-4, 1.999, 2.483e-2, 0.999),
    ],
    ("tri", "hdg", 0): [
        (1.940e-1, None, 2.775e-1, None),
        (4.917e-2, 1.980, 1.412e-1, 0.975),
        (1.233e-2, 1.996, 7.089e-2, 0.994),
        (3.086e-3, 1.998, 3.549e-2, 0.998),
        (7.717e-4, 2.000, 1.775e-2, 1.000),
    ],
    ("tri", "edg", 1): [
        (2.305e-2, None, 4.770e-2, None),
        (2.883e-3, 2.999, 1.312e-2, 1.862),
        (3.522e-4, 3.033, 3.580e-3, 1.874),
        (4.336e-5, 3.022, 9.358e-4, 1.936),
        (5.387e-6, 3.009, 2.377e-4, 1.977),
    ],
    ("tri", "hdg", 1): [
        (2.410e-2, None, 4.232e-2, None),
        (3.031e-3, 2.991, 1.085e-2, 1.964),
        (3.791e-4, 2.999, 2.730e-3, 1.991),
        (4.739e-5, 2.999, 6.839e-4, 1.997),
        (5.923e-6, 3.000, 1.711e-4, 1.999),
    ],
    ("tri", "edg", 2): [
        (2.677e-3, None, 6.482e-3, None),
        (1.746e-4, 3.938, 8.074e-4, 3.005),
        (1.106e-5, 3.981, 1.004e-4, 3.008),
        (6.938e-7, 3.994, 1.251e-5, 3.004),
        (4.342e-8, 3.998, 1.561e-6, 3.002),
    ],
    ("tri", "hdg", 2): [
        (2.880e-3, None, 5.378e-3, None),
        (1.827e-4, 3.978, 6.874e-4, 2.968),
        (1.146e-5, 3.995, 8.650e-5, 2.990),
        (7.166e-7, 3.999, 1.084e-5, 2.997),
        (4.479e-8, 4.000, 1.355e-6, 2.999),
    ],
    ("quad", "edg", 0): [
        (2.623e-1, None, 3.324e-1, None),
        (6.917e-2, 1.923, 1.706e-1, 0.962),
        (1.752e-2, 1.981, 8.583e-2, 0.991),
        (4.395e-3, 1.995, 4.298e-2, 0.998),
        (1.100e-3, 1.998, 2.150e-2, 0.999),
    ],
    ("quad", "hdg", 0): [
        (2.722e-1, None, 3.362e-1, None),
        (7.228e-2, 1.913, 1.721e-1, 0.950),
        (1.845e-2, 1.970, 8.621e-2, 0.997),
        (4.644e-3, 1.990, 4.305e-2, 1.002),
        (1.163e-3, 1.998, 2.151e-2, 1.001),
    ],
    ("quad", "edg", 1): [
        (4.666e-2, None, 7.782e-2, None),
        (6.023e-3, 2.960, 1.973e-2, 1.982),
        (7.633e-4, 2.980, 4.958e-3, 1.993),
        (9.590e-5, 2.993, 1.241e-3, 1.998),
        (1.201e-5, 2.997, 3.104e-4, 1.999),
    ],
    ("quad", "hdg", 1): [
        (4.498e-2, None, 8.057e-2, None),
        (5.408e-3, 3.056, 2.058e-2, 1.919),
        (6.592e-4, 3.036, 5.094e-3, 2.014),
        (8.201e-5, 3.007, 1.258e-3, 2.018),
        (1.026e-5, 3.000, 3.123e-4, 2.010),
    ],
    ("quad", "edg", 2): [
        (7.744e-3, None, 1.200e-2, None),
        (4.942e-4, 3.970, 1.387e-3, 3.113),
        (3.096e-5, 3.997, 1.729e-4, 3.004),
        (1.933e-6, 4.002, 2.139e-5, 3.015),
        (1.207e-7, 4.001, 2.659e-6, 3.008),
    ],
    ("quad", "hdg", 2): [
        (7.720e-3, None, 1.219e-2, None),
        (4.936e-4, 3.967, 1.412e-3, 3.111),
        (3.101e-5, 3.993, 1.749e-4, 3.013),
        (1.940e-6, 3.999, 2.152e-5, 3.023),
        (1.213e-7, 4.000, 2.667e-6, 3.012),
    ],
}

# (family, method, k) -> interior trace dofs for LEVELS
REFERENCE_DOFS = {
    ("tri", "edg", 0): (9, 49, 225, 961, 3936),
    ("tri", "hdg", 0): (80, 352, 1472, 6016, 24320),
    ("quad", "edg", 0): (9, 49, 225, 961, 3936),
    ("quad", "hdg", 0): (48, 224, 960, 3968, 16128),
    ("tri", "edg", 1): (49, 225, 961, 3936, 16129),
    ("tri", "hdg", 1): (120, 528, 2208, 9024, 36480),
    ("quad", "edg", 1): (33, 161, 705, 2945, 12033),
    ("quad", "hdg", 1): (72, 336, 1440, 5952, 24192),
    ("tri", "edg", 2): (89, 401, 1697, 6977, 28289),
    ("tri", "hdg", 2): (160, 704, 2944, 12032, 48640),
    ("quad", "edg", 2): (57, 273, 1185, 4929, 20097),
    ("quad", "hdg", 2): (96, 448, 1920, 7936, 32256),
}


def reference_errors(family: str, method: str, k: int, n: int):
    """Row ``(err_u, rate_u, err_sigma, rate_sigma)`` or ``None`` if not tabulated."""
    rows = REFERENCE_ERRORS.get((family, method, k))
    if rows is None or n not in LEVELS:
        return None
    return rows[LEVELS.index(n)]


def reference_dofs(family: str, method: str, k: int, n: int):
    counts = REFERENCE_DOFS.get((family, method, k))
    if counts is None or n not in LEVELS:
        return None
    return counts[LEVELS.index(n)]
