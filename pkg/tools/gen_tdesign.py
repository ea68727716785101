"""Generate the bundled 144-node spherical quadrature design.

Jointly optimizes 144 unit vectors and positive weights so that all
spherical-harmonic moments up to the target degree vanish (exact weighted
quadrature for polynomials of that degree). Solved progressively: degree
18 first (the minimum that makes order-9 transforms exact), then 20, then
22 if the optimizer keeps converging. Writes azimuth/elevation in degrees
to src/speechdir/data/tdesign144.csv; weights are re-derived at load time
from the moment system, so only directions are stored.

Run once; output is committed as a data asset.
"""

import sys
import time

import numpy as np
from scipy.optimize import least_squares

sys.path.insert(0, "src")
from speechdir import shmath  # noqa: E402

G = 144
SEED = 7


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5.0**0.5) * i
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def unpack(params):
    v = params[: 3 * G].reshape(G, 3)
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    pts = v / norms
    w = (4.0 * np.pi / G) * np.exp(params[3 * G:])
    return pts, w


def residuals(params, degree):
    pts, w = unpack(params)
    colat = np.arccos(np.clip(pts[:, 2], -1, 1))
    az = np.arctan2(pts[:, 1], pts[:, 0])
    basis = shmath.real_sh_matrix(degree, colat, az)
    moments = basis.T @ w
    moments[0] -= 4.0 * np.pi / np.sqrt(4.0 * np.pi)  # integral of Y00
    return moments


def solve(start, degree, diff_step, label):
    t0 = time.time()
    res = least_squares(
        residuals, start, args=(degree,), method="trf",
        jac="2-point", diff_step=diff_step,
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400,
    )
    err = np.max(np.abs(residuals(res.x, degree)))
    print(f"{label}: degree {degree} max|moment| {err:.3e} "
          f"({time.time()-t0:.0f}s, nfev {res.nfev})", flush=True)
    return res.x, err


def main():
    rng = np.random.default_rng(SEED)
    pts0 = fibonacci_sphere(G)
    pts0 = pts0 + 1e-3 * rng.standard_normal(pts0.shape)  # break symmetry
    params = np.concatenate([pts0.ravel(), np.zeros(G)])

    best = None
    for degree in (18, 20, 22):
        params, err = solve(params, degree, 1e-7, "coarse")
        if err > 1e-10:
            params, err = solve(params, degree, 1e-7, "retry")
        # polish with central differences
        params, err = solve(params, degree, 1e-6, "polish")
        pts, w = unpack(params)
        if err < 1e-11 and np.all(w > 0):
            best = (params.copy(), degree, err)
            print(f"  accepted degree {degree}; weight spread "
                  f"{w.max()/w.min():.4f}", flush=True)
        else:
            print(f"  degree {degree} not reached (err {err:.2e}, "
                  f"min weight {w.min():.2e}); stopping", flush=True)
            break

    if best is None:
        raise SystemExit("optimization failed")
    params, degree, err = best
    pts, w = unpack(params)
    colat = np.arccos(np.clip(pts[:, 2], -1, 1))
    az = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    el = np.pi / 2 - colat
    order = np.lexsort((az, -el))
    az, el, w = az[order], el[order], w[order]

    path = "src/speechdir/data/tdesign144.csv"
    with open(path, "w") as f:
        f.write("azimuth_deg,elevation_deg\n")
        for a, e in zip(np.degrees(az), np.degrees(el)):
            f.write(f"{a:.17g},{e:.17g}\n")
    print(f"wrote {path} (design degree {degree}, max moment {err:.2e})")

    # verification summary
    basis = shmath.real_sh_matrix(22, np.pi / 2 - el, az)
    moments = basis.T @ w
    moments[0] -= np.sqrt(4 * np.pi)
    n_idx, _ = shmath.order_degree_vectors(22)
    for L in range(1, 23):
        sel = n_idx == L
        print(f"  degree {L:2d}: max |moment| {np.max(np.abs(moments[sel])):.2e}")
    print(f"  weights: min {w.min():.6e} max {w.max():.6e} "
          f"uniform {4*np.pi/G:.6e}")


if __name__ == "__main__":
    main()
