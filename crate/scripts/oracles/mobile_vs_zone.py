"""Reference gap between the mobile-user covariance and its single-zone
approximation.

Independent numpy implementation (own geometry, own sampler, numpy RNG).
Writes crates/core/tests/fixtures/mobile_vs_zone.json.
"""
import json
import pathlib

import numpy as np

C = 299_792_458.0
FREQ = 28e9
LAM = C / FREQ
SPACING = LAM / 2
HEIGHT = 3.0
NV = NH = 4
DX = 0.1
RS = 0.05
M = 100_000
USER = np.array([0.5, 0.0, HEIGHT])
SEEDS = range(8)

POS = np.array(
    [[0.0, (h - (NH - 1) / 2) * SPACING, HEIGHT + (v - (NV - 1) / 2) * SPACING]
     for v in range(NV) for h in range(NH)]
)


def offsets(radius, rng, m):
    r = radius * rng.random(m)
    t = 2 * np.pi * rng.random(m)
    p = np.pi * rng.random(m)
    return np.stack([r * np.sin(p) * np.cos(t), r * np.sin(p) * np.sin(t), r * np.cos(p)], -1)


def covariance(points):
    dist = np.linalg.norm(POS[None, :, :] - points[:, None, :], axis=-1)
    a = np.exp(-2j * np.pi * dist / LAM)
    return a.T @ a.conj() / len(points)


def gap(seed):
    rng = np.random.default_rng(seed)
    exact = covariance(USER + offsets(DX, rng, M) + offsets(RS, rng, M))
    zone = covariance(USER + offsets(DX + RS, rng, M))
    return float(np.linalg.norm(exact - zone) / np.linalg.norm(exact))


def main():
    gaps = [gap(s) for s in SEEDS]
    out = {
        "array": [NV, NH],
        "frequency_hz": FREQ,
        "height_m": HEIGHT,
        "user_m": USER.tolist(),
        "move_distance_m": DX,
        "scatter_radius_m": RS,
        "samples": M,
        "relative_frobenius_gap": float(np.mean(gaps)),
        "seed_spread": float(np.std(gaps)),
    }
    path = pathlib.Path(__file__).resolve().parents[2] / "crates/core/tests/fixtures/mobile_vs_zone.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
