"""Regenerates the synthetic camera-sensitivity database in this directory.

Each camera has three channels shaped by a UV cut-on and an IR cut-off
logistic filter, then peak-normalized. Green and blue are Gaussian band-pass
lobes; red is a logistic long-pass edge, as red colour-filter dyes are. Every
channel gets a small secondary lobe for filter leakage. Parameters are drawn
uniformly from ranges typical of Bayer-pattern CMOS sensors. Output is deterministic for the fixed seed below.

    python3 generate.py
"""
import json
import os

import numpy as np

SEED = 20130115
CAMERAS = 27
WAVELENGTHS = np.arange(380.0, 781.0, 5.0)
HERE = os.path.dirname(os.path.abspath(__file__))


def gaussian(mu, sigma):
    return np.exp(-0.5 * ((WAVELENGTHS - mu) / sigma) ** 2)


def channel(rng, main, width, side=None):
    lobe = gaussian(rng.uniform(*main), rng.uniform(*width))
    if side is not None:
        centre, amp = side
        lobe = lobe + rng.uniform(*amp) * gaussian(rng.uniform(*centre), 25.0)
    return lobe


def camera(rng):
    uv = 1.0 / (1.0 + np.exp(-(WAVELENGTHS - rng.uniform(395.0, 415.0)) / 6.0))
    ir = 1.0 / (1.0 + np.exp((WAVELENGTHS - rng.uniform(640.0, 670.0)) / rng.uniform(6.0, 12.0)))
    red = 1.0 / (1.0 + np.exp(-(WAVELENGTHS - rng.uniform(575.0, 595.0)) / rng.uniform(5.0, 10.0)))
    red = red + rng.uniform(0.0, 0.12) * gaussian(rng.uniform(440.0, 470.0), 25.0)
    green = channel(rng, (520.0, 545.0), (28.0, 40.0), ((600.0, 620.0), (0.0, 0.10)))
    blue = channel(rng, (445.0, 470.0), (22.0, 32.0), ((520.0, 540.0), (0.0, 0.15)))
    out = []
    for curve in (red, green, blue):
        curve = curve * uv * ir
        out.append(curve / curve.max())
    return out


def write_csv(path, values):
    with open(path, "w", newline="\n") as f:
        f.write("wavelength_nm,value\n")
        for w, v in zip(WAVELENGTHS, values):
            t = f"{v:.9f}".rstrip("0")
            f.write(f"{w:g},{t}0\n" if t.endswith(".") else f"{w:g},{t}\n")


def main():
    rng = np.random.default_rng(SEED)
    cameras = []
    for n in range(CAMERAS):
        name = f"synthetic_{n + 1:02d}"
        d = os.path.join(HERE, name)
        os.makedirs(d, exist_ok=True)
        files = []
        for label, curve in zip(("red", "green", "blue"), camera(rng)):
            write_csv(os.path.join(d, f"{label}.csv"), curve)
            files.append(f"{label}.csv")
        manifest = {
            "name": f"Synthetic camera {n + 1:02d}",
            "role": "sensitivity",
            "source": f"synthetic; generated by camera_db/generate.py (seed {SEED}, camera {n + 1})",
            "license": "CC0-1.0",
            "files": files,
            "channel_labels": ["R", "G", "B"],
        }
        with open(os.path.join(d, "manifest.json"), "w") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")
        cameras.append(f"{name}/manifest.json")
    index = {
        "name": "Held-out camera sensitivity database (synthetic, excludes Nikon 5100)",
        "cameras": cameras,
    }
    with open(os.path.join(HERE, "index.json"), "w") as f:
        json.dump(index, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
