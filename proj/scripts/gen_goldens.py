#!/usr/bin/env python3
"""Regenerates the frozen expectation files under tests/golden/.

Every expectation is recomputed here in plain Python, sharing no code with
the C++ tree, so the two implementations check each other. The reference
window (seed42_window.txt) is the one frozen input: it is a committed
capture of the traffic simulator output and is read, never rewritten.

Run from the repo root:  python3 scripts/gen_goldens.py
"""

import math
import os
import sys
from fractions import Fraction

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
GOLDEN = os.path.join(ROOT, "tests", "golden")

MASK = (1 << 64) - 1


def rhu(x: float) -> int:
    return int(math.floor(x + 0.5))


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


# ---------------------------------------------------------------- rng mirror

def mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def hash_combine(seed: int, value: int) -> int:
    return mix64(seed ^ ((mix64(value) + 0x9E3779B97F4A7C15 + ((seed << 6) & MASK) + (seed >> 2)) & MASK))


def hash_bytes(seed: int, data: bytes) -> int:
    h = seed
    for b in data:
        h = hash_combine(h, b)
    return hash_combine(h, len(data))


class Xoshiro:
    def __init__(self, seed: int):
        self.s = []
        s = seed
        for _ in range(4):
            s = (s + 0x9E3779B97F4A7C15) & MASK
            self.s.append(mix64(s))

    @staticmethod
    def _rotl(x: int, k: int) -> int:
        return ((x << k) | (x >> (64 - k))) & MASK

    def next_u64(self) -> int:
        s = self.s
        result = (self._rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = self._rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)


# ------------------------------------------------------------ plot geometry

WIDTH = 150
HEIGHT = 150
MARGIN = 4
PAD = 0.05


def load_window() -> list:
    path = os.path.join(GOLDEN, "seed42_window.txt")
    with open(path) as f:
        values = [float(line) for line in f if line.strip()]
    if len(values) != 100:
        sys.exit(f"expected 100 values in {path}, found {len(values)}")
    return values


def scale_points(values: list) -> list:
    vmin = min(values)
    vmax = max(values)
    span = vmax - vmin
    if span == 0.0:
        lo, hi = vmin - 0.5, vmin + 0.5
    else:
        lo, hi = vmin - PAD * span, vmax + PAD * span
    x_extent = float(WIDTH - 1 - 2 * MARGIN)
    y_extent = float(HEIGHT - 1 - 2 * MARGIN)
    n = len(values)
    pts = []
    for k, v in enumerate(values):
        t = (v - lo) / (hi - lo)
        x = MARGIN + rhu(float(k) * x_extent / float(n - 1))
        y = MARGIN + rhu((1.0 - t) * y_extent)
        pts.append((x, y))
    return pts


def walk_segment(a, b):
    """Evenly spaced integer samples along the segment, rounded half up.

    Computed twice, in floating point and in exact rationals, and the two
    must agree; any disagreement would mean the rounding rule is sitting on
    a representability edge and the expectation cannot be frozen safely.
    """
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    steps = max(abs(dx), abs(dy))
    if steps == 0:
        return [a]
    pts = []
    for i in range(steps + 1):
        fx = a[0] + math.floor(i * dx / steps + 0.5)
        fy = a[1] + math.floor(i * dy / steps + 0.5)
        ex = a[0] + math.floor(Fraction(i * dx, steps) + Fraction(1, 2))
        ey = a[1] + math.floor(Fraction(i * dy, steps) + Fraction(1, 2))
        if (fx, fy) != (ex, ey):
            sys.exit(f"float/rational walk disagree on {a}->{b} at i={i}")
        pts.append((ex, ey))
    return pts


class Image:
    def __init__(self, w: int, h: int, color=(255, 255, 255)):
        self.w = w
        self.h = h
        self.px = bytearray(color * (w * h))

    def set(self, x: int, y: int, color):
        if 0 <= x < self.w and 0 <= y < self.h:
            i = 3 * (y * self.w + x)
            self.px[i:i + 3] = bytes(color)

    def at(self, x: int, y: int):
        i = 3 * (y * self.w + x)
        return tuple(self.px[i:i + 3])


def render(points: list) -> Image:
    img = Image(WIDTH, HEIGHT)
    for k in range(len(points) - 1):
        for p in walk_segment(points[k], points[k + 1]):
            img.set(p[0], p[1], (0, 0, 0))
    return img


def shear_sample(img: Image, s: float) -> Image:
    # forward map [[1, 0], [s, 1]] about the image center, inverse sampled
    det = 1.0 * 1.0 - 0.0 * s
    i00, i01 = 1.0 / det, -0.0 / det
    i10, i11 = -s / det, 1.0 / det
    cx = (img.w - 1) / 2.0
    cy = (img.h - 1) / 2.0
    out = Image(img.w, img.h)
    for y in range(img.h):
        for x in range(img.w):
            u = (x - cx) - 0.0
            v = (y - cy) - 0.0
            sx = i00 * u + i01 * v + cx
            sy = i10 * u + i11 * v + cy
            isx = min(max(rhu(sx), 0), img.w - 1)
            isy = min(max(rhu(sy), 0), img.h - 1)
            out.set(x, y, img.at(isx, isy))
    return out


# -------------------------------------------------------------- adam mirror

def adam_trajectory():
    """Ten steps on f(x) = x*x from x = 1 with lr 0.1."""
    x, m, v, t = 1.0, 0.0, 0.0, 0
    beta1, beta2, eps, lr = 0.9, 0.999, 1e-8, 0.1
    out = []
    for _ in range(10):
        g = 2.0 * x
        t += 1
        bc1 = 1.0 - beta1 ** float(t)
        bc2 = 1.0 - beta2 ** float(t)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        mhat = m / bc1
        vhat = v / bc2
        x -= lr * mhat / (math.sqrt(vhat) + eps)
        out.append(x)
    return out


# -------------------------------------------------------------------- main

def write(name: str, text: str):
    path = os.path.join(GOLDEN, name)
    with open(path, "w") as f:
        f.write(text)
    print(f"wrote {path}")


def main():
    values = load_window()
    points = scale_points(values)
    write("seed42_coords.txt", "".join(f"{x} {y}\n" for x, y in points))

    img = render(points)
    ppm = b"P6\n%d %d\n255\n" % (WIDTH, HEIGHT) + bytes(img.px)
    black = sum(1 for i in range(0, len(img.px), 3)
                if img.px[i:i + 3] == b"\x00\x00\x00")
    write("seed42_raster.txt",
          f"pixels_fnv1a64 {fnv1a64(bytes(img.px)):016x}\n"
          f"ppm_fnv1a64 {fnv1a64(ppm):016x}\n"
          f"black_pixels {black}\n")

    sheared = shear_sample(img, 0.15)
    write("shear015.txt", f"pixels_fnv1a64 {fnv1a64(bytes(sheared.px)):016x}\n")

    write("adam_quadratic.txt",
          "".join("%.17g\n" % x for x in adam_trajectory()))

    rng = Xoshiro(42)
    u64s = [rng.next_u64() for _ in range(5)]
    rng2 = Xoshiro(42)
    unis = [rng2.uniform() for _ in range(3)]
    lines = [f"mix64_0 {mix64(0):016x}",
             f"mix64_42 {mix64(42):016x}",
             f"hash_combine_1_2 {hash_combine(1, 2):016x}",
             f"hash_bytes_abc {hash_bytes(7, b'abc'):016x}"]
    lines += [f"u64_{i} {v:016x}" for i, v in enumerate(u64s)]
    lines += ["uniform_%d %.17g" % (i, v) for i, v in enumerate(unis)]
    write("rng_reference.txt", "".join(line + "\n" for line in lines))


if __name__ == "__main__":
    main()
