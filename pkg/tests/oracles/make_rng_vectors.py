"""Freeze MRG32k3a reference vectors into tests/data/mrg32k3a_vectors.json.

Run once (``python tests/oracles/make_rng_vectors.py``); the JSON is checked in.
"""
import json
import pathlib
import struct

from mrg32k3a_ref import RefGenerator, next_stream


def bits(x):
    return "0x%016X" % struct.unpack(">Q", struct.pack(">d", x))[0]


def draws(seed, n):
    g = RefGenerator(seed)
    return [g.uniform() for _ in range(n)]


def main():
    out = {}
    for name, seed in [("ones", [1] * 6), ("default12345", [12345] * 6)]:
        us = draws(seed, 1000)
        streams = [list(seed)]
        for _ in range(10):
            streams.append(next_stream(streams[-1]))
        out[name] = {
            "seed": seed,
            "uniforms": [repr(u) for u in us],
            "uniform_bits": [bits(u) for u in us],
            "streams": streams,
            "stream_first_uniforms": [bits(draws(s, 5)[0]) for s in streams],
        }
    path = pathlib.Path(__file__).resolve().parent.parent / "data" / "mrg32k3a_vectors.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print("wrote", path)
    print("first uniforms (12345 seed):", out["default12345"]["uniforms"][:3])
    print("first uniforms (ones):", out["ones"]["uniforms"][:3])


if __name__ == "__main__":
    main()
