"""Generate the bundled scenario presets (run from the repo root)."""

import os

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "igpsim", "presets")

K4 = (
    "2*exp(-5*((x+.75)^2+(y-.75)^2))+2*exp(-5*((x-.75)^2+(y+.75)^2))"
    "+2*exp(-5*((x+.75)^2+(y+.75)^2))+2*exp(-5*((x-.75)^2+(y-.75)^2))"
)
K5 = K4 + "+2*exp(-5*(x^2+y^2))"

U0_OFFSET_SHARP = "2*exp(-10*(x^2+(y-.9)^2))*(1-x^2)^2*(1-y^2)^2"
U0_CENTER_SHARP = "2*exp(-10*(x^2+y^2))*(1-x^2)^2*(1-y^2)^2"
U0_OFFSET_WIDE = "2*exp(-(x^2+(y-.9)^2))*(1-x^2)^2*(1-y^2)^2"
V0 = "2*exp(-(x+.9)^2-(y+.9)^2)*(1-x^2)^2*(1-y^2)^2"
W0 = "1.5"

SNAP_A = [0.0, 0.1, 0.5, 2.0, 4.0, 20.0]
SNAP_B = [0.0, 0.1, 1.5, 4.0, 20.0]
SNAP_C = [0.0, 0.1, 2.0, 4.0, 20.0]
SNAP_D = [0.0, 2.0, 4.0, 20.0]

# name -> (model_id, extra params, K, u0, snapshots)
CASES = {
    "model1_e1_1_e2_1": (1, {"e1": 1.0, "e2": 1.0}, "2.0", U0_OFFSET_SHARP, SNAP_A),
    "model1_e1_1_e2_0p5": (1, {"e1": 1.0, "e2": 0.5}, "2.0", U0_OFFSET_SHARP, SNAP_A),
    "model1_e1_1_e2_2": (1, {"e1": 1.0, "e2": 2.0}, "2.0", U0_OFFSET_SHARP, SNAP_B),
    "model1_e1_1_e2_10": (1, {"e1": 1.0, "e2": 10.0}, "2.0", U0_OFFSET_SHARP, SNAP_A),
    "model1_e1_10_e2_1": (1, {"e1": 10.0, "e2": 1.0}, "2.0", U0_OFFSET_SHARP, SNAP_A),
    "model1_k4bump": (1, {"e1": 1.0, "e2": 10.0}, K4, U0_CENTER_SHARP, SNAP_C),
    "model1_k5bump": (1, {"e1": 1.0, "e2": 10.0}, K5, U0_CENTER_SHARP, SNAP_C),
    "model2_q0p1_c1": (2, {"q": 0.1, "c": 1.0}, K4, U0_OFFSET_WIDE, SNAP_D),
    "model2_q0p1_c1p5": (2, {"q": 0.1, "c": 1.5}, K4, U0_OFFSET_WIDE, SNAP_D),
    "model2_q1_c1p5": (2, {"q": 1.0, "c": 1.5}, K4, U0_OFFSET_WIDE, SNAP_D),
    "model2_q1_c2p5": (2, {"q": 1.0, "c": 2.5}, K4, U0_OFFSET_WIDE, SNAP_C),
    "model2_q10_c0p1": (2, {"q": 10.0, "c": 0.1}, K4, U0_OFFSET_WIDE, SNAP_D),
    "model2_q10_c1": (2, {"q": 10.0, "c": 1.0}, K4, U0_OFFSET_WIDE, SNAP_D),
    "model2_q10_c1p5": (2, {"q": 10.0, "c": 1.5}, K4, U0_OFFSET_WIDE, SNAP_D),
}

BASE_PARAMS = {
    "alpha": 5.0, "a": 2.0, "b": 5.0, "c": 0.1, "d": 2.0, "beta": 1.0,
    "gamma": 1.0, "mu": 0.05, "nu": 0.05, "d0": 0.1, "d1": 1.0, "d2": 1.0,
}


def render(name, model_id, extra, k_expr, u0, snaps):
    params = dict(BASE_PARAMS)
    params.update(extra)
    plines = "\n".join(f"{k} = {v!r}" for k, v in params.items())
    snap = "[" + ", ".join(repr(t) for t in snaps) + "]"
    return f"""[model]
id = {model_id}

[params]
{plines}

[mesh]
nx = 32
ny = 32

[time]
dt = 0.001
t_end = 20.0
snapshots = {snap}

[fields]
K = "{k_expr}"
u0 = "{u0}"
v0 = "{V0}"
w0 = "{W0}"

[output]
directory = "out/{name}"
format = "vtk"
"""


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, (model_id, extra, k_expr, u0, snaps) in CASES.items():
        path = os.path.join(OUT, f"{name}.toml")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(render(name, model_id, extra, k_expr, u0, snaps))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
