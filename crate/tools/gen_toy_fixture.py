#!/usr/bin/env python3
"""Generate the toy model fixture and its expected outputs.

The expected values are computed here with a plain numpy forward pass in
float64, independent of the Rust runtime, and frozen into expected.json.
Re-running with the same seed reproduces the fixture byte-for-byte.
"""
import json
import os
import sys

import numpy as np
from PIL import Image

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures", "toy")
rng = np.random.default_rng(20180618)

LABELS = ["dock", "ocean liner", "ballplayer", "baseball", "water bottle",
          "concert", "glove", "sky", "dirt", "boat"]
INPUT = dict(name="data", channels=3, height=32, width=32,
             mean=[0.485, 0.456, 0.406], scale=[1 / 0.229, 1 / 0.224, 1 / 0.225])


def f32(a):
    return np.asarray(a, dtype=np.float32)


blobs = {}
layers = []


def conv(name, inp, cin, cout, k, stride=1, pad=0, relu=True, wscale=None):
    wscale = wscale or np.sqrt(2.0 / (cin * k * k))
    w = f32(rng.normal(0, wscale, size=(cout, cin, k, k)))
    b = f32(rng.normal(0, 0.1, size=(cout,)))
    blobs[f"{name}.weight.bin"] = w
    blobs[f"{name}.bias.bin"] = b
    layer = dict(name=name, op="conv2d", inputs=[inp], out_channels=cout, kernel=k,
                 stride=stride, padding=pad,
                 weight=dict(blob=f"{name}.weight.bin", shape=list(w.shape)),
                 bias=dict(blob=f"{name}.bias.bin", shape=list(b.shape)))
    if relu:
        layer["activation"] = "relu"
    layers.append(layer)


conv("conv1", "data", 3, 8, 3, stride=2)
layers.append(dict(name="pool1", op="maxpool2d", inputs=["conv1"], kernel=3, stride=2))
conv("fire2_squeeze", "pool1", 8, 4, 1)
conv("fire2_expand1x1", "fire2_squeeze", 4, 8, 1)
conv("fire2_expand3x3", "fire2_squeeze", 4, 8, 3, pad=1)
layers.append(dict(name="fire2_concat", op="concat_channels", inputs=["fire2_expand1x1", "fire2_expand3x3"]))
conv("conv10", "fire2_concat", 16, 10, 1, relu=False)
layers.append(dict(name="pool10", op="global_avg_pool", inputs=["conv10"]))
layers.append(dict(name="prob", op="softmax", inputs=["pool10"]))

manifest = {"format": "whatif-model/1", "name": "toy-squeeze", "input": INPUT,
            "labels": "labels.txt", "layers": layers}


# ---- independent float64 reference -------------------------------------
def ref_conv(x, w, b, stride, pad):
    c, h, wd = x.shape
    co, ci, kh, kw = w.shape
    xp = np.zeros((c, h + 2 * pad, wd + 2 * pad))
    xp[:, pad:pad + h, pad:pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((co, oh, ow))
    for o in range(co):
        for y in range(oh):
            for xx in range(ow):
                patch = xp[:, y * stride:y * stride + kh, xx * stride:xx * stride + kw]
                out[o, y, xx] = np.sum(patch * w[o]) + b[o]
    return out


def ref_maxpool(x, k, s):
    c, h, w = x.shape
    oh, ow = (h - k) // s + 1, (w - k) // s + 1
    out = np.zeros((c, oh, ow))
    for y in range(oh):
        for xx in range(ow):
            out[:, y, xx] = x[:, y * s:y * s + k, xx * s:xx * s + k].reshape(c, -1).max(axis=1)
    return out


def ref_forward(x):
    acts = {"data": x}
    for l in layers:
        a = [acts[i] for i in l["inputs"]]
        if l["op"] == "conv2d":
            w = blobs[l["weight"]["blob"]].astype(np.float64)
            b = blobs[l["bias"]["blob"]].astype(np.float64)
            y = ref_conv(a[0], w, b, l["stride"], l["padding"])
            if l.get("activation") == "relu":
                y = np.maximum(y, 0)
        elif l["op"] == "maxpool2d":
            y = ref_maxpool(a[0], l["kernel"], l["stride"])
        elif l["op"] == "concat_channels":
            y = np.concatenate(a, axis=0)
        elif l["op"] == "global_avg_pool":
            y = a[0].mean(axis=(1, 2))
        elif l["op"] == "softmax":
            z = a[0] - a[0].max()
            y = np.exp(z) / np.exp(z).sum()
        acts[l["name"]] = y
    return acts


def ref_resize(img, ow, oh):
    # half-pixel centers, clamped at the border
    ih, iw, c = img.shape

    def taps(n_in, n_out):
        s = np.clip((np.arange(n_out) + 0.5) * n_in / n_out - 0.5, 0, n_in - 1)
        i0 = np.floor(s).astype(int)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, s - i0

    x0, x1, fx = taps(iw, ow)
    y0, y1, fy = taps(ih, oh)
    top = img[y0][:, x0] * (1 - fx)[None, :, None] + img[y0][:, x1] * fx[None, :, None]
    bot = img[y1][:, x0] * (1 - fx)[None, :, None] + img[y1][:, x1] * fx[None, :, None]
    return top * (1 - fy)[:, None, None] + bot * fy[:, None, None]


def preprocess(img01):
    r = ref_resize(img01, INPUT["width"], INPUT["height"])
    r = np.clip(r, 0, 1).astype(np.float32).astype(np.float64)
    mean = np.array(INPUT["mean"], dtype=np.float32).astype(np.float64)
    scale = np.array(INPUT["scale"], dtype=np.float32).astype(np.float64)
    return ((r - mean) * scale).transpose(2, 0, 1)


def topk(p, k=5):
    order = sorted(range(len(p)), key=lambda i: (-p[i], i))
    return order[:k]


# fixture image: smooth color field plus a bright disk
H, W = 40, 48
yy, xx = np.mgrid[0:H, 0:W]
img = np.stack([
    0.5 + 0.4 * np.sin(xx / 6.0),
    0.5 + 0.4 * np.cos(yy / 5.0),
    (xx + yy) / (W + H),
], axis=-1)
img[(xx - 30) ** 2 + (yy - 14) ** 2 < 36] = [0.95, 0.9, 0.2]
img8 = np.clip(np.round(img * 255), 0, 255).astype(np.uint8)
mask8 = np.zeros((H, W), dtype=np.uint8)
mask8[(xx - 30) ** 2 + (yy - 14) ** 2 < 49] = 255
mask8[30:34, 5:15] = 255

os.makedirs(OUT, exist_ok=True)
Image.fromarray(img8, "RGB").save(os.path.join(OUT, "image.png"))
Image.fromarray(mask8, "L").save(os.path.join(OUT, "mask.png"))
for name, arr in blobs.items():
    arr.astype("<f4").tofile(os.path.join(OUT, name))
with open(os.path.join(OUT, "labels.txt"), "w") as f:
    f.write("\n".join(LABELS) + "\n")
with open(os.path.join(OUT, "model.json"), "w") as f:
    json.dump(manifest, f, indent=2)
    f.write("\n")

zeros = ref_forward(np.zeros((3, 32, 32)))
acts = ref_forward(preprocess(img8.astype(np.float64) / 255.0))
expected = {
    "zeros": {"logits": zeros["pool10"].tolist(), "probabilities": zeros["prob"].tolist()},
    "image": {
        "logits": acts["pool10"].tolist(),
        "probabilities": acts["prob"].tolist(),
        "top5": topk(acts["prob"]),
        "conv10": acts["conv10"].tolist(),
    },
}
with open(os.path.join(OUT, "expected.json"), "w") as f:
    json.dump(expected, f, indent=1)
    f.write("\n")
print("top5", topk(acts["prob"]), [LABELS[i] for i in topk(acts["prob"])])
print("probs", np.round(acts["prob"], 4))
