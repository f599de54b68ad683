#!/usr/bin/env python3
"""Export torchvision's SqueezeNet 1.1 to the whatif model format.

Writes model.json, one little-endian float32 blob per tensor and labels.txt
into OUT_DIR. With --weights the state dict is read from a local .pth file;
--pretrained asks torchvision for the ImageNet checkpoint (needs network
access or a warm torch hub cache); otherwise the network is randomly
initialised, which is useful for checking the conversion.

    python tools/export_torchvision_squeezenet.py OUT_DIR [--pretrained | --weights FILE]
    python tools/export_torchvision_squeezenet.py OUT_DIR --check image.png
"""

import argparse
import json
import pathlib

import numpy as np
import torch
import torchvision
from torchvision.models import SqueezeNet1_1_Weights

MEAN = [0.485, 0.456, 0.406]
STD = [0.229, 0.224, 0.225]

# (fire name, torchvision features index)
FIRES = [("fire2", 3), ("fire3", 4), ("fire4", 6), ("fire5", 7),
         ("fire6", 9), ("fire7", 10), ("fire8", 11), ("fire9", 12)]


def conv_layer(name, inp, conv, padding, relu=True):
    cout, cin, kh, kw = conv.weight.shape
    layer = {
        "name": name,
        "op": "conv2d",
        "inputs": [inp],
        "out_channels": int(cout),
        "kernel": int(kh),
        "stride": int(conv.stride[0]),
        "padding": padding,
        "weight": {"blob": f"{name}.weight.bin", "shape": [int(cout), int(cin), int(kh), int(kw)]},
        "bias": {"blob": f"{name}.bias.bin", "shape": [int(cout)]},
    }
    if relu:
        layer["activation"] = "relu"
    return layer


def export(model, labels, out):
    out.mkdir(parents=True, exist_ok=True)
    f = model.features
    layers = [conv_layer("conv1", "data", f[0], 0)]
    tensors = {"conv1": f[0]}
    layers.append({"name": "pool1", "op": "maxpool2d", "inputs": ["conv1"], "kernel": 3, "stride": 2})
    prev = "pool1"
    for name, idx in FIRES:
        fire = f[idx]
        sq, e1, e3 = f"{name}.squeeze", f"{name}.expand1x1", f"{name}.expand3x3"
        layers.append(conv_layer(sq, prev, fire.squeeze, 0))
        layers.append(conv_layer(e1, sq, fire.expand1x1, 0))
        layers.append(conv_layer(e3, sq, fire.expand3x3, 1))
        layers.append({"name": name, "op": "concat_channels", "inputs": [e1, e3]})
        tensors.update({sq: fire.squeeze, e1: fire.expand1x1, e3: fire.expand3x3})
        prev = name
        if name in ("fire3", "fire5"):
            pool = "pool3" if name == "fire3" else "pool5"
            layers.append({"name": pool, "op": "maxpool2d", "inputs": [prev], "kernel": 3, "stride": 2})
            prev = pool
    final = model.classifier[1]
    layers.append(conv_layer("conv10", prev, final, 0))
    tensors["conv10"] = final
    layers.append({"name": "pool10", "op": "global_avg_pool", "inputs": ["conv10"]})
    layers.append({"name": "prob", "op": "softmax", "inputs": ["pool10"]})

    for name, conv in tensors.items():
        conv.weight.detach().numpy().astype("<f4").tofile(out / f"{name}.weight.bin")
        conv.bias.detach().numpy().astype("<f4").tofile(out / f"{name}.bias.bin")
    (out / "labels.txt").write_text("\n".join(labels) + "\n")
    manifest = {
        "format": "whatif-model/1",
        "name": "squeezenet1_1",
        "input": {"name": "data", "channels": 3, "height": 224, "width": 224,
                  "mean": MEAN, "scale": [1.0 / s for s in STD]},
        "labels": "labels.txt",
        "layers": layers,
    }
    (out / "model.json").write_text(json.dumps(manifest, indent=2))


def reference_probabilities(model, image_path):
    """Softmax output of torch on the image, resized the same way whatif does."""
    from PIL import Image
    img = Image.open(image_path).convert("RGB")
    x = np.asarray(img, dtype=np.float64) / 255.0
    x = bilinear_half_pixel(x, 224, 224)
    x = (x - np.array(MEAN)) / np.array(STD)
    t = torch.from_numpy(x.transpose(2, 0, 1)[None].astype(np.float32))
    with torch.no_grad():
        return torch.softmax(model(t), dim=1)[0].numpy()


def bilinear_half_pixel(img, w, h):
    ih, iw = img.shape[:2]
    ys = np.clip((np.arange(h) + 0.5) * ih / h - 0.5, 0, ih - 1)
    xs = np.clip((np.arange(w) + 0.5) * iw / w - 0.5, 0, iw - 1)
    y0, x0 = np.floor(ys).astype(int), np.floor(xs).astype(int)
    y1, x1 = np.minimum(y0 + 1, ih - 1), np.minimum(x0 + 1, iw - 1)
    fy, fx = (ys - y0)[:, None, None], (xs - x0)[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", type=pathlib.Path)
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--pretrained", action="store_true")
    src.add_argument("--weights", type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--check", type=pathlib.Path,
                    help="also write reference.json with torch probabilities for this image")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    meta = SqueezeNet1_1_Weights.IMAGENET1K_V1.meta
    if args.pretrained:
        model = torchvision.models.squeezenet1_1(weights=SqueezeNet1_1_Weights.IMAGENET1K_V1)
    else:
        model = torchvision.models.squeezenet1_1(weights=None)
        if args.weights:
            model.load_state_dict(torch.load(args.weights, map_location="cpu"))
    model.eval()
    export(model, meta["categories"], args.out)
    if args.check:
        probs = reference_probabilities(model, args.check)
        (args.out / "reference.json").write_text(json.dumps({"probabilities": probs.tolist()}))


if __name__ == "__main__":
    main()
