"""Regenerates tests/golden.hpp from independent reference implementations.

    python3 tests/oracles/make_golden.py > tests/golden.hpp

Inputs follow closed-form patterns that the C++ tests rebuild with the same
formulas (see pattern()).
"""
import io
import math
from fractions import Fraction

import mpmath
import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

torch.set_default_dtype(torch.float64)


def pattern(n, a, b, scale=1.0, fn=math.sin):
    return [scale * fn(a * i + b) for i in range(n)]


def t(values, shape, grad=False):
    return torch.tensor(values).reshape(shape).requires_grad_(grad)


def arr(name, values, ctype="double"):
    body = ", ".join(repr(float(v)) if ctype == "double" else str(int(v)) for v in values)
    return f"inline const std::vector<{ctype}> {name}{{{body}}};\n"


out = []
emit = out.append

# conv2d: N2 C2 H5 W4, O3, k3, stride 2, pad 1
x = t(pattern(2 * 2 * 5 * 4, 0.37, 0.1), (2, 2, 5, 4), True)
w = t(pattern(3 * 2 * 9, 0.13, 0.0, 0.5, math.cos), (3, 2, 3, 3), True)
b = t([0.1 * i - 0.1 for i in range(3)], (3,), True)
y = F.conv2d(x, w, b, stride=2, padding=1)
r = t(pattern(y.numel(), 0.05, 0.3), y.shape)
(y * r).sum().backward()
emit("// conv2d N2 C2 H5 W4 -> O3, k3 s2 p1\n")
emit(arr("kConvY", y.detach().flatten()))
emit(arr("kConvDx", x.grad.flatten()))
emit(arr("kConvDw", w.grad.flatten()))
emit(arr("kConvDb", b.grad.flatten()))

# maxpool: N1 C2 H4 W5
for tag, window, stride in (("22", 2, 2), ("31", 3, 1)):
    x = t(pattern(2 * 4 * 5, 0.37, 0.1), (1, 2, 4, 5), True)
    y = F.max_pool2d(x, window, stride)
    r = t(pattern(y.numel(), 0.05, 0.3), y.shape)
    (y * r).sum().backward()
    emit(f"// maxpool N1 C2 H4 W5, window {window} stride {stride}\n")
    emit(arr(f"kPool{tag}Y", y.detach().flatten()))
    emit(arr(f"kPool{tag}Dx", x.grad.flatten()))

# linear: N3, in 4, out 2
x = t(pattern(12, 0.37, 0.1), (3, 4), True)
w = t(pattern(8, 0.13, 0.0, 0.5, math.cos), (2, 4), True)
b = t([0.1 * i - 0.1 for i in range(2)], (2,), True)
y = F.linear(x, w, b)
r = t(pattern(y.numel(), 0.05, 0.3), y.shape)
(y * r).sum().backward()
emit("// linear N3 in4 out2\n")
emit(arr("kLinearY", y.detach().flatten()))
emit(arr("kLinearDx", x.grad.flatten()))
emit(arr("kLinearDw", w.grad.flatten()))
emit(arr("kLinearDb", b.grad.flatten()))

# batchnorm train: N3 C2 H2 W2, gamma [1.5,-0.5], beta [0.2,0.1], eps 1e-5
x = t(pattern(24, 0.37, 0.1), (3, 2, 2, 2), True)
g = t([1.5, -0.5], (2,), True)
be = t([0.2, 0.1], (2,), True)
y = F.batch_norm(x, None, None, g, be, training=True, eps=1e-5)
r = t(pattern(y.numel(), 0.05, 0.3), y.shape)
(y * r).sum().backward()
xn = x.detach().numpy()
emit("// batchnorm2d train N3 C2 H2 W2\n")
emit(arr("kBnY", y.detach().flatten()))
emit(arr("kBnDx", x.grad.flatten()))
emit(arr("kBnDgamma", g.grad.flatten()))
emit(arr("kBnDbeta", be.grad.flatten()))
emit(arr("kBnMean", xn.mean(axis=(0, 2, 3))))
emit(arr("kBnBiasedVar", xn.var(axis=(0, 2, 3))))

# softmax cross-entropy, mean reduction
logits = t([1.0, 2.0, 0.5, 0.3, -1.0, 2.0], (2, 3), True)
loss = F.cross_entropy(logits, torch.tensor([2, 0]))
loss.backward()
emit("// cross-entropy logits [[1,2,0.5],[0.3,-1,2]], labels [2,0]\n")
emit(f"inline constexpr double kCeLoss = {loss.item()!r};\n")
emit(arr("kCeGrad", logits.grad.flatten()))
mpmath.mp.dps = 50
tiny = mpmath.log(1 + mpmath.e ** -20)
emit(f"// logits [10,-10], label 0\ninline constexpr double kCeSaturated = {float(tiny)!r};\n")

# Adam, three steps, lr 0.005, betas (0.9, 0.999), eps 1e-8
p = torch.tensor([0.5, -1.0, 2.0], requires_grad=True)
opt = torch.optim.Adam([p], lr=0.005, betas=(0.9, 0.999), eps=1e-8)
trace = []
for step in range(1, 4):
    opt.zero_grad()
    p.grad = torch.tensor([math.sin(step + k) for k in range(3)])
    opt.step()
    trace.extend(p.detach().tolist())
emit("// Adam on [0.5,-1,2] with grad_k(t) = sin(t + k), parameters after steps 1..3\n")
emit(arr("kAdamTrace", trace))

# StepLR closed form, step 10, gamma 0.1
emit("// lr for epochs 0..34, base 0.005, step 10, gamma 0.1\n")
emit(arr("kStepLr", [0.005 * 0.1 ** (e // 10) for e in range(35)]))


# Parameter counts of the reference network.
def count(in_hw, blocks, hidden, classes=2, in_ch=3, pool=2):
    layers = []
    for out in blocks:
        layers += [torch.nn.Conv2d(in_ch, out, 3, padding=1), torch.nn.BatchNorm2d(out),
                   torch.nn.ReLU(), torch.nn.MaxPool2d(pool)]
        in_ch = out
    features = torch.nn.Sequential(*layers)(torch.zeros(1, 3, in_hw, in_hw)).numel()
    layers += [torch.nn.Linear(features, hidden), torch.nn.Linear(hidden, classes)]
    return sum(p.numel() for layer in layers for p in layer.parameters())


emit(f"inline constexpr std::size_t kReferenceParams = {count(224, [32, 64, 128, 256, 256], 512)};\n")
emit(f"inline constexpr std::size_t kMicroParams = {count(64, [8, 16], 32, pool=4)};\n")


# 7:2:1 by largest remainder, ties to the earlier split.
def apportion(n):
    shares = [Fraction(n * k, 10) for k in (7, 2, 1)]
    base = [math.floor(s) for s in shares]
    left = n - sum(base)
    order = sorted(range(3), key=lambda i: (-(shares[i] - base[i]), i))
    for i in order[:left]:
        base[i] += 1
    return base


sizes = list(range(0, 31)) + [1000]
emit(arr("kSplitSizes", sizes, "std::size_t"))
emit(arr("kSplitCounts", [c for n in sizes for c in apportion(n)], "std::size_t"))

# Bilinear resize, corner-aligned: [3,4,5] -> [3,7,6]
img = t(pattern(60, 0.37, 0.1), (1, 3, 4, 5))
emit("// bilinear resize [3,4,5] -> [3,7,6], align_corners\n")
emit(arr("kResize", F.interpolate(img, size=(7, 6), mode="bilinear", align_corners=True).flatten()))


# PNG fixtures and their decoded 8-bit RGB pixels.
def png(image, **kw):
    buf = io.BytesIO()
    image.save(buf, format="PNG", **kw)
    return buf.getvalue()


rng = np.random.default_rng(7)
rgba = Image.fromarray(rng.integers(0, 256, (2, 3, 4), dtype=np.uint8), "RGBA")
gray = Image.fromarray(rng.integers(0, 256, (3, 2), dtype=np.uint8), "L")
pal = rgba.convert("RGB").convert("P", palette=Image.ADAPTIVE, colors=4)
bits = Image.fromarray(rng.integers(0, 2, (2, 9), dtype=np.uint8) * 255, "L").convert("1")
deep = Image.fromarray(rng.integers(0, 65536, (2, 2), dtype=np.uint16).astype(np.int32), "I")
for name, image in (("Rgba", rgba), ("Gray", gray), ("Palette", pal), ("OneBit", bits)):
    rgb = np.asarray(image.convert("RGB"))
    emit(f"// {image.mode} {image.width}x{image.height}\n")
    emit(arr(f"kPng{name}", png(image), "std::uint8_t"))
    emit(arr(f"kPng{name}Rgb", rgb.flatten(), "std::uint8_t"))
    emit(f"inline constexpr std::size_t kPng{name}H = {image.height}, kPng{name}W = {image.width};\n")
emit("// 16-bit grayscale\n")
emit(arr("kPng16Bit", png(deep.convert("I;16")), "std::uint8_t"))

print("#pragma once\n")
print("// Generated by tests/oracles/make_golden.py. Do not edit.\n")
print("#include <cstddef>\n#include <cstdint>\n#include <vector>\n")
print("namespace golden {\n")
print("".join(out))
print("}  // namespace golden")
