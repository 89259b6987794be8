"""Central finite-difference checks shared by unit and acceptance tests."""

from __future__ import annotations

import numpy as np
import torch

from maskcut.classifier import ClassifierConfig, build_model, loss_value

EPS = 1e-6


def rel_error(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale < 1e-12 else abs(a - b) / scale


def _micro_batch(seed: int, n: int = 4):
    gen = torch.Generator().manual_seed(seed)
    x = torch.randn(n, 3, 32, 32, generator=gen, dtype=torch.float64)
    y = torch.randint(0, 2, (n,), generator=gen)
    return x, y


def dense_gradient_errors(seed: int = 0, loss: str = "cross_entropy") -> list[float]:
    """Relative errors between autograd and central differences for every
    dense-layer parameter of a float64 toy model on a fixed micro-batch."""
    model = build_model(ClassifierConfig(seed=seed)).double()
    x, y = _micro_batch(seed)
    model.zero_grad()
    loss_value(model(x), y, loss).backward()
    errors = []
    for param in (model.head.weight, model.head.bias):
        analytic = param.grad.detach().clone()
        flat = param.data.view(-1)
        for i in range(flat.numel()):
            orig = float(flat[i])
            with torch.no_grad():
                flat[i] = orig + EPS
                up = float(loss_value(model(x), y, loss))
                flat[i] = orig - EPS
                down = float(loss_value(model(x), y, loss))
                flat[i] = orig
            errors.append(rel_error(float(analytic.view(-1)[i]), (up - down) / (2 * EPS)))
    return errors


def cam_weight_errors(seed: int = 0, target: int = 1) -> list[float]:
    """Grad-CAM channel weights against central differences of the target logit
    under a uniform shift of one whole feature channel.

    Shifting channel k by eps everywhere moves the logit by eps * sum of its
    spatial gradients, i.e. eps * h * w * (channel weight).
    """
    from maskcut.explain import feature_gradients
    from maskcut.classifier import TrainedModel

    config = ClassifierConfig(seed=seed)
    net = build_model(config).double()
    model = TrainedModel(net, config)
    x, _ = _micro_batch(seed, n=1)
    features, grads = feature_gradients(model, x, target)
    weights = grads.mean(dim=(1, 2))
    _, h, w = features.shape
    errors = []
    with torch.no_grad():
        for k in range(features.shape[0]):
            shift = torch.zeros_like(features)
            shift[k] = EPS
            up = float(net.logits_from_features((features + shift)[None])[0, target])
            down = float(net.logits_from_features((features - shift)[None])[0, target])
            fd = (up - down) / (2 * EPS) / (h * w)
            errors.append(rel_error(float(weights[k]), fd))
    return errors
