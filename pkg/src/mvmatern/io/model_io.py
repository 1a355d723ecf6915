"""
Flat ``key = value`` model files.

Keys: variant, d, p, nu.j, a.j, sigma.jj, nugget.j, re_sigma.jk, im_sigma.jk
(j < k, 1-based), theta_star_im, theta_star_phi (comma separated) and, for
MMG, nu_cross.jk and a_cross.jk. Floats are written with repr(), which
round-trips exactly. Lines starting with # are comments.
"""
import logging
import re
from pathlib import Path
from typing import Dict, List

from src.mvmatern.errors import ModelConfigError
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import CrossSigma, DirectionalGeometry, MMGPair, ProcessParams
from src.mvmatern.numerics.spectral import validated

logger = logging.getLogger(__name__)

_INDEXED = re.compile(r"^(nu|a|nugget)\.(\d+)$|^(sigma|re_sigma|im_sigma|nu_cross|a_cross)\.(\d)(\d)$")


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ModelConfigError(f"{key}: {text!r} is not a number", key=key)


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ModelConfigError(f"{key}: {text!r} is not an integer", key=key)


def parse_model(text: str, strict: bool = True) -> ModelSpec:
    entries: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ModelConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ModelConfigError(f"duplicate key {key}", key=key)
        entries[key] = value

    for key in ("variant", "d", "p"):
        if key not in entries:
            raise ModelConfigError(f"missing required key {key}", key=key)
    try:
        variant = Variant(entries["variant"].upper())
    except ValueError:
        raise ModelConfigError(f"unknown variant {entries['variant']!r}", key="variant")
    dim, p = _int(entries["d"], "d"), _int(entries["p"], "p")
    if p < 1 or dim not in (1, 2):
        raise ModelConfigError("need p >= 1 and d in {1, 2}", key="p" if p < 1 else "d")

    known = {"variant", "d", "p", "theta_star_im", "theta_star_phi"}
    for key in entries:
        match = _INDEXED.match(key)
        if match is None:
            if key not in known and strict:
                raise ModelConfigError(f"unknown key {key}", key=key)
            continue
        indices = [int(g) for g in (match.group(2), match.group(4), match.group(5)) if g]
        if any(i < 1 or i > p for i in indices) and strict:
            raise ModelConfigError(f"index out of range in {key} (p={p})", key=key)
        pair_name = match.group(3)
        if pair_name == "sigma" and indices[0] != indices[1]:
            raise ModelConfigError(f"{key}: off-diagonal entries use re_sigma/im_sigma", key=key)
        if pair_name and pair_name != "sigma" and indices[0] >= indices[1]:
            raise ModelConfigError(f"{key}: cross keys need j < k", key=key)

    def required(key: str) -> float:
        if key not in entries:
            raise ModelConfigError(f"missing required key {key}", key=key)
        return _float(entries[key], key)

    processes = []
    for j in range(1, p + 1):
        nu = required(f"nu.{j}") if variant != Variant.SQEXP else _float(entries.get(f"nu.{j}", "0.5"), f"nu.{j}")
        processes.append(ProcessParams(nu=nu, a=required(f"a.{j}"), sigma=required(f"sigma.{j}{j}"),
                                       nugget=_float(entries.get(f"nugget.{j}", "0"), f"nugget.{j}")))
    pairs, extras = {}, []
    for j in range(1, p + 1):
        for k in range(j + 1, p + 1):
            re_part = _float(entries.get(f"re_sigma.{j}{k}", "0"), f"re_sigma.{j}{k}")
            im_part = _float(entries.get(f"im_sigma.{j}{k}", "0"), f"im_sigma.{j}{k}")
            pairs[(j - 1, k - 1)] = complex(re_part, im_part)
            if f"nu_cross.{j}{k}" in entries or f"a_cross.{j}{k}" in entries:
                extras.append(MMGPair(j=j - 1, k=k - 1, nu=required(f"nu_cross.{j}{k}"), a=required(f"a_cross.{j}{k}")))

    geometry = DirectionalGeometry.default(dim)
    axes = {}
    for key in ("theta_star_im", "theta_star_phi"):
        if key in entries:
            axes[key] = tuple(_float(part, key) for part in entries[key].split(","))
    if axes:
        geometry = geometry.model_copy(update=axes)

    model = ModelSpec(dim=dim, variant=variant, processes=tuple(processes),
                      cross=CrossSigma.from_pairs(p, pairs), geometry=geometry,
                      mmg_extras=tuple(extras) if extras else None)
    return validated(model, "model file")


def read_model(path, strict: bool = True) -> ModelSpec:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ModelConfigError(f"model file not found: {path}")
    model = parse_model(text, strict)
    logger.info("loaded model %s", model.describe())
    return model


def format_model(model: ModelSpec) -> str:
    lines: List[str] = [f"variant = {model.variant.value}", f"d = {model.dim}", f"p = {model.p}"]
    for j, pp in enumerate(model.processes, start=1):
        lines += [f"nu.{j} = {pp.nu!r}", f"a.{j} = {pp.a!r}", f"sigma.{j}{j} = {pp.sigma!r}", f"nugget.{j} = {pp.nugget!r}"]
    for j in range(model.p):
        for k in range(j + 1, model.p):
            value = model.cross.value(j, k)
            lines += [f"re_sigma.{j + 1}{k + 1} = {value.real!r}", f"im_sigma.{j + 1}{k + 1} = {value.imag!r}"]
    for pair in model.mmg_extras or ():
        lines += [f"nu_cross.{pair.j + 1}{pair.k + 1} = {pair.nu!r}", f"a_cross.{pair.j + 1}{pair.k + 1} = {pair.a!r}"]
    lines.append("theta_star_im = " + ", ".join(repr(float(v)) for v in model.geometry.theta_star_im))
    lines.append("theta_star_phi = " + ", ".join(repr(float(v)) for v in model.geometry.theta_star_phi))
    return "\n".join(lines) + "\n"


def write_model(model: ModelSpec, path) -> None:
    Path(path).write_text(format_model(model))

