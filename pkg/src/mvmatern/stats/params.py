"""
Free-parameter vector of a fit and its transforms to/from ModelSpec.

Positive parameters live on the log scale. For p = 2 the cross entry is
carried as a point (u, v) of the plane mapped onto the unit disk,

    rho = tanh(|w|) / |w| * (u + i v),   sigma_12 = rho sqrt(sigma_11 sigma_22),

so every decoded model satisfies |sigma_12|^2 < sigma_11 sigma_22. With more
processes the cross correlations are bounded per entry and the Hermitian PSD
check is left to the likelihood barrier.

In d = 2 free axes are angles: one (axis_angle, for theta_star_phi) when the
cross part is real, two (axis_angle_im, axis_angle_phi) when Im(sigma) is free
as well.
"""
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from src.mvmatern.models.fit_dto import FitConfig
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import CrossSigma, DirectionalGeometry, MMGPair, ProcessParams

RHO_MAX = 1.0 - 1e-9
DISK_BOUND = 6.0


class Param(NamedTuple):
    name: str
    lower: float
    upper: float


def _disk(u: float, v: float) -> complex:
    r = float(np.hypot(u, v))
    if r == 0.0:
        return 0j
    return np.tanh(r) / r * complex(u, v)


def _undisk(rho: complex) -> Tuple[float, float]:
    modulus = min(abs(rho), RHO_MAX)
    if modulus == 0.0:
        return 0.0, 0.0
    r = float(np.arctanh(modulus))
    return r * rho.real / abs(rho), r * rho.imag / abs(rho)


class ParamVector:
    """
    Ordered free parameters of ``template`` under ``config``.

    Args:
        template: Model supplying every fixed value and the parameter layout.
        config: Which groups are free (imaginary part, nuggets, axes).
        length_scale: Data extent; bounds a to [0.1, 1000] / length_scale.
    """

    def __init__(self, template: ModelSpec, config: FitConfig, length_scale: float = 1.0):
        self.template = template
        self.config = config
        self.p = template.p
        length_scale = length_scale if length_scale > 0 else 1.0
        self._log_a = (np.log(0.1 / length_scale), np.log(1e3 / length_scale))
        self._log_nu = (np.log(config.nu_bounds[0]), np.log(config.nu_bounds[1]))
        self.shared_shape = template.variant == Variant.SCF
        self.has_nu = template.variant != Variant.SQEXP
        self.cross_mode = self._cross_mode()
        self.free_axes = config.estimate_axes and template.dim == 2
        # the imaginary-part axis only matters once Im(sigma) is free
        self.free_im_axis = self.free_axes and config.estimate_im and not config.fix_im_axis \
            and self.cross_mode is not None
        self.params: List[Param] = self._layout()

    def _cross_mode(self) -> Optional[str]:
        if self.p < 2 or self.template.variant == Variant.IM:
            return None
        if self.p == 2:
            return "disk" if self.config.estimate_im else "tanh"
        return "box"

    def _pairs(self) -> List[Tuple[int, int]]:
        return [(j, k) for j in range(self.p) for k in range(j + 1, self.p)]

    def _layout(self) -> List[Param]:
        params: List[Param] = []
        shape_ids = ["shared"] if self.shared_shape else [str(j + 1) for j in range(self.p)]
        for tag in shape_ids:
            if self.has_nu:
                params.append(Param(f"log_nu.{tag}", *self._log_nu))
            params.append(Param(f"log_a.{tag}", *self._log_a))
        for j in range(self.p):
            params.append(Param(f"log_sigma.{j + 1}{j + 1}", np.log(1e-6), np.log(1e6)))
        if self.config.estimate_nugget:
            for j in range(self.p):
                params.append(Param(f"log_nugget.{j + 1}", np.log(1e-8), np.log(1e4)))
        if self.cross_mode == "disk":
            params += [Param("u.12", -DISK_BOUND, DISK_BOUND), Param("v.12", -DISK_BOUND, DISK_BOUND)]
        elif self.cross_mode == "tanh":
            params.append(Param("u.12", -DISK_BOUND, DISK_BOUND))
        elif self.cross_mode == "box":
            for j, k in self._pairs():
                params.append(Param(f"rho_re.{j + 1}{k + 1}", -RHO_MAX, RHO_MAX))
                if self.config.estimate_im:
                    params.append(Param(f"rho_im.{j + 1}{k + 1}", -RHO_MAX, RHO_MAX))
        if self.template.variant == Variant.MMG:
            for j, k in self._pairs():
                params.append(Param(f"log_nu_cross.{j + 1}{k + 1}", *self._log_nu))
                params.append(Param(f"log_a_cross.{j + 1}{k + 1}", *self._log_a))
        if self.free_im_axis:
            params += [Param("axis_angle_im", -np.pi, np.pi), Param("axis_angle_phi", -np.pi, np.pi)]
        elif self.free_axes:
            params.append(Param("axis_angle", -np.pi, np.pi))
        return params

    @property
    def names(self) -> List[str]:
        return [prm.name for prm in self.params]

    @property
    def n_params(self) -> int:
        return len(self.params)

    def bounds(self) -> List[Tuple[float, float]]:
        return [(prm.lower, prm.upper) for prm in self.params]

    def clip(self, theta: np.ndarray) -> np.ndarray:
        lo, hi = np.array(self.bounds()).T
        return np.clip(theta, lo, hi)

    def encode(self, model: ModelSpec) -> np.ndarray:
        """Transformed free parameters of ``model`` (laid out like the template)."""
        values = {}
        procs = model.processes
        if self.shared_shape:
            values["log_nu.shared"] = np.log(procs[0].nu)
            values["log_a.shared"] = np.log(procs[0].a)
        else:
            for j, pp in enumerate(procs):
                values[f"log_nu.{j + 1}"] = np.log(pp.nu)
                values[f"log_a.{j + 1}"] = np.log(pp.a)
        for j, pp in enumerate(procs):
            values[f"log_sigma.{j + 1}{j + 1}"] = np.log(pp.sigma)
            if self.config.estimate_nugget:
                values[f"log_nugget.{j + 1}"] = np.log(pp.nugget if pp.nugget > 0 else 1e-2 * pp.sigma)
        for j, k in self._pairs():
            rho = model.sigma(j, k) / np.sqrt(procs[j].sigma * procs[k].sigma)
            tag = f"{j + 1}{k + 1}"
            if self.cross_mode == "disk":
                values["u.12"], values["v.12"] = _undisk(rho)
            elif self.cross_mode == "tanh":
                values["u.12"] = float(np.arctanh(np.clip(rho.real, -RHO_MAX, RHO_MAX)))
            elif self.cross_mode == "box":
                values[f"rho_re.{tag}"] = float(np.clip(rho.real, -RHO_MAX, RHO_MAX))
                values[f"rho_im.{tag}"] = float(np.clip(rho.imag, -RHO_MAX, RHO_MAX))
            if model.variant == Variant.MMG:
                nu_jk, a_jk = model.mmg_pair(j, k)
                values[f"log_nu_cross.{tag}"] = np.log(nu_jk)
                values[f"log_a_cross.{tag}"] = np.log(a_jk)
        if self.free_axes:
            phi, im = model.geometry.theta_star_phi, model.geometry.theta_star_im
            values["axis_angle"] = values["axis_angle_phi"] = float(np.arctan2(phi[1], phi[0]))
            values["axis_angle_im"] = float(np.arctan2(im[1], im[0]))
        return np.array([values[name] for name in self.names], dtype=float)

    def decode(self, theta) -> ModelSpec:
        """ModelSpec for a transformed vector; fixed values come from the template."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        v = dict(zip(self.names, theta))
        tmpl = self.template

        processes = []
        for j, pp in enumerate(tmpl.processes):
            tag = "shared" if self.shared_shape else str(j + 1)
            nu = float(np.exp(v[f"log_nu.{tag}"])) if self.has_nu else pp.nu
            nugget = float(np.exp(v[f"log_nugget.{j + 1}"])) if self.config.estimate_nugget else pp.nugget
            processes.append(ProcessParams(nu=nu, a=float(np.exp(v[f"log_a.{tag}"])),
                                           sigma=float(np.exp(v[f"log_sigma.{j + 1}{j + 1}"])), nugget=nugget))

        pairs = {}
        extras = []
        for j, k in self._pairs():
            tag = f"{j + 1}{k + 1}"
            scale = np.sqrt(processes[j].sigma * processes[k].sigma)
            if self.cross_mode == "disk":
                rho = _disk(v["u.12"], v["v.12"])
            elif self.cross_mode == "tanh":
                rho = complex(np.tanh(v["u.12"]), 0.0)
            elif self.cross_mode == "box":
                rho = complex(v[f"rho_re.{tag}"], v.get(f"rho_im.{tag}", 0.0))
            else:
                rho = 0j
            pairs[(j, k)] = rho * scale
            if tmpl.variant == Variant.MMG:
                extras.append(MMGPair(j=j, k=k, nu=float(np.exp(v[f"log_nu_cross.{tag}"])),
                                      a=float(np.exp(v[f"log_a_cross.{tag}"]))))

        geometry = tmpl.geometry
        if self.free_im_axis:
            geometry = DirectionalGeometry.from_angles(v["axis_angle_im"], v["axis_angle_phi"])
        elif self.free_axes:
            im = tmpl.geometry.theta_star_im
            geometry = DirectionalGeometry.from_angles(float(np.arctan2(im[1], im[0])), v["axis_angle"])
        return tmpl.model_copy(update={
            "processes": tuple(processes),
            "cross": CrossSigma.from_pairs(self.p, pairs),
            "geometry": geometry,
            "mmg_extras": tuple(extras) if extras else tmpl.mmg_extras,
        })


def adapt_to_variant(model: ModelSpec, config: FitConfig) -> ModelSpec:
    """Starting model of ``config.variant`` derived from ``model`` (IM drops the cross part, SCF shares nu and a)."""
    variant = config.variant
    update = {"variant": variant}
    if variant == Variant.IM:
        update["cross"] = CrossSigma.zeros(model.p)
    elif not config.estimate_im:
        update["cross"] = CrossSigma(re=model.cross.re, im=CrossSigma.zeros(model.p).im)
    if variant == Variant.SCF:
        nu = float(np.mean([pp.nu for pp in model.processes]))
        a = float(np.exp(np.mean([np.log(pp.a) for pp in model.processes])))
        update["processes"] = tuple(pp.model_copy(update={"nu": nu, "a": a}) for pp in model.processes)
    if variant != Variant.MMG:
        update["mmg_extras"] = None
    return model.model_copy(update=update)
