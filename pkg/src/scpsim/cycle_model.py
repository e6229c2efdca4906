"""Parametric cycle-cost model calibrated to measured workload totals.

The model is throughput-style: a fitted cost per scalar pixel, per
extension-instruction invocation (keyed by kernel and configuration),
plus a composite charge for the histogram merge step and an optional
deterministic stall penalty per invocation when pixel buffers live in
external memory.  Register pack/unpack traffic is free.

All parameters are exact rationals so that the calibration points are
reproduced exactly, not approximately: fitting the bundled
``s6000_paper`` profile to the six measured totals and estimating the
same workloads returns those totals bit for bit.

Lane accounting: a pixel count that does not divide the lane width is
finished on the scalar path, so the model charges floor(pixels/lanes)
vector groups plus the remainder at the scalar per-pixel rate.  The
histogram pipeline runs two instructions per 16-pixel group (accumulate
and transform) plus one composite merge; its fitted measurement is
split uniformly across those 2*groups + 1 steps, the merge receiving
exactly one step's worth.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources as importlib_resources
from typing import Iterable, Mapping, Optional, Union

from .fabric import ResourceLedger


class UnknownKernelConfig(KeyError):
    """Profile carries no parameters for the requested kernel/mode."""

    def __str__(self):  # KeyError quotes its payload; keep messages readable
        return self.args[0] if self.args else ""


class MismatchedWorkload(ValueError):
    """Speedup requested between reports of different workloads."""


class Underdetermined(ValueError):
    """Not enough measurements to fit a profile parameter."""


Rational = Union[int, Fraction]

#: Paper-measured totals the bundled profile is fitted to:
#: (kernel, mode, pixels, cycles).
CALIBRATION_MEASUREMENTS = (
    ("yiq", "scalar", 64000, 707524),
    ("yiq", "ei1", 64000, 234050),
    ("yiq", "ei5", 64000, 63518),
    ("yiq", "ei8", 64000, 72517),
    ("histeq", "scalar", 16384, 17124334),
    ("histeq", "isef", 16384, 3154353),
)

_EI_MODE = re.compile(r"^ei(\d+)$")


def mode_lanes(mode: str) -> int:
    """Pixels per vector group for a mode name; 0 for the scalar path."""
    if mode == "scalar":
        return 0
    if mode == "isef":
        return 16
    m = _EI_MODE.match(mode)
    if m and int(m.group(1)) > 0:
        return int(m.group(1))
    raise UnknownKernelConfig(f"unrecognized mode name {mode!r}")


def _eis_per_group(kernel: str, mode: str) -> int:
    # The histogram pipeline touches each 16-pixel group twice.
    return 2 if (kernel, mode) == ("histeq", "isef") else 1


def _has_merge(kernel: str, mode: str) -> bool:
    return (kernel, mode) == ("histeq", "isef")


@dataclass(frozen=True)
class CalibrationProfile:
    """Fitted cost parameters; immutable and freely shareable."""

    name: str
    scalar_cycles_per_pixel: Mapping[str, Fraction]
    ei_cycles: Mapping[tuple[str, str], Fraction]
    merge_cycles: Fraction = Fraction(0)
    stall_penalty_external: Fraction = Fraction(0)
    fixed_overhead: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        for value in (
            *self.scalar_cycles_per_pixel.values(),
            *self.ei_cycles.values(),
            self.merge_cycles,
            self.stall_penalty_external,
            *self.fixed_overhead.values(),
        ):
            if value < 0:
                raise ValueError("profile parameters must be nonnegative")


@dataclass
class CycleReport:
    """Cycle and resource accounting for one run of one kernel mode.

    ``cycles_total`` is exact: an int whenever the total is integral
    (all calibration points are), otherwise a Fraction.
    """

    kernel: str
    mode: str
    pixels: int
    ei_invocations: int
    cycles_total: Union[int, Fraction]
    cycles_per_pixel: Fraction
    speedup_vs_scalar: Optional[Fraction]
    resources: ResourceLedger
    stages: int
    buffer_location: str = "internal"
    profile_name: str = ""

    def to_dict(self) -> dict:
        """Stable report schema used by the JSON and CSV emitters."""
        speedup = self.speedup_vs_scalar
        return {
            "kernel": self.kernel,
            "mode": self.mode,
            "pixels": self.pixels,
            "ei_invocations": self.ei_invocations,
            "stages": self.stages,
            "cycles_total": _num(self.cycles_total),
            "cycles_total_exact": _ratio_str(self.cycles_total),
            "cycles_per_pixel": _num(self.cycles_per_pixel),
            "cycles_per_pixel_exact": _ratio_str(self.cycles_per_pixel),
            "speedup_vs_scalar": None if speedup is None else _num(speedup),
            "speedup_vs_scalar_exact": None if speedup is None else _ratio_str(speedup),
            "speedup_rounded": None if speedup is None else round(float(speedup)),
            "multipliers_used": self.resources.multipliers_used,
            "alu_ops_used": self.resources.alu_ops_used,
            "iram_bytes_used": self.resources.iram_bytes_used,
            "buffer_location": self.buffer_location,
            "profile": self.profile_name,
        }


def _num(x: Rational) -> Union[int, float]:
    frac = Fraction(x)
    return int(frac) if frac.denominator == 1 else float(frac)


def _ratio_str(x: Rational) -> str:
    frac = Fraction(x)
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"


def _exact(x: Fraction) -> Union[int, Fraction]:
    return int(x) if x.denominator == 1 else x


def _scalar_total(profile: CalibrationProfile, kernel: str, pixels: int) -> Optional[Fraction]:
    cpp = profile.scalar_cycles_per_pixel.get(kernel)
    return None if cpp is None else pixels * cpp


def estimate(
    kernel: str,
    mode: str,
    pixels: int,
    profile: CalibrationProfile,
    buffer_location: str = "internal",
    resources: Optional[ResourceLedger] = None,
    stages: int = 0,
) -> CycleReport:
    """Predict the cycle total for a workload under a profile.

    Raises UnknownKernelConfig when the profile has no entry for the
    requested (kernel, mode), including the scalar entry needed to
    charge a lane tail.
    """
    if pixels < 1:
        raise ValueError("pixel count must be positive")
    if buffer_location not in ("internal", "external"):
        raise ValueError(f"buffer_location must be internal or external, got {buffer_location!r}")

    lanes = mode_lanes(mode)
    overhead = profile.fixed_overhead.get((kernel, mode), 0)

    if lanes == 0:
        cpp = profile.scalar_cycles_per_pixel.get(kernel)
        if cpp is None:
            raise UnknownKernelConfig(f"profile {profile.name!r} has no scalar entry for {kernel!r}")
        invocations = 0
        total = pixels * cpp + overhead
    else:
        per_group = profile.ei_cycles.get((kernel, mode))
        if per_group is None:
            raise UnknownKernelConfig(
                f"profile {profile.name!r} has no entry for kernel {kernel!r} mode {mode!r}"
            )
        groups, tail = divmod(pixels, lanes)
        total = groups * per_group + overhead
        invocations = groups * _eis_per_group(kernel, mode)
        if _has_merge(kernel, mode):
            total += profile.merge_cycles
            invocations += 1
        if tail:
            cpp = profile.scalar_cycles_per_pixel.get(kernel)
            if cpp is None:
                raise UnknownKernelConfig(
                    f"profile {profile.name!r} has no scalar entry for {kernel!r} "
                    f"to charge a {tail}-pixel tail"
                )
            total += tail * cpp
        if buffer_location == "external":
            total += invocations * profile.stall_penalty_external

    total = Fraction(total)
    scalar_total = _scalar_total(profile, kernel, pixels)
    speedup_vs_scalar = None if scalar_total is None else scalar_total / total
    return CycleReport(
        kernel=kernel,
        mode=mode,
        pixels=pixels,
        ei_invocations=invocations,
        cycles_total=_exact(total),
        cycles_per_pixel=total / pixels,
        speedup_vs_scalar=speedup_vs_scalar,
        resources=resources if resources is not None else ResourceLedger(),
        stages=stages,
        buffer_location=buffer_location,
        profile_name=profile.name,
    )


def speedup(report: CycleReport, baseline: CycleReport) -> Fraction:
    """baseline cycles / report cycles, for the same workload."""
    if report.kernel != baseline.kernel or report.pixels != baseline.pixels:
        raise MismatchedWorkload(
            f"cannot compare {baseline.kernel}/{baseline.pixels}px "
            f"against {report.kernel}/{report.pixels}px"
        )
    return Fraction(baseline.cycles_total) / Fraction(report.cycles_total)


def fit_profile(
    measurements: Iterable[tuple[str, str, int, int]], name: str = "fitted"
) -> CalibrationProfile:
    """Solve per-unit costs so each measurement is reproduced exactly.

    One unknown per (kernel, mode): the scalar rate or the per-group
    cost.  The histogram merge charge is folded into the isef fit as
    one uniform step (see the module docstring for the split).  Scalar
    measurements are fitted first so lane tails can be subtracted.
    """
    rows = list(measurements)
    if not rows:
        raise Underdetermined("no measurements supplied")
    scalar_cpp: dict[str, Fraction] = {}
    ei_cycles: dict[tuple[str, str], Fraction] = {}
    merge = Fraction(0)

    for kernel, mode, pixels, cycles in rows:
        if mode_lanes(mode) == 0:
            if pixels < 1:
                raise Underdetermined(f"scalar fit for {kernel!r} needs pixels >= 1")
            scalar_cpp[kernel] = Fraction(cycles, pixels)

    for kernel, mode, pixels, cycles in rows:
        lanes = mode_lanes(mode)
        if lanes == 0:
            continue
        groups, tail = divmod(pixels, lanes)
        if groups < 1:
            raise Underdetermined(f"{kernel}/{mode}: fewer pixels than one {lanes}-lane group")
        pool = Fraction(cycles)
        if tail:
            cpp = scalar_cpp.get(kernel)
            if cpp is None:
                raise Underdetermined(
                    f"{kernel}/{mode}: tail of {tail} pixels but no scalar measurement"
                )
            pool -= tail * cpp
        if pool < 0:
            raise Underdetermined(f"{kernel}/{mode}: tail charge exceeds the measured total")
        if _has_merge(kernel, mode):
            step = pool / (2 * groups + 1)
            ei_cycles[(kernel, mode)] = 2 * step
            merge = step
        else:
            ei_cycles[(kernel, mode)] = pool / groups

    return CalibrationProfile(
        name=name,
        scalar_cycles_per_pixel=scalar_cpp,
        ei_cycles=ei_cycles,
        merge_cycles=merge,
    )


# ---------------------------------------------------------------------------
# Profile persistence: flat key-value text, exact-rational values
# ---------------------------------------------------------------------------


def format_profile(profile: CalibrationProfile) -> str:
    """Serialize as '<key> = <num>[/<den>]' lines."""
    lines = [f"name = {profile.name}"]
    for kernel in sorted(profile.scalar_cycles_per_pixel):
        lines.append(
            f"{kernel}.scalar.cycles_per_pixel = "
            f"{_ratio_str(profile.scalar_cycles_per_pixel[kernel])}"
        )
    for kernel, mode in sorted(profile.ei_cycles):
        lines.append(f"{kernel}.{mode}.ei_cycles = {_ratio_str(profile.ei_cycles[(kernel, mode)])}")
    lines.append(f"merge_cycles = {_ratio_str(profile.merge_cycles)}")
    lines.append(f"stall_penalty_external = {_ratio_str(profile.stall_penalty_external)}")
    for kernel, mode in sorted(profile.fixed_overhead):
        lines.append(
            f"{kernel}.{mode}.fixed_overhead = {profile.fixed_overhead[(kernel, mode)]}"
        )
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> CalibrationProfile:
    """Parse the flat key-value profile format."""
    name = "unnamed"
    scalar_cpp: dict[str, Fraction] = {}
    ei_cycles: dict[tuple[str, str], Fraction] = {}
    merge = Fraction(0)
    stall = Fraction(0)
    overhead: dict[tuple[str, str], int] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"profile line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key == "name":
            name = value
            continue
        try:
            number = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"profile line {lineno}: bad rational {value!r}") from exc
        if key == "merge_cycles":
            merge = number
        elif key == "stall_penalty_external":
            stall = number
        else:
            parts = key.split(".")
            if len(parts) != 3:
                raise ValueError(f"profile line {lineno}: unrecognized key {key!r}")
            kernel, mode, what = parts
            if what == "cycles_per_pixel" and mode == "scalar":
                scalar_cpp[kernel] = number
            elif what == "ei_cycles":
                ei_cycles[(kernel, mode)] = number
            elif what == "fixed_overhead":
                overhead[(kernel, mode)] = int(number)
            else:
                raise ValueError(f"profile line {lineno}: unrecognized key {key!r}")

    return CalibrationProfile(
        name=name,
        scalar_cycles_per_pixel=scalar_cpp,
        ei_cycles=ei_cycles,
        merge_cycles=merge,
        stall_penalty_external=stall,
        fixed_overhead=overhead,
    )


def load_profile(path: Union[str, os.PathLike]) -> CalibrationProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile(fh.read())


_BUILTIN_CACHE: dict[str, CalibrationProfile] = {}


def builtin_profile(name: str = "s6000_paper") -> CalibrationProfile:
    """A profile shipped with the package, fitted at first use."""
    if name not in _BUILTIN_CACHE:
        if name != "s6000_paper":
            raise UnknownKernelConfig(f"no builtin profile named {name!r}")
        _BUILTIN_CACHE[name] = fit_profile(CALIBRATION_MEASUREMENTS, name="s6000_paper")
    return _BUILTIN_CACHE[name]


def resolve_profile(spec: str) -> CalibrationProfile:
    """Resolve a profile by builtin name, SCPSIM_PROFILE_DIR entry, or path."""
    if spec == "s6000_paper":
        return builtin_profile(spec)
    profile_dir = os.environ.get("SCPSIM_PROFILE_DIR")
    if profile_dir:
        candidate = os.path.join(profile_dir, f"{spec}.profile")
        if os.path.exists(candidate):
            return load_profile(candidate)
    if os.path.exists(spec):
        return load_profile(spec)
    raise FileNotFoundError(f"cannot resolve profile {spec!r}")


def packaged_profile_text(name: str = "s6000_paper") -> str:
    """Contents of the profile file shipped inside the package."""
    return (
        importlib_resources.files("scpsim")
        .joinpath("profiles", f"{name}.profile")
        .read_text(encoding="utf-8")
    )
