"""Scenario description and the plain-text ``key = value`` config format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from abrsim.engine import PS_PER_MS, ms
from abrsim.erica import EricaParams
from abrsim.fabric import OC3_BPS, PROPAGATION_PS_PER_KM, cell_rate
from abrsim.tcp import DEFAULT_MAX_WINDOW, DEFAULT_MSS
from abrsim.abr import DEFAULT_ACR_FLOOR


@dataclass(frozen=True)
class PathLengths:
    """Lengths (km) of the three hops each source's VC crosses."""

    access: tuple[float, ...]  # source i -> switch 1
    trunk: float  # switch 1 -> switch 2, shared bottleneck
    egress: tuple[float, ...]  # switch 2 -> destination i


@dataclass(frozen=True)
class ScenarioConfig:
    n_sources: int = 5
    link_km: float = 1000.0
    link_km_list: tuple[float, ...] | None = None
    fbd_km: float | None = None
    link_rate_bps: float = OC3_BPS
    erica: EricaParams = field(default_factory=EricaParams)
    buffer_cells: int | None = None
    mss: int = DEFAULT_MSS
    max_window: int = DEFAULT_MAX_WINDOW
    icr: float | None = None  # cells/s, None means PCR
    acr_floor: float = DEFAULT_ACR_FLOOR
    duration: int | None = None  # ps; None picks a default from the RTT
    warmup: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.n_sources < 1:
            raise ValueError("n_sources must be at least 1")
        if self.link_km_list is not None:
            object.__setattr__(self, "link_km_list", tuple(float(x) for x in self.link_km_list))
            if len(self.link_km_list) != self.n_sources:
                raise ValueError("link_km_list needs one length per source")
        if any(km <= 0 for km in self.source_km):
            raise ValueError("link lengths must be positive")
        if self.fbd_km is not None:
            if self.fbd_km <= 0:
                raise ValueError("fbd_km must be positive")
            if any(self.fbd_km >= 3 * km for km in self.source_km):
                raise ValueError("fbd_km must be shorter than the whole one-way path")
        if self.link_rate_bps <= 0:
            raise ValueError("link rate must be positive")
        if self.buffer_cells is not None and self.buffer_cells < 0:
            raise ValueError("buffer_cells must be non-negative")
        if self.mss <= 0 or self.max_window < self.mss:
            raise ValueError("need 0 < mss <= max_window")
        if self.icr is not None and not 0 < self.icr <= self.pcr:
            raise ValueError("icr must be in (0, pcr]")
        if self.warmup is not None and self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if self.duration is not None and self.duration <= self.warmup_ps:
            raise ValueError("duration must exceed warmup")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @property
    def pcr(self) -> float:
        return cell_rate(self.link_rate_bps)

    @property
    def cell_rate(self) -> float:
        return cell_rate(self.link_rate_bps)

    @property
    def source_km(self) -> tuple[float, ...]:
        """Per-source nominal hop length; RTT is six hop lengths of propagation."""
        if self.link_km_list is not None:
            return self.link_km_list
        return (float(self.link_km),) * self.n_sources

    def path_lengths(self) -> PathLengths:
        # access hop sets the feedback delay; trunk + egress make up the rest
        # of the nominal 3-hop path, with one trunk length shared by all VCs
        km = self.source_km
        access = tuple(self.fbd_km if self.fbd_km is not None else k for k in km)
        trunk = min((3 * k - a) / 2 for k, a in zip(km, access))
        egress = tuple(3 * k - a - trunk for k, a in zip(km, access))
        return PathLengths(access, trunk, egress)

    @property
    def rtts(self) -> tuple[int, ...]:
        return tuple(round(6 * k * PROPAGATION_PS_PER_KM) for k in self.source_km)

    @property
    def fbds(self) -> tuple[int, ...]:
        return tuple(round(2 * a * PROPAGATION_PS_PER_KM) for a in self.path_lengths().access)

    @property
    def rtt(self) -> int:
        return max(self.rtts)

    @property
    def fbd(self) -> int:
        return max(self.fbds)

    @property
    def duration_ps(self) -> int:
        if self.duration is not None:
            return self.duration
        return default_duration(self.rtt)

    @property
    def warmup_ps(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return default_warmup(self.rtt)


MIN_DURATION = ms(300)


def default_duration(rtt: int) -> int:
    return max(45 * rtt, MIN_DURATION)


def default_warmup(rtt: int) -> int:
    # slow start from one segment plus draining the initial queue takes ~25-30 RTTs
    return default_duration(rtt) * 2 // 3


# --- key = value config files -------------------------------------------------

_INT_KEYS = {"n_sources", "mss", "max_window", "interval_cells"}
_FLOAT_KEYS = {
    "link_km",
    "link_rate_mbps",
    "target_utilization",
    "interval_ms",
    "icr",
    "acr_floor",
    "duration_ms",
    "warmup_ms",
    "fbd_km",
}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | {"link_km_list", "buffer_cells", "unbounded", "name"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a raw dict. ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            if line == "unbounded":
                raw["unbounded"] = "true"
                continue
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def config_from_dict(raw: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from string values keyed as in the config file format."""
    base = base or ScenarioConfig()
    kw = {}
    erica = {}
    for key, value in raw.items():
        if key not in KNOWN_KEYS:
            raise ValueError(f"unknown key {key!r}")
        value = str(value).strip()
        if key == "n_sources":
            kw["n_sources"] = int(value)
        elif key == "link_km":
            kw["link_km"] = float(value)
            kw.setdefault("link_km_list", None)
        elif key == "link_km_list":
            kw["link_km_list"] = tuple(float(x) for x in value.replace(",", " ").split())
        elif key == "fbd_km":
            kw["fbd_km"] = None if value.lower() == "none" else float(value)
        elif key == "link_rate_mbps":
            kw["link_rate_bps"] = float(value) * 1e6
        elif key == "target_utilization":
            erica["target_utilization"] = float(value)
        elif key == "interval_ms":
            erica["interval_time"] = round(float(value) * PS_PER_MS)
        elif key == "interval_cells":
            erica["interval_cells"] = int(value)
        elif key == "buffer_cells":
            kw["buffer_cells"] = None if value.lower() in ("unbounded", "inf", "none") else int(value)
        elif key == "unbounded":
            if _bool(value):
                kw["buffer_cells"] = None
        elif key == "mss":
            kw["mss"] = int(value)
        elif key == "max_window":
            kw["max_window"] = int(value)
        elif key == "icr":
            kw["icr"] = None if value.lower() in ("pcr", "none") else float(value)
        elif key == "acr_floor":
            kw["acr_floor"] = float(value)
        elif key == "duration_ms":
            kw["duration"] = round(float(value) * PS_PER_MS)
        elif key == "warmup_ms":
            kw["warmup"] = round(float(value) * PS_PER_MS)
        elif key == "name":
            kw["name"] = value
    if "link_km_list" in kw and kw["link_km_list"] is not None and "n_sources" not in kw:
        kw["n_sources"] = len(kw["link_km_list"])
    if erica:
        kw["erica"] = dataclasses.replace(base.erica, **erica)
    return dataclasses.replace(base, **kw)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    path = Path(path)
    cfg = config_from_dict(parse_config_text(path.read_text()), base)
    if not cfg.name:
        cfg = cfg.replace(name=path.stem)
    return cfg


def dump_config(cfg: ScenarioConfig) -> str:
    lines = [f"n_sources = {cfg.n_sources}"]
    if cfg.link_km_list is not None:
        lines.append("link_km_list = " + ", ".join(f"{k:g}" for k in cfg.link_km_list))
    else:
        lines.append(f"link_km = {cfg.link_km:g}")
    if cfg.fbd_km is not None:
        lines.append(f"fbd_km = {cfg.fbd_km:g}")
    lines += [
        f"link_rate_mbps = {cfg.link_rate_bps / 1e6:g}",
        f"target_utilization = {cfg.erica.target_utilization:g}",
        f"interval_ms = {cfg.erica.interval_time / PS_PER_MS:g}",
        f"interval_cells = {cfg.erica.interval_cells}",
        "buffer_cells = " + ("unbounded" if cfg.buffer_cells is None else str(cfg.buffer_cells)),
        f"mss = {cfg.mss}",
        f"max_window = {cfg.max_window}",
        "icr = " + ("pcr" if cfg.icr is None else f"{cfg.icr:g}"),
        f"duration_ms = {cfg.duration_ps / PS_PER_MS:g}",
        f"warmup_ms = {cfg.warmup_ps / PS_PER_MS:g}",
    ]
    if cfg.name:
        lines.append(f"name = {cfg.name}")
    return "\n".join(lines) + "\n"
