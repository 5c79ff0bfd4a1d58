"""Monte-Carlo FER/BER campaigns with per-frame reproducible noise.

Frames are processed in fixed batches and the stop rule is checked between
batches, so results depend only on the configuration and seed, never on the
number of workers.  A frame the decoder gives up on counts as a frame error
and contributes the time steps it actually used.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import bpsk, frame_draw, llr_from_y, sigma_from_ebn0
from .code import PACCode
from .construction import RateProfile, dega_profile, pw_modified, pw_profile, rm_profile
from .crc import CRC
from .conv_transform import parse_octal
from .decoder_fano import FanoConfig, FanoDecoder
from .decoder_sc_scl import sc_decode, scl_decode
from .decoder_stack import StackConfig, StackDecoder

CSV_HEADER = ("ebn0_db,frames,frame_errors,bit_errors,fer,ber,"
              "avg_time_steps,avg_operations,wall_seconds")
BATCH = 256
DECODERS = ("sc", "scl", "stack", "fano")
PROFILES = ("rm", "dega", "pw", "pw-mod")


class ConfigError(ValueError):
    """Invalid campaign configuration."""


@dataclass
class Campaign:
    # code
    N: int = 128
    K: int = 64                        # data bits; CRC bits come on top
    profile: str = "rm"                # rm | dega | pw | pw-mod | path to a profile file
    design_snr: float | None = None    # profile design SNR (default per construction)
    g: str = "133"
    crc: str = "off"                   # CRC polynomial such as 0xA6 (implicit x^r), or off
    crc_bits: int = 8                  # r
    crc_poly: str | None = None        # full binary polynomial, overrides crc and crc_bits
    # decoder
    decoder: str = "sc"
    list_size: int = 32
    stack_depth: int = 256
    delta: float = 2.0
    ibu: int | None = None
    max_div: int | None = 4            # None disables the constraint
    cs: bool = True
    topdown: bool = True
    adaptive: bool = True
    one_shot: bool = True
    bias_snr: float = 4.0              # design SNR of the Fano/stack bias
    # campaign
    snr: list = field(default_factory=lambda: [2.0])
    min_errors: int = 100
    max_frames: int = 100_000
    seed: int = 0
    workers: int = 1
    timing: bool = True                # False writes wall_seconds = 0 for byte-identical output

    def validate(self) -> "Campaign":
        if self.N < 2 or self.N & (self.N - 1):
            raise ConfigError(f"N must be a power of two >= 2, got {self.N}")
        if self.decoder not in DECODERS:
            raise ConfigError(f"unknown decoder {self.decoder!r}; choose from {', '.join(DECODERS)}")
        if self.profile not in PROFILES and not Path(self.profile).is_file():
            raise ConfigError(f"profile must be one of {', '.join(PROFILES)} or an existing file")
        if self.list_size < 1 or self.stack_depth < 2:
            raise ConfigError("list size must be >= 1 and stack depth >= 2")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.min_errors < 0 or self.max_frames < 1 or self.workers < 1:
            raise ConfigError("need min_errors >= 0, max_frames >= 1, workers >= 1")
        if not self.snr:
            raise ConfigError("empty SNR grid")
        crc = self.crc_spec()
        if not 0 < self.K + (crc.r if crc else 0) <= self.N:
            raise ConfigError(f"K (+CRC) must be in (0, N], got K={self.K} with N={self.N}")
        try:
            parse_octal(self.g)
        except ValueError as e:
            raise ConfigError(f"bad generator {self.g!r}: {e}") from e
        return self

    def crc_spec(self) -> CRC | None:
        if self.crc_poly is not None:
            try:
                return CRC.from_binary(self.crc_poly)
            except ValueError as e:
                raise ConfigError(str(e)) from e
        if str(self.crc).lower() in ("off", "none", "0", ""):
            return None
        try:
            return CRC.parse(self.crc, self.crc_bits)
        except ValueError as e:
            raise ConfigError(f"bad CRC polynomial {self.crc!r}: {e}") from e

    def rate_profile(self) -> RateProfile:
        crc = self.crc_spec()
        k_info = self.K + (crc.r if crc else 0)
        if not 0 < k_info <= self.N:
            raise ConfigError(f"K (+CRC) must be in (0, N], got {k_info}")
        kw = {} if self.design_snr is None else {"design_snr_db": self.design_snr}
        if self.profile == "rm":
            return rm_profile(self.N, k_info, **kw)
        if self.profile == "dega":
            return dega_profile(self.N, k_info, **kw)
        if self.profile == "pw":
            return pw_profile(self.N, k_info)
        if self.profile == "pw-mod":
            return pw_modified(self.N, k_info)
        prof = RateProfile.load(self.profile)
        if prof.N != self.N or prof.K != k_info:
            raise ConfigError(f"profile file is ({prof.N},{prof.K}), campaign wants ({self.N},{k_info})")
        return prof

    def build_code(self) -> PACCode:
        try:
            return PACCode(self.rate_profile(), g=str(self.g), crc=self.crc_spec())
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def fano_config(self) -> FanoConfig:
        return FanoConfig(delta=self.delta, i_bu=self.ibu, max_diversions=self.max_div,
                          use_critical_set=self.cs, use_top_down=self.topdown,
                          use_adaptive_bias=self.adaptive, use_one_shot_threshold=self.one_shot,
                          design_snr_db=self.bias_snr)

    def build_decoder(self, code: PACCode):
        """A callable ``llrs -> DecodeResult``."""
        if self.decoder == "sc":
            return lambda llrs: sc_decode(llrs, code)
        if self.decoder == "scl":
            L = self.list_size
            return lambda llrs: scl_decode(llrs, code, L)
        if self.decoder == "stack":
            return StackDecoder(code, StackConfig(depth=self.stack_depth, design_snr_db=self.bias_snr)).decode
        return FanoDecoder(code, self.fano_config()).decode

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Campaign":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown campaign keys: {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class SimRecord:
    ebn0_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    avg_time_steps: float
    avg_operations: float
    wall_seconds: float


# ---------------------------------------------------------------- frames

_WORKER: dict = {}


def _init_worker(cfg: dict) -> None:
    camp = Campaign.from_dict(cfg)
    code = camp.build_code()
    _WORKER.update(camp=camp, code=code, decode=camp.build_decoder(code))


def _run_frames(args) -> np.ndarray:
    """Sums ``[frame_errors, bit_errors, time_steps, operations]`` over a frame range."""
    ebn0_db, start, stop = args
    camp, code, decode = _WORKER["camp"], _WORKER["code"], _WORKER["decode"]
    sigma = sigma_from_ebn0(ebn0_db, code.rate)
    acc = np.zeros(4, dtype=np.int64)
    for f in range(start, stop):
        msg, z = frame_draw(camp.seed, f, code.k_data, code.N)
        v, x = code.encode(msg)
        res = decode(llr_from_y(bpsk(x) + sigma * z, sigma))
        be = int(np.count_nonzero(code.data_of(res.v_hat) != msg))
        acc += (int(be > 0 or not res.success), be, res.time_steps, res.operations)
    return acc


def run_point(camp: Campaign, ebn0_db: float, pool=None) -> SimRecord:
    t0 = time.perf_counter()
    acc = np.zeros(4, dtype=np.int64)
    frames = 0
    while frames < camp.max_frames and not (camp.min_errors and acc[0] >= camp.min_errors):
        stop = min(frames + BATCH, camp.max_frames)
        if pool is None:
            acc += _run_frames((ebn0_db, frames, stop))
        else:
            step = -(-(stop - frames) // camp.workers)
            chunks = [(ebn0_db, a, min(a + step, stop)) for a in range(frames, stop, step)]
            for part in pool.map(_run_frames, chunks):
                acc += part
        frames = stop
    k = _WORKER["code"].k_data
    wall = time.perf_counter() - t0 if camp.timing else 0.0
    return SimRecord(float(ebn0_db), frames, int(acc[0]), int(acc[1]), acc[0] / frames,
                     acc[1] / (frames * k), acc[2] / frames, acc[3] / frames, round(wall, 3))


def run_campaign(camp: Campaign, on_record=None) -> list[SimRecord]:
    """Simulate every SNR point; ``on_record`` sees each record as it is produced."""
    camp.validate()
    cfg = camp.to_dict()
    records = []
    _init_worker(cfg)
    pool = ProcessPoolExecutor(camp.workers, initializer=_init_worker, initargs=(cfg,)) \
        if camp.workers > 1 else None
    try:
        for snr in camp.snr:
            rec = run_point(camp, float(snr), pool)
            records.append(rec)
            if on_record:
                on_record(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


# ---------------------------------------------------------------- output

def _row(r: SimRecord) -> list[str]:
    return [f"{r.ebn0_db:g}", str(r.frames), str(r.frame_errors), str(r.bit_errors),
            f"{r.fer:.6e}", f"{r.ber:.6e}", f"{r.avg_time_steps:.3f}", f"{r.avg_operations:.3f}",
            f"{r.wall_seconds:.3f}"]


def records_csv(records) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for r in records:
        w.writerow(_row(r))
    return buf.getvalue()


def write_csv(records, path) -> None:
    Path(path).write_text(records_csv(records))


def write_json(records, camp: Campaign, path) -> None:
    doc = {"config": camp.to_dict(), "records": [asdict(r) for r in records]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path) -> tuple[Campaign, list[SimRecord]]:
    doc = json.loads(Path(path).read_text())
    return Campaign.from_dict(doc["config"]), [SimRecord(**r) for r in doc["records"]]


# ---------------------------------------------------------------- config files

def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    t = str(s).strip().lower()
    if t in ("1", "true", "on", "yes"):
        return True
    if t in ("0", "false", "off", "no"):
        return False
    raise ConfigError(f"expected on/off, got {s!r}")


def parse_snr(s) -> list[float]:
    """``"1,1.5,2"`` or ``"start:stop:step"`` (stop included)."""
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    s = str(s).strip()
    try:
        if ":" in s:
            a, b, c = (float(x) for x in s.split(":"))
            if c <= 0:
                raise ConfigError("SNR step must be positive")
            n = int(np.floor((b - a) / c + 1e-9)) + 1
            return [round(a + k * c, 10) for k in range(n)]
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"bad SNR grid {s!r}") from e


def _optional_int(s):
    if s is None or str(s).strip().lower() in ("none", "off"):
        return None
    return int(s)


def _optional_str(s):
    if s is None or str(s).strip().lower() in ("none", "off", ""):
        return None
    return str(s).strip()


def _optional_float(s):
    if s is None or str(s).strip().lower() == "none":
        return None
    return float(s)


_CONVERT = {
    "N": int, "K": int, "profile": str, "design_snr": _optional_float, "g": str, "crc": str, "crc_bits": int,
    "crc_poly": _optional_str,
    "decoder": str, "list_size": int, "stack_depth": int, "delta": float, "ibu": _optional_int,
    "max_div": _optional_int, "cs": _bool, "topdown": _bool, "adaptive": _bool, "one_shot": _bool,
    "bias_snr": float, "snr": parse_snr, "min_errors": int, "max_frames": int, "seed": int,
    "workers": int, "timing": _bool,
}


def campaign_from_values(values: dict) -> Campaign:
    """Build a campaign from raw (string or typed) values, converting each field."""
    kw = {}
    for k, v in values.items():
        if k not in _CONVERT:
            raise ConfigError(f"unknown setting {k!r}")
        try:
            kw[k] = _CONVERT[k](v)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {k}: {v!r}") from e
    return Campaign(**kw).validate()
