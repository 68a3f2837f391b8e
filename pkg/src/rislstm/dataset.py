"""Sample synthesis (channel -> pilots -> features -> ES labels), splitting and on-disk format.

On disk a dataset is a directory holding

* ``meta.json``     -- format tag, version, config snapshot, dims, counts, best indices
* ``features.f32le`` -- float32 little-endian, shape (count, K, D), sample-major then step-major
* ``labels.u8``      -- uint8 multi-hot, shape (count, Q)
* ``rates.f32le``    -- optional float32 per-codeword rates, shape (count, Q)
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng as rngs
from .baselines import NEAR_OPT_DB, exhaustive_search
from .codebook import IDEAL, PRACTICAL, Codebook, build_codebook
from .pilots import KRON_EVEN, feature_dim, generate_pilots, preprocess_features, reference_state, uplink_receive
from .sysmodel import RisConfig, SystemConfig, dbm_to_watts, sample_channels

FORMAT = "rislstm-dataset"
VERSION = 1
DEFAULT_LABEL_DBM = 40.0
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


class DatasetFormatError(ValueError):
    """Unrecognized or unsupported file (bad magic/format tag or version)."""


class DatasetTruncatedError(ValueError):
    """A payload file is shorter or longer than the metadata implies."""


class DatasetConsistencyError(ValueError):
    """Metadata dimensions disagree with each other or with the payload."""


@dataclass
class DatasetMeta:
    config: dict
    codebook_kind: str
    feature_mode: str
    n_steps: int
    feature_dim: int
    n_codewords: int
    count: int
    label_power_dbm: float
    pilot_power_dbm: float
    reference: str
    delta_db: float
    seed: int
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    part: str = "all"

    def split_counts(self) -> tuple[int, int, int]:
        return split_counts(self.count, self.fractions)


@dataclass
class Dataset:
    meta: DatasetMeta
    features: np.ndarray  # float32 (n, K, D)
    labels: np.ndarray  # uint8 (n, Q)
    best_index: np.ndarray  # int64 (n,)
    rates: np.ndarray | None = field(default=None)  # float32 (n, Q)

    def __len__(self) -> int:
        return len(self.labels)

    def one_hot_best(self) -> np.ndarray:
        out = np.zeros(self.labels.shape, dtype=np.uint8)
        out[np.arange(len(self)), self.best_index] = 1
        return out

    def subset(self, idx, part: str) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            meta=replace(self.meta, count=len(idx), part=part),
            features=self.features[idx],
            labels=self.labels[idx],
            best_index=self.best_index[idx],
            rates=None if self.rates is None else self.rates[idx],
        )


@dataclass
class Generator:
    """Everything fixed across the samples of one dataset."""

    cfg: SystemConfig
    codebook: Codebook
    reference: RisConfig
    feature_mode: str
    label_watts: float
    pilot_watts: float
    delta_db: float
    seed: int

    def features(self, index: int, ch) -> np.ndarray:
        pilots = generate_pilots(self.cfg, self.pilot_watts, rngs.stream(self.seed, rngs.PILOT, index))
        received = uplink_receive(ch, self.reference, pilots, self.cfg.noise_watts, rngs.stream(self.seed, rngs.NOISE, index))
        return preprocess_features(received, self.reference, self.feature_mode)

    def sample(self, index: int):
        ch = sample_channels(self.cfg, rngs.stream(self.seed, rngs.CHANNEL, index))
        feats = self.features(index, ch)
        out = exhaustive_search(ch, self.codebook, self.label_watts, self.cfg.noise_watts, self.delta_db)
        return feats, out.label_set, out.best_index, out.rates


def make_generator(
    cfg: SystemConfig,
    seed: int,
    label_power_dbm: float = DEFAULT_LABEL_DBM,
    pilot_power_dbm: float | None = None,
    feature_mode: str = KRON_EVEN,
    codebook_kind: str = PRACTICAL,
    reference: str = "zero",
    delta_db: float = NEAR_OPT_DB,
) -> Generator:
    if reference == "zero":
        ref = reference_state(cfg)
    elif reference == "random":
        ref = reference_state(cfg, rngs.stream(seed, rngs.REFERENCE))
    else:
        raise ValueError(f"reference must be 'zero' or 'random', got {reference!r}")
    pilot_dbm = label_power_dbm if pilot_power_dbm is None else pilot_power_dbm
    return Generator(
        cfg=cfg,
        codebook=build_codebook(cfg, ideal=codebook_kind == IDEAL),
        reference=ref,
        feature_mode=feature_mode,
        label_watts=dbm_to_watts(label_power_dbm),
        pilot_watts=dbm_to_watts(pilot_dbm),
        delta_db=delta_db,
        seed=seed,
    )


def _chunk(gen: Generator, indices: range):
    return [gen.sample(i) for i in indices]


def generate_dataset(
    cfg: SystemConfig,
    count: int,
    label_power_dbm: float = DEFAULT_LABEL_DBM,
    seed: int | None = None,
    *,
    pilot_power_dbm: float | None = None,
    feature_mode: str = KRON_EVEN,
    codebook_kind: str = PRACTICAL,
    reference: str = "zero",
    delta_db: float = NEAR_OPT_DB,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    workers: int = 1,
) -> Dataset:
    """Synthesize ``count`` labelled samples; sample ``i`` depends only on ``(seed, i)``.

    ``workers > 1`` spreads contiguous index chunks over processes; the result
    is bit-identical to the serial run.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    seed = cfg.seed if seed is None else seed
    gen = make_generator(cfg, seed, label_power_dbm, pilot_power_dbm, feature_mode, codebook_kind, reference, delta_db)

    if workers > 1:
        bounds = np.linspace(0, count, workers + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [s for part in pool.map(_chunk, [gen] * len(chunks), chunks) for s in part]
    else:
        results = _chunk(gen, range(count))

    q = gen.codebook.size
    meta = DatasetMeta(
        config=cfg.to_dict(),
        codebook_kind=gen.codebook.kind,
        feature_mode=feature_mode,
        n_steps=cfg.pilot_len,
        feature_dim=feature_dim(cfg.n_tx, cfg.n_ris, feature_mode),
        n_codewords=q,
        count=count,
        label_power_dbm=float(label_power_dbm),
        pilot_power_dbm=float(label_power_dbm if pilot_power_dbm is None else pilot_power_dbm),
        reference=reference,
        delta_db=float(delta_db),
        seed=int(seed),
        fractions=tuple(fractions),
    )
    split_counts(count, fractions)  # validate early
    return Dataset(
        meta=meta,
        features=np.stack([r[0] for r in results]).astype(np.float32),
        labels=np.stack([r[1] for r in results]).astype(np.uint8),
        best_index=np.array([r[2] for r in results], dtype=np.int64),
        rates=np.stack([r[3] for r in results]).astype(np.float32),
    )


def split_counts(count: int, fractions) -> tuple[int, int, int]:
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr) or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
        raise ValueError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    n_val = int(math.floor(count * fr[1]))
    n_test = int(math.floor(count * fr[2]))
    return count - n_val - n_test, n_val, n_test


def split(ds: Dataset, fractions=None) -> tuple[Dataset, Dataset, Dataset]:
    """Order-preserving train/val/test partition; rounding remainder goes to train."""
    fractions = ds.meta.fractions if fractions is None else tuple(fractions)
    n_tr, n_va, _ = split_counts(len(ds), fractions)
    idx = np.arange(len(ds))
    return (
        ds.subset(idx[:n_tr], "train"),
        ds.subset(idx[n_tr : n_tr + n_va], "val"),
        ds.subset(idx[n_tr + n_va :], "test"),
    )


def save(ds: Dataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = asdict(ds.meta)
    meta["fractions"] = list(ds.meta.fractions)
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "meta": meta,
        "best_index": ds.best_index.tolist(),
        "has_rates": ds.rates is not None,
    }
    (directory / "meta.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
    (directory / "features.f32le").write_bytes(np.ascontiguousarray(ds.features, dtype="<f4").tobytes())
    (directory / "labels.u8").write_bytes(np.ascontiguousarray(ds.labels, dtype=np.uint8).tobytes())
    rates_path = directory / "rates.f32le"
    if ds.rates is not None:
        rates_path.write_bytes(np.ascontiguousarray(ds.rates, dtype="<f4").tobytes())
    elif rates_path.exists():
        rates_path.unlink()


def _read(path: Path, dtype, shape) -> np.ndarray:
    raw = path.read_bytes()
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(raw) != expected:
        raise DatasetTruncatedError(f"{path.name}: {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()


def load(directory) -> Dataset:
    directory = Path(directory)
    try:
        doc = json.loads((directory / "meta.json").read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{directory}/meta.json is not valid JSON") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise DatasetFormatError(f"{directory}: missing or wrong format tag")
    if doc.get("version") != VERSION:
        raise DatasetFormatError(f"{directory}: unsupported dataset version {doc.get('version')}")
    m = doc["meta"]
    m["fractions"] = tuple(m["fractions"])
    meta = DatasetMeta(**m)

    cfg = SystemConfig.from_dict(meta.config)
    expected_d = feature_dim(cfg.n_tx, cfg.n_ris, meta.feature_mode)
    best = np.array(doc["best_index"], dtype=np.int64)
    if (
        meta.feature_dim != expected_d
        or meta.n_codewords != cfg.n_h * cfg.n_v
        or meta.n_steps != cfg.pilot_len
        or len(best) != meta.count
    ):
        raise DatasetConsistencyError(f"{directory}: metadata dimensions are inconsistent")

    shape_f = (meta.count, meta.n_steps, meta.feature_dim)
    shape_q = (meta.count, meta.n_codewords)
    feats = _read(directory / "features.f32le", "<f4", shape_f).astype(np.float32)
    labels = _read(directory / "labels.u8", np.uint8, shape_q)
    rates = _read(directory / "rates.f32le", "<f4", shape_q).astype(np.float32) if doc.get("has_rates") else None
    if meta.count and (best.min() < 0 or best.max() >= meta.n_codewords or not labels[np.arange(meta.count), best].all()):
        raise DatasetConsistencyError(f"{directory}: best indices disagree with labels")
    return Dataset(meta=meta, features=feats, labels=labels, best_index=best, rates=rates)
