"""Monte Carlo sampling of repetition-code memory experiments.

One shot is one run of the memory: prepare d data cats, run `cycles`
rounds of stabilizer measurement, then measure the data transversally.
Phase flips are injected twice per cycle — a configurable fraction
between the two CX layers (these produce diagonal detector
correlations: the two ancillas adjacent to the flipped qubit see it in
consecutive rounds) and the rest at the end of the cycle.  Each
syndrome readout is corrupted by one categorical draw:
{correct: 1−p_meas−p_erase, flipped: p_meas, erased: p_erase}.

Randomness is counter-based: every shot owns a Philox stream keyed by
(experiment seed, shot index), so shots are reproducible bit-for-bit,
order-independent, and safe to generate in parallel.  The draw order
within a shot is part of the format and must not change.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .catq import steady_state_plus_population
from .noise import RepCodeNoiseModel

ERASED = 2
_MAGIC = b"CATSYN1\n"
_FILL_SALT = 0x9E3779B97F4A7C15  # separate stream for erasure fills
_MASK64 = (1 << 64) - 1


def shot_rng(seed: int, shot_index: int, salt: int = 0) -> np.random.Generator:
    """Counter-based per-shot generator, keyed by (seed, shot index).

    Distinct (seed, shot) pairs give statistically independent Philox
    streams regardless of the order they are consumed in, which is what
    makes worker-count-independent parallel sampling possible.
    """
    key = ((seed ^ salt) & _MASK64, shot_index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(eq=False)
class SyndromeRecord:
    """All measurement outcomes of one shot.

    basis               -- 'X' (phase-flip memory) or 'Z' (bit-flip memory)
    initial_state       -- per-qubit parity bits (X: 0 = |+⟩) or sign bits
                           (Z: 0 = |0⟩); never erased
    initial_stabilizers -- reference stabilizer values the first round is
                           compared against (X: adjacent-parity XOR of the
                           initial state; Z: the values the first round
                           projects onto)
    syndromes           -- [cycles][d−1] outcomes in {0, 1, ERASED}
    finals              -- per-qubit final transversal outcomes; never erased
    shot_seed           -- the shot index keying this shot's RNG stream
    """

    basis: str
    initial_state: np.ndarray
    initial_stabilizers: np.ndarray
    syndromes: np.ndarray
    finals: np.ndarray
    shot_seed: int

    def __post_init__(self):
        if self.basis not in ("X", "Z"):
            raise ValueError(f"basis must be 'X' or 'Z', got {self.basis!r}")
        d = self.initial_state.shape[0]
        if self.syndromes.ndim != 2 or self.syndromes.shape[1] != d - 1:
            raise ValueError("syndromes must have shape [cycles][d-1]")
        if self.initial_stabilizers.shape != (d - 1,):
            raise ValueError("initial_stabilizers must have shape [d-1]")
        if self.finals.shape != (d,):
            raise ValueError("finals must have shape [d]")
        for name, arr in (("initial_state", self.initial_state),
                          ("initial_stabilizers", self.initial_stabilizers),
                          ("finals", self.finals)):
            if np.any(arr > 1):
                raise ValueError(f"erasure not allowed in {name}")

    @property
    def d(self) -> int:
        return self.initial_state.shape[0]

    @property
    def cycles(self) -> int:
        return self.syndromes.shape[0]

    def has_erasures(self) -> bool:
        return bool(np.any(self.syndromes == ERASED))

    def observed_logical_flip(self) -> int:
        """Logical flip before decoding.

        X basis: final vs initial parity of qubit 0 (X̂_L = X̂_i for any i).
        Z basis: product of all final signs vs the initial product
        (Ẑ_L = Ẑ₁···Ẑ_d).
        """
        if self.basis == "X":
            return int(self.initial_state[0] ^ self.finals[0])
        flips = int(np.bitwise_xor.reduce(self.initial_state ^ self.finals))
        return flips


@dataclass(eq=False)
class ShotBatch:
    """Homogeneous collection of records plus the model that generated them."""

    records: list
    model: RepCodeNoiseModel
    basis: str
    cycles: int
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.records:
            if r.basis != self.basis or r.cycles != self.cycles or r.d != self.model.d:
                raise ValueError("batch must be homogeneous in basis, d and cycles")

    def __len__(self):
        return len(self.records)


def sample_initial_x_state(d: int, alpha_sq: float, rng: np.random.Generator) -> np.ndarray:
    """Sample the initial per-qubit parity string.

    Idle cats relax towards the even state, so each qubit is prepared in
    |+⟩ independently with the steady-state probability; parity bit 0
    denotes |+⟩.  The number of odd cats per shot is Binomial(d, 1−P₊).
    """
    p_plus = steady_state_plus_population(alpha_sq)
    return (rng.random(d) >= p_plus).astype(np.uint8)


def sample_shot(
    model: RepCodeNoiseModel,
    cycles: int,
    basis: str,
    rng: np.random.Generator,
    shot_seed: int = 0,
    init_plus_prob: float | None = None,
) -> SyndromeRecord:
    """Generate one memory-experiment shot under the simplified noise model.

    Draw order (fixed): initial state (X) or projected stabilizers (Z),
    then per cycle [mid-cycle flips | categorical syndrome noise |
    end-of-cycle flips] as one uniform block, then Z-basis bit flips,
    then final-measurement errors.  All-zero noise reproduces the ideal
    experiment: every detector trivial and the logical value preserved.
    """
    d = model.d
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if basis not in ("X", "Z"):
        raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")

    if basis == "X":
        if init_plus_prob is None:
            init_plus_prob = 0.5
        initial_state = (rng.random(d) >= init_plus_prob).astype(np.uint8)
        ref_stab = initial_state[:-1] ^ initial_state[1:]
    else:
        initial_state = np.zeros(d, dtype=np.uint8)
        # the first stabilizer round projects onto a random XX eigenspace
        ref_stab = (rng.random(d - 1) < 0.5).astype(np.uint8)

    u = rng.random((cycles, 3 * d - 1))
    mid = u[:, :d] < model.p_z * model.mid_cycle_fraction
    end = u[:, d:2 * d] < model.p_z * (1.0 - model.mid_cycle_fraction)
    u_cat = u[:, 2 * d:]
    flip_mask = u_cat < model.p_meas
    erase_mask = (u_cat >= model.p_meas) & (u_cat < model.p_meas + model.p_erase)

    # phase-flip state before each cycle (prefix parity of all prior flips)
    both = (mid ^ end).astype(np.uint8)
    pre = np.zeros((cycles + 1, d), dtype=np.uint8)
    pre[1:] = np.cumsum(both, axis=0, dtype=np.int64) % 2
    snap1 = pre[:-1]                     # state at the first CX layer
    snap2 = pre[:-1] ^ mid               # state at the second CX layer

    ideal = ref_stab[None, :] ^ snap1[:, :-1] ^ snap2[:, 1:]
    syndromes = (ideal ^ flip_mask).astype(np.uint8)
    syndromes[erase_mask] = ERASED

    if basis == "Z":
        if model.p_bitflip > 0:
            xflips = (rng.random((cycles, d)) < model.p_bitflip)
            net_x = np.bitwise_xor.reduce(xflips.astype(np.uint8), axis=0)
        else:
            xflips = rng.random((cycles, d))  # consumed for stream stability
            net_x = np.zeros(d, dtype=np.uint8)
        value = initial_state ^ net_x
    else:
        value = initial_state ^ pre[-1]

    final_err = (rng.random(d) < model.final_meas_error).astype(np.uint8)
    finals = (value ^ final_err).astype(np.uint8)

    return SyndromeRecord(
        basis=basis,
        initial_state=initial_state,
        initial_stabilizers=ref_stab.astype(np.uint8),
        syndromes=syndromes,
        finals=finals,
        shot_seed=shot_seed,
    )


def sample_batch(
    model: RepCodeNoiseModel,
    cycles: int,
    basis: str,
    shots: int,
    seed: int,
    first_shot: int = 0,
    init_plus_prob: float | None = None,
) -> ShotBatch:
    """Sample `shots` records with per-shot counter RNG streams."""
    records = []
    for i in range(first_shot, first_shot + shots):
        rng = shot_rng(seed, i)
        records.append(
            sample_shot(model, cycles, basis, rng, shot_seed=i, init_plus_prob=init_plus_prob)
        )
    return ShotBatch(records=records, model=model, basis=basis, cycles=cycles, seed=seed)


def fill_erasures(record: SyndromeRecord, seed: int) -> SyndromeRecord:
    """Replace erased syndromes with fair coin flips (the un-heralded view).

    A readout that cannot distinguish an erasure reports a bit carrying no
    information; decoding "ignoring erasures" consumes records filled this
    way.  Fills come from a dedicated stream keyed by (seed ^ salt, shot)
    so they are reproducible and independent of the shot's own draws.
    Scan order over the syndrome matrix is row-major and fixed.
    """
    if not record.has_erasures():
        return record
    rng = shot_rng(seed, record.shot_seed, salt=_FILL_SALT)
    syn = record.syndromes.copy()
    mask = syn == ERASED
    syn[mask] = (rng.random(int(mask.sum())) < 0.5).astype(np.uint8)
    return SyndromeRecord(
        basis=record.basis,
        initial_state=record.initial_state,
        initial_stabilizers=record.initial_stabilizers,
        syndromes=syn,
        finals=record.finals,
        shot_seed=record.shot_seed,
    )


def detection_probabilities(batch: ShotBatch):
    """Fraction of nontrivial detectors at each (time layer, ancilla).

    Detectors compare consecutive syndrome rounds, the initial reference
    layer and (X basis) the final transversal layer; entries touching an
    erased syndrome are excluded from their average rather than filled.
    Returns (fractions, counts) arrays of shape [layers][d−1]; positions
    never observed hold NaN fractions.
    """
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    from . import graph  # local import: graph consumes records, not batches

    layers = batch.cycles + 1 if batch.basis == "X" else batch.cycles
    d = batch.model.d
    hits = np.zeros((layers, d - 1))
    counts = np.zeros((layers, d - 1))
    for rec in batch.records:
        vals, valid = graph.detector_values_with_mask(rec)
        hits += np.where(valid, vals, 0)
        counts += valid
    with np.errstate(invalid="ignore"):
        frac = hits / counts
    return frac, counts


# ── Serialization ────────────────────────────────────────────────────────
#
# Binary layout (little-endian):
#   8 bytes   magic "CATSYN1\n"
#   u32       JSON header length
#   ...       JSON header: format, d, cycles, basis, shots, seed,
#             model (full parameter dict), model_hash
#   per shot:
#     u64       shot_seed
#     d bytes   initial_state
#     d−1 bytes initial_stabilizers
#     cycles·(d−1) bytes syndromes, row-major, values {0, 1, 2=ERASED}
#     d bytes   finals


def write_batch(path, batch: ShotBatch) -> None:
    header = {
        "format": 1,
        "d": batch.model.d,
        "cycles": batch.cycles,
        "basis": batch.basis,
        "shots": len(batch),
        "seed": batch.seed,
        "model": batch.model.to_dict(),
        "model_hash": batch.model.content_hash(),
    }
    header.update(batch.meta)
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for rec in batch.records:
            fh.write(struct.pack("<Q", rec.shot_seed))
            fh.write(rec.initial_state.astype(np.uint8).tobytes())
            fh.write(rec.initial_stabilizers.astype(np.uint8).tobytes())
            fh.write(rec.syndromes.astype(np.uint8).tobytes())
            fh.write(rec.finals.astype(np.uint8).tobytes())


def read_batch(path) -> ShotBatch:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not a syndrome batch file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        d, cycles, basis = header["d"], header["cycles"], header["basis"]
        model = RepCodeNoiseModel(
            d=d,
            p_z=np.array(header["model"]["p_z"]),
            p_meas=np.array(header["model"]["p_meas"]),
            p_erase=np.array(header["model"]["p_erase"]),
            t_cycle=header["model"]["t_cycle"],
            mid_cycle_fraction=header["model"]["mid_cycle_fraction"],
            final_meas_error=np.array(header["model"]["final_meas_error"]),
            p_bitflip=header["model"]["p_bitflip"],
        )
        if model.content_hash() != header["model_hash"]:
            raise ValueError(f"{path}: model hash mismatch")
        records = []
        per_shot = 8 + d + (d - 1) + cycles * (d - 1) + d
        for _ in range(header["shots"]):
            raw = fh.read(per_shot)
            if len(raw) != per_shot:
                raise ValueError(f"{path}: truncated record section")
            (shot_seed,) = struct.unpack("<Q", raw[:8])
            off = 8
            init = np.frombuffer(raw, np.uint8, d, off); off += d
            stab = np.frombuffer(raw, np.uint8, d - 1, off); off += d - 1
            syn = np.frombuffer(raw, np.uint8, cycles * (d - 1), off).reshape(cycles, d - 1)
            off += cycles * (d - 1)
            fin = np.frombuffer(raw, np.uint8, d, off)
            records.append(SyndromeRecord(
                basis=basis, initial_state=init.copy(),
                initial_stabilizers=stab.copy(), syndromes=syn.copy(),
                finals=fin.copy(), shot_seed=shot_seed,
            ))
    meta = {k: v for k, v in header.items()
            if k not in {"format", "d", "cycles", "basis", "shots", "seed", "model", "model_hash"}}
    return ShotBatch(records=records, model=model, basis=basis,
                     cycles=cycles, seed=header["seed"], meta=meta)


_SYM = {0: "0", 1: "1", ERASED: "E"}


def write_batch_text(path, batch: ShotBatch) -> None:
    """Human-readable export: one block per shot, syndromes as 0/1/E rows."""
    with open(path, "w") as fh:
        fh.write(f"# d={batch.model.d} cycles={batch.cycles} basis={batch.basis} "
                 f"shots={len(batch)} seed={batch.seed} model={batch.model.content_hash()}\n")
        for rec in batch.records:
            fh.write(f"shot {rec.shot_seed}\n")
            fh.write("  init  " + "".join(str(b) for b in rec.initial_state) + "\n")
            fh.write("  stab0 " + "".join(str(b) for b in rec.initial_stabilizers) + "\n")
            for t in range(rec.cycles):
                fh.write("  syn   " + "".join(_SYM[int(v)] for v in rec.syndromes[t]) + "\n")
            fh.write("  final " + "".join(str(b) for b in rec.finals) + "\n")
