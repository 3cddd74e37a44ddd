# services/synthetic_service.py
# Procedural signature library and synthetic mixed cubes
#
# Every pixel is a convex combination of a few endmember spectra (abundances
# drawn uniformly on the simplex) plus white Gaussian noise scaled to a target
# SNR. Random streams are keyed by (seed, stream, pixel block), never by
# worker, so output is identical for any worker count.

import logging
import math
from dataclasses import dataclass

import numpy as np

from models.cube import HyperCube, SignatureSet
from parallel.pool import run_tasks
from parallel.schedule import chunk_ranges

logger = logging.getLogger(__name__)

# Pixels per random-stream block
SYNTH_BLOCK = 4096

MIN_SPECTRAL_ANGLE = 0.05
MAX_SIGNATURE_RETRIES = 100

_ABUNDANCE_STREAM = 0
_NOISE_STREAM = 1


@dataclass
class SyntheticScene:
    """Generator buffers kept apart so SNR can be measured exactly"""
    cube: HyperCube
    signal: np.ndarray        # (pixels, bands) float64, noiseless
    noise: np.ndarray         # (pixels, bands) float64
    abundances: np.ndarray    # (pixels, endmembers)
    endmember_ids: np.ndarray
    snr_db: float

    @property
    def empirical_snr_db(self):
        return empirical_snr_db(self.signal, self.noise)


def empirical_snr_db(signal, noise):
    """10*log10(mean signal^2 / mean noise^2); +inf when there is no noise."""
    noise_power = float(np.mean(np.square(noise)))
    if noise_power == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.mean(np.square(signal))) / noise_power)


def spectral_angles(spectra):
    """Pairwise angles (radians) between rows."""
    unit = spectra / np.linalg.norm(spectra, axis=1, keepdims=True)
    cosines = np.clip(unit @ unit.T, -1.0, 1.0)
    return np.arccos(cosines)


def _bump_spectra(rng, bands, count):
    x = np.linspace(0.0, 1.0, bands)
    spectra = np.empty((count, bands))
    for k in range(count):
        spectrum = np.full(bands, rng.uniform(0.02, 0.15))
        for _ in range(int(rng.integers(3, 7))):
            center = rng.uniform(-0.1, 1.1)
            width = rng.uniform(0.03, 0.25)
            height = rng.uniform(0.05, 0.6)
            spectrum += height * np.exp(-0.5 * ((x - center) / width) ** 2)
        spectra[k] = spectrum
    return spectra


def builtin_signatures(bands, count, seed):
    """
    Smooth nonnegative spectra made of random Gaussian bumps over a flat floor.

    When bands > 1 and count > 1 every pair must be more than 0.05 rad apart;
    a draw that fails is discarded and redrawn with seed + 1, seed + 2, ...
    """
    if bands < 1 or count < 1:
        raise ValueError(f"bands and count must be >= 1, got bands={bands}, count={count}")

    for attempt in range(MAX_SIGNATURE_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        spectra = _bump_spectra(rng, bands, count)
        if bands == 1 or count == 1:
            break
        angles = spectral_angles(spectra)
        off_diagonal = angles[~np.eye(count, dtype=bool)]
        if off_diagonal.min() > MIN_SPECTRAL_ANGLE:
            break
        logger.debug("signature draw with seed %d too similar (min angle %.4f), retrying",
                     seed + attempt, off_diagonal.min())
    else:
        raise ValueError(f"could not draw {count} distinct signatures over {bands} bands")

    names = [f"sig_{k:03d}" for k in range(count)]
    return SignatureSet(spectra=spectra, names=names)


def _block_rng(seed, stream, block):
    return np.random.default_rng(np.random.SeedSequence([seed, stream, block]))


def _abundance_block(seed, block, start, stop, endmembers):
    # Normalized exponentials are uniform on the simplex
    draws = _block_rng(seed, _ABUNDANCE_STREAM, block).exponential(1.0, size=(stop - start, endmembers))
    return draws / draws.sum(axis=1, keepdims=True)


def _noise_block(seed, block, start, stop, bands, sigma):
    return _block_rng(seed, _NOISE_STREAM, block).normal(0.0, sigma, size=(stop - start, bands))


def synthesize(sigs, width, height, endmembers, snr_db, seed, workers=1):
    """
    Build a synthetic scene and keep its signal, noise and abundance buffers.

    Args:
        sigs: SignatureSet to draw endmembers from
        width, height: image size
        endmembers: how many signatures to mix
        snr_db: target SNR in dB; math.inf disables noise
        seed: integer seed
        workers: threads for the per-block generation

    Returns:
        SyntheticScene
    """
    if width < 1 or height < 1:
        raise ValueError(f"width and height must be >= 1, got {width}x{height}")
    if endmembers < 1:
        raise ValueError(f"endmembers must be >= 1, got {endmembers}")
    if endmembers > sigs.count:
        raise ValueError(f"endmembers ({endmembers}) exceeds available signatures ({sigs.count})")
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")

    pixels = width * height
    chosen = np.random.default_rng(seed).choice(sigs.count, size=endmembers, replace=False)
    basis = sigs.spectra[chosen]

    blocks = chunk_ranges(pixels, SYNTH_BLOCK)
    tasks = [(seed, b, start, stop, endmembers) for b, (start, stop) in enumerate(blocks)]
    abundances = np.concatenate(run_tasks(_abundance_block, tasks, workers), axis=0)
    signal = abundances @ basis

    if math.isinf(snr_db):
        noise = np.zeros_like(signal)
    else:
        signal_power = float(np.mean(np.square(signal)))
        sigma = math.sqrt(signal_power / 10.0 ** (snr_db / 10.0))
        tasks = [(seed, b, start, stop, sigs.bands, sigma) for b, (start, stop) in enumerate(blocks)]
        noise = np.concatenate(run_tasks(_noise_block, tasks, workers), axis=0)

    cube = HyperCube.from_pixel_major(width, height, signal + noise)
    logger.debug("synthesized %dx%dx%d cube from endmembers %s", width, height, sigs.bands, chosen.tolist())
    return SyntheticScene(
        cube=cube, signal=signal, noise=noise, abundances=abundances,
        endmember_ids=chosen, snr_db=snr_db,
    )


def generate_synthetic(sigs, width, height, endmembers, snr_db, seed, workers=1):
    """Synthetic cube only; see synthesize() for the generator buffers."""
    return synthesize(sigs, width, height, endmembers, snr_db, seed, workers).cube
