# platform_presets.py
# Named hardware descriptors and their published reference timings

from models.bench import ImageDesc, PlatformDesc

# ─────────────────────────────────────────────────
# Reference images
# ─────────────────────────────────────────────────

IMAGES = {
    'cuprite-small': ImageDesc(width=250, height=191, bands=188, name='Cuprite (small)'),
    'cuprite-large': ImageDesc(width=350, height=350, bands=188, name='Cuprite (large)'),
    'jasper': ImageDesc(width=512, height=614, bands=224, name='Jasper'),
    'wtc': ImageDesc(width=614, height=512, bands=224, name='WTC'),
}


# ─────────────────────────────────────────────────
# Platform definitions
# ─────────────────────────────────────────────────

PLATFORMS = {
    'gtx680': {
        'key': 'gtx680',
        'label': 'GPU (GeForce GTX 680)',
        'platform': PlatformDesc(name='GPU', cores=1536, freq_mhz=1058, cps_decimals=2),

        # CPS/(core x MHz); the published figures divide the 2-decimal CPS
        'per_core': True,

        # (image key, total ms for one principal component)
        'published': [
            ('cuprite-small', 148.68),
            ('cuprite-large', 166.48),
            ('jasper', 216.78),
            ('wtc', 215.96),
        ],
    },
    'mppa256': {
        'key': 'mppa256',
        'label': 'Manycore (MPPA-256-N)',
        'platform': PlatformDesc(name='MPPA', cores=256, freq_mhz=400),
        'per_core': True,
        'published': [
            ('cuprite-small', 1989.5),
            ('cuprite-large', 2194.6),
            ('jasper', 4944.2),
            ('wtc', 4969.1),
        ],
    },
    'xc7vx690t': {
        'key': 'xc7vx690t',
        'label': 'FPGA (Virtex XC7VX690T)',
        'platform': PlatformDesc(name='FPGA', cores=1, freq_mhz=76),

        # Core count has no meaning here: CPS/MHz only
        'per_core': False,
        'published': [
            ('cuprite-large', 1490.0),
            ('jasper', 4170.0),
        ],
    },
    'i7-4790': {
        'key': 'i7-4790',
        'label': 'Sequential CPU (one core of an i7-4790)',
        'platform': PlatformDesc(name='CPU', cores=1, freq_mhz=3600),
        'per_core': True,

        # Unoptimized sequential build; the speedup baseline
        'published': [
            ('cuprite-small', 3672.6),
            ('cuprite-large', 9410.2),
            ('jasper', 33858.2),
            ('wtc', 33858.0),
        ],
    },
}


def get_platform_by_key(key):
    """Get a preset by its key; raises KeyError listing the known keys."""
    preset = PLATFORMS.get(str(key).strip().lower())
    if preset is None:
        raise KeyError(f"unknown platform '{key}'. Known: {', '.join(PLATFORMS)}")
    return preset


def published_baseline_ms(image_key):
    """Sequential reference time for an image, or None."""
    for name, total_ms in PLATFORMS['i7-4790']['published']:
        if name == image_key:
            return total_ms
    return None
