"""Every numerical tolerance and cap used by the library, by name.

Values can be overridden for a block of code with :func:`overrides`, which is
how the command line ``--tol name=value`` flag is applied.
"""

from contextlib import contextmanager

DEFAULTS = {
    "support_floor": 1e-10,
    "hermitian": 1e-10,
    "cluster": 1e-8,
    "gradient": 1e-7,
    "ascent_max_iter": 20000,
    "infinite_bits": 60.0,
    "alpha_max": 50.0,
    "dim_cap": 4096,
    "twirl_max_n": 6,
    "golden": 1e-10,
    "beta_bracket_lo": 1e-6,
    "beta_bracket_hi": 1e6,
    "fw_gap": 1e-7,
    "fw_max_iter": 5000,
    "measured_fw_max_iter": 500,
    "interval_pad": 1e-9,
    "stein_alpha_min": 1e-3,
    "alternating": 1e-7,
    "set_gap": 1e-4,
    "membership": 1e-7,
    "superadditivity": 5e-5,
    "submultiplicativity": 1e-7,
}

_active = dict(DEFAULTS)


def get(name):
    return _active[name]


def table():
    return dict(_active)


@contextmanager
def overrides(**values):
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise KeyError(f"unknown tolerance name(s): {sorted(unknown)}")
    saved = dict(_active)
    _active.update({k: type(DEFAULTS[k])(v) for k, v in values.items()})
    try:
        yield
    finally:
        _active.clear()
        _active.update(saved)
