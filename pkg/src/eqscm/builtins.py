"""Built-in model corpora for the two signalling case studies and a toy chain.

The three MAPK variants share one cascade (input E1 drives K3 -> K2 -> K) and
differ only in their six rates.  The IGF model wires two receptor inputs
through SOS/Ras/PI3K/AKT into the Raf-Mek-Erk cascade; every protein carries
an auto-deactivation, and Raf is additionally deactivated by AKT, which gives
the network its two competing paths from Ras to Erk.
"""

from __future__ import annotations

from .dsl import ParseResult, parse_model
from .network import ReactionNetwork

_MAPK_TEMPLATE = """\
MODEL {name}
INPUT E1 = 1
SPECIES K3 TOTAL=100 INIT=0
SPECIES K2 TOTAL=100 INIT=0
SPECIES K TOTAL=100 INIT=0
ACTIVATE K3 BY E1 RATE {act_k3}
DEACTIVATE K3 AUTO RATE {inh_k3}
ACTIVATE K2 BY K3 RATE {act_k2}
DEACTIVATE K2 AUTO RATE {inh_k2}
ACTIVATE K BY K2 RATE {act_k}
DEACTIVATE K AUTO RATE {inh_k}
"""

_MAPK_RATES = {
    "mapk-exp1": (0.1, 0.1, 0.1, 2.0, 0.1, 1.0),
    "mapk-exp2": (0.2, 0.3, 0.2, 3.0, 0.2, 1.5),
    "mapk-exp3": (0.1, 0.3, 0.5, 5.0, 0.3, 4.0),
}

_IGF = """\
MODEL igf
INPUT EGFR = 37
INPUT IGFR = 5
SPECIES SOS TOTAL=100 INIT=0
SPECIES Ras TOTAL=100 INIT=0
SPECIES PI3K TOTAL=100 INIT=0
SPECIES AKT TOTAL=100 INIT=0
SPECIES Raf TOTAL=100 INIT=0
SPECIES Mek TOTAL=100 INIT=0
SPECIES Erk TOTAL=100 INIT=0
ACTIVATE SOS BY EGFR RATE 0.01
ACTIVATE SOS BY IGFR RATE 0.01
ACTIVATE Ras BY SOS RATE 0.01
ACTIVATE PI3K BY EGFR RATE 0.01
ACTIVATE PI3K BY IGFR RATE 0.01
ACTIVATE PI3K BY Ras RATE 0.01
ACTIVATE AKT BY PI3K RATE 0.01
ACTIVATE Raf BY Ras RATE 0.01
ACTIVATE Mek BY Raf RATE 0.05
ACTIVATE Erk BY Mek RATE 0.05
DEACTIVATE SOS AUTO RATE 0.5
DEACTIVATE Ras AUTO RATE 0.5
DEACTIVATE PI3K AUTO RATE 0.5
DEACTIVATE AKT AUTO RATE 0.5
DEACTIVATE Raf AUTO RATE 0.3
DEACTIVATE Raf BY AKT RATE 0.01
DEACTIVATE Mek AUTO RATE 0.5
DEACTIVATE Erk AUTO RATE 0.5
"""

_TOY = """\
MODEL toy
INPUT E = 1
SPECIES X1 TOTAL=100 INIT=0
SPECIES X2 TOTAL=100 INIT=0
SPECIES Y TOTAL=100 INIT=0
ACTIVATE X1 BY E RATE 0.1
DEACTIVATE X1 AUTO RATE 0.1
ACTIVATE X2 BY E RATE 0.1
DEACTIVATE X2 AUTO RATE 0.1
ACTIVATE Y BY X1 RATE 0.1
DEACTIVATE Y BY X2 RATE 0.1
"""


def _mapk_source(name: str) -> str:
    a3, i3, a2, i2, ak, ik = _MAPK_RATES[name]
    return _MAPK_TEMPLATE.format(
        name=name, act_k3=a3, inh_k3=i3, act_k2=a2, inh_k2=i2, act_k=ak, inh_k=ik
    )


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_MAPK_RATES)) + ("igf", "toy")


def builtin_source(name: str) -> str:
    """Source text of a built-in model; KeyError for unknown names."""
    if name in _MAPK_RATES:
        return _mapk_source(name)
    if name == "igf":
        return _IGF
    if name == "toy":
        return _TOY
    raise KeyError(name)


def load_builtin(name: str) -> ReactionNetwork:
    result: ParseResult = parse_model(builtin_source(name), origin=f"builtin:{name}")
    if not result.ok:  # pragma: no cover - corpora are tested to parse clean
        raise AssertionError(f"builtin {name} failed to parse:\n{result.format_diagnostics()}")
    return result.network
