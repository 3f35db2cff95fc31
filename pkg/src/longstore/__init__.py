"""Long-term secure archive.

Renewable integrity evidence built from hiding vector commitments and
timestamps, over data stored with proactive threshold secret sharing.
"""

from . import bench, client, encoding, evidence, hiding, sharing, signatures, timestamping, vector_com
from ._kernels import BACKEND as KERNEL_BACKEND
from .client import Archive, EvidenceBundle, RetrievedFile, verify, verify_bundle_file
from .encoding import LogicalClock
from .rand import DrbgRng, SystemRng
from .sharing import SharingPolicy
from .signatures import PkiRegistry, SchemeInstance

__version__ = "0.1.0"

__all__ = [
    "Archive",
    "EvidenceBundle",
    "RetrievedFile",
    "verify",
    "verify_bundle_file",
    "LogicalClock",
    "DrbgRng",
    "SystemRng",
    "SharingPolicy",
    "PkiRegistry",
    "SchemeInstance",
    "KERNEL_BACKEND",
    "bench",
    "client",
    "encoding",
    "evidence",
    "hiding",
    "sharing",
    "signatures",
    "timestamping",
    "vector_com",
    "__version__",
]
