"""Point-cloud scene synthesis and grounding evaluation toolkit.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its public surface.
"""

from sceneforge._core import *  # noqa: F401,F403
from sceneforge._core import __doc__ as _core_doc  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
