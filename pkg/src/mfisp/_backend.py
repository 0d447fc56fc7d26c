"""Select the compiled kernels when available, else the NumPy fallback.

Set ``MFISP_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _fallback

logger = logging.getLogger(__name__)

kernels = _fallback
BACKEND = "python"

if os.environ.get("MFISP_PURE_PYTHON") != "1":
    try:
        from . import _kernels as kernels  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        logger.debug("compiled kernels unavailable, using NumPy fallback")

besselj = kernels.besselj
bessely = kernels.bessely
besselj_orders = kernels.besselj_orders
bessely_orders = kernels.bessely_orders
hankel0 = kernels.hankel0
green_sum = kernels.green_sum
