"""Census disaggregation with aggregated-output learning.

Coarse census counts are spread onto a fine pixel grid by fitting an
interpretable pixel model (LinExp) to unit totals only.
"""

from __future__ import annotations

__all__ = tuple()

from pydisagg._version import (__version__,
                               __title__,
                               __description__,
                               __license__,
                               __url__,
                               __author__,
                               __author_email__,
                               __copyright__)
