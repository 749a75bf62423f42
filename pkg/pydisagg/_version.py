"""Version information."""

from __future__ import annotations

__all__ = ('__author__', '__author_email__', '__copyright__',
           '__description__', '__license__', '__title__', '__url__',
           '__version__')

__version__ = '0.1.0'

__title__ = 'pydisagg'
__description__ = 'Census disaggregation with aggregated-output learning'
__license__ = 'LGPLv3'
__url__ = 'https://github.com/pydisagg/pydisagg'

__author__ = 'pydisagg developers'
__author_email__ = 'pydisagg@users.noreply.github.com'
__copyright__ = f'(c) {__author__} <{__author_email__}>'
