from setuptools import setup, find_packages

import pydisagg


with open('README.md') as f:
    readme = f.read()

setup(
    name=pydisagg.__title__,
    version=pydisagg.__version__,
    packages=find_packages(exclude=('tests',)),
    author=f'{pydisagg.__author__} <{pydisagg.__author_email__}>',
    license=pydisagg.__license__,
    description=pydisagg.__description__,
    long_description=readme,
    long_description_content_type='text/markdown',
    url=pydisagg.__url__,
    python_requires='>=3.7',
    install_requires=[
        'numpy >= 1.17.0',
        'pandas >= 1.0.0',
        'Pillow >= 7.0.0',
        'orjson >= 3.3.0',
        'starlette >= 0.13.0',
        'click >= 7.0',
    ],
    entry_points={
        'console_scripts': [
            'disagg=pydisagg.cli:main',
        ],
    },
    classifiers=[
        'Topic :: Scientific/Engineering :: GIS',
        'Development Status :: 2 - Pre-Alpha',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'License :: OSI Approved :: GNU Lesser General Public License v3 or later (LGPLv3+)',
        'Operating System :: OS Independent',
        'Typing :: Typed',
    ],
)
