"""
Build and installation script for the `ewachain` package.

This script packages the `ewachain` project: the soft-boundary aggregation sampler, its exact
small-p oracle and the experiment pipeline that ties them together.

Features:
- Package Information: Defines the name, version, and other core details of the package.
- Discovery: Utilizes `find_packages()` to include every package except the tests.
- Package Data: Ships golden_config.json, the default experiment config read by the command line.
- Dependencies: numpy for the linear algebra and random streams, scipy for logsumexp and the
  symmetric eigensolver.
- Entry Points: Configures the console script `run-ewachain`.

Usage:
    To install the package in the local environment:
    $ pip install .

    To create a source distribution:
    $ python setup.py sdist
"""
from setuptools import setup, find_packages

setup(
    name="ewachain",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={"ewachain": ["golden_config.json"]},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
    ],
    entry_points={
    'console_scripts': [
        'run-ewachain=ewachain.run_ewachain:main', # Give the option to do run-ewachain from bash
        ],
    },

    description="Soft-boundary Metropolis-Hastings sampling for exponentially weighted aggregation, with an exact mixing oracle.",
    license="MIT",
    keywords="sparse regression aggregation mcmc mixing time",
)
