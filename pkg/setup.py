#!/usr/bin/env python3

from setuptools import setup, find_packages

setup(
    name="weno-ds",
    version="0.1.0",
    description="Fifth-order WENO-JS, WENO-Z and learned WENO-DS solvers for 1-D conservation laws",
    author="WENO-DS Developers",
    author_email="example@example.com",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=[
        "numpy",
        "scipy",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "weno-ds=weno_ds.bench_cli:main",
        ],
    },
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
