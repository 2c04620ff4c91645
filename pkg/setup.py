#!/usr/bin/env python

from setuptools import find_packages, setup

setup(
    name="rmpc",
    version="0.1.0",
    description="Recurrent policies that approximate model predictive control at every horizon",
    author="",
    author_email="",
    install_requires=[
        "torch>=2.0.0",
        "pytorch-lightning>=2.0.0",
        "omegaconf>=2.3",
        "pyyaml",
        "numpy>=1.23.1",
        "scipy>=1.9",
        "pandas>=1.5.3",
        "joblib",
        "tqdm",
        "click",
        "rich",
    ],
    packages=find_packages(include=["rmpc", "rmpc.*"]),
    py_modules=["main"],
    entry_points={"console_scripts": ["rmpc = main:main"]},
)
