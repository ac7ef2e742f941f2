#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup

with open("README.md", encoding="utf-8") as readme_file:
    readme = readme_file.read()

requirements = [
    "numpy>=1.19.0",
    "scipy>=1.4.0",
]

test_requirements = [
    "pytest>=4.0.0",
    "hypothesis>=6.0.0",
]

setup(
    name="sockit",
    description="sockit (State Of Charge toolKIT): adaptive LFP state-of-charge estimation with confidence gating",
    long_description=readme,
    long_description_content_type="text/markdown",
    author="sockit developers",
    url="https://github.com/sockit/sockit",
    packages=["sockit", "sockit.estimators"],
    package_dir={"sockit": "sockit"},
    include_package_data=True,
    package_data={"sockit": ["datafiles/*"]},
    python_requires=">=3.7",
    install_requires=requirements,
    entry_points={"console_scripts": ["soc-kit=sockit.cli:main"]},
    license="MIT license",
    zip_safe=False,
    keywords="battery state-of-charge kalman lfp",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering",
    ],
    test_suite="tests",
    tests_require=test_requirements,
)
