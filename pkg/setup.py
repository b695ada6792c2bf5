#!/usr/bin/env python
import setuptools

setuptools.setup(
  entry_points={
    "console_scripts": [
      "freespec=freespec_cli:main"
    ],
  },
  install_requires=[
    line.strip() for line in open("requirements.txt")
    if line.strip() and not line.startswith("#")
  ],
  extras_require={
    "test": [
      "pytest>=3.3.1",
    ],
  },
)
