from setuptools import setup
from pathlib import Path

version = {}
exec((Path(__file__).parent / "halfmoll" / "_version.py").read_text(), version)

setup(
    version=version["__version__"],
)
