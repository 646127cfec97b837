from setuptools import find_packages, setup

from mhrlearn import __author__, __version__

setup(
    name="mhrlearn",
    version=__version__,
    description="Multiview Hessian-regularized semi-supervised learning",
    author=__author__,
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.9",
    install_requires=["numpy>=1.24", "scipy>=1.10", "scikit-learn>=1.2", "joblib>=1.2", "more_itertools>=9.0"],
    package_data={"mhrlearn": ["py.typed"]},
    scripts=["mhrlearn-cli.py"],
)
