"""mhrlearn command-line entry point.

    mhrlearn-cli.py train --config run.ini --out runs/moons [--seed N] [--workers N]
    mhrlearn-cli.py predict --model runs/moons/model.mhr --data data/test --out scores.csv
    mhrlearn-cli.py sweep --config run.ini --fractions 0.1,0.2,0.3 --repeats 10
    mhrlearn-cli.py tune --config run.ini --grid-exp -10..10
    mhrlearn-cli.py inspect-manifold --config run.ini
"""
import sys

from mhrlearn.cli import run_cli

if __name__ == "__main__":
    sys.exit(run_cli())
