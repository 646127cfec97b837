"""Example implementation of a synthetic dataset writer using mhrlearn.
Writes labels.csv, one view_<name>.csv per view and latent.csv, optionally hiding most labels.
"""
import argparse
import pathlib

from mhrlearn.dataset import (
    GENERATORS,
    GeneratorSpec,
    apply_mask,
    class_balance,
    make_synthetic,
    save_dataset,
    split_labels,
)


def main() -> None:
    arg_parser = argparse.ArgumentParser(description="Write a synthetic multiview dataset")
    arg_parser.add_argument("generator", choices=sorted(GENERATORS), help="Generator name")
    arg_parser.add_argument("out", type=str, help="Output directory")
    arg_parser.add_argument("-n", dest="n", type=int, default=400, help="Number of examples")
    arg_parser.add_argument("--noise", type=float, default=0.1, help="Noise level")
    arg_parser.add_argument("--seed", type=int, default=0, help="Random seed")
    arg_parser.add_argument("-m", dest="m", type=int, default=2, help="Latent dimension (linear_manifold)")
    arg_parser.add_argument("-d", dest="d", type=int, default=5, help="Ambient dimension")
    arg_parser.add_argument("--label-fraction", type=float, help="Keep labels on this fraction of examples only")
    args = arg_parser.parse_args()

    spec = GeneratorSpec(name=args.generator, n=args.n, noise=args.noise, seed=args.seed, m=args.m, d=args.d)
    dataset = make_synthetic(spec)
    if args.label_fraction is not None:
        dataset = apply_mask(dataset, split_labels(dataset, args.label_fraction, args.seed))

    out = pathlib.Path(args.out)
    save_dataset(dataset, out)
    print(f"Wrote {dataset.n_examples} examples ({dataset.n_labeled} labeled) to {out}")
    for view_name, width in zip(dataset.view_names, dataset.view_widths):
        print(f"\tview {view_name}: {width} features")
    for class_name, (positives, negatives) in class_balance(dataset).items():
        print(f"\t{class_name}: {positives} positive, {negatives} negative")


if __name__ == "__main__":
    main()
