"""Example implementation of a matrix cache dumper using mhrlearn.
Prints the cache header, then hex-dumps the row-major payload.
"""
import argparse
import pathlib
from ctypes import sizeof

from mhrlearn.kernels import MatrixDtype, MatrixKind, decode_matrix_cache
from mhrlearn.kernels.matrix_cache import MatrixCacheHeader


def dump_memory(data: bytes, start_address: int, size: int) -> None:
    # split to 16 byte regions
    region_size = 16
    current_index = 0
    while True:
        if current_index >= size or start_address + current_index >= len(data):
            break
        region_start = start_address + current_index
        byte_region = data[region_start : region_start + min(region_size, size - current_index)]

        print(f"{region_start:#011x}", end="\t\t")
        ascii_rep = "|"
        for idx, byte in enumerate(byte_region):
            print("{:02x}".format(byte), end=" ")
            # indent every 8 bytes
            if idx > 0 and (idx + 1) % 8 == 0:
                print("\t", end="")
            ascii_rep += chr(byte) if 32 <= byte < 127 else "."
        ascii_rep += "|"
        print(ascii_rep)

        current_index += region_size


def main() -> None:
    arg_parser = argparse.ArgumentParser(description="Matrix cache dumper")
    arg_parser.add_argument("cache_path", type=str, help="Path to a .mhrc file")
    arg_parser.add_argument("-n", dest="count", type=int, help="Number of payload bytes to hex-dump")
    arg_parser.set_defaults(count=256)
    args = arg_parser.parse_args()

    data = pathlib.Path(args.cache_path).read_bytes()
    header, matrix = decode_matrix_cache(data)
    print(f"magic:  {header.magic.decode()}")
    print(f"n:      {header.n}")
    print(f"dtype:  {MatrixDtype(header.dtype).name.lower()}")
    print(f"kind:   {MatrixKind(header.kind).name.lower()}")
    print(f"trace:  {matrix.trace():.6g}")
    print()
    dump_memory(data, sizeof(MatrixCacheHeader), args.count)


if __name__ == "__main__":
    main()
