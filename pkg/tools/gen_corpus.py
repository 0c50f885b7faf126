"""Regenerate the bundled corpus of self-checking C loop kernels.

Each emitted program initializes its arrays deterministically, executes the
marker-delimited loop region inside a repeat driver, and prints an order-
independent-free checksum of every array the region may write. All arrays
are unsigned 64-bit integers so results are bit-exact under any valid
reordering of the loop iterations (no floating-point reassociation hazards).

Usage: python3 tools/gen_corpus.py [corpus_dir]
"""

from __future__ import annotations

import sys
import textwrap
import zlib
from dataclasses import dataclass
from pathlib import Path


@dataclass
class Kernel:
    name: str
    dims: dict[str, int]          # array name -> rank (1 or 2)
    outputs: tuple[str, ...]      # arrays folded into the checksum
    region: str                   # loop nest between the markers
    reps: int = 40
    n: int = 64


def _render(k: Kernel) -> str:
    n = k.n
    decls = []
    for name, rank in sorted(k.dims.items()):
        shape = f"[{n}]" * rank
        decls.append(f"static unsigned long long {name}{shape};")
    init = []
    for name, rank in sorted(k.dims.items()):
        if rank == 1:
            init.append(f"    for (i = 0; i < {n}; i++)\n"
                        f"        {name}[i] = i * 2654435761ULL + {zlib.crc32(name.encode()) % 977}ULL;")
        else:
            init.append(f"    for (i = 0; i < {n}; i++)\n"
                        f"        for (j = 0; j < {n}; j++)\n"
                        f"            {name}[i][j] = (i * {n} + j) * 1315423911ULL + {zlib.crc32(name.encode()) % 977}ULL;")
    sums = []
    for name in k.outputs:
        if k.dims[name] == 1:
            sums.append(f"    for (i = 0; i < {n}; i++)\n"
                        f"        h = h * 31ULL + {name}[i];")
        else:
            sums.append(f"    for (i = 0; i < {n}; i++)\n"
                        f"        for (j = 0; j < {n}; j++)\n"
                        f"            h = h * 31ULL + {name}[i][j];")
    region = textwrap.dedent(k.region).strip("\n")
    return f"""#include <stdio.h>

{chr(10).join(decls)}

int main(void)
{{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
{chr(10).join(init)}
    for (r = 0; r < {k.reps}; r++) {{
#pragma looplearner begin
{region}
#pragma looplearner end
    }}
{chr(10).join(sums)}
    printf("checksum %llu\\n", h);
    return 0;
}}
"""


def kernels() -> list[Kernel]:
    ks = []

    def add(name, dims, outputs, region, reps=40, n=64):
        ks.append(Kernel(name, dims, tuple(outputs), region, reps, n))

    # depth-1, dependence-free
    add("copy_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 64; i++) {
            B[i] = A[i];
        }
    """, reps=200)
    add("scale_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 64; i++) {
            B[i] = A[i] * 3;
        }
    """, reps=200)
    add("add_1d", {"A": 1, "B": 1, "C": 1}, ["C"], """
        for (i = 0; i < 64; i++) {
            C[i] = A[i] + B[i];
        }
    """, reps=200)
    add("axpy_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 64; i++) {
            B[i] = B[i] + A[i] * 5;
        }
    """, reps=200)
    add("xor_1d", {"A": 1, "B": 1, "C": 1}, ["C"], """
        for (i = 0; i < 64; i++) {
            C[i] = A[i] ^ B[i];
        }
    """, reps=200)
    add("two_stmt_1d", {"A": 1, "B": 1, "C": 1, "D": 1}, ["C", "D"], """
        for (i = 0; i < 64; i++) {
            C[i] = A[i] * 2;
            D[i] = B[i] + 7;
        }
    """, reps=150)
    add("strided_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 64; i += 2) {
            B[i] = A[i] + 1;
        }
    """, reps=200)
    add("odd_trip_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 61; i++) {
            B[i] = A[i] + 9;
        }
    """, reps=200)

    # depth-1 with loop-carried dependences
    add("stencil_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 1; i < 63; i++) {
            B[i] = A[i - 1] + A[i + 1];
        }
    """, reps=200)
    add("prefix_1d", {"A": 1}, ["A"], """
        for (i = 1; i < 64; i++) {
            A[i] = A[i - 1] + A[i];
        }
    """, reps=100)
    add("anti_1d", {"A": 1}, ["A"], """
        for (i = 0; i < 63; i++) {
            A[i] = A[i + 1] * 2;
        }
    """, reps=100)
    add("shift_sub_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 2; i < 64; i++) {
            B[i] = B[i - 2] + A[i];
        }
    """, reps=100)

    # depth-2, dependence-free (rich transformation space)
    add("add_2d", {"A": 2, "B": 2, "C": 2}, ["C"], """
        for (i = 0; i < 64; i++) {
            for (j = 0; j < 64; j++) {
                C[i][j] = A[i][j] + B[i][j];
            }
        }
    """, reps=8)
    add("scale_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 64; i++) {
            for (j = 0; j < 64; j++) {
                B[i][j] = A[i][j] * 17 + 3;
            }
        }
    """, reps=8)
    add("transpose_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 64; i++) {
            for (j = 0; j < 64; j++) {
                B[i][j] = A[j][i];
            }
        }
    """, reps=8)
    add("init_2d", {"A": 2}, ["A"], """
        for (i = 0; i < 64; i++) {
            for (j = 0; j < 64; j++) {
                A[i][j] = i * 64 + j;
            }
        }
    """, reps=8)
    add("mul_2d", {"A": 2, "B": 2, "C": 2}, ["C"], """
        for (i = 0; i < 32; i++) {
            for (j = 0; j < 32; j++) {
                C[i][j] = A[i][j] * B[i][j];
            }
        }
    """, reps=24)
    add("rect_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 32; i++) {
            for (j = 0; j < 64; j++) {
                B[i][j] = A[i][j] + i;
            }
        }
    """, reps=12)

    # depth-2 with distribution opportunity
    add("two_stmt_2d", {"A": 2, "B": 2, "C": 2, "D": 2}, ["C", "D"], """
        for (i = 0; i < 48; i++) {
            for (j = 0; j < 48; j++) {
                C[i][j] = A[i][j] * 2;
                D[i][j] = B[i][j] + 1;
            }
        }
    """, reps=8)
    add("three_stmt_1d", {"A": 1, "B": 1, "C": 1, "D": 1, "E": 1},
        ["C", "D", "E"], """
        for (i = 0; i < 64; i++) {
            C[i] = A[i] + 1;
            D[i] = B[i] * 3;
            E[i] = A[i] ^ 255;
        }
    """, reps=150)

    # depth-2 with loop-carried dependences
    add("row_rec_2d", {"A": 2, "B": 2}, ["A"], """
        for (i = 0; i < 64; i++) {
            for (j = 1; j < 64; j++) {
                A[i][j] = A[i][j - 1] + B[i][j];
            }
        }
    """, reps=8)
    add("col_rec_2d", {"A": 2, "B": 2}, ["A"], """
        for (i = 1; i < 64; i++) {
            for (j = 0; j < 64; j++) {
                A[i][j] = A[i - 1][j] + B[i][j];
            }
        }
    """, reps=8)
    add("stencil_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 1; i < 63; i++) {
            for (j = 1; j < 63; j++) {
                B[i][j] = A[i - 1][j] + A[i][j - 1] + A[i + 1][j] + A[i][j + 1];
            }
        }
    """, reps=8)
    add("diag_rec_2d", {"A": 2}, ["A"], """
        for (i = 1; i < 64; i++) {
            for (j = 1; j < 64; j++) {
                A[i][j] = A[i - 1][j - 1] + 1;
            }
        }
    """, reps=8)
    add("smooth_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 1; i < 47; i++) {
            for (j = 1; j < 47; j++) {
                B[i][j] = B[i - 1][j] + A[i][j] + B[i][j - 1];
            }
        }
    """, reps=10)

    # triangular (non-rectangular) nests
    add("tri_lower_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 64; i++) {
            for (j = 0; j < i; j++) {
                B[i][j] = A[i][j] + 1;
            }
        }
    """, reps=12)
    add("tri_upper_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 64; i++) {
            for (j = i; j < 64; j++) {
                B[i][j] = A[j][i] * 2;
            }
        }
    """, reps=12)

    # depth-3 with dependences to keep the space modest
    add("matmul_3d", {"A": 2, "B": 2, "C": 2}, ["C"], """
        for (i = 0; i < 24; i++) {
            for (j = 0; j < 24; j++) {
                for (k = 1; k < 24; k++) {
                    C[i][j] = C[i][j] + A[i][k] * B[k][j];
                }
            }
        }
    """, reps=6)
    add("sweep_3d", {"A": 2, "B": 2, "C": 2}, ["C"], """
        for (i = 1; i < 16; i++) {
            for (j = 0; j < 16; j++) {
                for (k = 0; k < 16; k++) {
                    C[j][k] = C[j][k] + A[i][j] + B[i][k];
                }
            }
        }
    """, reps=10)

    # scalar accumulator: unanalyzable, only unrolling applies
    add("reduce_1d", {"A": 1, "S": 1}, ["S"], """
        for (i = 0; i < 64; i++) {
            S[0] = S[0] + A[i];
        }
    """, reps=100)
    add("dot_1d", {"A": 1, "B": 1, "S": 1}, ["S"], """
        for (i = 0; i < 64; i++) {
            S[0] = S[0] + A[i] * B[i];
        }
    """, reps=100)

    # misc shapes
    add("le_bound_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i <= 63; i++) {
            B[i] = A[i] + 4;
        }
    """, reps=200)
    add("cond_2d", {"A": 2, "B": 2}, ["B"], """
        for (i = 0; i < 48; i++) {
            for (j = 0; j < 48; j++) {
                if (A[i][j] > B[i][j]) {
                    B[i][j] = A[i][j] - B[i][j];
                }
            }
        }
    """, reps=10)
    add("offset_store_1d", {"A": 1, "B": 1}, ["B"], """
        for (i = 0; i < 32; i++) {
            B[i + 32] = A[i] * 11;
        }
    """, reps=200)
    return ks


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("corpus")
    out.mkdir(parents=True, exist_ok=True)
    for k in kernels():
        (out / f"{k.name}.c").write_text(_render(k))
    print(f"wrote {len(kernels())} kernels to {out}/")


if __name__ == "__main__":
    main()
