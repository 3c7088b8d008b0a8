"""Write high-precision Bessel J_n, K_n references (mpmath, 40 digits) to tests/fixtures."""

import json
from pathlib import Path

import mpmath

mpmath.mp.dps = 40

ORDERS = [0, 1, 2, 5, 10, 15, 19, 20, 21, 25, 30, 40]
XS = [1e-3, 0.05, 0.5, 1.0, 2.5, 7.0, 12.0, 19.5, 23.0, 30.0, 45.0, 80.0]


def main():
    rows = []
    for n in ORDERS:
        for x in XS:
            xm = mpmath.mpf(x)
            rows.append({
                "n": n,
                "x": x,
                "jn": mpmath.nstr(mpmath.besselj(n, xm), 25),
                "jn_prime": mpmath.nstr(mpmath.besselj(n, xm, derivative=1), 25),
                "kn": mpmath.nstr(mpmath.besselk(n, xm), 25),
                "kn_prime": mpmath.nstr(mpmath.diff(lambda t: mpmath.besselk(n, t), xm), 25),
                "in": mpmath.nstr(mpmath.besseli(n, xm), 25),
            })
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "bessel_reference.json"
    out.write_text(json.dumps({"dps": 40, "rows": rows}, indent=1) + "\n")
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
