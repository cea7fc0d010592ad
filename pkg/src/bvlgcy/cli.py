"""Command-line front end: state spaces, I-function terms and verification suites.

Exit codes: 0 ok, 2 bad input, 3 internal inconsistency, 4 unsupported hypotheses.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import mpmath
import yaml

from .arith import DEFAULT_PREC, fstr
from .continuation import (ContourSpec, NonConvergent, assemble_U, barnes_contour_check,
                           check_symplectic, identify_continued_series, perturb,
                           radius_of_convergence, require)
from .fan import LatticePoint
from .iseries import (ISeriesTerm, UnsupportedCurve, UnsupportedHypotheses, assemble_terms,
                      direct_product_coefficient, gw_terms, homogeneity_check)
from .statespace import (diamond_from_dims, fjrw_state_space, gw_ambient_basis, hodge_diamond,
                         isomorphism_report, mixed_state_space)
from .weights import InvalidSpec, OrbifoldSpec

EXIT_OK, EXIT_BAD_INPUT, EXIT_INCONSISTENT, EXIT_UNSUPPORTED = 0, 2, 3, 4

THEORIES = {"gw": "GW", "fjrw": "FJRW", "mixed-fg": "FJRW-GW", "mixed-gf": "GW-FJRW"}
CHECKS = ("homogeneity", "oracle", "symplectic", "continuation", "statespace-iso")
# None: three quarters of the working precision
DEFAULT_TOL = {"symplectic": None, "continuation": "1e-20", "identification": None}
DIGITS = 30


class BadInput(ValueError):
    pass


class Inconsistent(RuntimeError):
    pass


@dataclass
class RunConfig:
    curve: str = "quartic"
    k3: tuple = (3, 1, 1, 1)
    novikov_degree: int = 4
    z_order: int = 4
    precision_bits: int = DEFAULT_PREC
    tolerances: dict = field(default_factory=dict)
    format: str = "json"
    path: str | None = None
    seed: int = 0

    @property
    def spec(self) -> OrbifoldSpec:
        return OrbifoldSpec(self.curve, self.k3)

    def tol(self, check: str):
        t = self.tolerances.get(check, DEFAULT_TOL[check])
        if t is None:
            return mpmath.mpf(2) ** -(3 * self.precision_bits // 4)
        return mpmath.mpf(str(t))


def _parse_k3(text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        w = tuple(int(p) for p in parts)
    except ValueError:
        raise BadInput(f"--k3 expects four comma-separated integers, got {text!r}") from None
    if len(w) != 4:
        raise BadInput(f"--k3 expects four weights, got {len(w)}")
    return w


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as e:
        raise BadInput(f"cannot read config {path}: {e}") from None
    if not isinstance(raw, dict):
        raise BadInput("config must be a mapping")
    orb = raw.get("orbifold", {})
    if "curve" in orb:
        cfg.curve = str(orb["curve"])
    if "k3" in orb:
        cfg.k3 = _parse_k3(orb["k3"])
    tr = raw.get("truncation", {})
    cfg.novikov_degree = int(tr.get("novikov_degree", cfg.novikov_degree))
    cfg.z_order = int(tr.get("z_order", cfg.z_order))
    cfg.precision_bits = int(raw.get("precision_bits", cfg.precision_bits))
    cfg.tolerances = {k: str(v) for k, v in (raw.get("tolerances") or {}).items()}
    out = raw.get("output", {})
    cfg.format = str(out.get("format", cfg.format))
    cfg.path = out.get("path", cfg.path)
    cfg.seed = int(raw.get("seed", cfg.seed))
    return cfg


def _apply_flags(cfg: RunConfig, a: argparse.Namespace) -> RunConfig:
    if a.curve is not None:
        cfg.curve = a.curve
    if a.k3 is not None:
        cfg.k3 = _parse_k3(a.k3)
    if a.max_deg is not None:
        cfg.novikov_degree = a.max_deg
    if a.z_order is not None:
        cfg.z_order = a.z_order
    if a.prec is not None:
        cfg.precision_bits = a.prec
    if a.format is not None:
        cfg.format = a.format
    if a.out is not None:
        cfg.path = a.out
    if a.seed is not None:
        cfg.seed = a.seed
    if cfg.precision_bits < 64:
        raise BadInput("precision must be at least 64 bits")
    if cfg.novikov_degree < 0 or cfg.z_order < 0:
        raise BadInput("truncation orders must be non-negative")
    if cfg.format not in ("json", "csv", "table"):
        raise BadInput(f"unknown format {cfg.format}")
    return cfg


# ---------------------------------------------------------------------------
# serialization


def _q(x) -> str | int:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else fstr(x)


def _mp(x) -> str:
    if isinstance(x, mpmath.mpc) and mpmath.im(x) == 0:
        x = mpmath.re(x)
    return mpmath.nstr(x, DIGITS)


def _header(cmd: str, cfg: RunConfig) -> dict:
    return {"command": cmd, "curve": cfg.spec.curve.value, "weights": list(cfg.spec.k3_weights),
            "precision_bits": cfg.precision_bits}


# ---------------------------------------------------------------------------
# commands


def cmd_state_space(cfg: RunConfig, theory: str, narrow_only: bool) -> dict:
    spec = cfg.spec
    th = THEORIES[theory]
    diamond = hodge_diamond(*spec.nikulin)
    if th == "FJRW":
        full = fjrw_state_space(spec)
        if diamond_from_dims(full.graded_dims) != diamond:
            raise Inconsistent(f"FJRW dims {full.graded_dims} disagree with {diamond.as_dict()}")
        basis = fjrw_state_space(spec, narrow_only=True) if narrow_only else full
        graded = full.graded_dims
    else:
        basis = gw_ambient_basis(spec) if th == "GW" else mixed_state_space(spec, th)
        graded = {k: v for k, v in diamond.graded_dims.items() if v}
    entries = [{"label": e.label, "degree": _q(e.degree), "sector": e.sector, "flag": e.flag}
               for e in basis.entries]
    return {**_header("state-space", cfg), "theory": theory, "narrow_only": narrow_only,
            "diamond": diamond.as_dict(), "diamond_rows": diamond.rows,
            "graded_dims": {str(k): v for k, v in graded.items()},
            "total": sum(graded.values()),
            "basis_graded_dims": {str(_q(k)): v for k, v in basis.graded_dims.items()},
            "basis": entries}


def _term_json(t: ISeriesTerm, z_min: int) -> tuple[dict, int]:
    coeff, dropped = [], 0
    for (e, k), v in sorted(t.coefficient.c.items()):
        zp = t.z_exponent - e - k
        if zp < z_min:
            dropped += 1
            continue
        coeff.append({"sector": t.sector, "dE_pow": e, "dK_pow": k, "z_pow": zp,
                      "rational": fstr(Fraction(v))})
    idx = json.loads(json.dumps(t.index, default=lambda o: _q(o) if isinstance(o, Fraction) else str(o)))
    return {"index": idx, "z_exponent": t.z_exponent, "age": _q(t.age),
            "novikov": {k: _q(v) for k, v in t.novikov},
            "flags": {k: v for k, v in t.meta}, "coefficient": coeff}, dropped


def cmd_i_function(cfg: RunConfig, theory: str) -> dict:
    spec = cfg.spec
    th = THEORIES[theory]
    terms = assemble_terms(th, spec, cfg.novikov_degree)
    z_min = 1 - cfg.z_order
    out, dropped = [], 0
    for t in terms:
        j, d = _term_json(t, z_min)
        out.append(j)
        dropped += d
    meta = {"novikov_degree": cfg.novikov_degree, "z_order": cfg.z_order,
            "dropped_monomials": dropped,
            "degree_norm": "a+b+c+sum k" if th == "GW" else "total insertions plus lattice degree"}
    return {**_header("i-function", cfg), "theory": theory, "metadata": meta, "terms": out}


def _verify_homogeneity(cfg: RunConfig) -> tuple[bool, object, list]:
    terms = gw_terms(cfg.spec, cfg.novikov_degree)
    ok, bad = homogeneity_check(terms)
    details = [{"item": f"{len(terms)} GW terms", "passed": ok,
                "first_violation": None if bad is None else str(bad)}]
    return ok, mpmath.mpf(0) if ok else mpmath.mpf(1), details


def _verify_oracle(cfg: RunConfig) -> tuple[bool, object, list]:
    spec = cfg.spec
    details, ok = [], True
    for t in gw_terms(spec, cfg.novikov_degree):
        p = LatticePoint(*t.index)
        zexp, coeffs = direct_product_coefficient(p, spec)
        mine = {e: Fraction(v) for e, v in t.coefficient.c.items() if v}
        good = zexp == t.z_exponent and mine == coeffs
        ok &= good
        if not good:
            details.append({"item": str(t.index), "passed": False})
    details.insert(0, {"item": "all GW terms", "passed": ok})
    return ok, mpmath.mpf(0) if ok else mpmath.mpf(1), details


def _sides(spec: OrbifoldSpec) -> list[str]:
    out = []
    for side in ("E", "K", "both"):
        try:
            require(side, spec)
        except UnsupportedHypotheses:
            continue
        out.append(side)
    return out


def _verify_symplectic(cfg: RunConfig) -> tuple[bool, object, list]:
    spec = cfg.spec
    require("E", spec)
    tol = cfg.tol("symplectic")
    rng = random.Random(cfg.seed)
    details, worst, ok = [], mpmath.mpf(0), True
    with mpmath.workprec(cfg.precision_bits):
        for side in _sides(spec):
            U = assemble_U(side, spec, cfg.precision_bits)
            rep = check_symplectic(U, tol, cfg.precision_bits)
            worst = max(worst, rep["max_deviation"])
            ok &= rep["passed"]
            # negative control on a seeded entry
            b = rng.randrange(len(U.blocks))
            n = U.blocks[b].size()
            r, c = rng.randrange(n), rng.randrange(n)
            bad = check_symplectic(perturb(U, b, r, c, mpmath.mpf("1e-3")), tol, cfg.precision_bits)
            caught = bad["max_deviation"] >= mpmath.mpf("1e-4")
            ok &= caught
            details.append({"item": f"U_{side}", "passed": rep["passed"],
                            "max_deviation": _mp(rep["max_deviation"]),
                            "blocks": U.inventory(),
                            "normalization": {k: _mp(v) for k, v in U.metadata.items()
                                              if not isinstance(v, str)},
                            "negative_control": {"block": b, "entry": [r, c], "detected": caught,
                                                 "deviation": _mp(bad["max_deviation"])}})
    return ok, worst, details


def _verify_continuation(cfg: RunConfig, point: Fraction) -> tuple[bool, object, list]:
    spec = cfg.spec
    require("E", spec)
    tol = cfg.tol("continuation")
    details, ok, worst = [], True, mpmath.mpf(0)
    with mpmath.workprec(cfg.precision_bits):
        for side in _sides(spec):
            if side == "both":
                continue
            cs = ContourSpec(variable=f"s_{side}")
            rho = radius_of_convergence(side)
            # same position relative to the radius on both sides
            qt = point * rho / radius_of_convergence("E")
            rep = barnes_contour_check(cs, {"M0": 0}, qt, 80, spec, cfg.precision_bits, tol)
            dev = max(rep.deviations.values())
            worst = max(worst, dev)
            ok &= rep.passed
            details.append({"item": f"contour {cs.variable}", "passed": rep.passed, "point": _q(qt),
                            "radius": _q(rho), "integral": _mp(rep.integral),
                            "gw_sum": None if rep.gw_sum is None else _mp(rep.gw_sum),
                            "residue_sum": None if rep.residue_sum is None else _mp(rep.residue_sum),
                            "deviations": {k: _mp(v) for k, v in rep.deviations.items()},
                            "tails": {k: _mp(v) for k, v in rep.tails.items()}})
        itol = cfg.tol("identification")
        for side in _sides(spec):
            R = identify_continued_series(side, spec, prec=cfg.precision_bits, tol=itol)
            ok &= R.passed
            details.append({"item": f"identification {side}", "passed": R.passed,
                            "checked": R.checked, "max_deviation": _mp(R.max_deviation),
                            "mismatches": [str(m) for m in R.mismatches[:5]]})
    return ok, worst, details


def cmd_verify(cfg: RunConfig, check: str, point: Fraction | None = None) -> dict:
    if check == "homogeneity":
        ok, dev, det = _verify_homogeneity(cfg)
    elif check == "oracle":
        ok, dev, det = _verify_oracle(cfg)
    elif check == "symplectic":
        ok, dev, det = _verify_symplectic(cfg)
    elif check == "continuation":
        ok, dev, det = _verify_continuation(cfg, point if point is not None else Fraction(1, 1000))
    else:
        rep = isomorphism_report(cfg.spec)
        ok, dev = rep["passed"], mpmath.mpf(0) if rep["passed"] else mpmath.mpf(1)
        det = [{"item": k, "passed": ok, "graded_dims": {str(_q(a)): b for a, b in v.items()}}
               for k, v in rep.items() if isinstance(v, dict)]
    return {**_header("verify", cfg), "check": check, "passed": bool(ok),
            "max_deviation": _mp(dev), "details": det}


# ---------------------------------------------------------------------------
# output


def _rows(doc: dict) -> tuple[list, list]:
    cmd = doc["command"]
    if cmd == "state-space":
        return ["label", "degree", "sector", "flag"], \
            [[e["label"], e["degree"], e["sector"], e["flag"]] for e in doc["basis"]]
    if cmd == "i-function":
        rows = []
        for t in doc["terms"]:
            nov = " ".join(f"{k}^{v}" for k, v in t["novikov"].items())
            for c in t["coefficient"]:
                rows.append([json.dumps(t["index"]), nov, c["sector"], c["dE_pow"], c["dK_pow"],
                             c["z_pow"], c["rational"]])
        return ["index", "novikov", "sector", "dE_pow", "dK_pow", "z_pow", "rational"], rows
    return ["item", "passed", "max_deviation"], \
        [[d["item"], d["passed"], d.get("max_deviation", "")] for d in doc["details"]]


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    head, rows = _rows(doc)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
        return buf.getvalue()
    cells = [head] + [[str(x) for x in r] for r in rows]
    widths = [max(len(str(r[i])) for r in cells) for i in range(len(head))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    if doc["command"] == "verify":
        lines.insert(0, f"check {doc['check']}: {'passed' if doc['passed'] else 'FAILED'}")
    return "\n".join(lines) + "\n"


def output_schema() -> dict:
    return json.loads(resources.files("bvlgcy").joinpath("schema/output.schema.json").read_text())


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--k3", help="K3 weights w0,w1,w2,w3")
    common.add_argument("--curve", choices=("quartic", "cubic-sextic"))
    common.add_argument("--max-deg", type=int, dest="max_deg", help="Novikov truncation degree")
    common.add_argument("--z-order", type=int, dest="z_order")
    common.add_argument("--prec", type=int, help="precision in bits")
    common.add_argument("--tol", help="tolerance override for the selected check")
    common.add_argument("--format", choices=("json", "csv", "table"))
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="bvlgcy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("state-space", parents=[common])
    s.add_argument("--theory", choices=tuple(THEORIES), default="gw")
    s.add_argument("--narrow", action="store_true")
    i = sub.add_parser("i-function", parents=[common])
    i.add_argument("--theory", choices=tuple(THEORIES), default="gw")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--check", choices=CHECKS, required=True)
    v.add_argument("--point", help="q-tilde for the continuation check, e.g. 1e-3")
    return p


def run(argv=None) -> tuple[int, str]:
    a = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(a.config), a)
        if a.tol is not None:
            key = getattr(a, "check", None) or "symplectic"
            for k in ([key] if key != "continuation" else ["continuation", "identification"]):
                cfg.tolerances[k] = a.tol
        with mpmath.workprec(cfg.precision_bits):
            if a.cmd == "state-space":
                doc = cmd_state_space(cfg, a.theory, a.narrow)
            elif a.cmd == "i-function":
                doc = cmd_i_function(cfg, a.theory)
            else:
                point = None
                if a.point is not None:
                    try:
                        point = Fraction(a.point)
                    except ValueError:
                        raise BadInput(f"--point {a.point!r} is not a number") from None
                    if point <= 0:
                        raise BadInput("--point must be positive")
                doc = cmd_verify(cfg, a.check, point)
        code = EXIT_OK if doc.get("passed", True) else EXIT_INCONSISTENT
    except (BadInput, InvalidSpec, ValueError) as e:
        if isinstance(e, (UnsupportedCurve, UnsupportedHypotheses)):
            return EXIT_UNSUPPORTED, f"unsupported: {e}\n"
        return EXIT_BAD_INPUT, f"error: {e}\n"
    except (Inconsistent, NonConvergent) as e:
        return EXIT_INCONSISTENT, f"inconsistent: {e}\n"
    text = render(doc, cfg.format)
    if cfg.path:
        with open(cfg.path, "w") as fh:
            fh.write(text)
        return code, ""
    return code, text


def main(argv=None) -> int:
    code, text = run(argv)
    stream = sys.stdout if code in (EXIT_OK, EXIT_INCONSISTENT) and not text.startswith(
        ("error:", "unsupported:", "inconsistent:")) else sys.stderr
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
