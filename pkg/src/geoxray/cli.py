"""Command-line front end: single inversion runs and the experiment suites.

A run forms phantom data with the requested forward transform, inverts it by
the Neumann iteration, and writes an output tree:

    errors.csv                  iter, rel_l2, update_norm, trapped_fraction
    recon_real.csv / _imag.csv  final reconstruction grid
    sino_*.csv                  (with --emit sino) the data sinogram
    recon_iterNN_*.csv          (with --emit grids) per-iteration grids
    *.pgm + *.pgm.txt           (with --emit images) 8-bit quicklooks with
                                the linear scaling recorded in the sidecar

Configuration comes from key=value files ('#' comments; unknown keys are
rejected) overridden by command-line flags.  Runs are deterministic: the
same configuration produces byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grids import ScalarGrid
from .metrics import (LENS_CENTER_DEFAULT, LENS_SIGMA_DEFAULT, MetricModel,
                      parse_metric)
from .phantoms import GaussianBump, PhantomSpec, default_bumps, make_phantom
from .reconstruction import (ReconstructionConfig, TransportTable,
                             neumann_invert, regime_tag)
from .transforms import Sinogram, forward_Ik, forward_Ikperp, write_sinogram

SUITES = ("exp1", "exp2", "exp3", "exp4")
EMIT_CHOICES = ("sino", "grids", "images")

_SCALAR_KEYS = {
    "metric": str, "k": int, "mode": str, "n": int, "dt": float,
    "iters": int, "out": str, "emit": str, "suite": str,
    "n_theta": int, "eps_mask": float,
    "lens.sigma": float, "lens.cx": float, "lens.cy": float,
}
_BUMP_FIELDS = ("cx", "cy", "amp", "width")


@dataclass
class ExperimentConfig:
    """Everything one inversion run depends on."""

    metric: str = "euclidean"
    k: int = 3
    mode: str = "ik"
    n: int = 128
    dt: float | None = None
    iters: int = 10
    out: str = "out"
    emit: tuple[str, ...] = ()
    n_theta: int | None = None
    eps_mask: float | None = None
    lens_sigma: float = LENS_SIGMA_DEFAULT
    lens_cx: float = LENS_CENTER_DEFAULT[0]
    lens_cy: float = LENS_CENTER_DEFAULT[1]
    bumps: tuple[GaussianBump, ...] = field(default_factory=default_bumps)

    def metric_model(self) -> MetricModel:
        return parse_metric(self.metric, lens_sigma=self.lens_sigma,
                            lens_cx=self.lens_cx, lens_cy=self.lens_cy)

    def recon_config(self) -> ReconstructionConfig:
        return ReconstructionConfig(n=self.n, dt=self.dt, n_theta=self.n_theta,
                                    eps_mask=self.eps_mask, iters=self.iters)


def parse_config_file(path: str | Path) -> dict:
    """Read key=value lines; '#' starts a comment, unknown keys are errors."""
    raw: dict[str, str] = {}
    bump_keys: dict[int, dict[str, float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                  f"got {text!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            value = value.strip()
            parts = key.split(".")
            if len(parts) == 3 and parts[0] == "bump":
                try:
                    idx = int(parts[1])
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad bump index "
                                      f"in {key!r}") from None
                if parts[2] not in _BUMP_FIELDS:
                    raise ConfigError(f"{path}:{lineno}: unknown bump field "
                                      f"{parts[2]!r}")
                try:
                    bump_keys.setdefault(idx, {})[parts[2]] = float(value)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad number "
                                      f"{value!r}") from None
                continue
            if key not in _SCALAR_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                raw[key] = _SCALAR_KEYS[key](value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value {value!r} "
                                  f"for {key!r}") from None
    if bump_keys:
        bumps = []
        for idx in sorted(bump_keys):
            spec = bump_keys[idx]
            missing = [f for f in _BUMP_FIELDS if f not in spec]
            if missing:
                raise ConfigError(f"{path}: bump.{idx} missing "
                                  f"{', '.join(missing)}")
            bumps.append(GaussianBump(**spec))
        raw["bumps"] = tuple(bumps)
    return raw


def _config_from_sources(file_values: dict, cli_values: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    merged = dict(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    rename = {"lens.sigma": "lens_sigma", "lens.cx": "lens_cx",
              "lens.cy": "lens_cy"}
    for key, value in merged.items():
        if key == "emit":
            items = tuple(s for s in str(value).split(",") if s)
            for item in items:
                if item not in EMIT_CHOICES:
                    raise ConfigError(f"unknown emit target {item!r}")
            cfg = replace(cfg, emit=items)
        elif key == "suite":
            continue    # handled by the entry point
        else:
            cfg = replace(cfg, **{rename.get(key, key): value})
    if cfg.mode not in ("ik", "ikperp"):
        raise ConfigError(f"mode must be ik or ikperp, got {cfg.mode!r}")
    return cfg


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _write_grid_csvs(g: ScalarGrid, stem: Path) -> None:
    for part, arr in (("real", g.values.real), ("imag", g.values.imag)):
        with open(stem.with_name(f"{stem.name}_{part}.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write(f"# n={g.n} eps_mask={g.eps_mask!r}\n")
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_pgm(path: str | Path, values: np.ndarray) -> None:
    """8-bit binary graymap with linear min-max scaling; the scale goes to
    a '<name>.txt' sidecar so the image remains quantitative."""
    path = Path(path)
    arr = np.asarray(values, dtype=float)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi > lo:
        scaled = np.round((arr - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        scaled = np.zeros(arr.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode())
        fh.write(scaled.tobytes())
    with open(path.with_suffix(path.suffix + ".txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"min={lo!r}\nmax={hi!r}\n")


def _write_errors_csv(path: Path, history) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,rel_l2,update_norm,trapped_fraction\n")
        for i in range(history.rel_l2.size):
            fh.write(f"{i + 1},{float(history.rel_l2[i])!r},"
                     f"{float(history.update_norm[i])!r},"
                     f"{float(history.trapped_fraction)!r}\n")


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig,
                   table: TransportTable | None = None) -> dict:
    """Forward-model the phantom, invert, write the output tree.

    Returns a summary dict with the final error, regime tag and history.
    """
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    m = cfg.metric_model()
    rcfg = cfg.recon_config().resolved()

    truth = make_phantom(PhantomSpec(bumps=cfg.bumps, n=cfg.n,
                                     eps_mask=rcfg.eps_mask))
    forward = forward_Ik if cfg.mode == "ik" else forward_Ikperp
    data = forward(m, truth, cfg.k, rcfg.dt, rcfg.max_steps)

    iterates: list[ScalarGrid] = []
    callback = ((lambda p, s: iterates.append(s))
                if "grids" in cfg.emit else None)
    recon, history = neumann_invert(m, data, cfg.mode, rcfg, truth=truth,
                                    table=table, callback=callback)

    _write_errors_csv(out_dir / "errors.csv", history)
    _write_grid_csvs(recon, out_dir / "recon")
    if "sino" in cfg.emit:
        write_sinogram(data, out_dir / "sino")
    if "grids" in cfg.emit:
        for p, s in enumerate(iterates, start=1):
            _write_grid_csvs(s, out_dir / f"recon_iter{p:02d}")
    if "images" in cfg.emit:
        write_pgm(out_dir / "recon.pgm", recon.values.real)
        write_pgm(out_dir / "phantom.pgm", truth.values.real)

    final = float(history.rel_l2[-1])
    print(f"rel_l2={final!r}")
    return {"final_rel_l2": final, "tag": regime_tag(history.rel_l2),
            "history": history, "out_dir": out_dir, "recon": recon,
            "truth": truth, "data": data}


def suite_cells(name: str, ks=None, params=None):
    """(metric, k, mode) cells of one experiment suite, in table order."""
    if name in ("exp1", "exp2"):
        family = "cpc" if name == "exp1" else "cnc"
        ks = (3, 6, 10) if ks is None else tuple(ks)
        # table order: curvature magnitude increasing across the row
        Rs = (2.0, 1.6, 1.2) if params is None else tuple(params)
        return [(f"{family}:{R:g}", k, "ik") for k in ks for R in Rs]
    if name in ("exp3", "exp4"):
        mode = "ik" if name == "exp3" else "ikperp"
        ells = (0.3, 0.6, 0.9, 1.2) if params is None else tuple(params)
        ks = (3,) if ks is None else tuple(ks)
        return [(f"lens:{ell:g}", k, mode) for k in ks for ell in ells]
    raise ConfigError(f"unknown suite {name!r} (pick from {SUITES})")


def run_suite(name: str, out: str | Path = "out", n: int = 128,
              iters: int = 10, dt: float | None = None,
              ks=None, params=None, emit: tuple[str, ...] = ()) -> list[dict]:
    """Run every cell of a suite and write summary.csv mirroring the tables."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for metric, k, mode in suite_cells(name, ks, params):
        cell = f"{metric.replace(':', '_')}_k{k}"
        cfg = ExperimentConfig(metric=metric, k=k, mode=mode, n=n, dt=dt,
                               iters=iters, out=str(out / cell), emit=emit)
        res = run_experiment(cfg)
        res.update({"metric": metric, "k": k, "mode": mode, "cell": cell})
        results.append(res)
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("experiment,cell,metric,k,mode,final_rel_l2,tag\n")
        for r in results:
            fh.write(f"{name},{r['cell']},{r['metric']},{r['k']},{r['mode']},"
                     f"{r['final_rel_l2']!r},{r['tag']}\n")
    return results


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="geoxray",
        description="Geodesic X-ray transform experiments on the unit disc")
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--metric", help="euclidean | cpc:R | cnc:R | lens:ell")
    ap.add_argument("--k", type=int, help="fiber mode of the integrand")
    ap.add_argument("--mode", choices=("ik", "ikperp"),
                    help="invert I_k or I_{k,perp} data")
    ap.add_argument("--n", type=int, help="grid size (n x n cells)")
    ap.add_argument("--dt", type=float, help="integration step (default 1/n)")
    ap.add_argument("--iters", type=int, help="Neumann iterations")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--suite", choices=SUITES,
                    help="run a whole experiment suite instead of one cell")
    ap.add_argument("--emit", help="extra outputs: comma list of "
                                   f"{','.join(EMIT_CHOICES)}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        cli_values = {"metric": args.metric, "k": args.k, "mode": args.mode,
                      "n": args.n, "dt": args.dt, "iters": args.iters,
                      "out": args.out, "emit": args.emit}
        cfg = _config_from_sources(file_values, cli_values)
        suite = args.suite or file_values.get("suite")
        if suite:
            run_suite(suite, out=cfg.out, n=cfg.n, iters=cfg.iters,
                      dt=cfg.dt, emit=cfg.emit)
        else:
            run_experiment(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
