"""Dataset loading, binning of point-process data, and synthetic regression data."""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..gaussian import cholesky_lower
from ..kernels import se_ard_cov

__all__ = [
    "KINDS",
    "ParseError",
    "DataValidationError",
    "DatasetBundle",
    "load_dataset",
    "bin_events_2d",
    "mining_dataset",
    "gen_synthetic",
    "write_synthetic",
]

KINDS = ("regression", "classification", "cox-1d", "cox-2d")

POS_LABELS = {"g": 1.0, "1": 1.0, "+1": 1.0, "1.0": 1.0}
NEG_LABELS = {"b": -1.0, "0": -1.0, "-1": -1.0, "0.0": -1.0, "-1.0": -1.0}


class ParseError(ValueError):
    def __init__(self, msg, path=None, lineno=None):
        where = ""
        if path is not None:
            where = "%s:%s: " % (path, lineno) if lineno is not None else "%s: " % path
        super().__init__(where + msg)
        self.lineno = lineno


class DataValidationError(ValueError):
    pass


@dataclass
class DatasetBundle:
    X: np.ndarray
    y: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataValidationError("unknown dataset kind %r" % (self.kind,))
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=float)
        if self.X.shape[0] != self.y.shape[0]:
            raise DataValidationError("%d inputs but %d targets" % (self.X.shape[0], self.y.shape[0]))
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise DataValidationError("non-finite values in dataset")
        if self.kind == "classification" and not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise DataValidationError("classification labels must be -1 or +1")
        if self.kind.startswith("cox"):
            if np.any(self.y < 0) or np.any(self.y != np.round(self.y)):
                raise DataValidationError("counts must be non-negative integers")

    @property
    def n(self):
        return self.y.shape[0]


def _lines(path):
    with open(path) as fh:
        lines = [(i, ln.strip()) for i, ln in enumerate(fh, 1)]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty file", path)
    return lines


def _floats(path, lineno, fields):
    try:
        return [float(v) for v in fields]
    except ValueError:
        raise ParseError("non-numeric field in %r" % (",".join(fields),), path, lineno) from None


def _label(path, lineno, tok):
    tok = tok.strip().lower()
    if tok in POS_LABELS:
        return POS_LABELS[tok]
    if tok in NEG_LABELS:
        return NEG_LABELS[tok]
    raise DataValidationError("%s:%d: unrecognized class label %r" % (path, lineno, tok))


def _load_table(path, kind, subset=None, subset_seed=0):
    rows, ys = [], []
    width = None
    for lineno, line in _lines(path):
        fields = [t.strip() for t in line.split(",")]
        if width is None:
            width = len(fields)
            if width < 2:
                raise ParseError("need at least one input column and a target", path, lineno)
        elif len(fields) != width:
            raise ParseError("expected %d fields, found %d" % (width, len(fields)), path, lineno)
        rows.append(_floats(path, lineno, fields[:-1]))
        if kind == "classification":
            ys.append(_label(path, lineno, fields[-1]))
        else:
            ys.append(_floats(path, lineno, fields[-1:])[0])
    X, y = np.array(rows), np.array(ys)
    meta = {"source": str(path), "rows": len(ys)}
    if subset is not None and subset < len(ys):
        idx = np.random.default_rng(subset_seed).permutation(len(ys))[:subset]
        X, y = X[idx], y[idx]
        meta.update(subset=int(subset), subset_seed=int(subset_seed))
    return DatasetBundle(X, y, kind, meta)


def _load_counts(path):
    counts = []
    for lineno, line in _lines(path):
        val = _floats(path, lineno, [line])[0]
        if val < 0 or val != round(val):
            raise DataValidationError("%s:%d: count %r is not a non-negative integer"
                                      % (path, lineno, line))
        counts.append(val)
    y = np.array(counts)
    X = np.arange(len(y), dtype=float)[:, None]
    return DatasetBundle(X, y, "cox-1d", {"source": str(path), "bins": len(y), "events": int(y.sum())})


def bin_events_2d(points, grid=25):
    """Counts of points in [0,1]^2 on a grid x grid lattice, with bin centres as inputs."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DataValidationError("expected N x 2 event coordinates")
    if np.any(points < 0) or np.any(points > 1):
        raise DataValidationError("event coordinates must lie in the unit square")
    edges = np.linspace(0.0, 1.0, grid + 1)
    H, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=[edges, edges])
    centres = (np.arange(grid) + 0.5) / grid
    cx, cy = np.meshgrid(centres, centres, indexing="ij")
    X = np.column_stack([cx.ravel(), cy.ravel()])
    return X, H.ravel()


def _load_events_2d(path, grid=25):
    pts = []
    for lineno, line in _lines(path):
        fields = [t for t in line.replace(",", " ").split() if t]
        if len(fields) != 2:
            raise ParseError("expected two coordinates", path, lineno)
        pts.append(_floats(path, lineno, fields))
    X, y = bin_events_2d(np.array(pts), grid)
    return DatasetBundle(X, y, "cox-2d", {"source": str(path), "grid": grid, "events": len(pts)})


def load_dataset(path, kind, **options):
    """Read a dataset file.

    regression / classification: comma-separated rows, target last
    (options ``subset``, ``subset_seed`` select a seeded random subset);
    cox-1d: one count per line; cox-2d: one ``x,y`` event per line in the
    unit square, binned on a ``grid`` x ``grid`` lattice (default 25).
    """
    if kind not in KINDS:
        raise DataValidationError("unknown dataset kind %r" % (kind,))
    if kind in ("regression", "classification"):
        return _load_table(path, kind, options.get("subset"), options.get("subset_seed", 0))
    if kind == "cox-1d":
        return _load_counts(path)
    return _load_events_2d(path, int(options.get("grid", 25)))


def mining_dataset():
    """Coal-mining disaster counts: 191 events in 112 bins of 365 days."""
    ref = resources.files("lgmslice") / "data" / "mining.txt"
    with resources.as_file(ref) as path:
        return load_dataset(path, "cox-1d")


def gen_synthetic(seed, n=200, d=10, noise_var=0.09, noise_free=False, lengthscales=None,
                  max_lengthscale=np.sqrt(10.0)):
    """GP regression data: inputs uniform in [0,1]^d, unit signal variance.

    Lengthscales default to draws from U(0, max_lengthscale). Returns the bundle
    and a ground-truth record (lengthscales, noise variance, latent f).
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, d))
    if lengthscales is None:
        ell = rng.uniform(0.0, max_lengthscale, size=d)
    else:
        ell = np.broadcast_to(np.asarray(lengthscales, dtype=float), (d,)).copy()
    L = cholesky_lower(se_ard_cov(X, 1.0, ell))
    f = L @ rng.standard_normal(n)
    noise = rng.standard_normal(n)
    y = f.copy() if noise_free else f + np.sqrt(noise_var) * noise
    truth = {
        "seed": int(seed), "n": int(n), "d": int(d), "signal_var": 1.0,
        "lengthscales": [float(v) for v in ell],
        "noise_var": 0.0 if noise_free else float(noise_var),
        "f": [float(v) for v in f],
    }
    return DatasetBundle(X, y, "regression", {"synthetic": True}), truth


def write_synthetic(path, bundle, truth):
    """Write ``path`` (CSV, target last) and ``path + '.truth.json'``."""
    with open(path, "w") as fh:
        for xi, yi in zip(bundle.X, bundle.y):
            fh.write(",".join(repr(float(v)) for v in xi) + "," + repr(float(yi)) + "\n")
    with open(str(path) + ".truth.json", "w") as fh:
        json.dump(truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
