"""Flat key = value experiment configuration.

Config files are plain text: one `key = value` pair per line, `#` comments,
blank lines ignored.  Values stay strings until a consumer parses them;
object-valued keys (hypergraph, hypergraphon, kernels) use small spec
strings such as

    hypergraph   = homogeneous theta=0.1 N=100 max_rank=3
    hypergraphon = homogeneous theta=0.1 orders=1,2
    kernels      = order=2 type=linear_mean; order=1 type=linear_mean

The resolved configuration (defaults filled in, keys sorted) is hashed with
SHA-256 and stamped into every output file so reruns are attributable.
"""

import hashlib

from .errors import ParameterError, ParseError
from . import hypergraph as hg
from . import hypergraphon as hgon
from . import kernels as kmod


def parse_config_text(text):
    """Parse `key = value` lines into a dict (later keys win)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", lineno)
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError("empty key", lineno)
        out[key] = value.strip()
    return out


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())


def config_hash(resolved):
    """SHA-256 over the canonical serialization of a resolved config dict."""
    payload = "\n".join(f"{k}={resolved[k]}" for k in sorted(resolved))
    return hashlib.sha256(payload.encode()).hexdigest()


def parse_spec(spec):
    """Split 'kind key=value key=value' into (kind, {key: value})."""
    toks = str(spec).split()
    if not toks:
        raise ParameterError("empty object spec")
    kind = toks[0]
    params = {}
    for tok in toks[1:]:
        if "=" not in tok:
            raise ParameterError(f"malformed spec token {tok!r} (expected key=value)")
        key, value = tok.split("=", 1)
        params[key] = value
    return kind, params


def _parse_floats(value):
    return tuple(float(v) for v in str(value).split(",") if v != "")


def _parse_ints(value):
    return tuple(int(v) for v in str(value).split(",") if v != "")


_PROFILES = {"quadratic": hg.quadratic_profile}


def build_hypergraph(spec):
    """Construct a finite hypergraph from its spec string."""
    kind, params = parse_spec(spec)
    if kind == "homogeneous":
        n = int(params["N"])
        theta = float(params.get("theta", 0.1))
        max_rank = int(params.get("max_rank", 3))
        orders = _parse_ints(params["orders"]) if "orders" in params else None
        return hg.build_homogeneous(n, theta, max_rank, orders=orders)
    if kind == "balanced":
        n = int(params["N"])
        max_rank = int(params.get("max_rank", 3))
        orders = _parse_ints(params["orders"]) if "orders" in params else None
        profile = params.get("profile", "quadratic")
        if profile not in _PROFILES:
            raise ParameterError(f"unknown profile {profile!r}")
        return hg.build_balanced(n, f=_PROFILES[profile], max_rank=max_rank, orders=orders)
    if kind == "file":
        return hg.load_hypergraph(params["path"])
    raise ParameterError(f"unknown hypergraph kind {kind!r}")


def build_hypergraphon(spec):
    """Construct a hypergraphon (analytic family or step-function file)."""
    kind, params = parse_spec(spec)
    orders = _parse_ints(params.get("orders", "1,2"))
    if kind == "homogeneous":
        return hgon.homogeneous_hypergraphon(float(params.get("theta", 0.1)), orders=orders)
    if kind == "balanced":
        profile = params.get("profile", "quadratic")
        if profile not in _PROFILES:
            raise ParameterError(f"unknown profile {profile!r}")
        return hgon.balanced_hypergraphon(f=_PROFILES[profile], orders=orders)
    if kind == "constant":
        return hgon.constant_hypergraphon(float(params.get("value", 1.0)), orders=orders)
    if kind == "file":
        return hgon.load_step_hypergraphon(params["path"])
    raise ParameterError(f"unknown hypergraphon kind {kind!r}")


def build_kernels(spec, box=(0.0, 1.0)):
    """Construct a kernel family from ';'-separated kernel specs."""
    chunks = [c.strip() for c in str(spec).split(";") if c.strip()]
    if not chunks:
        raise ParameterError("empty kernel spec")
    if len(chunks) == 1 and chunks[0] == "skardal":
        return kmod.skardal_kernels()
    out = []
    for chunk in chunks:
        params = {}
        for tok in chunk.split():
            if "=" not in tok:
                raise ParameterError(f"malformed kernel token {tok!r}")
            key, value = tok.split("=", 1)
            params[key] = value
        ktype = params.get("type", "linear_mean")
        order = int(params.get("order", 1))
        kbox = _parse_floats(params["box"]) if "box" in params else box
        if ktype == "linear_mean":
            out.append(kmod.linear_mean_kernel(order, box=kbox))
        elif ktype == "kuramoto":
            out.append(kmod.kuramoto_kernel(order))
        elif ktype == "opinion":
            out.append(kmod.opinion_diam_kernel(order, float(params.get("lam", 0.0)),
                                                box=kbox))
        else:
            raise ParameterError(f"unknown kernel type {ktype!r}")
    return kmod.KernelFamily(out)


# defaults shared by the command-line driver and the studies
DEFAULTS = {
    "nx": "64",
    "nxi": "64",
    "x_min": "-0.1",
    "x_max": "1.1",
    "cfl": "0.9",
    "dt": "0.01",
    "dt_max": "0.1",
    "method": "rk4",
    "p": "1",
    "replicas": "8",
    "seed": "0",
    "compare_fibers": "32",
    "alpha": "2^-l",
}


def resolve(config, defaults=None):
    """Fill in defaults; returns a new dict (inputs untouched)."""
    merged = dict(DEFAULTS if defaults is None else defaults)
    merged.update(config)
    return merged
