"""JSON Schemas (draft 2020-12) for every JSON artifact the CLI writes."""

from __future__ import annotations

NUM = {"type": ["number", "null"]}
INT = {"type": "integer"}
NUM_LIST = {"type": "array", "items": NUM}
NUM_LIST_OR_NULL = {"type": ["array", "null"], "items": NUM}


def _obj(props: dict, required=None, extra: bool = True) -> dict:
    return {"type": "object", "properties": props,
            "required": sorted(props) if required is None else required,
            "additionalProperties": extra}


DECOMPOSITION = _obj({
    "normF2": {"type": "number", "minimum": 0},
    "normGamma2": {"type": "number", "minimum": 0},
    "normSperp2": {"type": "number", "minimum": 0},
    "limit_error2": NUM,
    "max_cross_inner_product": NUM,
    "orthogonal": {"type": "boolean"},
})

SUMMARY = _obj({
    "case": {"type": "string"},
    "seed": INT,
    "config": _obj({
        "beta": {"type": "string"},
        "subspace": {"type": "string"},
        "process": {"type": "string"},
        "process_params": {"type": "object", "additionalProperties": {"type": "string"}},
        "n": INT,
        "replicates": INT,
        "sigma": {"type": "number"},
        "k_s": INT,
        "grid_points": INT,
        "center": {"type": "boolean"},
    }),
    "metrics": _obj({
        "n": INT,
        "replicates": INT,
        "dim": INT,
        "min_eigenvalue": {"type": "number"},
        "eigenvalues": NUM_LIST,
        "contained_in_S": {"type": "boolean"},
        "gamma": NUM_LIST_OR_NULL,
        "decomposition": DECOMPOSITION,
        "l2_mean_vs_beta": NUM,
        "l2_mean_vs_projection": NUM,
        "cov_order_margin": NUM,
        "cov_equal_gap": NUM,
    }, required=["n", "replicates", "dim", "min_eigenvalue", "eigenvalues", "decomposition"]),
    "replicate_count": INT,
    "beta_D": {"type": "array", "items": NUM_LIST},
    "thresholds": {"type": "object", "additionalProperties": NUM},
})

BIAS = _obj({
    "case": {"type": "string"},
    "seed": INT,
    "gamma": NUM_LIST_OR_NULL,
    "delta": NUM_LIST_OR_NULL,
    "decomposition": DECOMPOSITION,
    "slln": {"type": "array", "items": _obj({"n": INT, "gamma_n": NUM_LIST, "error": NUM})},
    "monte_carlo": _obj({
        "bias_E": NUM_LIST,
        "bias_E_se": NUM_LIST,
        "bias_vs_gamma_z": NUM_LIST_OR_NULL,
        "bias_E_norm": NUM,
        "bias_E_se_l2": NUM,
    }),
    "min_eigenvalue": {"type": "number"},
})

COUNTEREXAMPLE = _obj({
    "seed": INT,
    "rows": {"type": "array", "items": _obj({
        "d": INT,
        "delta_closed": {"type": "number", "minimum": 0},
        "delta_moment": {"type": "number"},
        "route": {"enum": ["double", "extended"]},
    })},
    "odd_increasing": {"type": "boolean"},
    "even_zero": {"type": "boolean"},
    "max_abs_diff": {"type": "number"},
})

TRUNCATION = _obj({
    "case": {"type": "string"},
    "seed": INT,
    "rows": {"type": "array", "items": _obj({
        "d": INT, "k": INT, "gamma_norm": NUM, "bound": NUM, "beta_F_norm2": NUM, "n": INT, "mc_error": NUM,
    })},
    "k_d": {"type": "array", "items": INT},
    "products": NUM_LIST,
    "lambda_max": {"type": "number"},
    "lambda_kk": NUM_LIST,
    "flags": {"type": "object"},
})

INTERLACING = _obj({
    "seed": INT,
    "trials": INT,
    "max_size": INT,
    "violations": {"type": "integer", "minimum": 0},
    "worst_margin": NUM,
    "rows": {"type": "array", "items": _obj({
        "trial": INT, "size": INT, "checks": INT, "violations": INT, "worst_margin": NUM,
    })},
})

DIAGNOSTICS = _obj({
    "case": {"type": "string"},
    "seed": INT,
    "subspace": {"type": "string"},
    "identifiable": {"const": False},
    "min_eigenvalue": NUM,
    "message": {"type": "string"},
})

SCHEMAS = {
    "summary": SUMMARY,
    "bias": BIAS,
    "counterexample": COUNTEREXAMPLE,
    "truncation": TRUNCATION,
    "interlacing": INTERLACING,
    "diagnostics": DIAGNOSTICS,
}

for _name, _schema in SCHEMAS.items():
    _schema["$schema"] = "https://json-schema.org/draft/2020-12/schema"
    _schema["title"] = f"funcreg {_name} output"


def schema_for(filename: str) -> dict:
    """Pick the schema matching an artifact file name."""
    stem = filename.rsplit("/", 1)[-1].removesuffix(".json")
    for key in ("summary", "bias", "diagnostics"):
        if stem.endswith("_" + key):
            return SCHEMAS[key]
    for key in ("counterexample", "truncation", "interlacing"):
        if stem.startswith(key + "_"):
            return SCHEMAS[key]
    raise KeyError(f"no schema for {filename}")
