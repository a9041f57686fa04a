"""
JSON schemas for the YAML configuration files.

The files are YAML because it allows comments; after parsing they are
plain mappings and are checked against the schemas below with
``jsonschema``.
"""

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

LENS_SCHEMA = {
    "type": "object",
    "required": ["geometry", "lenses"],
    "additionalProperties": False,
    "properties": {
        "field_of_view_deg": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "angular_resolution_deg": _POS,
        "geometry": {
            "type": "object",
            "required": ["element_width_m", "element_gap_m", "positive_side"],
            "additionalProperties": False,
            "properties": {
                "element_width_m": _POS,
                "element_gap_m": _POS,
                "positive_side": {"enum": ["left", "right"]},
            },
        },
        "lenses": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["axis_angle_deg", "aperture_width_m", "focal_length_m"],
                "additionalProperties": False,
                "properties": {
                    "axis_angle_deg": {"type": "number", "exclusiveMinimum": -90,
                                       "exclusiveMaximum": 90},
                    "aperture_width_m": _POS,
                    "focal_length_m": _POS,
                },
            },
        },
    },
}

SENSOR_SCHEMA = {
    "type": "object",
    "required": ["a_gain", "b_coef", "c_coef"],
    "additionalProperties": False,
    "properties": {
        "a_gain": _NUM,
        "b_coef": _POS,
        "c_coef": _POS,
        "sample_rate_hz": {"type": "number", "minimum": 20},
    },
}

POSES_SCHEMA = {
    "type": "object",
    "required": ["sensors"],
    "additionalProperties": False,
    "properties": {
        "area_m": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
        "sensors": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["sensor_id", "a_m", "b_m", "orientation_deg", "theta_c_deg"],
                "additionalProperties": False,
                "properties": {
                    "sensor_id": {"type": "string", "minLength": 1},
                    "a_m": _NUM,
                    "b_m": _NUM,
                    "orientation_deg": _NUM,
                    "theta_c_deg": _POS,
                },
            },
        },
    },
}

TRACKER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_particles": {"type": "integer", "minimum": 100},
        "period_s": _POS,
        "sigma_pos_m": {"type": "number", "minimum": 0},
        "sigma_vel_mps": {"type": "number", "minimum": 0},
        "sigma_obs": _POS,
        "sigma_angle_deg": _POS,
        "residual": {"enum": ["cos", "angle"]},
        "init_speed_std_mps": _POS,
        "jump_prob": {"type": "number", "minimum": 0, "maximum": 1},
        "jump_std_mps": {"type": "number", "minimum": 0},
        "reseed_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "confine": {"type": "boolean"},
        "resample_ess_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "area_bounds_m": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
    },
}

PIPELINE_SCHEMA = {
    "type": "object",
    "required": ["lens", "sensor", "poses"],
    "additionalProperties": False,
    "properties": {
        "lens": {"type": "string"},
        "sensor": {"type": "string"},
        "poses": {"type": "string"},
        "tracker": {"type": ["string", "object"]},
        "period_s": _POS,
        "reg_lambda": _POS,
        "prominence": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "factor": _POS,
                "window_s": _POS,
                "fixed": _POS,
            },
        },
        "smooth_fraction": {"type": ["number", "null"], "exclusiveMinimum": 0,
                            "exclusiveMaximum": 0.5},
        "noise_std": {"type": ["number", "null"], "minimum": 0},
        "body_radius_m": _POS,
        "speed_mps": _POS,
        "burn_in_s": {"type": "number", "minimum": 0},
        "seed": {"type": "integer"},
    },
}
