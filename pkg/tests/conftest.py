import pytest

from crids.model import factor

# Transformed scores printed for the three example sites. Columns absent from
# the table (R1, A2, A8, Re2, Re4) are left out and default to 1.
PILOT_SCORES = {
    "AP497567": {
        "R3": 0.918749501, "R2": 1.0, "A1": 0.999999498, "A4": 0.91874904,
        "A3": 0.999979633, "A6": 0.999954315, "A7": 1.04013e-09, "A5": 0.05,
        "Re1": 0.711518429, "Re3": 0.876710452,
    },
    "AP1584897": {
        "R3": 0.7238, "R2": 0.309, "A1": 0.999, "A4": 0.7238,
        "A3": 0.9985, "A6": 1.0, "A7": 0.8037, "A5": 1.0,
        "Re1": 0.6093, "Re3": 0.8236,
    },
    "AP1204641": {
        "R3": 0.4086, "R2": 0.3204, "A1": 0.9998, "A4": 0.4085,
        "A3": 0.9999, "A6": 1.0, "A7": 0.2181, "A5": 0.8,
        "Re1": 0.6995, "Re3": 0.4624,
    },
}

# (resistivity, adaptability, recovery, index) as printed
PILOT_PRINTED = {
    "AP497567": (0.9187, 4.77779e-11, 0.6238, 0.9187),
    "AP1584897": (0.2234, 0.5808, 0.5018, 0.4499),
    "AP1204641": (0.130877173, 0.071257109, 0.3235, 0.1509),
}

# Original (raw) values for the same sites, keyed by the table's headers
PILOT_RAW = {
    "AP497567": {
        "VerticalSepDist": 20.1515, "BaseFloodElev": 0, "Dist.Wetland": 9435.767,
        "Dist.Wellhead": 867.3902, "Dist.Canal": 1094.696, "Dist.SDrainage": 0.4827153,
        "System_Age": 122.2016, "Dist.Sewer": 413.0418, "Dist.Overflow": 1848.942,
    },
    "AP1584897": {
        "VerticalSepDist": 7.60257, "BaseFloodElev": 10, "Dist.Wetland": 7622.325,
        "Dist.Wellhead": 369.1966, "Dist.Canal": 3400.174, "Dist.SDrainage": 120.9102,
        "System_Age": 1.370917, "Dist.Sewer": 794.9039, "Dist.Overflow": 1396.808,
    },
    "AP1204641": {
        "VerticalSepDist": 3.12614, "BaseFloodElev": 9, "Dist.Wetland": 1225.942,
        "Dist.Wellhead": 588.224, "Dist.Canal": 3456.406, "Dist.SDrainage": 61.76985,
        "System_Age": 6.483218, "Dist.Sewer": 448.6923, "Dist.Overflow": 452.2486,
    },
}


def as_factor_map(d):
    return {factor(k): v for k, v in d.items()}


@pytest.fixture
def pilot_scores():
    return {sid: as_factor_map(d) for sid, d in PILOT_SCORES.items()}


@pytest.fixture
def pilot_sites_csv(tmp_path):
    """Sites file using the table's own column headers."""
    headers = ["APNO", "x", "y"] + list(next(iter(PILOT_RAW.values())))
    lines = [",".join(headers)]
    for i, (sid, raw) in enumerate(PILOT_RAW.items()):
        lines.append(",".join([sid, str(1000.0 * i), "0"] + [repr(v) for v in raw.values()]))
    p = tmp_path / "pilot.csv"
    p.write_text("\n".join(lines) + "\n")
    return p


@pytest.fixture(scope="session")
def synthetic_study(tmp_path_factory):
    """1,000 sites and 10**4 layer features engineered to 8% / 32% shares."""
    from crids.synthetic import make_study

    return make_study(tmp_path_factory.mktemp("synthetic"), n_sites=1000, n_features=10_000, seed=0)
