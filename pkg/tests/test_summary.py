import math

import numpy as np
import pytest

from pos_sde import bench
from pos_sde.errors import ConfigError
from pos_sde.summary import emit_summary, geometric_mean, log_histogram, parse_csv, slope_fit


def test_slope_recovers_exact_power_law():
    x = np.logspace(2, 5, 7)
    fit = slope_fit(x, 3.7 * x**-0.4821)
    assert fit.slope == pytest.approx(-0.4821, abs=1e-6)
    assert fit.ci_low <= fit.slope <= fit.ci_high


def test_slope_ci_undefined_for_two_points():
    fit = slope_fit([1, 10], [1, 0.1])
    assert fit.slope == pytest.approx(-1.0)
    assert math.isnan(fit.ci_low) and math.isnan(fit.ci_high)


@pytest.mark.parametrize("x,y", [([1], [1]), ([2, 2], [1, 3]), ([1, 2], [0, 1]), ([1, 2, 3], [1, 2])])
def test_slope_rejects_bad_data(x, y):
    with pytest.raises(ConfigError):
        slope_fit(x, y)


def test_geometric_mean_skips_zeros():
    gm, zeros = geometric_mean([0.0, 1e-2, 1e-4, 0.0])
    assert gm == pytest.approx(1e-3)
    assert zeros == 2
    assert geometric_mean([0.0]) == (0.0, 1)


def test_log_histogram_excludes_zeros():
    edges, counts, zeros = log_histogram([0.0, 1e-15, 2e-15, 1e-13, 0.0], bins_per_decade=1)
    assert zeros == 2
    assert counts.sum() == 3
    np.testing.assert_allclose(edges, [1e-15, 1e-14, 1e-13, 1e-12])
    np.testing.assert_array_equal(counts, [2, 0, 1])
    e, c, z = log_histogram([0.0, 0.0])
    assert e.size == 0 and c.size == 0 and z == 2
    with pytest.raises(ConfigError):
        log_histogram([-1.0])


def test_empty_csv_is_an_error():
    with pytest.raises(ConfigError, match="line 1"):
        parse_csv("")
    header = ",".join(bench.STATIC_COLUMNS) + "\n"
    with pytest.raises(ConfigError, match="no records"):
        emit_summary(header)


def test_malformed_lines_report_line_numbers():
    table = bench.run(bench.make_config("static", None, {"n_samples": [50], "attempts": 1}))
    lines = table.to_csv().splitlines()
    short = "\n".join(lines[:3] + ["1,static,0"] + lines[3:])
    with pytest.raises(ConfigError, match="line 4"):
        parse_csv(short)
    fields = lines[2].split(",")
    fields[-1] = "abc"
    with pytest.raises(ConfigError, match="line 3"):
        parse_csv("\n".join(lines[:2] + [",".join(fields)]))


def test_single_attempt_percentiles_equal_value():
    table = bench.run(bench.make_config("static", None, {"n_samples": [50], "attempts": 1}))
    text = emit_summary(table.to_csv())
    m1 = [r for r in table.rows if r["observable"] == "m1"][0]
    line = [l for l in text.splitlines() if " m1 " in l and "r_unoptimized" in l][0]
    nums = line.split()[-3:]
    assert len(set(nums)) == 1
    assert float(nums[0]) == pytest.approx(m1["r_unoptimized"], rel=1e-3)


@pytest.mark.parametrize("scenario", ["static", "onestep-individual", "sde-ou", "plan"])
def test_summary_for_each_kind(scenario):
    values = {
        "static": {"n_samples": [100, 400], "attempts": 3},
        "onestep-individual": {"n_samples": [100, 400], "dt": [0.1], "attempts": 3},
        "sde-ou": {"n_samples": [100, 400], "n_steps": 10, "runs": 2},
        "plan": {"budget": [1000, 10**6]},
    }[scenario]
    text = emit_summary(bench.run(bench.make_config(scenario, None, values)).to_csv())
    assert text.startswith(scenario)
    if scenario != "plan":
        assert "slope" in text


def test_mixed_scenarios_rejected():
    a = bench.run(bench.make_config("plan", None, {"budget": [1000]})).to_csv().splitlines()
    b = a[1].replace(",plan,", ",static,")
    with pytest.raises(ConfigError):
        emit_summary("\n".join(a + [b]))
