"""End-to-end acceptance checks.

Run with ``pytest tests/test_acceptance.py -v`` to get one pass/fail
line per criterion. Each test also prints the achieved numbers (visible
with ``-s`` or in failure reports). Expected values were computed with
standalone oracle scripts (independent quadrature and eigensolve code)
and frozen here; none were copied from the implementation under test.
"""

import dataclasses
import math

import numpy as np
import pytest

from modematch import cli
from modematch.distill import purified_fidelity
from modematch.filters import (
    ideal_matched_filter,
    kappa_gaussian_shutter,
    open_filter,
    optimize_filter,
    practical_filter,
    shutter_trace,
    super_gaussian,
)
from modematch.numerics import integrate, make_band_grid
from modematch.sfwm import (
    BUILTIN_ANCHOR_VISIBILITIES,
    BUILTIN_ANCHORS_NM,
    ExperimentParams,
    calibrate_raman,
    default_raman_model,
    sfwm_modes,
    unfiltered_pair_probability,
    xi,
)
from modematch.units import detuning_to_angular, thermal_occupation
from modematch.visibility import (
    coincidence_term,
    evaluate_operating_point,
    key_fraction,
    pair_term,
    qber_from_visibility,
    raman_term,
    saturated_visibility_filtered,
    saturated_visibility_open,
    unfiltered_budget,
    visibility_open,
)


def note(criterion, text):
    print("criterion %d: %s" % (criterion, text))


def random_parameter_sets(count=5, seed=20260822):
    """Randomized sources inside the perturbative regime.

    Band centers stay at least 8 sigma past the band edge so the Raman
    emission integral is not clipped by the carrier-exclusion margin;
    the closed forms assume an unclipped emission integral.
    """
    rng = np.random.default_rng(seed)
    base = ExperimentParams()
    sets = []
    for _ in range(count):
        b = rng.uniform(6.0, 14.0)
        b0 = rng.uniform(b / 2.0 + 8.0, 30.0)
        q = rng.uniform(0.002, 0.03)
        t_k = rng.uniform(250.0, 350.0)
        r = rng.uniform(0.005, 0.08)
        params = dataclasses.replace(
            base,
            temperature_k=t_k,
            band_center=b0 * base.sigma,
            band_width=b * base.sigma,
        ).with_q(q)
        sets.append((params, r))
    return sets


def open_budget_errors(params, r, n_points):
    """Relative quadrature-vs-closed-form errors for S, both R, and C."""
    budget = unfiltered_budget(params, r)
    dec_grid = make_band_grid(params.b_sigma, n_points)
    fm = open_filter(dec_grid)
    s = pair_term(fm, params)
    r_a = raman_term(fm, params, "anti", r, freeze_thermal=True)
    r_s = raman_term(fm, params, "stokes", r, freeze_thermal=True)
    c = coincidence_term(fm, fm, params, r, leading_only=True)
    return (
        abs(s - budget.s) / budget.s,
        abs(r_a - budget.r_anti) / budget.r_anti,
        abs(r_s - budget.r_stokes) / budget.r_stokes,
        abs(c - budget.coincidence) / budget.coincidence,
    )


def test_criterion_1_open_filter_quadrature_matches_closed_forms():
    cases = [(ExperimentParams.at_pair_rate(0.01), None)]
    cases[0] = (
        cases[0][0],
        default_raman_model(cases[0][0]).ratio_at(cases[0][0].band_center),
    )
    cases.extend(random_parameter_sets())
    worst = {201: 0.0, 401: 0.0}
    for params, r in cases:
        for n, tol in ((201, 1e-3), (401, 1e-5)):
            errs = open_budget_errors(params, r, n)
            worst[n] = max(worst[n], *errs)
            assert max(errs) < tol, (
                "open-filter quadrature off by %.3e at n=%d (q=%.4f)"
                % (max(errs), n, params.q)
            )
    note(
        1,
        "pair/Raman/coincidence quadrature vs closed forms: worst rel err "
        "%.2e at n=201 (tol 1e-3), %.2e at n=401 (tol 1e-5), 6 parameter sets"
        % (worst[201], worst[401]),
    )


def test_criterion_2_matched_filter_coincidence_identity():
    params = ExperimentParams.at_pair_rate(0.01)
    raman = default_raman_model(params)
    dec = sfwm_modes(params, raman)
    matched = ideal_matched_filter(dec)
    got = coincidence_term(matched, matched, params, raman)
    want = 4.0 * math.pi**3 * dec.eigenvalues[0] ** 2 * params.q**2
    rel = abs(got - want) / want
    assert rel < 1e-6, "matched coincidence identity off by %.3e" % rel
    note(
        2,
        "single-mode coincidence = 4 pi^3 zeta0^2 q^2 to %.2e relative "
        "(tol 1e-6), zeta0 = %.6f" % (rel, dec.eigenvalues[0]),
    )


def test_criterion_3_operating_point_cross_check():
    # the gain ratio is fitted only to the zero-power visibility at
    # 10 nm detuning; the finite-power point tested here never enters
    # the calibration
    params = ExperimentParams.at_pair_rate(0.01)
    r = calibrate_raman(0.82, params.band_center, params)
    v = visibility_open(params, r)
    assert v == pytest.approx(0.72, abs=0.02), "open visibility %.4f" % v
    note(
        3,
        "calibrated gain ratio %.6f reproduces open V(P_pair=0.01) = %.4f "
        "(target 0.72 +- 0.02)" % (r, v),
    )


def test_criterion_4_matched_filter_improvements():
    params = ExperimentParams.at_pair_rate(0.01)
    raman = default_raman_model(params)
    dec = sfwm_modes(params, raman)
    matched = ideal_matched_filter(dec)
    rep = evaluate_operating_point(params, raman, matched, matched)
    assert rep.visibility == pytest.approx(0.88, abs=0.03), (
        "matched V %.4f" % rep.visibility
    )
    v_sat = saturated_visibility_filtered(params, raman, ideal_matched_filter)
    assert v_sat == pytest.approx(0.95, abs=0.02), "saturated V %.4f" % v_sat
    note(
        4,
        "matched filter: V(P_pair=0.01) = %.4f (0.88 +- 0.03), "
        "saturated V = %.4f (0.95 +- 0.02)" % (rep.visibility, v_sat),
    )


def test_criterion_5_detuning_endpoints_with_calibration_anchors():
    base = ExperimentParams.at_pair_rate(0.01)
    raman = default_raman_model(base)

    def at_delta(d_nm):
        w = detuning_to_angular(d_nm, base.pump_wavelength_nm)
        return base.with_band_center(w)

    # 5 nm and 14 nm open-filter values are calibration anchors of the
    # built-in gain table; the filtered value at 5 nm is a prediction
    p5 = at_delta(5.0)
    v5_open = saturated_visibility_open(p5, raman)
    v5_filt = saturated_visibility_filtered(p5, raman, ideal_matched_filter)
    p14 = at_delta(14.0)
    v14_open = saturated_visibility_open(p14, raman)
    assert v5_open == pytest.approx(0.96, abs=0.01)
    assert v5_filt == pytest.approx(0.99, abs=0.01)
    assert v14_open == pytest.approx(0.71, abs=0.02)
    note(
        5,
        "detuning endpoints: 5 nm open %.4f (calibration anchor, 0.96 +- "
        "0.01), 5 nm filtered %.4f (prediction, 0.99 +- 0.01), 14 nm open "
        "%.4f (calibration anchor, 0.71 +- 0.02)" % (v5_open, v5_filt, v14_open),
    )


def test_criterion_6_practical_filter_design_targets():
    # The optimizer's default shutter intensity FWHM is 0.35/sigma
    # (0.88 ps here), i.e. 3.5 inverse collection bandwidths (B = 10
    # sigma). A shutter of 3.5/sigma is an order of magnitude longer
    # than the band coherence time: its kernel trace forces any mask
    # with chi0 near 0.35 to spread weight over many modes, so the four
    # targets below cannot be met jointly at that scale (see
    # TestShutterScaleTradeoff in test_filters.py). At 0.35/sigma all
    # four hold.
    params = ExperimentParams.at_pair_rate(0.01)
    raman = default_raman_model(params)
    res = optimize_filter(params, raman)
    assert res.chi0 == pytest.approx(0.35, abs=0.05), "chi0 %.4f" % res.chi0
    assert res.residual_sum <= 0.05, "residual %.4f" % res.residual_sum
    assert res.collection_fraction == pytest.approx(0.10, abs=0.03), (
        "collection %.4f" % res.collection_fraction
    )
    assert res.overlap >= 0.99, "overlap %.6f" % res.overlap
    note(
        6,
        "practical filter (order %d, width %.3f, shutter %.2f/sigma): chi0 "
        "= %.4f (0.35 +- 0.05), residual sum = %.4f (<= 0.05), collection "
        "fraction = %.4f (0.10 +- 0.03), overlap = %.6f (>= 0.99)"
        % (
            res.order,
            res.width,
            res.shutter_t,
            res.chi0,
            res.residual_sum,
            res.collection_fraction,
            res.overlap,
        ),
    )


def test_criterion_7_qber_and_key_numbers():
    assert qber_from_visibility(0.72) == 0.14
    assert qber_from_visibility(0.88) == 0.06
    key = key_fraction(0.06, 0.01, f_ec=1.22)
    assert key == pytest.approx(0.0027, rel=0.05), "key %.6f" % key
    for p_pair in (0.001, 0.01, 0.5):
        assert key_fraction(0.14, p_pair) == 0.0
    note(
        7,
        "qber(0.72) = 0.14 and qber(0.88) = 0.06 exactly; key fraction "
        "%.6f (0.0027 +- 5%%); key at QBER 0.14 = 0 exactly" % key,
    )


def test_criterion_8_property_suite():
    params = ExperimentParams.at_pair_rate(0.01)
    raman = default_raman_model(params)

    # purification arithmetic: improvement, equality cases, composition
    for f in (0.3, 0.6, 0.95):
        for o2 in (0.0, 0.2, 0.7, 1.0):
            fp = purified_fidelity(f, o2)
            assert fp >= f - 1e-15
            if o2 == 1.0 or f == 1.0:
                assert fp == pytest.approx(f, rel=1e-14)
            two_step = purified_fidelity(purified_fidelity(f, o2), 0.5)
            assert two_step == pytest.approx(
                purified_fidelity(f, 0.5 * o2), rel=1e-13
            )

    # thermal branch identity
    for d_nm in (2.0, 5.0, 10.0, 14.0):
        w = detuning_to_angular(d_nm, params.pump_wavelength_nm)
        assert thermal_occupation(-w, 300.0) - thermal_occupation(w, 300.0) == (
            pytest.approx(1.0, rel=1e-12)
        )

    # filter pass probabilities bounded
    dec = sfwm_modes(params, raman)
    fm_practical = practical_filter(dec.grid, 2, 3.681449, 0.35)
    for fm in (fm_practical, open_filter(dec.grid)):
        assert np.all(fm.chis >= 0.0)
        assert np.all(fm.chis <= 1.0)

    # trace identities for both kernel decompositions
    diag = xi(2.0 * dec.grid.nodes, params.q, raman.ratio_at(params.band_center))
    pair_trace = integrate(diag, dec.grid) / (2.0 * math.pi)
    rel_pair = abs(dec.trace - pair_trace) / abs(pair_trace)
    prof = super_gaussian(dec.grid, 3.681449, 2)
    filt_trace = shutter_trace(prof, 0.35)
    rel_filt = abs(np.sum(fm_practical.chis) - filt_trace) / filt_trace
    assert rel_pair < 1e-6
    assert rel_filt < 1e-6

    # visibility falls monotonically with pump power, matched and open
    p_grid = np.geomspace(1e-4, 0.04, 6)
    v_open = []
    v_matched = []
    for p_pair in p_grid:
        pp = ExperimentParams.at_pair_rate(p_pair)
        v_open.append(visibility_open(pp, raman))
        d = sfwm_modes(pp, raman)
        m = ideal_matched_filter(d)
        v_matched.append(evaluate_operating_point(pp, raman, m, m).visibility)
    assert all(a > b for a, b in zip(v_open, v_open[1:]))
    assert all(a > b for a, b in zip(v_matched, v_matched[1:]))

    # filtered visibility dominates open across both sweep axes
    assert all(m > o for m, o in zip(v_matched, v_open))
    for d_nm in (5.0, 8.0, 11.0, 14.0):
        w = detuning_to_angular(d_nm, params.pump_wavelength_nm)
        pd = params.with_band_center(w)
        v_sat_open = saturated_visibility_open(pd, raman)
        v_sat_filt = saturated_visibility_filtered(
            pd, raman, ideal_matched_filter
        )
        assert v_sat_filt >= v_sat_open

    # grid doubling moves no reported eigenvalue by more than 1e-4
    dec2 = sfwm_modes(params, raman, n_points=402)
    sig = dec.significant()
    assert np.allclose(
        dec.eigenvalues[sig], dec2.eigenvalues[sig], rtol=1e-4, atol=1e-12
    )
    g2 = make_band_grid(params.b_sigma, 402)
    fm2 = practical_filter(g2, 2, 3.681449, 0.35)
    sig_f = fm_practical.significant(rel_tol=1e-3)
    assert np.allclose(
        fm_practical.chis[sig_f], fm2.chis[sig_f], rtol=1e-4, atol=1e-12
    )

    note(
        8,
        "purification, thermal branch, bounded filter weights, trace "
        "identities (rel %.1e pair, %.1e filter), monotone V(P_pair), "
        "filter dominance on both sweeps, grid-doubling stability"
        % (rel_pair, rel_filt),
    )


def test_criterion_9_cli_determinism(tmp_path):
    commands = [
        ["modes"],
        ["sweep-ppair"],
        ["sweep-detuning"],
        ["optimize"],
        ["calibrate", "--target-v", "0.82", "--delta-nm", "10.0"],
    ]
    produced = []
    for i, argv in enumerate(commands):
        outputs = []
        for run in ("first", "second"):
            out = tmp_path / ("%s_%d" % (run, i))
            rc = cli.main(argv + ["--out", str(out)])
            assert rc == 0, "command %r failed" % (argv[0],)
            files = sorted(p for p in out.iterdir() if p.is_file())
            assert files, "command %r wrote nothing" % (argv[0],)
            outputs.append({p.name: p.read_bytes() for p in files})
        first, second = outputs
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], (
                "%s from %r differs between runs" % (name, argv[0])
            )
        produced.append("%s (%d files)" % (argv[0], len(first)))
    note(9, "byte-identical reruns: " + ", ".join(produced))
