import numpy as np
import pytest
from scipy.linalg import expm

from bubblespec.integrator import LawsonDP5, StepSizeUnderflow


def _stiff_matrix(top=1e6):
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    return Q @ np.diag([-1.0, -10.0, -1e2, -1e3, -top]) @ Q.T


def test_linear_part_is_exact():
    L = _stiff_matrix()
    w0 = np.arange(1.0, 6.0)
    integ = LawsonDP5(L, lambda t, w: np.zeros_like(w), np.ones(5), rtol=1e-12)
    out = integ.solve((0.0, 2.0), w0, [0.5, 2.0])
    assert np.allclose(out[0], expm(0.5 * L) @ w0, rtol=1e-10, atol=1e-14)
    assert np.allclose(out[1], expm(2.0 * L) @ w0, rtol=1e-10, atol=1e-14)
    assert integ.stats.rejected == 0


def test_constant_forcing_matches_closed_form():
    # w' = L w + f has w(t) = e^{Lt} w0 + L^{-1}(e^{Lt} - I) f; forcing a
    # stiff mode limits |mu| h to about 1, so the stiffness is kept moderate
    L = _stiff_matrix(1e4)
    f = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
    w0 = np.ones(5)
    integ = LawsonDP5(L, lambda t, w: f, np.ones(5), rtol=1e-12)
    t = 0.3
    E = expm(t * L)
    expect = E @ w0 + np.linalg.solve(L, (E - np.eye(5)) @ f)
    got = integ.solve((0.0, t), w0, [t])[-1]
    assert np.linalg.norm(got - expect) <= 1e-9 * np.linalg.norm(expect)


def test_nonlinear_scalar_against_exact():
    # w' = -w + w^2 (logistic), exact w = 1 / (1 + (1/w0 - 1) e^t)
    L = np.array([[-1.0]])
    integ = LawsonDP5(L, lambda t, w: w * w, np.ones(1), rtol=1e-11)
    t = np.linspace(0.0, 5.0, 11)
    w0 = 0.3
    got = integ.solve((0.0, 5.0), np.array([w0]), t)[:, 0]
    exact = 1.0 / (1.0 + (1.0 / w0 - 1.0) * np.exp(t))
    assert np.max(np.abs(got - exact) / exact) < 1e-9


def test_lands_on_output_times():
    L = np.array([[-2.0]])
    integ = LawsonDP5(L, lambda t, w: np.sin(t) * np.ones(1), np.ones(1), rtol=1e-10)
    t = np.array([0.0, 0.1, 0.1, 1.7])
    out = integ.solve((0.0, 1.7), np.array([1.0]), t)
    assert out[0, 0] == 1.0 and out[1, 0] == out[2, 0]


def test_rejects_unsorted_outputs():
    integ = LawsonDP5(np.array([[-1.0]]), lambda t, w: 0 * w, np.ones(1))
    with pytest.raises(ValueError):
        integ.solve((0.0, 1.0), np.ones(1), [0.5, 0.2])


def test_underflow_on_blowup():
    integ = LawsonDP5(np.array([[0.0]]), lambda t, w: w ** 3, np.ones(1), rtol=1e-10)
    with pytest.raises(StepSizeUnderflow), np.errstate(over="ignore", invalid="ignore"):
        integ.solve((0.0, 10.0), np.array([10.0]), [10.0])
