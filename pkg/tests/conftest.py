import numpy as np
import pytest

from chiralwg.params import Branch, DirectionalRates, Direction, EmitterConfig, derive_rates

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def default_emitter():
    return EmitterConfig()


@pytest.fixture
def strong_rates(default_emitter):
    return derive_rates(default_emitter, Branch.SigmaPlus, Direction.LtoR)


@pytest.fixture
def ideal_chiral():
    return DirectionalRates(1.0, 1.0, 0.0, 0.0, 0.5)


@pytest.fixture
def ideal_symmetric():
    return DirectionalRates(1.0, 0.5, 0.5, 0.0, 0.5)


def lindblad_steady_state(delta_ns, omega, gamma, gamma_perp):
    """Independent steady state from the 4x4 Liouvillian of a driven, dephased qubit.

    Basis |g>=0, |e>=1. H = Δ|e><e| + (Ω/2)(σ⁺ + σ⁻); collapse operators
    √Γ σ⁻ and √κ |e><e| with κ = 2(γ⊥ − Γ/2). Arrays broadcast; returns
    (<σ⁻>, population).
    """
    delta_ns, omega, gamma, gamma_perp = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (delta_ns, omega, gamma, gamma_perp)))
    n = delta_ns.size
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    ee = np.array([[0, 0], [0, 1]], dtype=complex)
    eye = np.eye(2)

    def left(a):
        return np.kron(a, eye)      # row-major vec: vec(A X) = (A ⊗ I) vec(X)

    def right(b):
        return np.kron(eye, b.T)    # vec(X B) = (I ⊗ Bᵀ) vec(X)

    def dissipator(c):
        cd = c.conj().T
        return left(c) @ right(cd) - 0.5 * left(cd @ c) - 0.5 * right(cd @ c)

    d, o, g, gp = (x.ravel() for x in (delta_ns, omega, gamma, gamma_perp))
    h_ee = -1j * (left(ee) - right(ee))
    h_x = -1j * (left(sm + sm.T) - right(sm + sm.T)) / 2
    liou = (d[:, None, None] * h_ee + o[:, None, None] * h_x
            + g[:, None, None] * dissipator(sm)
            + (2 * (gp - g / 2))[:, None, None] * dissipator(ee))
    # replace one equation by the trace condition
    a = liou.copy()
    a[:, 0, :] = np.array([1, 0, 0, 1])
    b = np.zeros((n, 4), dtype=complex)
    b[:, 0] = 1
    rho = np.linalg.solve(a, b[..., None])[..., 0]
    # <σ⁻> = Tr(σ⁻ ρ) = ρ_eg (row 1, col 0); population = ρ_ee
    shape = delta_ns.shape
    return rho[:, 2].reshape(shape), rho[:, 3].real.reshape(shape)
