"""Hover linearization of the quadrotor model.

Produces the state-space quadruple (A, B, C, D) of the model linearized
about the hover equilibrium, both analytically and through a
central-difference oracle that differentiates the nonlinear dynamics
directly.  Inputs of the linear model are deviations from hover, i.e.
du1 = u1 - m*g and du2..du4 = u2..u4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .model import QuadrotorParams

OUTPUT_INDICES = (model.Z, model.PHI, model.THETA, model.PSI)


@dataclass(frozen=True)
class StateSpace:
    """Linear model dx/dt = A x + B du, y = C x + D du.

    A is 12x12, B is 12x4, C is the 4x12 selector picking
    [z, phi, theta, psi] and D is the 4x4 zero matrix.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        if self.A.shape != (model.STATE_DIM, model.STATE_DIM):
            raise ValueError(f"A must be 12x12, got {self.A.shape}")
        if self.B.shape != (model.STATE_DIM, model.INPUT_DIM):
            raise ValueError(f"B must be 12x4, got {self.B.shape}")
        if self.C.shape != (model.INPUT_DIM, model.STATE_DIM):
            raise ValueError(f"C must be 4x12, got {self.C.shape}")
        if self.D.shape != (model.INPUT_DIM, model.INPUT_DIM):
            raise ValueError(f"D must be 4x4, got {self.D.shape}")


def output_matrix() -> np.ndarray:
    """Selector extracting [z, phi, theta, psi] from the state."""
    C = np.zeros((model.INPUT_DIM, model.STATE_DIM))
    for row, col in enumerate(OUTPUT_INDICES):
        C[row, col] = 1.0
    return C


def hover_jacobians(params: QuadrotorParams) -> StateSpace:
    """Analytic Jacobians of the dynamics at the hover equilibrium.

    Position/attitude rows copy their velocities; the only other state
    coupling is the thrust tilt: d(xddot)/d(theta) = +g and
    d(yddot)/d(phi) = -g at hover thrust u1 = m*g.  The input matrix has
    1/m on vertical acceleration and the inverse inertias on the body
    angular accelerations.
    """
    A = np.zeros((model.STATE_DIM, model.STATE_DIM))
    for i in range(6):
        A[i, i + 6] = 1.0
    A[model.XDOT, model.THETA] = params.gravity
    A[model.YDOT, model.PHI] = -params.gravity

    B = np.zeros((model.STATE_DIM, model.INPUT_DIM))
    B[model.ZDOT, 0] = 1.0 / params.mass
    B[model.P, 1] = 1.0 / params.inertia_xx
    B[model.Q, 2] = 1.0 / params.inertia_yy
    B[model.R, 3] = 1.0 / params.inertia_zz

    return StateSpace(A=A, B=B, C=output_matrix(), D=np.zeros((4, 4)))


def numeric_jacobians(
    params: QuadrotorParams,
    state0: np.ndarray | None = None,
    u0: np.ndarray | None = None,
    eps: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Jacobians of the nonlinear dynamics.

    Independent oracle for :func:`hover_jacobians`; defaults to the
    hover operating point when no (state0, u0) is given.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if state0 is None or u0 is None:
        hover_state, hover_u, _ = model.hover_equilibrium(params)
        state0 = hover_state if state0 is None else state0
        u0 = hover_u if u0 is None else u0
    state0 = np.asarray(state0, dtype=float)
    u0 = np.asarray(u0, dtype=float)

    A = np.zeros((model.STATE_DIM, model.STATE_DIM))
    for j in range(model.STATE_DIM):
        bump = np.zeros(model.STATE_DIM)
        bump[j] = eps
        fp = model.dynamics(state0 + bump, u0, params)
        fm = model.dynamics(state0 - bump, u0, params)
        A[:, j] = (fp - fm) / (2.0 * eps)

    B = np.zeros((model.STATE_DIM, model.INPUT_DIM))
    for j in range(model.INPUT_DIM):
        bump = np.zeros(model.INPUT_DIM)
        bump[j] = eps
        fp = model.dynamics(state0, u0 + bump, params)
        fm = model.dynamics(state0, u0 - bump, params)
        B[:, j] = (fp - fm) / (2.0 * eps)

    return A, B


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Block matrix [B, AB, ..., A^(n-1) B]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)

def controllability_rank(A: np.ndarray, B: np.ndarray, rtol: float = 1e-8) -> int:
    """Numerical rank of the controllability matrix.

    Counts singular values above ``rtol`` times the largest one; the
    pair is controllable when this equals the state dimension.
    """
    sigma = np.linalg.svd(controllability_matrix(A, B), compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rtol * sigma[0]))


def is_controllable(A: np.ndarray, B: np.ndarray, rtol: float = 1e-8) -> bool:
    return controllability_rank(A, B, rtol) == np.asarray(A).shape[0]
