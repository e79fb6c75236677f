"""Quasi-static equilibrium of the passive finger.

The finger rests where the energy

    E(q) = 1/2 k |q|^2 + sum over links and obstacles of 1/2 k_c d^2

is locally minimal, with ``d`` the penetration depth of a link sphere.
Minimised with a projected, eigenvalue-modified Newton method and
Armijo backtracking; the Hessian is a central difference of the analytic
gradient.  Converged points with negative curvature (e.g. a straight
finger pushed axially into the ground) are left along the most negative
eigenvector, so the result is a minimum, not a saddle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import N_LINKS, SceneConfig
from .contact import link_forces, penetrations
from .kinematics import arm_tip, chain, check_arm, check_finger

log = logging.getLogger(__name__)

ARMIJO = 1e-4
HESS_STEP = 1e-6
MAX_STEP = 0.5
# keep refining below gtol while Newton still makes progress
POLISH = 1e-4


@dataclass
class SettleResult:
    q_f: np.ndarray
    forces: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    energy_trace: list[float] = field(default_factory=list)


class FingerEnergy:
    """Energy and gradient of the finger for a fixed arm pose."""

    def __init__(self, q_r, cfg: SceneConfig):
        self.cfg = cfg
        self.base_pos, self.base_rot = arm_tip(check_arm(q_r, cfg), cfg)

    def _chain(self, q):
        return chain(q, self.base_pos, self.base_rot, self.cfg.link_length)

    def energy(self, q: np.ndarray) -> np.ndarray:
        q2 = np.atleast_2d(q)
        ch = self._chain(q2)
        depth, _ = penetrations(ch.positions, self.cfg.link_radius, self.cfg)
        e = 0.5 * self.cfg.spring_k * np.sum(q2 * q2, axis=-1)
        e = e + 0.5 * self.cfg.contact_k * np.sum(depth * depth, axis=(-1, -2))
        return e if np.ndim(q) > 1 else e[0]

    def gradient(self, q: np.ndarray) -> np.ndarray:
        q2 = np.atleast_2d(q)
        ch = self._chain(q2)
        force, _ = link_forces(ch.positions, self.cfg)
        J = ch.jacobian()
        # dE/dq = k q - sum_i J_i^T F_i
        g = self.cfg.spring_k * q2 - np.einsum("bijc,bic->bj", J, force)
        return g if np.ndim(q) > 1 else g[0]

    def hessian(self, q: np.ndarray, free: np.ndarray) -> np.ndarray:
        idx = np.flatnonzero(free)
        n = idx.size
        batch = np.repeat(q[None, :], 2 * n, axis=0)
        batch[np.arange(n), idx] += HESS_STEP
        batch[n + np.arange(n), idx] -= HESS_STEP
        g = self.gradient(batch)[:, idx]
        H = (g[:n] - g[n:]) / (2 * HESS_STEP)
        return 0.5 * (H + H.T)


def _blocked(q, g, limit):
    """Variables pinned at a joint limit with the gradient pushing outwards."""
    at_hi = (q >= limit - 1e-12) & (g < 0)
    at_lo = (q <= -limit + 1e-12) & (g > 0)
    return at_hi | at_lo


def settle(
    q_r,
    cfg: SceneConfig,
    q_init=None,
    free=None,
    max_iter: int = 500,
    gtol: float = 1e-6,
) -> SettleResult:
    """Equilibrium finger shape and per-link normal forces for arm pose ``q_r``.

    ``q_init`` warm-starts the search (zeros by default).  ``free`` masks
    which finger joints may move; locked joints keep their initial value.
    """
    E = FingerEnergy(q_r, cfg)
    limit = cfg.joint_limit
    q = np.zeros(N_LINKS) if q_init is None else np.clip(check_finger(q_init, cfg), -limit, limit).copy()
    free = np.ones(N_LINKS, dtype=bool) if free is None else np.asarray(free, dtype=bool)

    e = float(E.energy(q))
    trace = [e]
    converged = False
    it = 0
    gnorm = np.inf
    while it < max_iter:
        g = E.gradient(q)
        active = free & ~_blocked(q, g, limit)
        gp = np.where(active, g, 0.0)
        gnorm = float(np.linalg.norm(gp))
        idx = np.flatnonzero(active)

        if gnorm < POLISH * gtol or idx.size == 0:
            outcome = _at_stationary(E, q, e, active, idx, limit)
            it += 1
            if outcome is None:
                converged = True
                break
            q, e = outcome
            trace.append(e)
            continue

        H = E.hessian(q, active)
        lam, vec = np.linalg.eigh(H)
        lam = np.maximum(np.abs(lam), 1e-6 * max(1.0, float(np.max(np.abs(lam)))))
        p_sub = -vec @ ((vec.T @ g[idx]) / lam)
        scale = np.max(np.abs(p_sub))
        if scale > MAX_STEP:
            p_sub *= MAX_STEP / scale
        p = np.zeros(N_LINKS)
        p[idx] = p_sub

        accepted = _line_search(E, q, e, g, p, limit)
        if accepted is None:
            # fall back to steepest descent once before giving up
            p = np.zeros(N_LINKS)
            p[idx] = -g[idx] / max(1.0, float(np.max(np.abs(g[idx]))) / MAX_STEP)
            accepted = _line_search(E, q, e, g, p, limit)
        it += 1
        if accepted is not None and gnorm < gtol and accepted[1] >= e:
            # inside tolerance and no longer lowering the energy
            accepted = None
        if accepted is None:
            if gnorm >= gtol:
                break
            # rounding floor reached inside the tolerance
            outcome = _at_stationary(E, q, e, active, idx, limit)
            if outcome is None:
                converged = True
                break
            accepted = outcome
        q, e_new = accepted
        assert e_new <= e, "energy increased across an accepted iteration"
        e = e_new
        trace.append(e)

    if not converged:
        g = E.gradient(q)
        gp = np.where(free & ~_blocked(q, g, limit), g, 0.0)
        gnorm = float(np.linalg.norm(gp))
        converged = gnorm < gtol
        if not converged:
            log.debug("settle stopped after %d iterations, |grad| = %.3g", it, gnorm)

    ch = E._chain(q[None, :])
    _, forces = link_forces(ch.positions[0], cfg)
    return SettleResult(q, forces, e, gnorm, it, converged, trace)


def _line_search(E: FingerEnergy, q, e, g, p, limit):
    t = 1.0
    while t > 1e-10:
        trial = np.clip(q + t * p, -limit, limit)
        et = float(E.energy(trial))
        if et <= e + ARMIJO * float(g @ (trial - q)) and et <= e:
            return trial, et
        t *= 0.5
    return None


def _at_stationary(E: FingerEnergy, q, e, active, idx, limit):
    """None if ``q`` is a local minimum, else a descent step off the saddle."""
    if idx.size == 0:
        return None
    lam, vec = np.linalg.eigh(E.hessian(q, active))
    if lam[0] >= -1e-8:
        return None
    return _escape(E, q, e, idx, lam[0], vec[:, 0], limit)


def _escape(E: FingerEnergy, q, e, idx, lam, v_sub, limit):
    """Step off a saddle along the negative-curvature direction."""
    v_sub = v_sub if v_sub[np.argmax(np.abs(v_sub))] > 0 else -v_sub
    v = np.zeros(N_LINKS)
    v[idx] = v_sub
    t = MAX_STEP
    while t > 1e-8:
        trial = np.clip(q + t * v, -limit, limit)
        et = float(E.energy(trial))
        if et < e - 0.25 * abs(lam) * t * t * 0.5:
            return trial, et
        t *= 0.5
    return None
