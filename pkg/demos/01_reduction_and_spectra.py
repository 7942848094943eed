"""Pencil analysis and game reduction on the shared-steering example.

A human driver and an automation unit steer through the same interface.
The state (lateral error, heading error, steering angle) obeys

    e_y'   = vx * e_psi
    e_psi' = (vx / L) * delta
    0      = -Ks * delta + u_h + u_a

so E = diag(1, 1, 0) is singular: the steering angle is determined
instantaneously by the torques, not by its own dynamics.  This script
walks through the pencil diagnostics, the canonical decomposition, and
the two ways to compute a closed-loop spectrum.
"""
import numpy as np

import dgame as dg

vx, length, ks = 20.0, 2.7, 10.0
E = np.diag([1.0, 1.0, 0.0])
A = np.array([[0.0, vx, 0.0], [0.0, 0.0, vx / length], [0.0, 0.0, -ks]])
B = (np.array([[0.0], [0.0], [1.0]]), np.array([[0.0], [0.0], [1.0]]))

pencil = dg.Pencil(E, A)
print("regular:", dg.is_regular(pencil))
print("index:  ", dg.index_of(pencil), "(impulse-free)")

w = dg.weierstrass(pencil)
print("rank E = r =", w.r, "dynamic states;", E.shape[0] - w.r, "algebraic")
print("open-loop finite spectrum:", dg.finite_spectrum(pencil).round(12))

game = dg.DescriptorGame(E, A, B)
rg = dg.reduce_game(game)
print("\nreduced dynamics J =\n", rg.j.round(6))
print("dynamic input blocks:", [b.ravel().round(6).tolist() for b in rg.b1])
print("algebraic input blocks:", [b.ravel().round(6).tolist() for b in rg.b2])
print("(the algebraic part encodes delta = (u_h + u_a) / Ks)")

# an observed stabilizing feedback profile for this game
F = dg.FeedbackProfile((np.array([[-0.0046, -0.3971, 0.7987]]),
                        np.array([[-0.4779, -1.8117, 3.8449]])))
adm = dg.is_admissible(game, F)
print("\nobserved feedback admissible:", adm.ok)

f_red = dg.reduce_feedback(game, F)
print("reduced feedback (gauge-dependent):\n", f_red.matrix.round(6))

spec_pencil = dg.finite_spectrum(dg.Pencil(E, A + np.hstack(B) @ F.stacked))
spec_reduced = dg.sorted_spectrum(np.linalg.eigvals(rg.j + rg.b1_stacked @ f_red.matrix))
print("\nclosed-loop spectrum via the pencil:   ", spec_pencil.round(6))
print("closed-loop spectrum via the reduction:", spec_reduced.round(6))
print("agreement:", np.abs(spec_pencil - spec_reduced).max() < 1e-9)

# feedbacks that raise the index are rejected with a named reason: here
# the combined feedthrough on delta cancels the steering stiffness Ks
bad = dg.FeedbackProfile((np.array([[0.0, 0.0, 4.0]]), np.array([[0.0, 0.0, 6.0]])))
print("\nindex-raising feedback:", dg.is_admissible(game, bad).reason)
