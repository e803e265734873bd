"""Self-check the hand-rolled reverse-mode gradients.

All training losses are differentiated by the package's own tape-based
autodiff.  Two built-in verifications keep it honest:
  * analytic gradients vs central finite differences, and
  * the full-trajectory special case of the subtrajectory loss collapsing
    to the plain trajectory-balance loss.

Run:  python3 demos/05_gradient_check.py        (~10 seconds)
"""

from codonflow.verify import check_gradients, check_subtb_reduction

grad = check_gradients(seed=0, n_pairs=20, coords_per_pair=5)
print(
    f"gradient check: {'PASS' if grad.passed else 'FAIL'} "
    f"(max relative error {grad.measured['max_rel_error']:.3e} over "
    f"{grad.measured['coordinates']} coordinates)"
)

red = check_subtb_reduction(seed=0, n_trajectories=200)
print(
    f"loss-family check: {'PASS' if red.passed else 'FAIL'} "
    f"(max |subtb_full - tb| = {red.measured['max_abs_diff']:.3e} over "
    f"{red.measured['trajectories']} trajectories)"
)
