//! The dual energy `J_lambda(phi, psi)`, its partial gradients, the inner
//! concave maximization `Z(phi)` eliminating the defocusing variable, and
//! the reduced functional `Jt_lambda(phi) = J_lambda(phi, Z(phi))`.
//!
//! `J_lambda(phi, psi) = lambda^{1-p'}/p' ||phi||_{p'}^{p'}
//!                       - 1/p' ||psi||_{p'}^{p'}
//!                       - 1/2 <phi - psi, K (phi - psi)>`
//! with `phi` supported in `A_+` and `psi` in `A_-`.

use crate::birman_schwinger::WeightedOperator;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, SupportMask};

/// The dual state `(phi, psi)` with the exponent it lives under. The
/// constructor enforces the support invariants exactly.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub phi: ScalarField,
    pub psi: ScalarField,
    pub p: f64,
}

impl DualPair {
    pub fn new(op: &WeightedOperator, phi: ScalarField, psi: ScalarField) -> Result<Self> {
        check_support(&phi, op.aplus(), "phi")?;
        check_support(&psi, op.aminus(), "psi")?;
        Ok(DualPair {
            phi,
            psi,
            p: op.p(),
        })
    }
}

pub(crate) fn check_support(f: &ScalarField, mask: &SupportMask, what: &str) -> Result<()> {
    if f.grid() != mask.grid() {
        return Err(Error::GridMismatch(format!("{what} vs mask")));
    }
    for (i, &v) in f.values().iter().enumerate() {
        if v != 0.0 && !mask.contains(i) {
            return Err(Error::domain(format!(
                "{what} must vanish outside its support mask (violated at cell {i})"
            )));
        }
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Evaluate `J_lambda`.
pub fn eval_j(
    phi: &ScalarField,
    psi: &ScalarField,
    lambda: f64,
    op: &WeightedOperator,
) -> Result<f64> {
    check_lambda(lambda)?;
    check_support(phi, op.aplus(), "phi")?;
    check_support(psi, op.aminus(), "psi")?;
    let pc = op.p_conj();
    let diff = phi.add_scaled(-1.0, psi)?;
    let quad = diff.inner(&op.apply(&diff)?)?;
    Ok(lambda.powf(1.0 - pc) / pc * phi.lp_pow(pc)? - psi.lp_pow(pc)? / pc - 0.5 * quad)
}

/// `d/dphi J_lambda` as an `L^p` density on `A_+`:
/// `lambda^{1-p'} |phi|^{p'-2} phi - 1_{A_+} K(phi - psi)`.
pub fn grad_phi(
    phi: &ScalarField,
    psi: &ScalarField,
    lambda: f64,
    op: &WeightedOperator,
) -> Result<ScalarField> {
    check_lambda(lambda)?;
    let pc = op.p_conj();
    let diff = phi.add_scaled(-1.0, psi)?;
    let kdiff = op.apply(&diff)?.masked(op.aplus())?;
    phi.dual_map(pc)?
        .scaled(lambda.powf(1.0 - pc))
        .add_scaled(-1.0, &kdiff)
}

/// `d/dpsi J_lambda` as an `L^p` density on `A_-`:
/// `-|psi|^{p'-2} psi + 1_{A_-} K(phi - psi)`; it does not depend on
/// `lambda`, and it vanishes exactly on the solutions of the coupled
/// stationarity system.
pub fn grad_psi(
    phi: &ScalarField,
    psi: &ScalarField,
    op: &WeightedOperator,
) -> Result<ScalarField> {
    let pc = op.p_conj();
    let diff = phi.add_scaled(-1.0, psi)?;
    let kdiff = op.apply(&diff)?.masked(op.aminus())?;
    kdiff.add_scaled(-1.0, &psi.dual_map(pc)?)
}

/// Diagnostics of one inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolveReport {
    pub iterations: usize,
    /// `||grad_psi(phi, Z)||_p` at the returned point.
    pub optimality_residual: f64,
    /// The lambda-free part of `J` at the maximizer:
    /// `-1/p' ||Z||^{p'} - 1/2 <phi - Z, K(phi - Z)>`.
    pub objective: f64,
}

const MAX_INNER_ITERS: usize = 10_000;

/// Solve the inner concave maximization `Z(phi) = argmax_psi J_lambda(phi, psi)`.
///
/// Damped fixed point on the stationarity equation
/// `|psi|^{p'-2} psi = 1_{A_-} K(phi - psi)`, inverted by the duality map;
/// the damping is backtracked so the concave objective never decreases.
/// The maximizer does not depend on `lambda` (only the `phi`-term of `J`
/// does), so `lambda` is not an input. The effective tolerance is
/// `tol_inner * max(1, ||phi||_{p'}^{p'-1})`, matching how the gradient
/// scales. `warm` optionally seeds the iteration.
pub fn solve_z(
    phi: &ScalarField,
    op: &WeightedOperator,
    tol_inner: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, InnerSolveReport)> {
    check_support(phi, op.aplus(), "phi")?;
    let pc = op.p_conj();
    let p = op.p();
    let grid = *op.grid();
    let phi_norm = phi.lp_norm(pc)?;
    let tol_eff = tol_inner * phi_norm.powf(pc - 1.0).max(1.0);
    let growth_budget = 1e9 * (1.0 + phi_norm).powf(p - 1.0);

    let a = op.apply(phi)?; // K phi, fixed for the whole solve
    let mut psi = match warm {
        Some(w) => w.masked(op.aminus())?,
        None => ScalarField::zeros(grid),
    };
    let mut k_psi = if psi.is_zero() {
        ScalarField::zeros(grid)
    } else {
        op.apply(&psi)?
    };

    let objective = |psi: &ScalarField, k_psi: &ScalarField| -> Result<f64> {
        let diff = phi.add_scaled(-1.0, psi)?;
        let k_diff = a.add_scaled(-1.0, k_psi)?;
        Ok(-psi.lp_pow(pc)? / pc - 0.5 * diff.inner(&k_diff)?)
    };

    let mut obj = objective(&psi, &k_psi)?;
    let mut iterations = 0;
    loop {
        // residual of the stationarity equation
        let m = a.add_scaled(-1.0, &k_psi)?.masked(op.aminus())?;
        let grad = m.add_scaled(-1.0, &psi.dual_map(pc)?)?;
        let residual = grad.lp_norm(p)?;
        if residual <= tol_eff {
            return Ok((
                psi,
                InnerSolveReport {
                    iterations,
                    optimality_residual: residual,
                    objective: obj,
                },
            ));
        }
        if iterations >= MAX_INNER_ITERS {
            return Err(Error::NonConvergence {
                context: "solve_z".into(),
                iterations,
                residual,
            });
        }
        iterations += 1;

        let d = m.dual_map(p)?;
        let k_d = op.apply(&d)?;
        let mut tau = 0.5;
        let mut accepted = false;
        for _ in 0..60 {
            let psi_t = psi.scaled(1.0 - tau).add_scaled(tau, &d)?;
            let k_t = k_psi.scaled(1.0 - tau).add_scaled(tau, &k_d)?;
            let obj_t = objective(&psi_t, &k_t)?;
            if obj_t >= obj - 1e-15 * obj.abs().max(1.0) {
                psi = psi_t;
                k_psi = k_t;
                obj = obj_t;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            // The step is an exact ascent direction, so this is a roundoff
            // floor; report it as non-convergence with the residual.
            return Err(Error::NonConvergence {
                context: "solve_z backtracking stalled".into(),
                iterations,
                residual,
            });
        }
        if psi.lp_norm(pc)? > growth_budget {
            return Err(Error::PositivityViolated(format!(
                "inner iterate grew beyond {growth_budget:.3e}; the quadratic form \
                 on A_- is not positive semidefinite"
            )));
        }
    }
}

/// Reduced functional value `Jt_lambda(phi) = sup_psi J_lambda(phi, psi)`,
/// together with the maximizer.
pub fn eval_reduced(
    phi: &ScalarField,
    lambda: f64,
    op: &WeightedOperator,
    tol_inner: f64,
    warm: Option<&ScalarField>,
) -> Result<(f64, ScalarField)> {
    check_lambda(lambda)?;
    let pc = op.p_conj();
    let (z, report) = solve_z(phi, op, tol_inner, warm)?;
    let value = lambda.powf(1.0 - pc) / pc * phi.lp_pow(pc)? + report.objective;
    Ok((value, z))
}

/// Gradient of the reduced functional: `grad_phi` evaluated at `(phi, Z(phi))`.
pub fn grad_reduced(
    phi: &ScalarField,
    lambda: f64,
    op: &WeightedOperator,
    tol_inner: f64,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, ScalarField)> {
    check_lambda(lambda)?;
    let (z, _) = solve_z(phi, op, tol_inner, warm)?;
    let g = grad_phi(phi, &z, lambda, op)?;
    Ok((g, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birman_schwinger::compute_beta;
    use crate::grid::{random_field_on, Grid};
    use crate::resolvent::ResolventOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL_INNER: f64 = 1e-10;

    fn test_operator(p: f64) -> WeightedOperator {
        let grid = Grid::new(2, 32, 8.0).unwrap();
        let q = ScalarField::from_fn(grid, |x| {
            let dp = (x[0] + 2.25).hypot(x[1] - 0.25);
            let dm = (x[0] - 2.25).hypot(x[1] - 0.25);
            if dp < 1.2 {
                1.0
            } else if dm < 0.7 {
                -0.5
            } else {
                0.0
            }
        });
        let res = ResolventOperator::build(grid).unwrap();
        let op = WeightedOperator::new(res, &q, p).unwrap();
        assert!(op.aminus().count() >= 5);
        op
    }

    /// Probe bounded away from zero on its support, so the dual powers stay
    /// differentiable along finite-difference segments.
    fn probe_on(mask: &SupportMask, rng: &mut impl Rng) -> ScalarField {
        ScalarField::from_values(
            *mask.grid(),
            mask.indicator()
                .iter()
                .map(|&b| {
                    if b {
                        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        sign * rng.gen_range(0.3..1.3)
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn j_vanishes_at_origin_and_rejects_bad_lambda() {
        let op = test_operator(4.0);
        let zero = ScalarField::zeros(*op.grid());
        assert_eq!(eval_j(&zero, &zero, 1.0, &op).unwrap(), 0.0);
        assert!(eval_j(&zero, &zero, 0.0, &op).is_err());
        assert!(eval_j(&zero, &zero, -2.0, &op).is_err());
    }

    #[test]
    fn j_of_zero_phi_is_nonpositive_under_positivity() {
        let op = test_operator(4.0);
        let zero = ScalarField::zeros(*op.grid());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let psi = random_field_on(op.aminus(), &mut rng);
            let v = eval_j(&zero, &psi, 1.0, &op).unwrap();
            assert!(v <= 1e-12, "J(0, psi) = {v} > 0");
        }
        // sup over psi is attained at Z(0) = 0 with value 0
        let (value, z) = eval_reduced(&zero, 1.0, &op, TOL_INNER, None).unwrap();
        assert_eq!(value, 0.0);
        assert!(z.is_zero());
    }

    #[test]
    fn j_strictly_decreases_in_lambda() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = probe_on(op.aplus(), &mut rng);
        let psi = random_field_on(op.aminus(), &mut rng);
        let v1 = eval_j(&phi, &psi, 1.0, &op).unwrap();
        let v2 = eval_j(&phi, &psi, 2.0, &op).unwrap();
        let v3 = eval_j(&phi, &psi, 5.0, &op).unwrap();
        assert!(v1 > v2 && v2 > v3);
    }

    #[test]
    fn support_violations_are_rejected() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let stray = crate::grid::random_field(*op.grid(), &mut rng);
        let zero = ScalarField::zeros(*op.grid());
        assert!(eval_j(&stray, &zero, 1.0, &op).is_err());
        assert!(eval_j(&zero, &stray, 1.0, &op).is_err());
        assert!(DualPair::new(&op, stray, zero).is_err());
    }

    #[test]
    fn partial_gradients_match_central_differences() {
        let op = test_operator(4.0);
        let lambda = 1.7;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = probe_on(op.aplus(), &mut rng);
        let psi = probe_on(op.aminus(), &mut rng).scaled(0.5);
        let tau = 1e-5;

        let gphi = grad_phi(&phi, &psi, lambda, &op).unwrap();
        for (k, &v) in gphi.values().iter().enumerate() {
            if !op.aplus().contains(k) {
                assert_eq!(v, 0.0);
            }
        }
        for _ in 0..10 {
            let h = random_field_on(op.aplus(), &mut rng);
            let jp = eval_j(&phi.add_scaled(tau, &h).unwrap(), &psi, lambda, &op).unwrap();
            let jm = eval_j(&phi.add_scaled(-tau, &h).unwrap(), &psi, lambda, &op).unwrap();
            let fd = (jp - jm) / (2.0 * tau);
            let an = gphi.inner(&h).unwrap();
            assert!(
                (fd - an).abs() <= 1e-5 * an.abs().max(1e-10),
                "grad_phi fd {fd} vs {an}"
            );
        }

        let gpsi = grad_psi(&phi, &psi, &op).unwrap();
        for (k, &v) in gpsi.values().iter().enumerate() {
            if !op.aminus().contains(k) {
                assert_eq!(v, 0.0);
            }
        }
        for _ in 0..10 {
            let h = random_field_on(op.aminus(), &mut rng);
            let jp = eval_j(&phi, &psi.add_scaled(tau, &h).unwrap(), lambda, &op).unwrap();
            let jm = eval_j(&phi, &psi.add_scaled(-tau, &h).unwrap(), lambda, &op).unwrap();
            let fd = (jp - jm) / (2.0 * tau);
            let an = gpsi.inner(&h).unwrap();
            assert!(
                (fd - an).abs() <= 1e-5 * an.abs().max(1e-10),
                "grad_psi fd {fd} vs {an}"
            );
        }
    }

    #[test]
    fn solve_z_zero_input_and_optimality() {
        let op = test_operator(4.0);
        let zero = ScalarField::zeros(*op.grid());
        let (z, report) = solve_z(&zero, &op, TOL_INNER, None).unwrap();
        assert!(z.is_zero());
        assert_eq!(report.objective, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = probe_on(op.aplus(), &mut rng);
        let (z, report) = solve_z(&phi, &op, TOL_INNER, None).unwrap();
        let res = grad_psi(&phi, &z, &op).unwrap().lp_norm(op.p()).unwrap();
        let tol_eff = TOL_INNER * phi.lp_norm(op.p_conj()).unwrap().powf(op.p_conj() - 1.0).max(1.0);
        assert!(res <= tol_eff, "residual {res} > {tol_eff}");
        assert!((res - report.optimality_residual).abs() <= 1e-12 * res.max(1e-30));
    }

    #[test]
    fn solve_z_respects_the_norm_bound() {
        let op = test_operator(4.0);
        let (beta, _, _) = compute_beta(&op, 4, 3).unwrap();
        let pc = op.p_conj();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let phi = random_field_on(op.aplus(), &mut rng).scaled(rng.gen_range(0.1..3.0));
            let (z, _) = solve_z(&phi, &op, TOL_INNER, None).unwrap();
            let bound = (pc * beta * phi.lp_norm(pc).unwrap()).powf(1.0 / (pc - 1.0));
            let got = z.lp_norm(pc).unwrap();
            assert!(got <= bound + 1e-8, "||Z|| = {got} > bound {bound}");
        }
    }

    #[test]
    fn solve_z_unique_across_starts() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let phi = probe_on(op.aplus(), &mut rng);
        let (z1, _) = solve_z(&phi, &op, TOL_INNER, None).unwrap();
        let warm = random_field_on(op.aminus(), &mut rng);
        let (z2, _) = solve_z(&phi, &op, TOL_INNER, Some(&warm)).unwrap();
        let dist = z1.add_scaled(-1.0, &z2).unwrap().lp_norm(op.p_conj()).unwrap();
        let allowance = 1e-6 * (1.0 + phi.lp_norm(op.p_conj()).unwrap());
        assert!(dist <= allowance, "starts disagree by {dist}");
    }

    #[test]
    fn solve_z_maximizer_passes_concavity_certificate() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let phi = probe_on(op.aplus(), &mut rng);
        let lambda = 1.0;
        let (z, _) = solve_z(&phi, &op, TOL_INNER, None).unwrap();
        let at_max = eval_j(&phi, &z, lambda, &op).unwrap();
        for _ in 0..10 {
            let d = random_field_on(op.aminus(), &mut rng);
            let d = d.scaled(1.0 / d.lp_norm(op.p_conj()).unwrap());
            for eps in [1e-3, 1e-2] {
                let v = eval_j(&phi, &z.add_scaled(eps, &d).unwrap(), lambda, &op).unwrap();
                assert!(v <= at_max + 1e-10, "J increased by {}", v - at_max);
            }
        }
    }

    #[test]
    fn z_is_continuous_in_phi() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let phi = probe_on(op.aplus(), &mut rng);
        let dir = random_field_on(op.aplus(), &mut rng);
        let dir = dir.scaled(1.0 / dir.lp_norm(op.p_conj()).unwrap());
        let tol = 1e-13;
        let (z0, _) = solve_z(&phi, &op, tol, None).unwrap();
        let mut deviations = Vec::new();
        for delta in [1e-2, 1e-3, 1e-4] {
            let (z, _) = solve_z(&phi.add_scaled(delta, &dir).unwrap(), &op, tol, None).unwrap();
            deviations.push(z.add_scaled(-1.0, &z0).unwrap().lp_norm(op.p_conj()).unwrap());
        }
        assert!(deviations[0] > deviations[1] && deviations[1] > deviations[2]);
    }

    #[test]
    fn reduced_value_dominates_probes_and_is_lambda_monotone() {
        let op = test_operator(4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let phi = probe_on(op.aplus(), &mut rng);
        let (v1, z1) = eval_reduced(&phi, 1.0, &op, TOL_INNER, None).unwrap();
        for _ in 0..20 {
            let psi = random_field_on(op.aminus(), &mut rng);
            let v = eval_j(&phi, &psi, 1.0, &op).unwrap();
            assert!(v1 >= v - 1e-10);
        }
        // Z does not depend on lambda: bitwise identical maximizers.
        let pc = op.p_conj();
        let mut prev = v1;
        for lambda in [2.0, 10.0] {
            let (v, z) = eval_reduced(&phi, lambda, &op, TOL_INNER, None).unwrap();
            assert!(v < prev);
            prev = v;
            for (a, b) in z.values().iter().zip(z1.values()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            // exact lambda dependence of the reduced value
            let expected = v1 + (lambda.powf(1.0 - pc) - 1.0) / pc * phi.lp_pow(pc).unwrap();
            assert!((v - expected).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn reduced_gradient_matches_central_differences() {
        let op = test_operator(4.0);
        let lambda = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let phi = probe_on(op.aplus(), &mut rng);
        let (g, z) = grad_reduced(&phi, lambda, &op, 1e-11, None).unwrap();
        // gradient at zero vanishes
        let zero = ScalarField::zeros(*op.grid());
        let (g0, _) = grad_reduced(&zero, lambda, &op, TOL_INNER, None).unwrap();
        assert!(g0.linf_norm() <= 1e-12);
        // FD probe of the reduced functional, warm-started inner solves
        let tau = 1e-4;
        for _ in 0..10 {
            let h = random_field_on(op.aplus(), &mut rng);
            let (jp, _) =
                eval_reduced(&phi.add_scaled(tau, &h).unwrap(), lambda, &op, 1e-11, Some(&z)).unwrap();
            let (jm, _) =
                eval_reduced(&phi.add_scaled(-tau, &h).unwrap(), lambda, &op, 1e-11, Some(&z)).unwrap();
            let fd = (jp - jm) / (2.0 * tau);
            let an = g.inner(&h).unwrap();
            assert!(
                (fd - an).abs() <= 1e-4 * an.abs().max(1e-10),
                "reduced fd {fd} vs {an}"
            );
        }
        for (k, &v) in g.values().iter().enumerate() {
            if !op.aplus().contains(k) {
                assert_eq!(v, 0.0);
            }
        }
    }
}
