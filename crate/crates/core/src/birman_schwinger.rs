//! The weighted (Birman-Schwinger) operator `K f = |Q|^{1/p} R(|Q|^{1/p} f)`,
//! the constants `alpha`, `beta`, the threshold `lambda_0 = (2 beta/alpha)^p`,
//! and the positivity check of the quadratic form on the defocusing region.

use crate::error::{Error, Result};
use crate::grid::{masks_from_weight, Grid, ScalarField, SupportMask};
use crate::resolvent::ResolventOperator;
use crate::rng;
use nalgebra::DMatrix;
use rand::Rng;

/// `K` together with its masks and weight root.
pub struct WeightedOperator {
    resolvent: ResolventOperator,
    weight_root: ScalarField,
    abs_weight: ScalarField,
    aplus: SupportMask,
    aminus: SupportMask,
    p: f64,
}

impl WeightedOperator {
    /// Build from a realized weight `Q`. `p = 2` is accepted as the linear
    /// diagnostic mode; the variational pipeline requires `p > 2`.
    pub fn new(resolvent: ResolventOperator, q: &ScalarField, p: f64) -> Result<Self> {
        if q.grid() != resolvent.grid() {
            return Err(Error::GridMismatch("weight vs resolvent".into()));
        }
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::domain(format!("exponent p must be >= 2, got {p}")));
        }
        let (aplus, aminus) = masks_from_weight(q);
        let grid = *q.grid();
        let abs_weight =
            ScalarField::from_values(grid, q.values().iter().map(|v| v.abs()).collect())?;
        let weight_root = ScalarField::from_values(
            grid,
            abs_weight.values().iter().map(|v| v.powf(1.0 / p)).collect(),
        )?;
        Ok(WeightedOperator {
            resolvent,
            weight_root,
            abs_weight,
            aplus,
            aminus,
            p,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.weight_root.grid()
    }

    pub fn resolvent(&self) -> &ResolventOperator {
        &self.resolvent
    }

    /// `|Q|^{1/p}`.
    pub fn weight_root(&self) -> &ScalarField {
        &self.weight_root
    }

    /// `|Q|`.
    pub fn abs_weight(&self) -> &ScalarField {
        &self.abs_weight
    }

    pub fn aplus(&self) -> &SupportMask {
        &self.aplus
    }

    pub fn aminus(&self) -> &SupportMask {
        &self.aminus
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Hoelder conjugate `p' = p/(p-1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `K f = |Q|^{1/p} R(|Q|^{1/p} f)`.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let wf = self.weight_root.mul_pointwise(f)?;
        let rf = self.resolvent.apply(&wf)?;
        self.weight_root.mul_pointwise(&rf)
    }

    /// The effective weight `Q_lambda = lambda Q_+ - Q_-` assembled from the
    /// masks and `|Q|`.
    pub fn q_lambda(&self, lambda: f64) -> ScalarField {
        let mut out = ScalarField::zeros(*self.grid());
        for i in 0..self.grid().len() {
            let a = self.abs_weight.values()[i];
            out.values_mut()[i] = if self.aplus.contains(i) {
                lambda * a
            } else if self.aminus.contains(i) {
                -a
            } else {
                0.0
            };
        }
        out
    }
}

/// The method constants of the dual variational setup.
#[derive(Debug, Clone)]
pub struct MethodConstants {
    pub alpha: f64,
    pub beta: f64,
    pub lambda0: f64,
    /// alpha-maximizer, unit `L^{p'}` norm, supported in `A_+`.
    pub phi0: ScalarField,
}

/// Diagnostics of one extremal search (alpha or beta).
#[derive(Debug, Clone)]
pub struct SearchReport {
    pub iterations: usize,
    pub seeds_converged: usize,
    pub seeds_total: usize,
    /// Largest observed decrease of the tracked value along iterations;
    /// ~0 certifies the expected monotone ascent.
    pub largest_drop: f64,
}

const MAX_POWER_ITERS: usize = 10_000;
const VALUE_RTOL: f64 = 1e-10;

/// `alpha = max { <phi, K phi> : ||phi||_{p'} = 1, supp phi in A_+ }` by
/// generalized power iteration with multi-start; returns the best value,
/// its maximizer and a search report.
pub fn compute_alpha(
    op: &WeightedOperator,
    seeds: usize,
    seed: u64,
) -> Result<(f64, ScalarField, SearchReport)> {
    if op.aplus().is_empty_mask() {
        return Err(Error::domain(
            "compute_alpha requires a nonempty positivity region A_+",
        ));
    }
    let pc = op.p_conj();
    let mut best: Option<(f64, ScalarField)> = None;
    let mut report = SearchReport {
        iterations: 0,
        seeds_converged: 0,
        seeds_total: seeds,
        largest_drop: 0.0,
    };
    for s in 0..seeds {
        let mut rng = rng::stream(seed, s as u64);
        // nonnegative start on A_+
        let mut phi = ScalarField::from_values(
            *op.grid(),
            op.aplus()
                .indicator()
                .iter()
                .map(|&b| if b { rng.gen_range(0.0..1.0) } else { 0.0 })
                .collect(),
        )?;
        let norm = phi.lp_norm(pc)?;
        phi = phi.scaled(1.0 / norm);
        let mut rho_prev = phi.inner(&op.apply(&phi)?)?;
        let mut converged = false;
        for _ in 0..MAX_POWER_ITERS {
            report.iterations += 1;
            let g = op.apply(&phi)?.masked(op.aplus())?;
            let next = g.dual_map(op.p())?;
            let norm = next.lp_norm(pc)?;
            if norm == 0.0 {
                // K phi vanished on A_+: degenerate weight, value 0
                rho_prev = 0.0;
                converged = true;
                break;
            }
            phi = next.scaled(1.0 / norm);
            let rho = phi.inner(&op.apply(&phi)?)?;
            if rho < rho_prev {
                report.largest_drop = report.largest_drop.max(rho_prev - rho);
            }
            let done = (rho - rho_prev).abs() <= VALUE_RTOL * rho_prev.abs().max(1e-300);
            rho_prev = rho;
            if done {
                converged = true;
                break;
            }
        }
        if converged {
            report.seeds_converged += 1;
        } else {
            log::warn!("compute_alpha: seed {s} did not converge");
        }
        // Ties resolved by largest value, then lowest seed index.
        if best.as_ref().map_or(true, |(v, _)| rho_prev > *v) {
            best = Some((rho_prev, phi));
        }
    }
    if report.seeds_converged == 0 {
        return Err(Error::NonConvergence {
            context: "compute_alpha".into(),
            iterations: report.iterations,
            residual: f64::NAN,
        });
    }
    let (alpha, phi0) = best.unwrap();
    Ok((alpha, phi0, report))
}

/// `beta = max { <phi, K psi> : unit norms, supports in A_+/A_- }`.
///
/// For fixed `psi` the inner maximum over `phi` is `||1_{A_+} K psi||_p`
/// (Hoelder sharpness, attained by the scaled duality map), so the outer
/// search iterates the two-step composition on `psi` alone.
pub fn compute_beta(
    op: &WeightedOperator,
    seeds: usize,
    seed: u64,
) -> Result<(f64, ScalarField, SearchReport)> {
    let pc = op.p_conj();
    let mut report = SearchReport {
        iterations: 0,
        seeds_converged: 0,
        seeds_total: seeds,
        largest_drop: 0.0,
    };
    if op.aminus().is_empty_mask() {
        report.seeds_converged = seeds;
        return Ok((0.0, ScalarField::zeros(*op.grid()), report));
    }
    let mut best: Option<(f64, ScalarField)> = None;
    for s in 0..seeds {
        let mut rng = rng::stream(seed, (seeds + s) as u64);
        let mut psi = crate::grid::random_field_on(op.aminus(), &mut rng);
        let norm = psi.lp_norm(pc)?;
        psi = psi.scaled(1.0 / norm);
        let mut value_prev = -1.0;
        let mut converged = false;
        for _ in 0..MAX_POWER_ITERS {
            report.iterations += 1;
            let g = op.apply(&psi)?.masked(op.aplus())?;
            let value = g.lp_norm(op.p())?;
            if value == 0.0 {
                value_prev = 0.0;
                converged = true;
                break;
            }
            if value_prev >= 0.0 && value < value_prev {
                report.largest_drop = report.largest_drop.max(value_prev - value);
            }
            let done = value_prev >= 0.0
                && (value - value_prev).abs() <= VALUE_RTOL * value.abs().max(1e-300);
            value_prev = value;
            if done {
                converged = true;
                break;
            }
            let phi_dir = g.dual_map(op.p())?;
            let t = op.apply(&phi_dir)?.masked(op.aminus())?;
            let next = t.dual_map(op.p())?;
            let norm = next.lp_norm(pc)?;
            if norm == 0.0 {
                value_prev = 0.0;
                converged = true;
                break;
            }
            psi = next.scaled(1.0 / norm);
        }
        if converged {
            report.seeds_converged += 1;
        } else {
            log::warn!("compute_beta: seed {s} did not converge");
        }
        if best.as_ref().map_or(true, |(v, _)| value_prev > *v) {
            best = Some((value_prev, psi));
        }
    }
    if report.seeds_converged == 0 {
        return Err(Error::NonConvergence {
            context: "compute_beta".into(),
            iterations: report.iterations,
            residual: f64::NAN,
        });
    }
    let (beta, psi_star) = best.unwrap();
    Ok((beta, psi_star, report))
}

/// Threshold `lambda_0 = (2 beta / alpha)^p`.
pub fn lambda0(alpha: f64, beta: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "lambda0 requires alpha > 0, got {alpha}"
        )));
    }
    Ok((2.0 * beta / alpha).powf(p))
}

/// Convenience: run both searches and package the constants.
pub fn compute_constants(op: &WeightedOperator, seeds: usize, seed: u64) -> Result<MethodConstants> {
    let (alpha, phi0, _) = compute_alpha(op, seeds, seed)?;
    let (beta, _, _) = compute_beta(op, seeds, seed)?;
    let lambda0 = lambda0(alpha, beta, op.p())?;
    Ok(MethodConstants {
        alpha,
        beta,
        lambda0,
        phi0,
    })
}

/// Outcome of the quadratic-form positivity check on `A_-`.
#[derive(Debug, Clone)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
    /// Matrix scale used for the pass tolerance (largest diagonal entry).
    pub scale: f64,
    /// Whether the dense path was taken (|A_-| <= dense cap).
    pub dense: bool,
}

const DENSE_POSITIVITY_CAP: usize = 4096;
/// PSD pass tolerance; absorbs quadrature and FFT roundoff so exact zero
/// eigenvalues do not flap.
const POSITIVITY_RTOL: f64 = 1e-10;

/// Restriction of the quadratic form `psi -> <psi, K psi>` to the cells of
/// `A_-`, as a symmetric matrix in the scaled basis where the discrete
/// `L^2` norm is the euclidean one. Pass/fail is decided on its smallest
/// eigenvalue.
pub fn check_negative_positivity(op: &WeightedOperator) -> Result<PositivityReport> {
    let cells = op.aminus().cells();
    if cells.is_empty() {
        return Ok(PositivityReport {
            min_eigenvalue: 0.0,
            pass: true,
            scale: 0.0,
            dense: true,
        });
    }
    let w = op.weight_root().values();
    let ker0 = op.resolvent().kernel_at_offset(&vec![0i64; op.grid().dim()]);
    let scale = cells
        .iter()
        .map(|&c| w[c] * w[c] * ker0)
        .fold(0.0f64, f64::max);
    let (min_eigenvalue, dense) = if cells.len() <= DENSE_POSITIVITY_CAP {
        let m = dense_form_matrix(op, &cells, &cells);
        let eig = m.symmetric_eigen();
        (eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min), true)
    } else {
        (lanczos_smallest(op, &cells, scale)?, false)
    };
    Ok(PositivityReport {
        min_eigenvalue,
        pass: min_eigenvalue >= -POSITIVITY_RTOL * scale,
        scale,
        dense,
    })
}

/// Dense restriction `M[a][b] = w_a ker(x_a - x_b) w_b` of the weighted
/// form to two cell sets (`ker` carries the `h^N` quadrature weight). With
/// `rows = cols = A_-` this is the positivity matrix; the off-diagonal
/// block `A_+ x A_-` is the oracle for `beta` at `p = 2`.
pub fn dense_form_matrix(op: &WeightedOperator, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let grid = op.grid();
    let dim = grid.dim();
    let w = op.weight_root().values();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    let row_idx: Vec<_> = rows.iter().map(|&c| grid.decompose(c)).collect();
    let col_idx: Vec<_> = cols.iter().map(|&c| grid.decompose(c)).collect();
    let mut off = vec![0i64; dim];
    for (a, &ra) in rows.iter().enumerate() {
        for (b, &cb) in cols.iter().enumerate() {
            for d in 0..dim {
                off[d] = row_idx[a][d] as i64 - col_idx[b][d] as i64;
            }
            m[(a, b)] = w[ra] * op.resolvent().kernel_at_offset(&off) * w[cb];
        }
    }
    m
}

/// Smallest eigenvalue of the masked form by Lanczos with full
/// reorthogonalization on the matrix-free operator.
fn lanczos_smallest(op: &WeightedOperator, cells: &[usize], scale: f64) -> Result<f64> {
    let n = cells.len();
    let matvec = |v: &[f64]| -> Result<Vec<f64>> {
        let mut field = ScalarField::zeros(*op.grid());
        for (k, &c) in cells.iter().enumerate() {
            field.values_mut()[c] = v[k];
        }
        let out = op.apply(&field)?;
        Ok(cells.iter().map(|&c| out.values()[c]).collect())
    };
    let mut rng = rng::stream(0xB5, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_ritz = f64::INFINITY;
    let kmax = n.min(400);
    for j in 0..kmax {
        let mut w = matvec(&basis[j])?;
        if j > 0 {
            let b = betas[j - 1];
            for (wi, pi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * pi;
            }
        }
        let a = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum::<f64>();
        alphas.push(a);
        for (wi, pi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a * pi;
        }
        // full reorthogonalization, twice for safety
        for _ in 0..2 {
            for q in &basis {
                let c = w.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ritz = smallest_ritz(&alphas, &betas);
        if j >= 10 && (ritz - prev_ritz).abs() <= 1e-12 * scale.max(1e-300) {
            return Ok(ritz);
        }
        prev_ritz = ritz;
        if b < 1e-14 * scale.max(1e-300) {
            return Ok(ritz); // invariant subspace reached
        }
        betas.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
    Err(Error::NonConvergence {
        context: "positivity Lanczos".into(),
        iterations: kmax,
        residual: (prev_ritz - smallest_ritz(&alphas, &betas)).abs(),
    })
}

fn smallest_ritz(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
