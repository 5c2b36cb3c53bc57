//! Uniform periodic grid on a centered box, scalar fields, quadrature
//! norms, pointwise duality maps, support masks and the NLHF file format.
//!
//! Quadrature is the plain midpoint rule `h^N * sum`: cell centers sit at
//! `-L + (k + 1/2) h`. Sums are Neumaier-compensated so quadrature error is
//! dominated by the rule, not by accumulation order.

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub(crate) const MAX_DIM: usize = 4;

/// Uniform Cartesian grid on `[-L, L)^N` with `M` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_extent: f64,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_extent: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::domain(format!("dimension must be 2..=4, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::domain(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::domain(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        Ok(Grid {
            dim,
            points,
            half_extent,
            spacing: 2.0 * half_extent / points as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis (`M`).
    pub fn points(&self) -> usize {
        self.points
    }

    /// Box half extent (`L`).
    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    /// Cell spacing `h = 2L/M`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of cells `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of the k-th cell center along one axis.
    pub fn axis_coord(&self, k: usize) -> f64 {
        -self.half_extent + (k as f64 + 0.5) * self.spacing
    }

    /// Per-axis indices of a flat index (row-major, last axis contiguous).
    pub fn decompose(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in 0..self.dim {
            flat = flat * self.points + idx[a];
        }
        flat
    }

    /// Coordinates of a cell center.
    pub fn cell_center(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.decompose(flat);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.axis_coord(idx[a]);
        }
        x
    }

    /// Row-major strides (last axis contiguous).
    pub(crate) fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        let mut acc = 1;
        for a in (0..self.dim).rev() {
            s[a] = acc;
            acc *= self.points;
        }
        s
    }

    fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

/// Real-valued function sampled at the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "value count {} does not match grid cells {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field contains non-finite entries"));
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample a function of the cell-center coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.cell_center(i);
                f(&x[..grid.dim()])
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `L^q` norm under the midpoint rule: `(h^N sum |f|^q)^(1/q)`.
    pub fn lp_norm(&self, q: f64) -> Result<f64> {
        Ok(self.lp_pow(q)?.powf(1.0 / q))
    }

    /// `h^N sum |f|^q` (the norm to the q-th power), often the quantity
    /// actually needed by the dual functional.
    pub fn lp_pow(&self, q: f64) -> Result<f64> {
        check_exponent(q)?;
        let s = compensated_sum(self.values.iter().map(|v| v.abs().powf(q)));
        Ok(self.grid.cell_volume() * s)
    }

    /// Maximum absolute value.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Quadrature pairing `h^N sum f g`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid, "inner")?;
        let s = compensated_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b),
        );
        Ok(self.grid.cell_volume() * s)
    }

    /// Pointwise duality map `g -> |g|^{q-2} g`, with `0 -> 0`.
    pub fn dual_map(&self, q: f64) -> Result<ScalarField> {
        check_exponent(q)?;
        let e = q - 1.0;
        let values = self
            .values
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum() * v.abs().powf(e)
                }
            })
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    /// Second-order central-difference Laplacian with periodic wraparound.
    /// Consumers must restrict to interior windows away from the boundary.
    pub fn laplacian(&self) -> ScalarField {
        let grid = self.grid;
        let m = grid.points();
        let strides = grid.strides();
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let v = &self.values;
        let mut out = vec![0.0; v.len()];
        for a in 0..grid.dim() {
            let stride = strides[a];
            let block = stride * m;
            for i in 0..v.len() {
                let pos = (i / stride) % m;
                let up = if pos + 1 == m { i + stride - block } else { i + stride };
                let down = if pos == 0 { i + block - stride } else { i - stride };
                out[i] += v[up] - 2.0 * v[i] + v[down];
            }
        }
        for o in &mut out {
            *o *= inv_h2;
        }
        ScalarField { grid, values: out }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid, "add_scaled")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid, "mul_pointwise")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    /// Zero out everything outside the mask.
    pub fn masked(&self, mask: &SupportMask) -> Result<ScalarField> {
        self.grid.check_same(&mask.grid, "masked")?;
        let values = self
            .values
            .iter()
            .zip(&mask.indicator)
            .map(|(v, &keep)| if keep { *v } else { 0.0 })
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Write in the NLHF binary format.
    pub fn write_nlhf(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::with_capacity(16 + self.values.len() * 8);
        buf.extend_from_slice(b"NLHF");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        for _ in 0..self.grid.dim() {
            buf.extend_from_slice(&(self.grid.points() as u32).to_le_bytes());
        }
        for _ in 0..self.grid.dim() {
            buf.extend_from_slice(&self.grid.half_extent().to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        file.write_all(&buf)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Read an NLHF file. The stored grid must be cubic (all axes equal).
    pub fn read_nlhf(path: &Path) -> Result<ScalarField> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut off = 0usize;
        let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
            if *off + n > bytes.len() {
                return Err(Error::FieldFormat("file truncated".into()));
            }
            let s = &bytes[*off..*off + n];
            *off += n;
            Ok(s)
        };
        if take(&mut off, 4)? != b"NLHF" {
            return Err(Error::FieldFormat("bad magic, expected NLHF".into()));
        }
        let rd_u32 = |off: &mut usize| -> Result<u32> {
            Ok(u32::from_le_bytes(take(off, 4)?.try_into().unwrap()))
        };
        let version = rd_u32(&mut off)?;
        if version != 1 {
            return Err(Error::FieldFormat(format!("unsupported version {version}")));
        }
        let dim = rd_u32(&mut off)? as usize;
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::FieldFormat(format!("unsupported dimension {dim}")));
        }
        let mut ms = Vec::with_capacity(dim);
        for _ in 0..dim {
            ms.push(rd_u32(&mut off)? as usize);
        }
        let mut ls = Vec::with_capacity(dim);
        for _ in 0..dim {
            let raw: [u8; 8] = take(&mut off, 8)?.try_into().unwrap();
            ls.push(f64::from_le_bytes(raw));
        }
        if ms.iter().any(|&m| m != ms[0]) || ls.iter().any(|&l| l != ls[0]) {
            return Err(Error::FieldFormat("non-cubic grids are not supported".into()));
        }
        let grid = Grid::new(dim, ms[0], ls[0])
            .map_err(|e| Error::FieldFormat(format!("invalid stored grid: {e}")))?;
        let count = grid.len();
        if bytes.len() - off != count * 8 {
            return Err(Error::FieldFormat(format!(
                "expected {} values, found {} bytes",
                count,
                bytes.len() - off
            )));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let raw: [u8; 8] = take(&mut off, 8)?.try_into().unwrap();
            values.push(f64::from_le_bytes(raw));
        }
        ScalarField::from_values(grid, values)
            .map_err(|e| Error::FieldFormat(format!("invalid field data: {e}")))
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::domain(format!("exponent must satisfy q > 1, got {q}")));
    }
    Ok(())
}

/// Indicator of a cell subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    grid: Grid,
    indicator: Vec<bool>,
}

impl SupportMask {
    pub fn new(grid: Grid, indicator: Vec<bool>) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(Error::domain("mask length does not match grid"));
        }
        Ok(SupportMask { grid, indicator })
    }

    pub fn empty(grid: Grid) -> Self {
        SupportMask {
            grid,
            indicator: vec![false; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.indicator[flat]
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        !self.indicator.iter().any(|&b| b)
    }

    /// Flat indices of the cells in the mask, ascending.
    pub fn cells(&self) -> Vec<usize> {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn intersects(&self, other: &SupportMask) -> bool {
        self.indicator
            .iter()
            .zip(&other.indicator)
            .any(|(&a, &b)| a && b)
    }
}

/// Sign decomposition of a weight: `A_+ = {Q > 0}`, `A_- = {Q < 0}`.
///
/// Cells with `Q = 0` land in neither mask; the weight root vanishes there,
/// so the dual variables carry no information on them.
pub fn masks_from_weight(q: &ScalarField) -> (SupportMask, SupportMask) {
    let aplus = q.values().iter().map(|&v| v > 0.0).collect();
    let aminus = q.values().iter().map(|&v| v < 0.0).collect();
    (
        SupportMask {
            grid: *q.grid(),
            indicator: aplus,
        },
        SupportMask {
            grid: *q.grid(),
            indicator: aminus,
        },
    )
}

/// Cells whose center lies in `[-fraction*L, fraction*L)^N`. PDE residual
/// checks restrict to this window to keep truncation and wraparound effects
/// away from the test surface.
pub fn interior_window(grid: &Grid, fraction: f64) -> SupportMask {
    let bound = fraction * grid.half_extent();
    let indicator = (0..grid.len())
        .map(|i| {
            let x = grid.cell_center(i);
            x[..grid.dim()].iter().all(|&c| -bound <= c && c < bound)
        })
        .collect();
    SupportMask {
        grid: *grid,
        indicator,
    }
}

/// Fill a field with uniform(-1, 1) entries (test/probe helper).
pub fn random_field(grid: Grid, rng: &mut impl rand::Rng) -> ScalarField {
    let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField { grid, values }
}

/// Random field supported on a mask, useful for probing the dual spaces.
pub fn random_field_on(mask: &SupportMask, rng: &mut impl rand::Rng) -> ScalarField {
    let values = mask
        .indicator
        .iter()
        .map(|&b| if b { rng.gen_range(-1.0..1.0) } else { 0.0 })
        .collect();
    ScalarField {
        grid: mask.grid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid2(m: usize, l: f64) -> Grid {
        Grid::new(2, m, l).unwrap()
    }

    /// Kahan oracle, deliberately coded apart from `compensated_sum`.
    fn kahan(values: &[f64]) -> f64 {
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for &x in values {
            let y = x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    #[test]
    fn unit_field_l2_norm_on_unit_box() {
        let g = grid2(16, 1.0);
        let f = ScalarField::from_fn(g, |_| 1.0);
        assert!((f.lp_norm(2.0).unwrap() - 2.0).abs() <= 1e-13);
        assert_eq!(ScalarField::zeros(g).lp_norm(2.0).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_matches_kahan_oracle() {
        let g = grid2(32, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_field(g, &mut rng);
        for q in [1.5, 2.0, 3.0, 6.0] {
            let direct = (g.cell_volume()
                * kahan(&f.values().iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>()))
            .powf(1.0 / q);
            let got = f.lp_norm(q).unwrap();
            assert!((got - direct).abs() <= 1e-13 * direct.abs().max(1e-30));
        }
    }

    #[test]
    fn inner_is_bilinear_and_consistent() {
        let g = grid2(16, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_field(g, &mut rng);
        let gfield = random_field(g, &mut rng);
        let w = random_field(g, &mut rng);
        let n2 = f.lp_norm(2.0).unwrap();
        assert!((f.inner(&f).unwrap() - n2 * n2).abs() <= 1e-12 * n2 * n2);
        assert_eq!(f.inner(&ScalarField::zeros(g)).unwrap(), 0.0);
        let a = 0.37;
        let lhs = f.scaled(a).add_scaled(1.0, &gfield).unwrap().inner(&w).unwrap();
        let rhs = a * f.inner(&w).unwrap() + gfield.inner(&w).unwrap();
        assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let f = ScalarField::zeros(grid2(16, 2.0));
        let g = ScalarField::zeros(grid2(32, 2.0));
        assert!(f.inner(&g).is_err());
    }

    #[test]
    fn holder_inequality_on_random_fields() {
        let p = 3.0;
        let pc = p / (p - 1.0);
        let g = grid2(16, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_field(g, &mut rng);
            let h = random_field(g, &mut rng);
            for (q, qc) in [(p, pc), (pc, p)] {
                let lhs = f.inner(&h).unwrap().abs();
                let rhs = f.lp_norm(q).unwrap() * h.lp_norm(qc).unwrap();
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn dual_map_identity_at_two_and_inverse_pair() {
        let g = grid2(16, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(g, &mut rng);
        let id = f.dual_map(2.0).unwrap();
        assert_eq!(id.values(), f.values());
        // (p-1)(p'-1) = 1, so the maps invert each other.
        let p = 3.0;
        let pc = 1.5;
        let back = f.dual_map(p).unwrap().dual_map(pc).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
        for (o, i) in f.dual_map(p).unwrap().values().iter().zip(f.values()) {
            assert!(o.signum() == i.signum() || *o == 0.0);
        }
    }

    #[test]
    fn dual_map_norm_identity() {
        let g = grid2(16, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_field(g, &mut rng);
        for q in [1.2, 1.5, 3.0, 6.0] {
            let qc = q / (q - 1.0);
            let lhs = f.dual_map(q).unwrap().lp_norm(qc).unwrap();
            let rhs = f.lp_norm(q).unwrap().powf(q - 1.0);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-30), "q={q}");
        }
    }

    #[test]
    fn laplacian_kills_constants_and_is_linear() {
        let g = grid2(16, 2.0);
        let c = ScalarField::from_fn(g, |_| 4.2);
        assert!(c.laplacian().linf_norm() <= 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_field(g, &mut rng);
        let h = random_field(g, &mut rng);
        let a = -1.3;
        let lhs = f.scaled(a).add_scaled(1.0, &h).unwrap().laplacian();
        let rhs = f.laplacian().scaled(a).add_scaled(1.0, &h.laplacian()).unwrap();
        let scale = rhs.linf_norm().max(1.0);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn laplacian_second_order_on_cosine() {
        // L = pi makes cos(x0) exactly periodic, so no boundary caveats.
        let err = |m: usize| {
            let g = Grid::new(2, m, std::f64::consts::PI).unwrap();
            let f = ScalarField::from_fn(g, |x| x[0].cos());
            let lap = f.laplacian();
            let target = ScalarField::from_fn(g, |x| -x[0].cos());
            lap.values()
                .iter()
                .zip(target.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(64);
        let e2 = err(128);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "refinement ratio {ratio}");
    }

    #[test]
    fn masks_split_by_sign_and_stay_disjoint() {
        let g = grid2(16, 2.0);
        let q = ScalarField::from_fn(g, |x| {
            let d1 = (x[0] + 1.0).hypot(x[1]);
            let d2 = (x[0] - 1.0).hypot(x[1]);
            if d1 < 0.5 {
                1.0
            } else if d2 < 0.5 {
                -1.0
            } else {
                0.0
            }
        });
        let (ap, am) = masks_from_weight(&q);
        assert!(!ap.is_empty_mask());
        assert!(!am.is_empty_mask());
        assert!(!ap.intersects(&am));
        for (i, &v) in q.values().iter().enumerate() {
            assert_eq!(ap.contains(i), v > 0.0);
            assert_eq!(am.contains(i), v < 0.0);
        }
        let nonneg = ScalarField::from_fn(g, |x| if x[0] > 0.0 { 1.0 } else { 0.0 });
        let (_, am) = masks_from_weight(&nonneg);
        assert!(am.is_empty_mask());
    }

    #[test]
    fn nlhf_round_trip_is_bit_exact() {
        let g = Grid::new(3, 8, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = random_field(g, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.nlhf");
        f.write_nlhf(&path).unwrap();
        let back = ScalarField::read_nlhf(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn nlhf_rejects_corrupt_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.nlhf");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(ScalarField::read_nlhf(&path).is_err());
        std::fs::write(&path, b"NLHF\x02\x00\x00\x00").unwrap();
        assert!(ScalarField::read_nlhf(&path).is_err());
    }

    #[test]
    fn exponent_domain_errors() {
        let f = ScalarField::zeros(grid2(16, 1.0));
        assert!(f.lp_norm(1.0).is_err());
        assert!(f.lp_norm(0.5).is_err());
        assert!(f.dual_map(1.0).is_err());
    }
}
