//! Pair correlation functions of the tiling point sets, the exact linear
//! renormalisation system they satisfy, residual checks of empirical tables
//! against that system, and the exact solve through the core eigenproblem.
//!
//! The system expresses each `nu_ij(z)` as `(1/lambda)` times a sum of
//! `nu_kl((z + d)/lambda)` over displacement differences `d`; arguments
//! leaving `Z[lambda]` or the support contribute nothing. All `z` are kept
//! as exact ring elements.

use crate::arith::{ArithError, QuadInt, RingContext};
use crate::inflation::{self, displacement_sets, InflationError, TileType, TilingPatch};
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairCorrError {
    #[error("window {needed} exceeds patch coverage {available}")]
    WindowTooSmall { needed: f64, available: f64 },
    #[error("table window too small to evaluate any renormalised argument")]
    InsufficientWindow,
    #[error("displacement {z} lies outside the table window {window}")]
    MissingEntry { z: String, window: f64 },
    #[error("kernel of the core system has dimension {dimension}, expected 1")]
    DegenerateKernel { dimension: usize },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Inflation(#[from] InflationError),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Provenance {
    Empirical { patch_radius: f64 },
    RenormSolved,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Empirical { .. } => "empirical",
            Provenance::RenormSolved => "solved",
        }
    }
}

/// Values `nu_ij(z)` on exact displacements, complete within `|z| <=
/// window_radius`; displacements absent from the map are zero there.
#[derive(Clone, Debug)]
pub struct PairCorrTable {
    ctx: RingContext,
    window_radius: f64,
    provenance: Provenance,
    tables: [[HashMap<QuadInt, f64>; 2]; 2],
}

impl PairCorrTable {
    pub fn m(&self) -> u32 {
        self.ctx.m()
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn entry_count(&self) -> usize {
        self.tables.iter().flatten().map(HashMap::len).sum()
    }

    /// `nu_ij(z)`: zero for in-window displacements outside the support,
    /// an error beyond the tabulated window.
    pub fn get(&self, i: TileType, j: TileType, z: QuadInt) -> Result<f64, PairCorrError> {
        let z = self.ctx.normalize(z)?;
        if self.ctx.value(z).abs() > self.window_radius * (1.0 + 1e-12) + 1e-9 {
            return Err(PairCorrError::MissingEntry {
                z: z.to_string(),
                window: self.window_radius,
            });
        }
        Ok(self.value_or_zero(i, j, z))
    }

    fn value_or_zero(&self, i: TileType, j: TileType, z: QuadInt) -> f64 {
        self.tables[i.index()][j.index()]
            .get(&z)
            .copied()
            .unwrap_or(0.0)
    }

    /// Entries in a deterministic order: by pair, then by the exact value order.
    pub fn sorted_entries(&self) -> Vec<(TileType, TileType, QuadInt, f64)> {
        let mut out = Vec::with_capacity(self.entry_count());
        for i in TileType::BOTH {
            for j in TileType::BOTH {
                let mut keys: Vec<QuadInt> =
                    self.tables[i.index()][j.index()].keys().copied().collect();
                keys.sort_by(|&p, &q| self.ctx.cmp(p, q));
                for z in keys {
                    out.push((i, j, z, self.value_or_zero(i, j, z)));
                }
            }
        }
        out
    }

    /// Largest violation of `nu_ij(z) = nu_ji(-z)` over the stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, z, v) in self.sorted_entries() {
            let mirrored = self.value_or_zero(j, i, QuadInt::new(-z.a, -z.b));
            worst = worst.max((v - mirrored).abs());
        }
        worst
    }

    /// Largest absolute difference against another table over the union of
    /// supports inside the common window.
    pub fn max_abs_deviation(&self, other: &PairCorrTable) -> f64 {
        let w = self.window_radius.min(other.window_radius);
        let mut worst: f64 = 0.0;
        for (a, b) in [(self, other), (other, self)] {
            for (i, j, z, _) in a.sorted_entries() {
                if a.ctx.value(z).abs() <= w {
                    let d = (a.value_or_zero(i, j, z) - b.value_or_zero(i, j, z)).abs();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }
}

/// Empirical pair correlations of a patch: for every exact displacement
/// `z = y - x` with both endpoints in the window `[-r, r)` and `|z| <= zmax`,
/// the pair count normalized by the number of window points.
pub fn empirical_pair_corr(
    patch: &TilingPatch,
    r: f64,
    zmax: f64,
) -> Result<PairCorrTable, PairCorrError> {
    let needed = r + zmax;
    let available = patch.left_extent().min(patch.right_extent());
    if needed > available {
        return Err(PairCorrError::WindowTooSmall { needed, available });
    }
    let ctx = *patch.ctx();
    let window = patch.window_range(r);
    let n_r = window.len();
    if n_r == 0 {
        return Err(PairCorrError::WindowTooSmall {
            needed: r,
            available: 0.0,
        });
    }
    let indices: Vec<usize> = window.collect();
    let win_start = indices[0];
    let win_end = *indices.last().unwrap();
    let values = patch.values();

    type Counts = [[HashMap<QuadInt, u64>; 2]; 2];
    let counts: Counts = indices
        .par_chunks(8 * 1024)
        .map(|chunk| {
            let mut local: Counts = Default::default();
            for &idx1 in chunk {
                let v1 = values[idx1];
                let x = patch.position(idx1);
                let i = patch.tile_type(idx1).index();
                let lo = values.partition_point(|&v| v < v1 - zmax);
                for idx2 in lo..values.len() {
                    if values[idx2] > v1 + zmax {
                        break;
                    }
                    if idx2 < win_start || idx2 > win_end {
                        continue;
                    }
                    let j = patch.tile_type(idx2).index();
                    let z = ctx
                        .sub(patch.position(idx2), x)
                        .expect("pair displacement overflow");
                    *local[i][j].entry(z).or_insert(0) += 1;
                }
            }
            local
        })
        .reduce(Counts::default, |mut acc, local| {
            for i in 0..2 {
                for j in 0..2 {
                    for (z, c) in local[i][j].iter() {
                        *acc[i][j].entry(*z).or_insert(0) += c;
                    }
                }
            }
            acc
        });

    let norm = n_r as f64;
    let mut tables: [[HashMap<QuadInt, f64>; 2]; 2] = Default::default();
    for i in 0..2 {
        for j in 0..2 {
            tables[i][j] = counts[i][j]
                .iter()
                .map(|(&z, &c)| (z, c as f64 / norm))
                .collect();
        }
    }
    Ok(PairCorrTable {
        ctx,
        window_radius: zmax,
        provenance: Provenance::Empirical {
            patch_radius: patch.radius(),
        },
        tables,
    })
}

/// One term of a renormalisation equation: `multiplicity *
/// nu_source((z + shift)/lambda)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenormTerm {
    pub source: (TileType, TileType),
    pub shift: QuadInt,
    pub multiplicity: u32,
}

/// The linear renormalisation system: one equation per target pair, with a
/// global prefactor `1/lambda` on the right-hand side.
#[derive(Clone, Debug)]
pub struct RenormSystem {
    ctx: RingContext,
    equations: [[Vec<RenormTerm>; 2]; 2],
}

impl RenormSystem {
    pub fn m(&self) -> u32 {
        self.ctx.m()
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }

    pub fn equation(&self, i: TileType, j: TileType) -> &[RenormTerm] {
        &self.equations[i.index()][j.index()]
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.equations
            .iter()
            .flatten()
            .flatten()
            .map(|t| u64::from(t.multiplicity))
            .sum()
    }

    /// Largest `|shift|` over all terms.
    pub fn max_shift_abs(&self) -> f64 {
        self.equations
            .iter()
            .flatten()
            .flatten()
            .map(|t| self.ctx.value(t.shift).abs())
            .fold(0.0, f64::max)
    }
}

/// Generic construction of the renormalisation system from the displacement
/// sets: the equation for `(i, j)` collects a term `nu_kl((z + x - y)/lambda)`
/// for every `x` in `T[i][k]` and `y` in `T[j][l]`, with equal shifts merged
/// into multiplicities.
pub fn derive_renorm_system(m: u32) -> RenormSystem {
    let ctx = RingContext::new(m);
    let disp = displacement_sets(m);
    let mut equations: [[Vec<RenormTerm>; 2]; 2] = Default::default();
    for i in TileType::BOTH {
        for j in TileType::BOTH {
            let mut merged: HashMap<(usize, usize, QuadInt), u32> = HashMap::new();
            for k in TileType::BOTH {
                for l in TileType::BOTH {
                    for &x in disp.get(i, k) {
                        for &y in disp.get(j, l) {
                            let d = ctx.sub(x, y).expect("displacement difference");
                            *merged.entry((k.index(), l.index(), d)).or_insert(0) += 1;
                        }
                    }
                }
            }
            let mut terms: Vec<RenormTerm> = merged
                .into_iter()
                .map(|((k, l, shift), multiplicity)| RenormTerm {
                    source: (TileType::from_index(k), TileType::from_index(l)),
                    shift,
                    multiplicity,
                })
                .collect();
            terms.sort_by(|s, t| {
                s.source
                    .cmp(&t.source)
                    .then_with(|| ctx.cmp(s.shift, t.shift))
            });
            equations[i.index()][j.index()] = terms;
        }
    }
    RenormSystem { ctx, equations }
}

/// Summary of `|lhs - rhs|` over all testable displacements of a table.
#[derive(Clone, Copy, Debug)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub tested_radius: f64,
}

/// Evaluates every equation of the system on the displacements stored in the
/// table, as far inside the window as the shifted arguments stay tabulated.
pub fn check_renorm_residuals(
    table: &PairCorrTable,
    system: &RenormSystem,
) -> Result<ResidualStats, PairCorrError> {
    let ctx = table.ctx;
    let lambda = ctx.lambda_plus();
    let tested_radius = (lambda * table.window_radius - system.max_shift_abs())
        .min(table.window_radius);
    if tested_radius <= 0.0 {
        return Err(PairCorrError::InsufficientWindow);
    }
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, j, z, lhs) in table.sorted_entries() {
        if ctx.value(z).abs() > tested_radius {
            continue;
        }
        let mut rhs = 0.0;
        for term in system.equation(i, j) {
            let arg = ctx.add(z, term.shift)?;
            match ctx.div_lambda(arg) {
                Ok(w) => rhs += f64::from(term.multiplicity) * table.value_or_zero(term.source.0, term.source.1, w),
                Err(ArithError::NotDivisible) => {}
                Err(e) => return Err(e.into()),
            }
        }
        rhs /= lambda;
        let res = (lhs - rhs).abs();
        max = max.max(res);
        sum += res;
        count += 1;
    }
    if count == 0 {
        return Err(PairCorrError::InsufficientWindow);
    }
    Ok(ResidualStats {
        max,
        mean: sum / count as f64,
        count,
        tested_radius,
    })
}

/// Exact solve of the renormalisation system.
#[derive(Clone, Debug)]
pub struct RenormSolution {
    pub table: PairCorrTable,
    pub core_size: usize,
    pub kernel_dim: usize,
    /// `|nu_00(0) - 1/lambda|` after normalization.
    pub frequency_check_error: f64,
}

struct CoreSystem {
    ctx: RingContext,
    system: RenormSystem,
    /// Supports `S_ij` as exact displacement sets, complete up to `radius`.
    supports: [[HashSet<QuadInt>; 2]; 2],
    support_radius: f64,
    /// Core variables `(i, j, z)` with `|z| <= lambda + 1`, sorted.
    vars: Vec<(TileType, TileType, QuadInt)>,
    index: HashMap<(usize, usize, QuadInt), usize>,
    /// Dense row-major matrix of the core map `A`.
    matrix: Vec<f64>,
}

impl CoreSystem {
    fn n(&self) -> usize {
        self.vars.len()
    }
}

fn build_core(m: u32, support_radius: f64) -> Result<CoreSystem, PairCorrError> {
    let ctx = RingContext::new(m);
    let lambda = ctx.lambda_plus();
    let core_radius = lambda + 1.0;
    let support_radius = support_radius.max(core_radius);
    // Differences are read off a patch much wider than the support window so
    // that every legal displacement is seen (linear repetitivity).
    let enum_window = (4.0 * lambda * support_radius).max(400.0);
    let patch = inflation::patch_with_min_radius(m, enum_window + support_radius + 2.0)?;
    let emp = empirical_pair_corr(&patch, enum_window, support_radius)?;

    let mut supports: [[HashSet<QuadInt>; 2]; 2] = Default::default();
    for (i, j, z, _) in emp.sorted_entries() {
        supports[i.index()][j.index()].insert(z);
    }

    let system = derive_renorm_system(m);
    let mut vars: Vec<(TileType, TileType, QuadInt)> = Vec::new();
    for i in TileType::BOTH {
        for j in TileType::BOTH {
            let mut keys: Vec<QuadInt> = supports[i.index()][j.index()]
                .iter()
                .copied()
                .filter(|&z| ctx.value(z).abs() <= core_radius + 1e-9)
                .collect();
            keys.sort_by(|&p, &q| ctx.cmp(p, q));
            vars.extend(keys.into_iter().map(|z| (i, j, z)));
        }
    }
    let index: HashMap<(usize, usize, QuadInt), usize> = vars
        .iter()
        .enumerate()
        .map(|(n, &(i, j, z))| ((i.index(), j.index(), z), n))
        .collect();

    let n = vars.len();
    let mut matrix = vec![0.0f64; n * n];
    for (row, &(i, j, z)) in vars.iter().enumerate() {
        for term in system.equation(i, j) {
            let arg = ctx.add(z, term.shift)?;
            let w = match ctx.div_lambda(arg) {
                Ok(w) => w,
                Err(ArithError::NotDivisible) => continue,
                Err(e) => return Err(e.into()),
            };
            if let Some(&col) = index.get(&(term.source.0.index(), term.source.1.index(), w)) {
                matrix[row * n + col] += f64::from(term.multiplicity) / lambda;
            }
        }
    }
    Ok(CoreSystem {
        ctx,
        system,
        supports,
        support_radius,
        vars,
        index,
        matrix,
    })
}

/// Null space of a dense matrix by Gauss-Jordan elimination with partial
/// pivoting; pivots below `tol_rel` times the largest entry count as zero.
fn kernel_vectors(mut b: Vec<f64>, n: usize, tol_rel: f64) -> Vec<Vec<f64>> {
    let scale = b.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    let tol = tol_rel * scale;
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut row = 0usize;
    for col in 0..n {
        let mut best = row;
        for r in row..n {
            if b[r * n + col].abs() > b[best * n + col].abs() {
                best = r;
            }
        }
        if b[best * n + col].abs() <= tol {
            continue;
        }
        for c in 0..n {
            b.swap(row * n + c, best * n + c);
        }
        let p = b[row * n + col];
        for c in 0..n {
            b[row * n + c] /= p;
        }
        for r in 0..n {
            if r != row {
                let f = b[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        b[r * n + c] -= f * b[row * n + c];
                    }
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == n {
            break;
        }
    }
    let mut kernel = Vec::new();
    for free in 0..n {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![0.0f64; n];
        v[free] = 1.0;
        for (col, pr) in pivot_of_col.iter().enumerate() {
            if let Some(pr) = pr {
                v[col] = -b[pr * n + free];
            }
        }
        kernel.push(v);
    }
    kernel
}

/// Solves the renormalisation system for the family member `m`: finds the
/// one-dimensional fixed space of the core map, normalizes it by
/// `nu_00(0) + nu_11(0) = 1`, and extends to `|z| <= rmax` by the memoized
/// recursion (which strictly shrinks `|z|` until the core is reached).
pub fn solve_renorm(m: u32, rmax: f64) -> Result<RenormSolution, PairCorrError> {
    let core = build_core(m, rmax)?;
    let ctx = core.ctx;
    let lambda = ctx.lambda_plus();
    let core_radius = lambda + 1.0;
    let n = core.n();

    // A - I
    let mut shifted = core.matrix.clone();
    for d in 0..n {
        shifted[d * n + d] -= 1.0;
    }
    let kernel = kernel_vectors(shifted, n, 1e-9);
    if kernel.len() != 1 {
        return Err(PairCorrError::DegenerateKernel {
            dimension: kernel.len(),
        });
    }
    let mut solution = kernel.into_iter().next().unwrap();

    let idx_00 = core.index[&(0, 0, QuadInt::ZERO)];
    let idx_11 = core.index[&(1, 1, QuadInt::ZERO)];
    let scale = solution[idx_00] + solution[idx_11];
    if scale.abs() < 1e-12 {
        return Err(PairCorrError::DegenerateKernel { dimension: 1 });
    }
    for v in solution.iter_mut() {
        *v /= scale;
    }
    let frequency_check_error = (solution[idx_00] - 1.0 / lambda).abs();

    // memoized extension beyond the core
    let mut memo: HashMap<(usize, usize, QuadInt), f64> = HashMap::new();
    for (k, &(i, j, z)) in core.vars.iter().enumerate() {
        memo.insert((i.index(), j.index(), z), solution[k]);
    }
    fn eval(
        ctx: &RingContext,
        core: &CoreSystem,
        core_radius: f64,
        memo: &mut HashMap<(usize, usize, QuadInt), f64>,
        i: TileType,
        j: TileType,
        z: QuadInt,
    ) -> Result<f64, PairCorrError> {
        if !core.supports[i.index()][j.index()].contains(&z) {
            return Ok(0.0);
        }
        if let Some(&v) = memo.get(&(i.index(), j.index(), z)) {
            return Ok(v);
        }
        if ctx.value(z).abs() <= core_radius + 1e-9 {
            // inside the core every support point is a variable; a miss means
            // the value is pinned to zero
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for term in core.system.equation(i, j) {
            let arg = ctx.add(z, term.shift)?;
            match ctx.div_lambda(arg) {
                Ok(w) => {
                    acc += f64::from(term.multiplicity)
                        * eval(ctx, core, core_radius, memo, term.source.0, term.source.1, w)?;
                }
                Err(ArithError::NotDivisible) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let v = acc / ctx.lambda_plus();
        memo.insert((i.index(), j.index(), z), v);
        Ok(v)
    }

    let rmax = rmax.max(core_radius);
    let mut tables: [[HashMap<QuadInt, f64>; 2]; 2] = Default::default();
    for i in TileType::BOTH {
        for j in TileType::BOTH {
            let keys: Vec<QuadInt> = core.supports[i.index()][j.index()]
                .iter()
                .copied()
                .filter(|&z| ctx.value(z).abs() <= rmax)
                .collect();
            for z in keys {
                let v = eval(&ctx, &core, core_radius, &mut memo, i, j, z)?;
                tables[i.index()][j.index()].insert(z, v);
            }
        }
    }

    // nu_ij(z) = nu_ji(-z) holds exactly; make it bitwise by letting both
    // orientations share the canonical evaluation
    for i in 0..2usize {
        for j in 0..2usize {
            let keys: Vec<QuadInt> = tables[i][j].keys().copied().collect();
            for z in keys {
                let neg = QuadInt::new(-z.a, -z.b);
                let canonical = i < j
                    || (i == j && ctx.cmp(z, QuadInt::ZERO) != std::cmp::Ordering::Less);
                if !canonical {
                    if let Some(&v) = tables[j][i].get(&neg) {
                        tables[i][j].insert(z, v);
                    }
                }
            }
        }
    }

    Ok(RenormSolution {
        table: PairCorrTable {
            ctx,
            window_radius: rmax.min(core.support_radius),
            provenance: Provenance::RenormSolved,
            tables,
        },
        core_size: n,
        kernel_dim: 1,
        frequency_check_error,
    })
}
