//! Internal minimization form `min cᵀx  s.t.  Ax = b,  x ∈ K` over a product
//! of Hermitian PSD blocks (nonnegative scalars are `1×1` blocks, free
//! scalars are split into two).

use std::collections::HashMap;

use super::hermitian::{coord_count, smat};
use super::problem::{Cone, ConicProblem, RowKind, Sense};
use crate::operator::min_eigenvalue;

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut row = SparseRow::default();
        for (i, v) in pairs {
            if row.idx.last() == Some(&i) {
                *row.val.last_mut().unwrap() += v;
            } else {
                row.idx.push(i);
                row.val.push(v);
            }
        }
        let keep: Vec<bool> = row.val.iter().map(|v| *v != 0.0).collect();
        let mut k = keep.iter();
        row.idx.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        row.val.retain(|_| *k.next().unwrap());
        row
    }
}

#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub sizes: Vec<usize>,
    /// Coordinate offset of each block; one extra entry holding the total.
    pub offsets: Vec<usize>,
    pub rows: Vec<SparseRow>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kinds: Vec<RowKind>,
}

/// Where a user variable lives in the standard form.
#[derive(Clone, Copy, Debug)]
pub(crate) enum VarBlocks {
    Single(usize),
    Split(usize, usize),
}

impl StandardForm {
    pub fn num_coords(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_of(&self, coord: usize) -> usize {
        self.offsets.partition_point(|&o| o <= coord) - 1
    }

    pub fn from_problem(p: &ConicProblem) -> (Self, Vec<VarBlocks>) {
        let mut sizes = Vec::new();
        let mut map = Vec::with_capacity(p.num_vars());
        for cone in p.cones() {
            match cone {
                Cone::Psd(k) => {
                    map.push(VarBlocks::Single(sizes.len()));
                    sizes.push(*k);
                }
                Cone::NonNeg => {
                    map.push(VarBlocks::Single(sizes.len()));
                    sizes.push(1);
                }
                Cone::Free => {
                    map.push(VarBlocks::Split(sizes.len(), sizes.len() + 1));
                    sizes.push(1);
                    sizes.push(1);
                }
            }
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        for &k in &sizes {
            offsets.push(acc);
            acc += coord_count(k);
        }
        offsets.push(acc);
        let expand = |var: usize, coord: usize, value: f64, out: &mut Vec<(usize, f64)>| match map[var] {
            VarBlocks::Single(b) => out.push((offsets[b] + coord, value)),
            VarBlocks::Split(pos, neg) => {
                out.push((offsets[pos], value));
                out.push((offsets[neg], -value));
            }
        };
        let sign = if p.sense() == Sense::Maximize { -1.0 } else { 1.0 };
        let mut c = vec![0.0; acc];
        let mut pairs = Vec::new();
        for t in p.objective() {
            pairs.clear();
            expand(t.var.0, t.coord, t.value, &mut pairs);
            for &(i, v) in &pairs {
                c[i] += sign * v;
            }
        }
        let mut rows = Vec::with_capacity(p.num_rows());
        let mut b = Vec::with_capacity(p.num_rows());
        let mut kinds = Vec::with_capacity(p.num_rows());
        for row in p.rows() {
            let mut pairs = Vec::with_capacity(row.terms.len());
            for t in &row.terms {
                expand(t.var.0, t.coord, t.value, &mut pairs);
            }
            rows.push(SparseRow::from_pairs(pairs));
            b.push(row.rhs);
            kinds.push(row.kind);
        }
        (StandardForm { sizes, offsets, rows, b, c, kinds }, map)
    }

    /// `c - Aᵀy`.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<f64> {
        let mut s = self.c.clone();
        for (row, &yi) in self.rows.iter().zip(y) {
            for (&i, &v) in row.idx.iter().zip(&row.val) {
                s[i] -= v * yi;
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BlockFate {
    Kept(usize),
    Zero,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RowFate {
    Kept(usize),
    Empty,
    Duplicate,
    FixesScalar(usize),
    ZeroesBlock(usize),
}

/// Outcome of [`presolve`].
pub(crate) enum Presolved {
    Reduced(Box<Reduction>),
    Infeasible(String),
}

pub(crate) struct Reduction {
    pub form: StandardForm,
    blocks: Vec<BlockFate>,
    rows: Vec<RowFate>,
    /// Special rows in the order they were eliminated.
    eliminated: Vec<usize>,
}

const PRESOLVE_TOL: f64 = 1e-12;

/// Removes trace-zero PSD blocks, fixes scalars pinned by single-variable
/// rows, drops empty and duplicate rows.
pub(crate) fn presolve(form: &StandardForm) -> Presolved {
    let nb = form.sizes.len();
    let mut blocks = vec![BlockFate::Kept(0); nb];
    let mut rows_fate = vec![RowFate::Kept(0); form.rows.len()];
    let mut rows: Vec<SparseRow> = form.rows.clone();
    let mut b = form.b.clone();
    let mut eliminated = Vec::new();
    let scale = |r: &SparseRow| r.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    loop {
        let mut changed = false;
        for r in 0..rows.len() {
            if rows_fate[r] != RowFate::Kept(0) {
                continue;
            }
            // Substitute eliminated blocks.
            let row = &mut rows[r];
            let mut k = 0;
            for j in 0..row.idx.len() {
                let blk = form.block_of(row.idx[j]);
                match blocks[blk] {
                    BlockFate::Kept(_) => {
                        row.idx[k] = row.idx[j];
                        row.val[k] = row.val[j];
                        k += 1;
                    }
                    BlockFate::Zero => {}
                    BlockFate::Fixed(value) => b[r] -= row.val[j] * value,
                }
            }
            row.idx.truncate(k);
            row.val.truncate(k);
            let tol = PRESOLVE_TOL * (1.0 + form.b[r].abs());
            if row.idx.is_empty() {
                if b[r].abs() > tol.max(1e-9) {
                    return Presolved::Infeasible(format!("row {r} reduces to 0 = {}", b[r]));
                }
                rows_fate[r] = RowFate::Empty;
                changed = true;
                continue;
            }
            let first = form.block_of(row.idx[0]);
            let single_block = row.idx.iter().all(|&i| form.block_of(i) == first);
            if !single_block {
                continue;
            }
            let k = form.sizes[first];
            if k == 1 {
                let value = b[r] / row.val[0];
                if value < -1e-9 * (1.0 + scale(row)) {
                    return Presolved::Infeasible(format!("row {r} forces a nonnegative scalar to {value}"));
                }
                blocks[first] = BlockFate::Fixed(value.max(0.0));
                rows_fate[r] = RowFate::FixesScalar(first);
                eliminated.push(r);
                changed = true;
            } else if b[r].abs() <= tol {
                let off = form.offsets[first];
                let diag_only = row.idx.iter().all(|&i| i - off < k);
                let same_sign = row.val.iter().all(|&v| v > 0.0) || row.val.iter().all(|&v| v < 0.0);
                if diag_only && same_sign && row.idx.len() == k {
                    blocks[first] = BlockFate::Zero;
                    rows_fate[r] = RowFate::ZeroesBlock(first);
                    eliminated.push(r);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Duplicate rows, compared after scaling by the first coefficient.
    let mut seen: HashMap<(Vec<usize>, Vec<i64>), usize> = HashMap::new();
    for r in 0..rows.len() {
        if rows_fate[r] != RowFate::Kept(0) {
            continue;
        }
        let row = &rows[r];
        let lead = row.val[0];
        let key_vals: Vec<i64> = row.val.iter().map(|v| ((v / lead) * 1e10).round() as i64).collect();
        let key = (row.idx.clone(), key_vals);
        if let Some(&orig) = seen.get(&key) {
            let exact = rows[orig].val.iter().zip(&row.val).all(|(a, v)| {
                (a / rows[orig].val[0] - v / lead).abs() <= 1e-12 * (1.0 + (v / lead).abs())
            });
            if !exact {
                seen.insert(key, r);
                continue;
            }
            let lhs = b[orig] / rows[orig].val[0];
            let rhs = b[r] / lead;
            if (lhs - rhs).abs() > 1e-9 * (1.0 + lhs.abs()) {
                return Presolved::Infeasible(format!("rows {orig} and {r} are parallel with different right-hand sides"));
            }
            rows_fate[r] = RowFate::Duplicate;
        } else {
            seen.insert(key, r);
        }
    }
    // Renumber.
    let mut sizes = Vec::new();
    let mut offsets = Vec::new();
    let mut acc = 0;
    let mut coord_map = vec![usize::MAX; form.num_coords()];
    for blk in 0..nb {
        if let BlockFate::Kept(_) = blocks[blk] {
            blocks[blk] = BlockFate::Kept(sizes.len());
            let k = form.sizes[blk];
            offsets.push(acc);
            for j in 0..coord_count(k) {
                coord_map[form.offsets[blk] + j] = acc + j;
            }
            acc += coord_count(k);
            sizes.push(k);
        }
    }
    offsets.push(acc);
    let mut c = vec![0.0; acc];
    for (i, &m) in coord_map.iter().enumerate() {
        if m != usize::MAX {
            c[m] = form.c[i];
        }
    }
    let mut new_rows = Vec::new();
    let mut new_b = Vec::new();
    let mut kinds = Vec::new();
    for r in 0..rows.len() {
        if rows_fate[r] == RowFate::Kept(0) {
            rows_fate[r] = RowFate::Kept(new_rows.len());
            new_rows.push(SparseRow {
                idx: rows[r].idx.iter().map(|&i| coord_map[i]).collect(),
                val: rows[r].val.clone(),
            });
            new_b.push(b[r]);
            kinds.push(form.kinds[r]);
        }
    }
    Presolved::Reduced(Box::new(Reduction {
        form: StandardForm { sizes, offsets, rows: new_rows, b: new_b, c, kinds },
        blocks,
        rows: rows_fate,
        eliminated,
    }))
}

impl Reduction {
    /// Maps a reduced primal/dual pair back to the original standard form.
    pub fn postsolve(&self, original: &StandardForm, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut full_x = vec![0.0; original.num_coords()];
        for (blk, fate) in self.blocks.iter().enumerate() {
            let off = original.offsets[blk];
            match *fate {
                BlockFate::Kept(nb) => {
                    let n = coord_count(original.sizes[blk]);
                    let src = self.form.offsets[nb];
                    full_x[off..off + n].copy_from_slice(&x[src..src + n]);
                }
                BlockFate::Zero => {}
                BlockFate::Fixed(v) => full_x[off] = v,
            }
        }
        let mut full_y = vec![0.0; original.rows.len()];
        for (r, fate) in self.rows.iter().enumerate() {
            if let RowFate::Kept(nr) = *fate {
                full_y[r] = y[nr];
            }
        }
        for &r in self.eliminated.iter().rev() {
            full_y[r] = 0.0;
            let s = original.dual_slack(&full_y);
            let row = &original.rows[r];
            match self.rows[r] {
                RowFate::FixesScalar(blk) => {
                    let i = original.offsets[blk];
                    if let Some(pos) = row.idx.iter().position(|&j| j == i) {
                        full_y[r] = s[i] / row.val[pos];
                    }
                }
                RowFate::ZeroesBlock(blk) => {
                    let k = original.sizes[blk];
                    let off = original.offsets[blk];
                    let sign = row.val[0].signum();
                    let mut w = vec![0.0; k];
                    for (&j, &v) in row.idx.iter().zip(&row.val) {
                        w[j - off] = (v * sign).sqrt();
                    }
                    let mut scaled = s[off..off + coord_count(k)].to_vec();
                    let m = smat(&scaled, k);
                    let m = crate::operator::Operator::from_fn(k, |i, j| m.get(i, j) / (w[i] * w[j]));
                    scaled.clear();
                    full_y[r] = sign * min_eigenvalue(&m).unwrap_or(0.0);
                }
                _ => {}
            }
        }
        (full_x, full_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::{ConicProblem, RowKind, Sense};

    #[test]
    fn trace_zero_block_removed() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let f = p.add_psd(2);
        let g = p.add_psd(2);
        p.row(RowKind::Local).coord(f, 0, 1.0).coord(f, 1, 1.0).add();
        p.row(RowKind::Linking).coord(f, 0, 1.0).coord(g, 0, 1.0).rhs(1.0).add();
        let (form, _) = StandardForm::from_problem(&p);
        let Presolved::Reduced(red) = presolve(&form) else { panic!("infeasible") };
        assert_eq!(red.form.sizes, vec![2]);
        assert_eq!(red.form.rows.len(), 1);
        assert_eq!(red.blocks[0], BlockFate::Zero);
    }

    #[test]
    fn duplicate_rows_collapse() {
        let mut p = ConicProblem::new(Sense::Minimize);
        let a = p.add_nonneg();
        let b = p.add_nonneg();
        p.row(RowKind::Linking).scalar(a, 1.0).scalar(b, 2.0).rhs(3.0).add();
        p.row(RowKind::Linking).scalar(a, 2.0).scalar(b, 4.0).rhs(6.0).add();
        let (form, _) = StandardForm::from_problem(&p);
        let Presolved::Reduced(red) = presolve(&form) else { panic!("infeasible") };
        assert_eq!(red.form.rows.len(), 1);
    }

    #[test]
    fn inconsistent_rows_detected() {
        let mut p = ConicProblem::new(Sense::Minimize);
        let a = p.add_nonneg();
        let b = p.add_nonneg();
        p.row(RowKind::Linking).scalar(a, 1.0).scalar(b, 1.0).rhs(1.0).add();
        p.row(RowKind::Linking).scalar(a, 1.0).scalar(b, 1.0).rhs(2.0).add();
        let (form, _) = StandardForm::from_problem(&p);
        assert!(matches!(presolve(&form), Presolved::Infeasible(_)));
        let mut q = ConicProblem::new(Sense::Minimize);
        let a = q.add_nonneg();
        q.row(RowKind::Linking).scalar(a, 1.0).rhs(-1.0).add();
        let (form, _) = StandardForm::from_problem(&q);
        assert!(matches!(presolve(&form), Presolved::Infeasible(_)));
    }

    #[test]
    fn fixed_scalar_substituted() {
        let mut p = ConicProblem::new(Sense::Minimize);
        let a = p.add_nonneg();
        let b = p.add_nonneg();
        p.row(RowKind::Linking).scalar(a, 2.0).rhs(1.0).add();
        p.row(RowKind::Linking).scalar(a, 1.0).scalar(b, 1.0).rhs(1.0).add();
        let (form, _) = StandardForm::from_problem(&p);
        let Presolved::Reduced(red) = presolve(&form) else { panic!("infeasible") };
        // b is then fixed by the second row as well.
        assert_eq!(red.form.sizes.len(), 0);
        let (x, _) = red.postsolve(&form, &[], &[]);
        assert_eq!(x, vec![0.5, 0.5]);
    }
}
