//! Schur complement `A D Aᵀ` with arrow structure.
//!
//! Local rows are grouped with the blocks they touch (union-find); each group
//! is eliminated on its own, leaving a dense system in the linking rows.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cholesky::Cholesky;
use super::problem::RowKind;

/// Constraint data restricted to one cone block.
pub(crate) struct BlockRows {
    pub k: usize,
    pub offset: usize,
    /// Global indices of the rows touching the block, ascending.
    pub rows: Vec<usize>,
    /// `rows.len() × k²` coefficient matrix.
    pub a: DMatrix<f64>,
}

struct GroupPlan {
    local: Vec<usize>,
    /// Positions in the linking list.
    link: Vec<usize>,
    /// Each block with the position of each of its rows in `local ++ link`.
    blocks: Vec<(usize, Vec<usize>)>,
}

pub(crate) struct SchurPlan {
    m: usize,
    linking: Vec<usize>,
    groups: Vec<GroupPlan>,
    loose: Vec<(usize, Vec<usize>)>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl SchurPlan {
    pub fn new(m: usize, kinds: &[RowKind], blocks: &[BlockRows]) -> Self {
        let nb = blocks.len();
        let mut parent: Vec<usize> = (0..nb).collect();
        let mut row_first_block = vec![usize::MAX; m];
        let mut has_local = vec![false; nb];
        for (bi, blk) in blocks.iter().enumerate() {
            for &r in &blk.rows {
                if kinds[r] != RowKind::Local {
                    continue;
                }
                has_local[bi] = true;
                if row_first_block[r] == usize::MAX {
                    row_first_block[r] = bi;
                } else {
                    let a = find(&mut parent, row_first_block[r]);
                    let b = find(&mut parent, bi);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let linking: Vec<usize> = (0..m).filter(|&r| kinds[r] == RowKind::Linking || row_first_block[r] == usize::MAX).collect();
        let mut link_pos = vec![usize::MAX; m];
        for (p, &r) in linking.iter().enumerate() {
            link_pos[r] = p;
        }
        let mut group_of_root = vec![usize::MAX; nb];
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut loose_blocks = Vec::new();
        for bi in 0..nb {
            if !has_local[bi] {
                loose_blocks.push(bi);
                continue;
            }
            let root = find(&mut parent, bi);
            if group_of_root[root] == usize::MAX {
                group_of_root[root] = members.len();
                members.push(Vec::new());
            }
            members[group_of_root[root]].push(bi);
        }
        let groups = members
            .into_iter()
            .map(|bs| {
                let mut local: Vec<usize> = Vec::new();
                let mut link: Vec<usize> = Vec::new();
                for &bi in &bs {
                    for &r in &blocks[bi].rows {
                        if link_pos[r] == usize::MAX {
                            local.push(r);
                        } else {
                            link.push(link_pos[r]);
                        }
                    }
                }
                local.sort_unstable();
                local.dedup();
                link.sort_unstable();
                link.dedup();
                let blocks = bs
                    .iter()
                    .map(|&bi| {
                        let pos = blocks[bi]
                            .rows
                            .iter()
                            .map(|&r| match local.binary_search(&r) {
                                Ok(p) => p,
                                Err(_) => local.len() + link.binary_search(&link_pos[r]).unwrap(),
                            })
                            .collect();
                        (bi, pos)
                    })
                    .collect();
                GroupPlan { local, link, blocks }
            })
            .collect();
        let loose = loose_blocks.into_iter().map(|bi| (bi, blocks[bi].rows.iter().map(|&r| link_pos[r]).collect())).collect();
        Self { m, linking, groups, loose }
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_linking(&self) -> usize {
        self.linking.len()
    }
}

struct GroupFactor {
    chol: Cholesky,
    /// `local × link` coupling block.
    mgl: DMatrix<f64>,
}

pub(crate) struct SchurFactor {
    groups: Vec<GroupFactor>,
    s: Cholesky,
    pub replaced: usize,
}

fn block_contribution(blk: &BlockRows, d: &DMatrix<f64>) -> DMatrix<f64> {
    let t = &blk.a * d;
    &t * blk.a.transpose()
}

impl SchurFactor {
    pub fn factor(plan: &SchurPlan, blocks: &[BlockRows], dmats: &[DMatrix<f64>]) -> Self {
        let nl = plan.linking.len();
        let parts: Vec<(GroupFactor, DMatrix<f64>)> = plan
            .groups
            .par_iter()
            .map(|g| {
                let nloc = g.local.len();
                let total = nloc + g.link.len();
                let mut mg = DMatrix::zeros(total, total);
                for (bi, pos) in &g.blocks {
                    let mb = block_contribution(&blocks[*bi], &dmats[*bi]);
                    for (i, &pi) in pos.iter().enumerate() {
                        for (j, &pj) in pos.iter().enumerate() {
                            mg[(pi, pj)] += mb[(i, j)];
                        }
                    }
                }
                let mgg = mg.view((0, 0), (nloc, nloc)).into_owned();
                let mgl = mg.view((0, nloc), (nloc, g.link.len())).into_owned();
                let mll = mg.view((nloc, nloc), (g.link.len(), g.link.len())).into_owned();
                let chol = Cholesky::factor(&mgg);
                let mut z = mgl.clone();
                chol.solve_matrix(&mut z);
                let contrib = mll - mgl.transpose() * z;
                (GroupFactor { chol, mgl }, contrib)
            })
            .collect();
        let loose: Vec<DMatrix<f64>> = plan.loose.par_iter().map(|(bi, _)| block_contribution(&blocks[*bi], &dmats[*bi])).collect();
        let mut s = DMatrix::zeros(nl, nl);
        let mut groups = Vec::with_capacity(parts.len());
        let mut replaced = 0;
        for (g, (gf, contrib)) in plan.groups.iter().zip(parts) {
            for (i, &pi) in g.link.iter().enumerate() {
                for (j, &pj) in g.link.iter().enumerate() {
                    s[(pi, pj)] += contrib[(i, j)];
                }
            }
            replaced += gf.chol.replaced;
            groups.push(gf);
        }
        for ((_, pos), mb) in plan.loose.iter().zip(loose) {
            for (i, &pi) in pos.iter().enumerate() {
                for (j, &pj) in pos.iter().enumerate() {
                    s[(pi, pj)] += mb[(i, j)];
                }
            }
        }
        let s = Cholesky::factor(&s);
        log::trace!("schur: {replaced} local pivots, {} linking pivots regularized", s.replaced);
        replaced += s.replaced;
        Self { groups, s, replaced }
    }

    pub fn solve(&self, plan: &SchurPlan, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), plan.m);
        let mut r_link: Vec<f64> = plan.linking.iter().map(|&r| rhs[r]).collect();
        let reduced: Vec<Vec<f64>> = plan
            .groups
            .par_iter()
            .zip(&self.groups)
            .map(|(g, gf)| {
                let mut t: Vec<f64> = g.local.iter().map(|&r| rhs[r]).collect();
                gf.chol.solve_in_place(&mut t);
                (0..g.link.len()).map(|j| gf.mgl.column(j).iter().zip(&t).map(|(a, b)| a * b).sum()).collect()
            })
            .collect();
        for (g, red) in plan.groups.iter().zip(&reduced) {
            for (&p, v) in g.link.iter().zip(red) {
                r_link[p] -= v;
            }
        }
        self.s.solve_in_place(&mut r_link);
        let mut y = vec![0.0; plan.m];
        for (&r, &v) in plan.linking.iter().zip(&r_link) {
            y[r] = v;
        }
        let locals: Vec<Vec<f64>> = plan
            .groups
            .par_iter()
            .zip(&self.groups)
            .map(|(g, gf)| {
                let mut t: Vec<f64> = g.local.iter().map(|&r| rhs[r]).collect();
                for (j, &p) in g.link.iter().enumerate() {
                    let yl = r_link[p];
                    if yl != 0.0 {
                        for (ti, a) in t.iter_mut().zip(gf.mgl.column(j).iter()) {
                            *ti -= a * yl;
                        }
                    }
                }
                gf.chol.solve_in_place(&mut t);
                t
            })
            .collect();
        for (g, t) in plan.groups.iter().zip(locals) {
            for (&r, v) in g.local.iter().zip(t) {
                y[r] = v;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_solve() {
        // Two blocks of size 1 (one coordinate each) plus a 2×2 block; rows:
        // local on block 0, local on blocks 1 and 2, linking on all.
        let blocks = vec![
            BlockRows { k: 1, offset: 0, rows: vec![0, 2], a: DMatrix::from_row_slice(2, 1, &[1.0, 2.0]) },
            BlockRows { k: 1, offset: 1, rows: vec![1, 2], a: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]) },
            BlockRows {
                k: 2,
                offset: 2,
                rows: vec![1, 2, 3],
                a: DMatrix::from_row_slice(3, 4, &[1.0, 1.0, 0.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            },
        ];
        let kinds = [RowKind::Local, RowKind::Local, RowKind::Linking, RowKind::Linking];
        let dmats: Vec<DMatrix<f64>> = blocks
            .iter()
            .map(|b| {
                let n = b.k * b.k;
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 })
            })
            .collect();
        let plan = SchurPlan::new(4, &kinds, &blocks);
        assert_eq!(plan.num_groups(), 2);
        let f = SchurFactor::factor(&plan, &blocks, &dmats);
        let mut dense: DMatrix<f64> = DMatrix::zeros(4, 4);
        for (b, d) in blocks.iter().zip(&dmats) {
            let mb = block_contribution(b, d);
            for (i, &ri) in b.rows.iter().enumerate() {
                for (j, &rj) in b.rows.iter().enumerate() {
                    dense[(ri, rj)] += mb[(i, j)];
                }
            }
        }
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let y = f.solve(&plan, &rhs);
        let back = &dense * nalgebra::DVector::from_vec(y);
        for i in 0..4 {
            assert!((back[i] - rhs[i]).abs() < 1e-12);
        }
    }
}
