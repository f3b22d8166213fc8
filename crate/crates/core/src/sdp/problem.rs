use std::io::{self, Write};

use super::hermitian::{coord_count, svec};
use crate::operator::Operator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RowId(pub(crate) usize);

impl RowId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// Hermitian positive semidefinite `k×k` block.
    Psd(usize),
    NonNeg,
    Free,
}

impl Cone {
    pub fn coords(self) -> usize {
        match self {
            Cone::Psd(k) => coord_count(k),
            Cone::NonNeg | Cone::Free => 1,
        }
    }
}

/// How an equality couples blocks.
///
/// Local rows touch a small set of blocks; the solver eliminates connected
/// groups of local rows first. Linking rows may touch any number of blocks
/// and form the dense part of the Schur complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Local,
    Linking,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub var: VarId,
    pub coord: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub terms: Vec<Term>,
    pub rhs: f64,
    pub kind: RowKind,
}

/// `optimize Σ c·x  s.t.  Σ a·x = b` over a product of cones.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    sense: Sense,
    cones: Vec<Cone>,
    rows: Vec<Row>,
    objective: Vec<Term>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        Self { sense, cones: Vec::new(), rows: Vec::new(), objective: Vec::new() }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_var(&mut self, cone: Cone) -> VarId {
        if let Cone::Psd(k) = cone {
            assert!(k > 0, "PSD blocks need positive size");
        }
        self.cones.push(cone);
        VarId(self.cones.len() - 1)
    }

    pub fn add_psd(&mut self, k: usize) -> VarId {
        self.add_var(Cone::Psd(k))
    }

    pub fn add_nonneg(&mut self) -> VarId {
        self.add_var(Cone::NonNeg)
    }

    pub fn add_free(&mut self) -> VarId {
        self.add_var(Cone::Free)
    }

    pub fn cone(&self, var: VarId) -> Cone {
        self.cones[var.0]
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[Term] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.cones.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, kind: RowKind, terms: Vec<Term>, rhs: f64) -> RowId {
        for t in &terms {
            assert!(t.coord < self.cones[t.var.0].coords(), "coordinate out of range for variable");
        }
        self.rows.push(Row { terms, rhs, kind });
        RowId(self.rows.len() - 1)
    }

    pub fn row(&mut self, kind: RowKind) -> RowBuilder<'_> {
        RowBuilder { problem: self, terms: Vec::new(), rhs: 0.0, kind }
    }

    pub fn set_objective_coord(&mut self, var: VarId, coord: usize, value: f64) {
        assert!(coord < self.cones[var.0].coords());
        self.objective.push(Term { var, coord, value });
    }

    pub fn set_objective_scalar(&mut self, var: VarId, value: f64) {
        self.set_objective_coord(var, 0, value);
    }

    /// Adds `Re tr(C X)` to the objective.
    pub fn set_objective_hermitian(&mut self, var: VarId, c: &Operator) {
        for (coord, value) in svec(c).into_iter().enumerate() {
            if value != 0.0 {
                self.objective.push(Term { var, coord, value });
            }
        }
    }

    /// Writes the problem in a line-oriented sparse text format:
    ///
    /// ```text
    /// sense max|min
    /// var <index> psd <k> | nonneg | free
    /// c <var> <coord> <value>
    /// row <index> local|linking <rhs>
    /// a <row> <var> <coord> <value>
    /// ```
    pub fn dump(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "sense {}", if self.sense == Sense::Maximize { "max" } else { "min" })?;
        for (i, cone) in self.cones.iter().enumerate() {
            match cone {
                Cone::Psd(k) => writeln!(out, "var {i} psd {k}")?,
                Cone::NonNeg => writeln!(out, "var {i} nonneg")?,
                Cone::Free => writeln!(out, "var {i} free")?,
            }
        }
        for t in &self.objective {
            writeln!(out, "c {} {} {:e}", t.var.0, t.coord, t.value)?;
        }
        for (r, row) in self.rows.iter().enumerate() {
            let kind = if row.kind == RowKind::Local { "local" } else { "linking" };
            writeln!(out, "row {r} {kind} {:e}", row.rhs)?;
            for t in &row.terms {
                writeln!(out, "a {r} {} {} {:e}", t.var.0, t.coord, t.value)?;
            }
        }
        Ok(())
    }
}

pub struct RowBuilder<'a> {
    problem: &'a mut ConicProblem,
    terms: Vec<Term>,
    rhs: f64,
    kind: RowKind,
}

impl RowBuilder<'_> {
    pub fn coord(mut self, var: VarId, coord: usize, value: f64) -> Self {
        if value != 0.0 {
            self.terms.push(Term { var, coord, value });
        }
        self
    }

    pub fn scalar(self, var: VarId, value: f64) -> Self {
        self.coord(var, 0, value)
    }

    /// Adds `Re tr(C X)` for Hermitian `C`.
    pub fn hermitian(mut self, var: VarId, c: &Operator) -> Self {
        for (coord, value) in svec(c).into_iter().enumerate() {
            if value != 0.0 {
                self.terms.push(Term { var, coord, value });
            }
        }
        self
    }

    /// Adds `Σ_c w_c x_c` for a coordinate weight vector.
    pub fn coords(mut self, var: VarId, weights: &[f64]) -> Self {
        for (coord, &value) in weights.iter().enumerate() {
            if value != 0.0 {
                self.terms.push(Term { var, coord, value });
            }
        }
        self
    }

    pub fn rhs(mut self, rhs: f64) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn add(self) -> RowId {
        self.problem.add_row(self.kind, self.terms, self.rhs)
    }
}
