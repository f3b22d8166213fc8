/// Validation thresholds shared by every module.
///
/// The defaults are the ones the library is tested against; callers that
/// load noisy data from disk usually only want to loosen `json_hermitian`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Elementwise bound on `A - A^†` for operators tagged Hermitian.
    pub hermitian: f64,
    /// Smallest eigenvalue accepted as positive semidefinite.
    pub psd: f64,
    /// Elementwise bound on `Σ E_a - I`.
    pub completeness: f64,
    /// Elementwise bound on `U^†U - I`.
    pub unitary: f64,
    /// Elementwise bound for "equal up to global phase" in group closure.
    pub dedup: f64,
    /// Bound on `| |<ψ_a|ψ_b>|² - 1/(d+1) |` for SIC constructions.
    pub sic_overlap: f64,
    /// Elementwise bound on `P² - P` and `P_a P_b`.
    pub projector: f64,
    /// Bound on the row sums of a post-processing table.
    pub stochastic_row: f64,
    /// Bound on `Σ q_λ - 1`.
    pub weight_sum: f64,
    /// Hermiticity bound applied when parsing POVM JSON.
    pub json_hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        psd: 1e-9,
        completeness: 1e-9,
        unitary: 1e-10,
        dedup: 1e-9,
        sic_overlap: 1e-8,
        projector: 1e-9,
        stochastic_row: 1e-12,
        weight_sum: 1e-9,
        json_hermitian: 1e-9,
    };
}
