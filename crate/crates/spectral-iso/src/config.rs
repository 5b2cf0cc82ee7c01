/// Shared numerical and capacity knobs.
///
/// `tol` and `cluster_tol` are scaled by `max(1, inf-norm of A)` at the
/// point of use; `zero_tol` scales with the inf-norm of the vector whose
/// signs are being read.
#[derive(Debug, Clone, Copy)]
pub struct Config {
    /// Inner-product comparison tolerance (relative base).
    pub tol: f64,
    /// Eigenvalue clustering tolerance (relative base).
    pub cluster_tol: f64,
    /// Sign-vector zero threshold (relative to vector inf-norm).
    pub zero_tol: f64,
    /// Rank cutoff for orthonormalization, relative to largest pivot.
    pub rank_tol: f64,
    /// Orthonormality check tolerance.
    pub eps_orth: f64,
    /// Eigen-residual tolerance (relative base).
    pub eps_res: f64,
    /// Largest n the brute-force oracle accepts.
    pub oracle_cap: usize,
    /// Worker threads for per-vertex stages; 0 = all available cores.
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol: 1e-7,
            cluster_tol: 1e-7,
            zero_tol: 1e-7,
            rank_tol: 1e-9,
            eps_orth: 1e-10,
            eps_res: 1e-9,
            oracle_cap: 12,
            threads: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, v) in [
            ("tol", self.tol),
            ("cluster_tol", self.cluster_tol),
            ("zero_tol", self.zero_tol),
            ("rank_tol", self.rank_tol),
            ("eps_orth", self.eps_orth),
            ("eps_res", self.eps_res),
        ] {
            if !(v > 0.0) {
                return Err(crate::error::Error::Invalid(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        if self.oracle_cap > 16 {
            return Err(crate::error::Error::Invalid(format!(
                "oracle_cap must be at most 16, got {}",
                self.oracle_cap
            )));
        }
        Ok(())
    }

    /// Absolute tolerance for a matrix with the given inf-norm.
    pub fn abs_tol(&self, a_norm: f64) -> f64 {
        self.tol * a_norm.max(1.0)
    }

    pub fn abs_cluster_tol(&self, a_norm: f64) -> f64 {
        self.cluster_tol * a_norm.max(1.0)
    }

    pub fn abs_res_tol(&self, a_norm: f64) -> f64 {
        self.eps_res * a_norm.max(1.0)
    }
}
