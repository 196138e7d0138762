//! Benchmark fixtures shared by the criterion targets.

use helium_jc::hydrogen::bohr_radius;
use helium_jc::operators::fock_ops;
use helium_jc::{CMatrix, GridSpec, PhysicalParams, C64};

/// Default parameters and their default vertical grid.
pub fn default_problem() -> (PhysicalParams, GridSpec) {
    let p = PhysicalParams::default();
    let grid = GridSpec::default_for(bohr_radius(p.lambda_image));
    (p, grid)
}

/// Anti-Hermitian displacement generator `r b† − r* b` on `dim` levels.
pub fn displacement_generator(r: C64, dim: usize) -> CMatrix {
    let ops = fock_ops(dim).expect("dim >= 1");
    ops.create * r - ops.annihilate * r.conj()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_anti_hermitian() {
        let g = displacement_generator(C64::new(0.3, -0.2), 8);
        assert!((&g + g.adjoint()).iter().all(|z| z.norm() < 1e-15));
    }
}
