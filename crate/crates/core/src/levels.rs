//! Nested space-time level hierarchy, grid transfer and the abstract cost model.
//!
//! Level `l` refines level `l-1` by the integer ratio Γ in both space and time,
//! so the CFL ratio `dt/dx` is identical on every level. Costs are counted in
//! units of one level-0 solve.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One space-time discretisation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub level_index: usize,
    pub dt: f64,
    pub dx: f64,
    pub n_cells: usize,
    pub n_steps: usize,
    pub cfl_ratio: f64,
    /// Left end of the spatial domain.
    pub x_lo: f64,
}

impl LevelSpec {
    /// Grid node `x_lo + i dx`. Node-aligned grids nest exactly under injection.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    /// Cell centre `x_lo + (i + 1/2) dx`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }

    /// Final time `n_steps * dt`.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHierarchy {
    pub domain: (f64, f64),
    pub horizon: f64,
    pub gamma: usize,
    pub level0: LevelSpec,
    pub max_level: usize,
}

const DIVISIBILITY_TOL: f64 = 1e-9;

fn exact_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let q = num / den;
    let r = q.round();
    if r < 1.0 || (q - r).abs() > DIVISIBILITY_TOL * r.max(1.0) {
        return Err(Error::Config(format!(
            "{what}: {num} is not an integer multiple of {den}"
        )));
    }
    Ok(r as usize)
}

/// Builds the level hierarchy from the level-0 mesh size and the CFL ratio.
pub fn build_hierarchy(
    domain: (f64, f64),
    horizon: f64,
    gamma: usize,
    dx0: f64,
    kappa: f64,
    max_level: usize,
) -> Result<GridHierarchy> {
    if gamma < 2 {
        return Err(Error::Config(format!("refinement ratio must be >= 2, got {gamma}")));
    }
    let (x_lo, x_hi) = domain;
    if !(x_hi > x_lo) || !(dx0 > 0.0) || !(kappa > 0.0) || !(horizon > 0.0) {
        return Err(Error::Config(
            "domain, horizon, dx0 and kappa must be positive".into(),
        ));
    }
    let n_cells = exact_ratio(x_hi - x_lo, dx0, "domain length")?;
    let n_steps = exact_ratio(horizon, kappa * dx0, "time horizon")?;
    let dx = (x_hi - x_lo) / n_cells as f64;
    let dt = horizon / n_steps as f64;
    let level0 = LevelSpec {
        level_index: 0,
        dt,
        dx,
        n_cells,
        n_steps,
        cfl_ratio: dt / dx,
        x_lo,
    };
    Ok(GridHierarchy {
        domain,
        horizon,
        gamma,
        level0,
        max_level,
    })
}

impl GridHierarchy {
    /// Level `l`; refinement by Γ^l is exact in floating point for dyadic Γ.
    pub fn level(&self, l: usize) -> LevelSpec {
        let scale = self.gamma.pow(l as u32);
        let s = scale as f64;
        LevelSpec {
            level_index: l,
            dt: self.level0.dt / s,
            dx: self.level0.dx / s,
            n_cells: self.level0.n_cells * scale,
            n_steps: self.level0.n_steps * scale,
            cfl_ratio: self.level0.cfl_ratio,
            x_lo: self.level0.x_lo,
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = LevelSpec> + '_ {
        (0..=self.max_level).map(|l| self.level(l))
    }

    /// Injection restriction of `fine` down to `to_level`.
    pub fn restrict(&self, fine: &FieldSolution, to_level: usize) -> Result<FieldSolution> {
        restrict_field(fine, to_level, self.gamma)
    }

    pub fn domain_length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }
}

/// Solution fields of one sample at the final time on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub level_index: usize,
    pub variables: Vec<&'static str>,
    pub values: Vec<Vec<f64>>,
}

impl FieldSolution {
    pub fn new(level_index: usize, variables: Vec<&'static str>, values: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(variables.len(), values.len());
        Self {
            level_index,
            variables,
            values,
        }
    }

    pub fn scalar(level_index: usize, name: &'static str, values: Vec<f64>) -> Self {
        Self::new(level_index, vec![name], vec![values])
    }

    pub fn n_cells(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn variable(&self, name: &str) -> Option<&[f64]> {
        self.variables
            .iter()
            .position(|v| *v == name)
            .map(|k| self.values[k].as_slice())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }
}

/// Keeps every `stride`-th value, starting at index 0.
pub fn inject(values: &[f64], stride: usize) -> Vec<f64> {
    values.iter().step_by(stride).copied().collect()
}

/// Injection restriction: coarse cell `i` takes fine cell `i * gamma^(levels apart)`.
pub fn restrict_field(fine: &FieldSolution, to_level: usize, gamma: usize) -> Result<FieldSolution> {
    if to_level > fine.level_index {
        return Err(Error::Argument(format!(
            "cannot restrict level {} field to finer level {to_level}",
            fine.level_index
        )));
    }
    let stride = gamma.pow((fine.level_index - to_level) as u32);
    if !fine.n_cells().is_multiple_of(stride) {
        return Err(Error::Argument(format!(
            "{} cells are not nested under stride {stride}",
            fine.n_cells()
        )));
    }
    Ok(FieldSolution {
        level_index: to_level,
        variables: fine.variables.clone(),
        values: fine.values.iter().map(|v| inject(v, stride)).collect(),
    })
}

/// Cost of one solve on `level`: Γ^{dims * level}.
pub fn single_cost(level: usize, gamma: usize, dims: u32) -> f64 {
    (gamma as f64).powi((dims as usize * level) as i32)
}

/// Cost of one coupled fine/coarse pair on `level` (level 0 is a single solve).
pub fn pair_cost(level: usize, gamma: usize, dims: u32) -> f64 {
    if level == 0 {
        1.0
    } else {
        single_cost(level, gamma, dims) + single_cost(level - 1, gamma, dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn advection_grid() -> GridHierarchy {
        build_hierarchy((-1.0, 1.0), 1.0, 2, 1.0 / 32.0, 0.5, 8).unwrap()
    }

    #[test]
    fn advection_level_zero_and_one() {
        let h = advection_grid();
        let l0 = h.level(0);
        assert_eq!(l0.n_cells, 64);
        assert_eq!(l0.dt, 1.0 / 64.0);
        assert_eq!(l0.n_steps, 64);
        let l1 = h.level(1);
        assert_eq!(l1.n_cells, 128);
        assert_eq!(l1.dt, 1.0 / 128.0);
        assert_eq!(l1.n_steps, 128);
    }

    #[test]
    fn euler_grid_has_eighty_steps() {
        // 2 / (0.1 * 0.25) = 80 steps on level 0.
        let h = build_hierarchy((0.0, 2.0), 2.0, 2, 0.25, 0.1, 6).unwrap();
        assert_eq!(h.level0.n_cells, 8);
        assert_eq!(h.level0.n_steps, 80);
    }

    #[test]
    fn refinement_is_exact() {
        let h = advection_grid();
        for l in 0..=h.max_level {
            let lv = h.level(l);
            assert_eq!(lv.dt * 2f64.powi(l as i32), h.level0.dt);
            assert_eq!(lv.dx * 2f64.powi(l as i32), h.level0.dx);
            assert_eq!(lv.n_cells as f64 * lv.dx, 2.0);
            assert_eq!(lv.n_steps as f64 * lv.dt, 1.0);
            assert_eq!(lv.cfl_ratio, 0.5);
        }
    }

    #[test]
    fn configuration_errors() {
        assert!(matches!(
            build_hierarchy((-1.0, 1.0), 1.0, 1, 1.0 / 32.0, 0.5, 3),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_hierarchy((-1.0, 1.0), 1.0, 2, 0.3, 0.5, 3),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_hierarchy((-1.0, 1.0), 1.0, 2, 1.0 / 32.0, 0.7, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn injection() {
        let f = FieldSolution::scalar(1, "u", vec![1.0, 2.0, 3.0, 4.0]);
        let c = restrict_field(&f, 0, 2).unwrap();
        assert_eq!(c.values[0], vec![1.0, 3.0]);
        assert_eq!(c.level_index, 0);
        assert!(matches!(restrict_field(&c, 1, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn restriction_composes() {
        let vals: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let f = FieldSolution::scalar(3, "u", vals);
        let two_step = restrict_field(&restrict_field(&f, 2, 2).unwrap(), 1, 2).unwrap();
        assert_eq!(two_step, restrict_field(&f, 1, 2).unwrap());
        let c = FieldSolution::scalar(2, "u", vec![0.7; 16]);
        assert_eq!(restrict_field(&c, 0, 2).unwrap().values[0], vec![0.7; 4]);
    }

    #[test]
    fn costs() {
        assert_eq!(pair_cost(0, 2, 2), 1.0);
        assert_eq!(pair_cost(2, 2, 2), 20.0);
        assert_eq!(single_cost(3, 2, 2), 64.0);
        for l in 2..8 {
            assert_eq!(pair_cost(l, 2, 2) / pair_cost(l - 1, 2, 2), 4.0);
        }
    }
}
