//! A fully specified encoding problem: system, time grid, initial state and
//! fixed-point code, with a round trip through instance metadata.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::{build_clock_operator, build_system, ClockSystem};
use crate::models::{
    build_hamiltonian, build_propagators, exact_evolution, initial_state, Hamiltonian, InitialState, SystemId,
    SystemSpec, TimeGrid,
};
use crate::numerics::ComplexVector;
use crate::qubo::{encode_qubo_with_budget, FixedPointCode, InstanceMeta, QuboInstance, DEFAULT_MAX_BITS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub spec: SystemSpec,
    pub grid: TimeGrid,
    pub psi0: InitialState,
    pub code: FixedPointCode,
}

impl Problem {
    /// `n_points` slices on `[0, 1]`, `psi0 = e_0`, two bits per component.
    pub fn new(id: SystemId, n_points: usize) -> Result<Self> {
        Ok(Self {
            spec: SystemSpec::new(id),
            grid: TimeGrid::new(0.0, 1.0, n_points)?,
            psi0: InitialState::default(),
            code: FixedPointCode::default(),
        })
    }

    pub fn with_code(mut self, code: FixedPointCode) -> Self {
        self.code = code;
        self
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_psi0(mut self, psi0: InitialState) -> Self {
        self.psi0 = psi0;
        self
    }

    /// Real variable count `2 L N`.
    pub fn n_vars(&self) -> usize {
        2 * self.spec.id.dim() * self.grid.n_points()
    }

    pub fn n_bits(&self) -> usize {
        self.n_vars() * self.code.bits() as usize
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        build_hamiltonian(&self.spec)
    }

    pub fn initial_state(&self) -> Result<ComplexVector> {
        initial_state(&self.spec, self.psi0)
    }

    pub fn clock_system(&self) -> Result<ClockSystem> {
        let h = self.hamiltonian()?;
        let props = build_propagators(&h.matrix, &self.grid)?;
        build_system(&build_clock_operator(&props), &self.initial_state()?)
    }

    /// Clock system and its QUBO, with the problem recorded in the metadata.
    pub fn encode(&self, max_bits: usize) -> Result<(ClockSystem, QuboInstance)> {
        let sys = self.clock_system()?;
        let mut inst = encode_qubo_with_budget(&sys, self.code, max_bits, self.spec.id.as_str())?;
        inst.meta.extra = self.meta_entries();
        Ok((sys, inst))
    }

    pub fn instance(&self) -> Result<QuboInstance> {
        Ok(self.encode(DEFAULT_MAX_BITS)?.1)
    }

    /// Exact state at every grid point.
    pub fn oracle(&self) -> Result<Vec<ComplexVector>> {
        exact_evolution(&self.hamiltonian()?.matrix, &self.grid, &self.initial_state()?)
    }

    fn meta_entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("t0".into(), self.grid.t0().to_string());
        m.insert("dt".into(), self.grid.dt().to_string());
        m.insert("psi0".into(), self.psi0.to_string());
        if self.spec.id == SystemId::H7 {
            m.insert("omega".into(), self.spec.omega.to_string());
            m.insert("alpha".into(), self.spec.alpha.to_string());
            m.insert("b".into(), self.spec.b.to_string());
        }
        m
    }

    /// Rebuilds the problem an instance was generated from.
    pub fn from_meta(meta: &InstanceMeta) -> Result<Self> {
        let id = SystemId::from_str(&meta.system)?;
        let layout = meta
            .layout
            .ok_or_else(|| Error::Unsupported("instance has no clock layout".into()))?;
        if layout.l != id.dim() {
            return Err(Error::DimensionMismatch(format!(
                "layout has {} components per slice, {} needs {}",
                layout.l,
                id,
                id.dim()
            )));
        }
        let get = |key: &str| -> Result<&str> {
            meta.extra
                .get(key)
                .map(String::as_str)
                .ok_or_else(|| Error::InvalidParameter(format!("instance metadata lacks '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("metadata '{key}' is not a number")))
        };
        let mut spec = SystemSpec::new(id);
        if id == SystemId::H7 {
            spec.omega = num("omega")?;
            spec.alpha = num("alpha")?;
            spec.b = num("b")?;
            spec.validate()?;
        }
        Ok(Self {
            spec,
            grid: TimeGrid::with_step(num("t0")?, num("dt")?, layout.n_points)?,
            psi0: get("psi0")?.parse()?,
            code: meta.code,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_round_trip() {
        let p = Problem::new(SystemId::H7, 3)
            .unwrap()
            .with_psi0(InitialState::Basis(1))
            .with_code(FixedPointCode::new(3, 1).unwrap());
        let inst = p.instance().unwrap();
        assert_eq!(inst.n_bits(), p.n_bits());
        assert_eq!(Problem::from_meta(&inst.meta).unwrap(), p);
    }

    #[test]
    fn missing_metadata_is_reported() {
        let mut inst = Problem::new(SystemId::H1, 2).unwrap().instance().unwrap();
        inst.meta.extra.remove("dt");
        assert!(Problem::from_meta(&inst.meta).is_err());
    }

    #[test]
    fn counts() {
        let p = Problem::new(SystemId::H6, 2).unwrap();
        assert_eq!(p.n_vars(), 32);
        assert_eq!(p.n_bits(), 64);
    }
}
