use std::collections::HashMap;

use crate::quantum::{BasisLayout, SparseOp};
use crate::{Error, Result, C64};

/// Occupation-number view of a layout, used to build ladder and number
/// operators for any mode regardless of how its factor is encoded.
#[derive(Clone, Debug)]
pub struct ModeAlgebra {
    layout: BasisLayout,
    modes: Vec<String>,
    patterns: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
}

impl ModeAlgebra {
    pub fn new(layout: &BasisLayout) -> Result<Self> {
        let modes = layout.modes();
        let tables: Vec<Vec<u8>> = modes
            .iter()
            .map(|m| layout.occupation_table(m))
            .collect::<Result<_>>()?;
        let n = layout.total_dim();
        let patterns: Vec<Vec<u8>> = (0..n)
            .map(|x| tables.iter().map(|t| t[x]).collect())
            .collect();
        let lookup = patterns
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        Ok(ModeAlgebra {
            layout: layout.clone(),
            modes,
            patterns,
            lookup,
        })
    }

    pub fn layout(&self) -> &BasisLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.patterns.len()
    }

    fn mode_index(&self, mode: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| Error::Layout(format!("no mode `{mode}` in layout {}", self.layout)))
    }

    /// Occupation of `mode` in every basis state.
    pub fn occupations(&self, mode: &str) -> Result<Vec<f64>> {
        let k = self.mode_index(mode)?;
        Ok(self.patterns.iter().map(|p| p[k] as f64).collect())
    }

    pub fn number(&self, mode: &str) -> Result<SparseOp> {
        let occ = self.occupations(mode)?;
        Ok(SparseOp::diagonal(
            &occ.iter().map(|&o| C64::new(o, 0.0)).collect::<Vec<_>>(),
        ))
    }

    /// Annihilation operator `a = Σ √n |n−1⟩⟨n|`, restricted to the basis.
    pub fn lowering(&self, mode: &str) -> Result<SparseOp> {
        self.shift(&[(mode, -1)])
    }

    pub fn raising(&self, mode: &str) -> Result<SparseOp> {
        self.shift(&[(mode, 1)])
    }

    /// Product of ladder operators on distinct modes, e.g. `[(i, +1), (l, -1)]`
    /// for the hop `σ_i⁺ σ_l⁻`. Amplitudes follow the bosonic √n rule.
    /// Transitions leaving the enumerated basis are dropped.
    pub fn shift(&self, changes: &[(&str, i32)]) -> Result<SparseOp> {
        let idx: Vec<(usize, i32)> = changes
            .iter()
            .map(|(m, d)| Ok((self.mode_index(m)?, *d)))
            .collect::<Result<_>>()?;
        for (a, (i, _)) in idx.iter().enumerate() {
            if idx[..a].iter().any(|(j, _)| j == i) {
                return Err(Error::Argument("shift lists a mode twice".into()));
            }
        }
        let mut trip = Vec::new();
        let mut target = Vec::new();
        'basis: for (x, p) in self.patterns.iter().enumerate() {
            target.clear();
            target.extend_from_slice(p);
            let mut amp = 1.0;
            for &(k, d) in &idx {
                let n = p[k] as i32;
                let m = n + d;
                if m < 0 || m > u8::MAX as i32 {
                    continue 'basis;
                }
                amp *= if d < 0 {
                    (n.min(m) + 1..=n)
                        .map(|v| (v as f64).sqrt())
                        .product::<f64>()
                } else {
                    (n + 1..=m).map(|v| (v as f64).sqrt()).product::<f64>()
                };
                target[k] = m as u8;
            }
            if let Some(&y) = self.lookup.get(&target) {
                trip.push((y, x, C64::new(amp, 0.0)));
            }
        }
        SparseOp::from_triplets(self.dim(), trip)
    }

    /// Diagonal projector onto basis states where every listed mode is empty.
    pub fn vacuum_projector(&self, modes: &[String]) -> Result<Vec<bool>> {
        let ks: Vec<usize> = modes
            .iter()
            .map(|m| self.mode_index(m))
            .collect::<Result<_>>()?;
        Ok(self
            .patterns
            .iter()
            .map(|p| ks.iter().all(|&k| p[k] == 0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Factor;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn fock_ladder() {
        let layout = BasisLayout::new(vec![Factor::new("mode", 4).unwrap()]).unwrap();
        let alg = ModeAlgebra::new(&layout).unwrap();
        let a = alg.lowering("mode").unwrap().to_dense();
        assert_eq!(a[(0, 1)], c(1.0));
        assert!((a[(2, 3)] - c(3f64.sqrt())).norm() < 1e-15);
        let n = alg.number("mode").unwrap().to_dense();
        assert!((a.adjoint() * &a - n).norm() < 1e-14);
    }

    #[test]
    fn one_hot_hop_and_lowering() {
        let f = Factor::one_hot(
            "system",
            vec!["s1".into(), "s2".into(), "sink".into()],
            true,
        )
        .unwrap();
        let layout = BasisLayout::new(vec![f]).unwrap();
        let alg = ModeAlgebra::new(&layout).unwrap();
        let hop = alg.shift(&[("s1", 1), ("s2", -1)]).unwrap().to_dense();
        assert_eq!(hop[(1, 2)], c(1.0));
        assert_eq!(hop.iter().filter(|z| z.norm() > 0.0).count(), 1);
        let low = alg.lowering("s2").unwrap().to_dense();
        assert_eq!(low[(0, 2)], c(1.0));
        let sink = alg.shift(&[("sink", 1), ("s1", -1)]).unwrap().to_dense();
        assert_eq!(sink[(3, 1)], c(1.0));
        // no double occupancy in a one-hot factor
        let up = alg.raising("s1").unwrap().to_dense();
        assert_eq!(up.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn qubit_product_matches_kron() {
        let layout = BasisLayout::qubits(2);
        let alg = ModeAlgebra::new(&layout).unwrap();
        let hop = alg.shift(&[("q1", 1), ("q2", -1)]).unwrap().to_dense();
        let sp = crate::CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert_eq!(hop, sp.kronecker(&sp.transpose()));
        assert!(alg.lowering("q3").is_err());
    }
}
