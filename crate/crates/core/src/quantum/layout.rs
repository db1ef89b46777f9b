use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the levels of a factor map onto occupation numbers of named modes.
///
/// Entanglement is assessed between named modes (sites, excitons, bath
/// oscillators, ancilla qubits), which are not always tensor factors of the
/// simulated space: a single-excitation network is one factor whose levels
/// are one-hot occupation patterns over the sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Encoding {
    /// A plain d-level factor. Its only mode is the factor itself and the
    /// occupation of level `k` is `k`.
    Levels,
    /// Each level is an occupation pattern over `modes`.
    Occupations {
        modes: Vec<String>,
        table: Vec<Vec<u8>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    label: String,
    dim: usize,
    encoding: Encoding,
}

impl Factor {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        let label = label.into();
        if dim == 0 {
            return Err(Error::Layout(format!(
                "factor `{label}` has zero dimension"
            )));
        }
        Ok(Factor {
            label,
            dim,
            encoding: Encoding::Levels,
        })
    }

    /// A factor whose levels are the given occupation patterns over `modes`.
    pub fn with_occupations(
        label: impl Into<String>,
        modes: Vec<String>,
        table: Vec<Vec<u8>>,
    ) -> Result<Self> {
        let label = label.into();
        if table.is_empty() {
            return Err(Error::Layout(format!("factor `{label}` has no levels")));
        }
        if let Some(row) = table.iter().find(|row| row.len() != modes.len()) {
            return Err(Error::Layout(format!(
                "factor `{label}`: occupation row of width {} for {} modes",
                row.len(),
                modes.len()
            )));
        }
        let distinct: BTreeSet<&Vec<u8>> = table.iter().collect();
        if distinct.len() != table.len() {
            return Err(Error::Layout(format!(
                "factor `{label}`: occupation patterns must be distinct"
            )));
        }
        let unique: BTreeSet<&String> = modes.iter().collect();
        if unique.len() != modes.len() {
            return Err(Error::Layout(format!(
                "factor `{label}`: repeated mode label"
            )));
        }
        Ok(Factor {
            label,
            dim: table.len(),
            encoding: Encoding::Occupations { modes, table },
        })
    }

    /// One-hot encoding over `modes`, optionally preceded by the all-empty
    /// level. Level `k` (after the vacuum, if present) excites `modes[k]`.
    pub fn one_hot(
        label: impl Into<String>,
        modes: Vec<String>,
        with_vacuum: bool,
    ) -> Result<Self> {
        let n = modes.len();
        let mut table = Vec::with_capacity(n + 1);
        if with_vacuum {
            table.push(vec![0; n]);
        }
        for k in 0..n {
            let mut row = vec![0; n];
            row[k] = 1;
            table.push(row);
        }
        Self::with_occupations(label, modes, table)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    /// Mode labels carried by this factor.
    pub fn modes(&self) -> Vec<&str> {
        match &self.encoding {
            Encoding::Levels => vec![self.label.as_str()],
            Encoding::Occupations { modes, .. } => modes.iter().map(String::as_str).collect(),
        }
    }

    /// Occupation of mode number `mode` (index into [`Factor::modes`]) at `level`.
    pub fn occupation(&self, level: usize, mode: usize) -> u8 {
        match &self.encoding {
            Encoding::Levels => level as u8,
            Encoding::Occupations { table, .. } => table[level][mode],
        }
    }

    /// Level index holding exactly the given occupation pattern.
    pub fn level_of(&self, pattern: &[u8]) -> Option<usize> {
        match &self.encoding {
            Encoding::Levels => (pattern.len() == 1 && (pattern[0] as usize) < self.dim)
                .then(|| pattern[0] as usize),
            Encoding::Occupations { table, .. } => table.iter().position(|row| row == pattern),
        }
    }
}

/// Ordered list of tensor factors. The first factor varies slowest in the
/// flattened basis index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisLayout {
    factors: Vec<Factor>,
    total_dim: usize,
}

impl BasisLayout {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Layout("layout needs at least one factor".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &factors {
            if !seen.insert(f.label.clone()) {
                return Err(Error::Layout(format!("duplicate label `{}`", f.label)));
            }
        }
        for f in &factors {
            if let Encoding::Occupations { modes, .. } = &f.encoding {
                for m in modes {
                    if m != &f.label && !seen.insert(m.clone()) {
                        return Err(Error::Layout(format!("duplicate label `{m}`")));
                    }
                }
            }
        }
        let total_dim = factors
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.dim))
            .ok_or_else(|| Error::Resource("layout dimension overflows".into()))?;
        Ok(BasisLayout { factors, total_dim })
    }

    /// Layout of `n` qubit factors labelled `q1..qn`.
    pub fn qubits(n: usize) -> Self {
        let factors = (1..=n)
            .map(|k| Factor::new(format!("q{k}"), 2).unwrap())
            .collect();
        BasisLayout::new(factors).unwrap()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn factor_index(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::Layout(format!("no factor labelled `{label}`")))
    }

    pub fn factor(&self, label: &str) -> Result<&Factor> {
        Ok(&self.factors[self.factor_index(label)?])
    }

    /// Factor index and mode index of a mode label.
    pub fn locate_mode(&self, label: &str) -> Result<(usize, usize)> {
        for (fi, f) in self.factors.iter().enumerate() {
            if let Some(mi) = f.modes().iter().position(|m| *m == label) {
                return Ok((fi, mi));
            }
        }
        Err(Error::Layout(format!("no mode labelled `{label}`")))
    }

    /// All mode labels in layout order.
    pub fn modes(&self) -> Vec<String> {
        self.factors
            .iter()
            .flat_map(|f| f.modes().into_iter().map(str::to_string))
            .collect()
    }

    /// Expands factor labels to the mode labels they carry; mode labels pass through.
    pub fn expand_labels<'a, I>(&self, labels: I) -> Result<BTreeSet<String>>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut out = BTreeSet::new();
        for l in labels {
            if let Ok(f) = self.factor(l) {
                out.extend(f.modes().into_iter().map(str::to_string));
            } else {
                self.locate_mode(l)?;
                out.insert(l.clone());
            }
        }
        Ok(out)
    }

    pub fn with_factor(&self, factor: Factor) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.push(factor);
        BasisLayout::new(factors)
    }

    /// Strides of each factor in the flattened index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].dim;
        }
        strides
    }

    /// Per-factor level indices of a flattened basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            out[k] = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&d, f)| acc * f.dim + d)
    }

    /// Occupation of a mode in each basis state.
    pub fn occupation_table(&self, mode: &str) -> Result<Vec<u8>> {
        let (fi, mi) = self.locate_mode(mode)?;
        let f = &self.factors[fi];
        let stride = self.strides()[fi];
        Ok((0..self.total_dim)
            .map(|x| f.occupation((x / stride) % f.dim, mi))
            .collect())
    }
}

impl fmt::Display for BasisLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}({})", x.label, x.dim))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Split of mode (or factor) labels into two disjoint sides. Labels in
/// neither side are traced out before the entanglement across the cut is
/// evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    name: String,
    side_a: BTreeSet<String>,
    side_b: BTreeSet<String>,
}

impl Bipartition {
    pub fn new<A, B, S1, S2>(side_a: A, side_b: B) -> Result<Self>
    where
        A: IntoIterator<Item = S1>,
        B: IntoIterator<Item = S2>,
        S1: Into<String>,
        S2: Into<String>,
    {
        let side_a: BTreeSet<String> = side_a.into_iter().map(Into::into).collect();
        let side_b: BTreeSet<String> = side_b.into_iter().map(Into::into).collect();
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::Argument(
                "bipartition sides must be non-empty".into(),
            ));
        }
        if let Some(l) = side_a.intersection(&side_b).next() {
            return Err(Error::Argument(format!(
                "label `{l}` on both sides of bipartition"
            )));
        }
        let name = format!(
            "{}|{}",
            side_a.iter().cloned().collect::<Vec<_>>().join(","),
            side_b.iter().cloned().collect::<Vec<_>>().join(",")
        );
        Ok(Bipartition {
            name,
            side_a,
            side_b,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn side_a(&self) -> &BTreeSet<String> {
        &self.side_a
    }

    pub fn side_b(&self) -> &BTreeSet<String> {
        &self.side_b
    }

    /// The split `(1..k)|(k+1..n)` over labels `{prefix}1..{prefix}n`.
    pub fn prefix_split(prefix: &str, k: usize, n: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::Argument(format!(
                "split index {k} outside 1..{}",
                n.saturating_sub(1)
            )));
        }
        let a = (1..=k).map(|i| format!("{prefix}{i}"));
        let b = (k + 1..=n).map(|i| format!("{prefix}{i}"));
        let name = if k + 1 == n {
            format!("({})|({})", range_name(1, k), n)
        } else {
            format!("({})|({})", range_name(1, k), range_name(k + 1, n))
        };
        Ok(Bipartition::new(a, b)?.named(name))
    }
}

fn range_name(lo: usize, hi: usize) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}-{hi}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_is_product() {
        let l = BasisLayout::new(vec![
            Factor::new("a", 2).unwrap(),
            Factor::new("b", 3).unwrap(),
            Factor::new("c", 4).unwrap(),
        ])
        .unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.strides(), vec![12, 4, 1]);
        for x in 0..24 {
            assert_eq!(l.index_of(&l.digits(x)), x);
        }
        assert_eq!(l.digits(13), vec![1, 0, 1]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let r = BasisLayout::new(vec![
            Factor::new("a", 2).unwrap(),
            Factor::new("a", 2).unwrap(),
        ]);
        assert!(matches!(r, Err(Error::Layout(_))));
        let sys = Factor::one_hot("sys", vec!["a".into(), "b".into()], true).unwrap();
        let r = BasisLayout::new(vec![sys, Factor::new("b", 2).unwrap()]);
        assert!(matches!(r, Err(Error::Layout(_))));
    }

    #[test]
    fn one_hot_occupations() {
        let f = Factor::one_hot("sys", vec!["s1".into(), "s2".into()], true).unwrap();
        assert_eq!(f.dim(), 3);
        assert_eq!(f.occupation(0, 0), 0);
        assert_eq!(f.occupation(1, 0), 1);
        assert_eq!(f.occupation(2, 1), 1);
        assert_eq!(f.level_of(&[0, 1]), Some(2));
        assert_eq!(f.level_of(&[1, 1]), None);
    }

    #[test]
    fn bipartition_rejects_overlap() {
        assert!(Bipartition::new(["a", "b"], ["b"]).is_err());
        assert!(Bipartition::new(Vec::<String>::new(), ["b"]).is_err());
        let p = Bipartition::prefix_split("site", 2, 7).unwrap();
        assert_eq!(p.name(), "(1-2)|(3-7)");
        assert_eq!(p.side_a().len(), 2);
        assert!(Bipartition::prefix_split("site", 7, 7).is_err());
    }

    #[test]
    fn expand_factor_labels() {
        let sys = Factor::one_hot("sys", vec!["s1".into(), "s2".into()], true).unwrap();
        let l = BasisLayout::new(vec![sys, Factor::new("m", 3).unwrap()]).unwrap();
        let e = l
            .expand_labels(&["sys".to_string(), "m".to_string()])
            .unwrap();
        assert_eq!(e.into_iter().collect::<Vec<_>>(), vec!["m", "s1", "s2"]);
        assert!(l.expand_labels(&["zz".to_string()]).is_err());
        assert_eq!(
            l.occupation_table("s2").unwrap(),
            vec![0, 0, 0, 0, 0, 0, 1, 1, 1]
        );
    }
}
