use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::bath::build_bath;
use super::laser::{frame_energies, laser_drives, Drive};
use super::network::{network_factors, network_hamiltonian};
use super::ops::ModeAlgebra;
use super::spec::{BathSpec, LaserPulse, NetworkSpec, NoiseSpec, Truncation};
use super::terms::{
    correlated_dephasing_term, dephasing_term, dissipation_term, injection_term, sink_term,
    LindbladTerm, TermKind, SINK_MODE,
};
use crate::quantum::{BasisLayout, Factor, SparseOp};
use crate::{CMatrix, Error, Result, C64};

/// Everything needed to assemble a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub network: NetworkSpec,
    pub noise: NoiseSpec,
    pub bath: BathSpec,
    #[serde(default)]
    pub laser: Option<LaserPulse>,
}

impl ModelSpec {
    /// FMO network with Markovian noise and no bath.
    pub fn fmo_markovian() -> Self {
        ModelSpec {
            network: NetworkSpec::fmo(),
            noise: NoiseSpec::fmo(),
            bath: BathSpec::none(),
            laser: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.network.n_sites();
        self.network.validate()?;
        self.noise.validate(n)?;
        self.bath.validate(n)?;
        if let Some(p) = &self.laser {
            p.validate()?;
            if self.network.truncation != Truncation::Full {
                return Err(Error::Config(
                    "laser excitation needs truncation = \"full\"".into(),
                ));
            }
            if self.network.dipoles.is_none() {
                return Err(Error::Config(
                    "laser excitation needs site dipole moments".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Labels and parameters of the chromophore network inside a generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemInfo {
    pub sites: Vec<String>,
    pub sink: String,
    pub sink_source: String,
    pub sink_rate: f64,
    /// Single-excitation Hamiltonian block in rad/ps (relative energies).
    pub site_block: DMatrix<f64>,
    pub bath_modes: Vec<String>,
    pub truncation: Truncation,
}

/// Right-hand side of `ρ̇ = −i[H(t), ρ] + Σ_k L_k(ρ)`.
#[derive(Clone, Debug)]
pub struct Generator {
    layout: BasisLayout,
    hamiltonian: SparseOp,
    drives: Vec<Drive>,
    terms: Vec<LindbladTerm>,
    system: Option<SystemInfo>,
}

impl Generator {
    /// Closed-system generator for an arbitrary Hermitian matrix.
    pub fn from_hamiltonian(layout: BasisLayout, h: &CMatrix) -> Result<Self> {
        if h.nrows() != layout.total_dim() || !h.is_square() {
            return Err(Error::Dimension(format!(
                "Hamiltonian is {}x{} but layout has dimension {}",
                h.nrows(),
                h.ncols(),
                layout.total_dim()
            )));
        }
        let dev = crate::quantum::hermiticity_deviation(h);
        if dev > 1e-10 {
            return Err(Error::Validation(format!(
                "Hamiltonian not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(Generator {
            layout,
            hamiltonian: SparseOp::from_dense(h)?,
            drives: Vec::new(),
            terms: Vec::new(),
            system: None,
        })
    }

    /// Assembles network, noise, bath and laser into one generator.
    pub fn build(model: &ModelSpec) -> Result<Self> {
        model.validate()?;
        let net = &model.network;
        let noise = &model.noise;
        let bath = build_bath(net, &model.bath)?;

        let mut factors = network_factors(net)?;
        if let Some(b) = &bath {
            factors.push(b.factor.clone());
        }
        let layout = BasisLayout::new(factors)?;
        let alg = ModeAlgebra::new(&layout)?;
        let sites = net.site_labels();

        let energies = frame_energies(net, model.laser.as_ref());
        let mut hamiltonian = network_hamiltonian(&alg, net, &energies)?;
        let mut terms = vec![dissipation_term(&alg, &sites, &noise.dissipation)?];
        match noise.correlation_matrix()? {
            Some(gamma) => terms.push(correlated_dephasing_term(&alg, &sites, &gamma)?),
            None => terms.push(dephasing_term(&alg, &sites, &noise.dephasing)?),
        }
        let source = sites[noise.sink_source_site - 1].clone();
        terms.push(sink_term(&alg, &source, noise.sink_rate)?);
        if let Some(inj) = &noise.injection {
            terms.push(injection_term(
                &alg,
                &sites[inj.site - 1],
                inj.rate,
                inj.n_th,
            )?);
        }
        let mut bath_modes = Vec::new();
        if let Some(b) = &bath {
            hamiltonian = hamiltonian.add(&b.hamiltonian(&alg)?)?;
            terms.push(b.damping_term(&alg)?);
            bath_modes = b.modes();
        }
        let drives = match &model.laser {
            Some(p) => laser_drives(&alg, net, p)?,
            None => Vec::new(),
        };
        terms.retain(|t| !t.is_empty());

        Ok(Generator {
            layout,
            hamiltonian,
            drives,
            terms,
            system: Some(SystemInfo {
                sites,
                sink: SINK_MODE.to_string(),
                sink_source: source,
                sink_rate: noise.sink_rate,
                site_block: net.site_block(),
                bath_modes,
                truncation: net.truncation,
            }),
        })
    }

    pub fn layout(&self) -> &BasisLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn system(&self) -> Option<&SystemInfo> {
        self.system.as_ref()
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn static_hamiltonian(&self) -> &SparseOp {
        &self.hamiltonian
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.drives.is_empty()
    }

    pub fn push_term(&mut self, term: LindbladTerm) -> Result<()> {
        let n = self.dim();
        let ok = match &term.kind {
            TermKind::Jumps(j) => j.iter().all(|j| j.op.dim() == n),
            TermKind::DoubleCommutator { diagonals, gamma } => {
                diagonals.iter().all(|d| d.len() == n) && gamma.nrows() == diagonals.len()
            }
        };
        if !ok {
            return Err(Error::Dimension(format!(
                "term `{}` does not match dimension {n}",
                term.tag
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn hamiltonian_at(&self, t: f64) -> CMatrix {
        let mut h = self.hamiltonian.to_dense();
        for d in &self.drives {
            let c = d.coefficient(t);
            for (r, col, v) in d.op.iter() {
                h[(r, col)] += v * c;
            }
        }
        h
    }

    /// Reference evaluation with dense products, term by term.
    pub fn apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian_at(t);
        let mut out = (&h * rho - rho * &h) * C64::new(0.0, -1.0);
        for term in &self.terms {
            out += term.apply(rho);
        }
        out
    }

    /// Adds a factor after all existing ones on which the generator acts trivially.
    pub fn with_idle_factor(&self, factor: Factor) -> Result<Self> {
        let d = factor.dim();
        let mut factors = self.layout.factors().to_vec();
        factors.push(factor);
        let layout = BasisLayout::new(factors)?;
        let id = SparseOp::identity(d);
        Ok(Generator {
            layout,
            hamiltonian: self.hamiltonian.kron(&id),
            drives: self
                .drives
                .iter()
                .map(|dr| dr.with_idle_factor(d))
                .collect(),
            terms: self.terms.iter().map(|t| t.with_idle_factor(d)).collect(),
            system: self.system.clone(),
        })
    }

    /// Fused form of the right-hand side for repeated evaluation.
    pub fn compile(&self) -> CompiledRhs {
        CompiledRhs::new(self)
    }
}

/// Rate and `(row, col, value)` entries of one non-diagonal jump operator.
type Sandwich = (f64, Vec<(usize, usize, C64)>);

/// Right-hand side evaluated as `W + W†` with
/// `W = iρK† + Σ r LρL† − ½ R∘ρ`, where `K = H − iΣ r L†L` collects the
/// non-diagonal channels and `R` the element-wise decay rates of diagonal
/// ones. For Hermitian `ρ` this is the adjoint of the usual `−iKρ` form, and
/// the result is Hermitian by construction.
#[derive(Clone, Debug)]
pub struct CompiledRhs {
    dim: usize,
    k: SparseOp,
    drives: Vec<Drive>,
    sandwiches: Vec<Sandwich>,
    half_rates: Option<Vec<f64>>,
}

impl CompiledRhs {
    fn new(g: &Generator) -> Self {
        let n = g.dim();
        let mut k = g.hamiltonian.clone();
        let mut sandwiches = Vec::new();
        let mut rates: Option<Vec<f64>> = None;
        let mut rate_buf = |f: &mut dyn FnMut(usize, usize) -> f64| {
            let r = rates.get_or_insert_with(|| vec![0.0; n * n]);
            for b in 0..n {
                for a in 0..n {
                    r[b * n + a] += 0.5 * f(a, b);
                }
            }
        };
        for term in &g.terms {
            match &term.kind {
                TermKind::Jumps(jumps) => {
                    for j in jumps {
                        if let Some(d) = j.op.real_diagonal() {
                            let r = j.rate;
                            rate_buf(&mut |a, b| r * (d[a] - d[b]).powi(2));
                        } else {
                            let adj = j.op.adjoint();
                            let ldl = adj.matmul(&j.op).expect("same dimension");
                            k = k
                                .add(&ldl.scale(C64::new(0.0, -j.rate)))
                                .expect("same dimension");
                            sandwiches.push((j.rate, j.op.iter().collect()));
                        }
                    }
                }
                TermKind::DoubleCommutator { gamma, diagonals } => {
                    let m = diagonals.len();
                    rate_buf(&mut |a, b| {
                        let mut w = 0.0;
                        for p in 0..m {
                            let dp = diagonals[p][a] - diagonals[p][b];
                            if dp != 0.0 {
                                for q in 0..m {
                                    w += gamma[(p, q)] * dp * (diagonals[q][a] - diagonals[q][b]);
                                }
                            }
                        }
                        w
                    });
                }
            }
        }
        CompiledRhs {
            dim: n,
            k,
            drives: g.drives.clone(),
            sandwiches,
            half_rates: rates,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `ρ̇(t)` into `out` (overwritten).
    pub fn eval(&self, t: f64, rho: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        let i = C64::new(0.0, 1.0);
        self.k.rmul_adjoint_acc(i, rho, out);
        for d in &self.drives {
            let c = d.coefficient(t);
            if c != 0.0 {
                d.op.rmul_adjoint_acc(i * c, rho, out);
            }
        }
        let rs = rho.as_slice();
        {
            let os = out.as_mut_slice();
            for (rate, entries) in &self.sandwiches {
                for &(j, l, b) in entries {
                    let bw = b.conj() * *rate;
                    let col = &rs[l * n..(l + 1) * n];
                    let dst = &mut os[j * n..(j + 1) * n];
                    for &(i, kk, a) in entries {
                        dst[i] += a * bw * col[kk];
                    }
                }
            }
            if let Some(hr) = &self.half_rates {
                for ((o, r), w) in os.iter_mut().zip(rs).zip(hr) {
                    *o -= r * *w;
                }
            }
        }
        hermitian_part_in_place(out);
    }
}

/// `Y ← Y + Y†`.
fn hermitian_part_in_place(y: &mut CMatrix) {
    let n = y.nrows();
    let s = y.as_mut_slice();
    for j in 0..n {
        s[j * n + j] = C64::new(2.0 * s[j * n + j].re, 0.0);
        for i in 0..j {
            let v = s[j * n + i] + s[i * n + j].conj();
            s[j * n + i] = v;
            s[i * n + j] = v.conj();
        }
    }
}
