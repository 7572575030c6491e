use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    assemble_canonical, convex_combo, pure_concurrence, validate, CanonicalParams,
    ConvexComboParams, DensityMatrix, LocalUnitary, PureParams,
};
use crate::error::{Error, Result};
use crate::matcore::{self, c, Complex, Mat, Mat2, Mat4};

/// Attempts allowed per draw for the rejection-sampled ensembles.
pub const DEFAULT_REJECTION_CAP: usize = 100_000;

/// Minimum concurrence of the entangled component in `convex-combo` draws.
const CONVEX_MIN_CONCURRENCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Ensemble {
    Ginibre { rank: usize },
    HaarPure,
    CanonicalUniform,
    ConvexCombo,
    XState,
}

impl Ensemble {
    pub const ALL: [Ensemble; 8] = [
        Ensemble::Ginibre { rank: 1 },
        Ensemble::Ginibre { rank: 2 },
        Ensemble::Ginibre { rank: 3 },
        Ensemble::Ginibre { rank: 4 },
        Ensemble::HaarPure,
        Ensemble::CanonicalUniform,
        Ensemble::ConvexCombo,
        Ensemble::XState,
    ];

    /// True when every draw is a pure state.
    pub fn is_pure(&self) -> bool {
        matches!(self, Ensemble::HaarPure | Ensemble::Ginibre { rank: 1 })
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::Ginibre { rank } => write!(f, "ginibre-rank-{rank}"),
            Ensemble::HaarPure => f.write_str("haar-pure"),
            Ensemble::CanonicalUniform => f.write_str("canonical-uniform"),
            Ensemble::ConvexCombo => f.write_str("convex-combo"),
            Ensemble::XState => f.write_str("x-state"),
        }
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar-pure" => Ok(Ensemble::HaarPure),
            "canonical-uniform" => Ok(Ensemble::CanonicalUniform),
            "convex-combo" => Ok(Ensemble::ConvexCombo),
            "x-state" => Ok(Ensemble::XState),
            _ => match s.strip_prefix("ginibre-rank-").map(str::parse::<usize>) {
                Some(Ok(rank @ 1..=4)) => Ok(Ensemble::Ginibre { rank }),
                _ => Err(Error::UnknownEnsemble(s.to_string())),
            },
        }
    }
}

impl TryFrom<String> for Ensemble {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Ensemble> for String {
    fn from(e: Ensemble) -> String {
        e.to_string()
    }
}

/// How a draw was produced; carries the generating parameters when the
/// ensemble has them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DrawOrigin {
    Matrix,
    Pure { ket: [Complex; 4] },
    Canonical(CanonicalParams),
    Convex(ConvexComboParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Draw {
    pub rho: DensityMatrix,
    pub origin: DrawOrigin,
}

/// Seedable source of random states. Not shared across threads: each worker
/// builds its own with [`StateGenerator::for_draw`].
#[derive(Clone, Debug)]
pub struct StateGenerator {
    rng: ChaCha8Rng,
    rejection_cap: usize,
}

impl StateGenerator {
    pub fn new(seed: u64) -> Self {
        StateGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    /// Independent stream for draw `index` under a master seed, so any single
    /// draw can be regenerated without replaying the ones before it.
    pub fn for_draw(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        StateGenerator {
            rng,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Self {
        self.rejection_cap = cap;
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn sample(&mut self, ensemble: Ensemble) -> Result<Draw> {
        match ensemble {
            Ensemble::Ginibre { rank } => {
                if !(1..=4).contains(&rank) {
                    return Err(Error::UnknownEnsemble(format!("ginibre-rank-{rank}")));
                }
                let rho = ginibre(&mut self.rng, rank)?;
                Ok(Draw {
                    rho,
                    origin: DrawOrigin::Matrix,
                })
            }
            Ensemble::HaarPure => {
                let ket = haar_ket(&mut self.rng);
                Ok(Draw {
                    rho: DensityMatrix::from_ket(&ket)?,
                    origin: DrawOrigin::Pure { ket },
                })
            }
            Ensemble::CanonicalUniform => {
                let (params, rho) = self.canonical_uniform()?;
                Ok(Draw {
                    rho,
                    origin: DrawOrigin::Canonical(params),
                })
            }
            Ensemble::ConvexCombo => {
                let cp = self.convex_params()?;
                Ok(Draw {
                    rho: convex_combo(&cp)?,
                    origin: DrawOrigin::Convex(cp),
                })
            }
            Ensemble::XState => {
                let g = ginibre(&mut self.rng, 4)?.into_matrix();
                let masked = Mat4::from_fn(|i, j| {
                    if i == j || i + j == 3 {
                        g.0[i][j]
                    } else {
                        matcore::cr(0.0)
                    }
                });
                Ok(Draw {
                    rho: validate(&masked)?,
                    origin: DrawOrigin::Matrix,
                })
            }
        }
    }

    fn canonical_uniform(&mut self) -> Result<(CanonicalParams, DensityMatrix)> {
        let rng = &mut self.rng;
        for _ in 0..self.rejection_cap {
            let raw: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
            let total: f64 = raw.iter().sum();
            let mut box_draw = || rng.random_range(0.0..=0.5);
            let (u, v, w, q) = (box_draw(), box_draw(), box_draw(), box_draw());
            let p = CanonicalParams {
                r: raw[0] / total,
                s: raw[1] / total,
                t: raw[2] / total,
                u,
                v,
                w,
                q,
                tau1: rng.random_range(0.0..TAU),
                tau2: rng.random_range(0.0..TAU),
                tau3: rng.random_range(0.0..TAU),
            };
            // necessary 2x2 principal minors first; the full check is the eigensolver
            let eta = p.eta();
            if p.r * eta < u * u || p.s * eta < w * w || p.t * eta < q * q || p.s * p.t < v * v {
                continue;
            }
            if let Ok(rho) = assemble_canonical(&p) {
                return Ok((p, rho));
            }
        }
        Err(Error::RejectionExhausted {
            ensemble: Ensemble::CanonicalUniform.to_string(),
            attempts: self.rejection_cap,
        })
    }

    fn convex_params(&mut self) -> Result<ConvexComboParams> {
        let p = self.rng.random::<f64>();
        for _ in 0..self.rejection_cap {
            let psi = PureParams::from_ket(&haar_ket(&mut self.rng))?;
            if pure_concurrence(&psi)? > CONVEX_MIN_CONCURRENCE {
                return ConvexComboParams::new(p, psi);
            }
        }
        Err(Error::RejectionExhausted {
            ensemble: Ensemble::ConvexCombo.to_string(),
            attempts: self.rejection_cap,
        })
    }
}

/// One draw from `ensemble` with a fresh generator seeded by `seed`.
pub fn random_state(ensemble: Ensemble, seed: u64) -> Result<DensityMatrix> {
    Ok(StateGenerator::new(seed).sample(ensemble)?.rho)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Result<DensityMatrix> {
    let mut g = [[matcore::cr(0.0); 4]; 4];
    for row in g.iter_mut() {
        for z in row.iter_mut().take(rank) {
            *z = gaussian(rng);
        }
    }
    let g = Mat(g);
    let w = g * g.adjoint();
    validate(&w.scale(1.0 / w.trace().re))
}

/// Haar-random unit ket in C^4.
pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R) -> [Complex; 4] {
    loop {
        let v: [Complex; 4] = std::array::from_fn(|_| gaussian(rng));
        let n = matcore::norm(&v);
        if n > 1e-300 {
            return v.map(|z| z / n);
        }
    }
}

/// Hermitian matrix with independent Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let g = Mat4::from_fn(|_, _| gaussian(rng));
    (g + g.adjoint()).scale(0.5)
}

fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let (a, b) = loop {
        let v = [gaussian(rng), gaussian(rng)];
        let n = matcore::norm(&v);
        if n > 1e-300 {
            break (v[0] / n, v[1] / n);
        }
    };
    Mat([[a, b], [-b.conj(), a.conj()]])
}

/// Haar-random element of SU(2) x SU(2).
pub fn random_local_unitary<R: Rng + ?Sized>(rng: &mut R) -> LocalUnitary {
    LocalUnitary {
        ua: haar_su2(rng),
        ub: haar_su2(rng),
    }
}
