//! Closed-system dynamics of spin ladders in fixed excitation sectors:
//! rung Bell states, multi-exciton initial states, Krylov evolution and the
//! mean-square displacement along the transport axis.
//!
//! Rungs are 1-based in the public API. On rung `r` the top site is flat
//! index `2(r-1)` and the bottom site `2(r-1)+1`.
//!
//! The MSD is `sum_sites (x(site) - c)^2 <n_site>`, summed over excitations
//! (not averaged), with `c` the excitation-weighted mean position at `t=0`.
//! With this normalization a ballistic state with `n` excitations has
//! `d^2 MSD / dt^2 = 4 n g^2`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::krylov::KrylovPropagator;
use crate::lattice::{LatticeSpec, Statistics};
use crate::sector::{SectorBasis, SectorHamiltonian, SectorState, DEFAULT_SECTOR_BUDGET};

/// Occupation of a terminal layer above which the MSD series is cut.
pub const BOUNDARY_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RungState {
    /// `(top + bottom)/sqrt 2`
    S,
    /// `(top - bottom)/sqrt 2`
    T,
    /// empty rung
    O,
    /// both sites occupied
    I,
    /// `(top + e^{i phi} bottom)/sqrt 2`
    A(f64),
}

impl RungState {
    pub fn excitations(self) -> usize {
        match self {
            RungState::O => 0,
            RungState::I => 2,
            _ => 1,
        }
    }

    /// `(bits, amplitude)` with bit 0 = top, bit 1 = bottom.
    fn components(self) -> Vec<(u64, Complex64)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one = Complex64::new(1.0, 0.0);
        match self {
            RungState::O => vec![(0, one)],
            RungState::I => vec![(0b11, one)],
            RungState::S => vec![(0b01, one * h), (0b10, one * h)],
            RungState::T => vec![(0b01, one * h), (0b10, -one * h)],
            RungState::A(phi) => vec![(0b01, one * h), (0b10, Complex64::from_polar(h, phi))],
        }
    }

    pub fn label(self) -> String {
        match self {
            RungState::S => "S".into(),
            RungState::T => "T".into(),
            RungState::O => "O".into(),
            RungState::I => "I".into(),
            RungState::A(phi) => format!("A({phi})"),
        }
    }
}

fn check_rungs(rungs: usize) -> Result<()> {
    if rungs == 0 || 2 * rungs > 64 {
        return Err(Error::InvalidArgument(format!("ladder length {rungs} outside 1..=32")));
    }
    Ok(())
}

/// `pattern` placed on rungs `start..start+len` (1-based), every other
/// rung empty.
pub fn product_state(pattern: &[RungState], start: usize, rungs: usize) -> Result<SectorState> {
    check_rungs(rungs)?;
    if start == 0 || start + pattern.len() > rungs + 1 {
        return Err(Error::InvalidArgument(format!(
            "pattern of {} rungs starting at rung {start} does not fit {rungs} rungs",
            pattern.len()
        )));
    }
    let n: usize = pattern.iter().map(|r| r.excitations()).sum();
    let basis = Arc::new(SectorBasis::new(2 * rungs, n, DEFAULT_SECTOR_BUDGET)?);
    let mut terms = vec![(0u64, Complex64::new(1.0, 0.0))];
    for (k, rung) in pattern.iter().enumerate() {
        let shift = 2 * (start - 1 + k);
        terms = terms
            .into_iter()
            .flat_map(|(mask, a)| {
                rung.components()
                    .into_iter()
                    .map(move |(bits, b)| (mask | (bits << shift), a * b))
            })
            .collect();
    }
    let mut s = SectorState::zeros(basis);
    for (mask, a) in terms {
        s.add(mask, a)?;
    }
    Ok(s)
}

/// `kind` on rung `rung` (1-based) of an otherwise empty ladder.
pub fn build_bell_state(kind: RungState, rung: usize, rungs: usize) -> Result<SectorState> {
    product_state(&[kind], rung, rungs)
}

/// First rung (1-based) of a pattern of `len` rungs centred on the ladder;
/// odd slack leaves the extra empty rung at the far end.
pub fn centered_start(len: usize, rungs: usize) -> Result<usize> {
    if len == 0 || len > rungs {
        return Err(Error::InvalidArgument(format!("cannot centre {len} rungs in {rungs}")));
    }
    Ok((rungs - len) / 2 + 1)
}

pub fn centered_state(pattern: &[RungState], rungs: usize) -> Result<SectorState> {
    product_state(pattern, centered_start(pattern.len(), rungs)?, rungs)
}

/// `(top_r top_{r+1} + e^{i phi} bottom_r bottom_{r+1})/sqrt 2` on the two
/// central rungs `r = floor(L/2)`, `r+1`.
pub fn two_exciton_state(phi: f64, rungs: usize) -> Result<SectorState> {
    check_rungs(rungs)?;
    if rungs < 2 {
        return Err(Error::InvalidArgument("two-exciton state needs at least 2 rungs".into()));
    }
    let r = rungs / 2 - 1; // 0-based
    let top = (1u64 << (2 * r)) | (1 << (2 * r + 2));
    let bottom = top << 1;
    let basis = Arc::new(SectorBasis::new(2 * rungs, 2, DEFAULT_SECTOR_BUDGET)?);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut s = SectorState::zeros(basis);
    s.add(top, Complex64::new(h, 0.0))?;
    s.add(bottom, Complex64::from_polar(h, phi))?;
    Ok(s)
}

/// Centred `S A_phi S A_phi`; `phi = pi` is `STST`.
pub fn four_exciton_state(phi: f64, rungs: usize) -> Result<SectorState> {
    let a = RungState::A(phi);
    centered_state(&[RungState::S, a, RungState::S, a], rungs)
}

/// Centred `STS` on an empty background (`O..OSTSO..O`).
pub fn three_exciton_state(rungs: usize) -> Result<SectorState> {
    centered_state(&[RungState::S, RungState::T, RungState::S], rungs)
}

/// Alternating S/T pattern over the whole ladder starting with `first`.
pub fn alternating_pattern(first: RungState, rungs: usize) -> Result<Vec<RungState>> {
    let second = match first {
        RungState::S => RungState::T,
        RungState::T => RungState::S,
        other => {
            return Err(Error::InvalidArgument(format!(
                "alternating background starts with S or T, not {}",
                other.label()
            )))
        }
    };
    Ok((0..rungs).map(|k| if k % 2 == 0 { first } else { second }).collect())
}

/// `I` on rung `rung` (1-based) with the other `L-1` rungs carrying the
/// alternating S/T sequence that starts with `first`, e.g.
/// `insertion_state(T, 2, 4) = |T I S T>`. Moving the `I` by one rung
/// swaps it with a neighbour and keeps this form.
pub fn insertion_state(first: RungState, rung: usize, rungs: usize) -> Result<SectorState> {
    if rung == 0 || rung > rungs {
        return Err(Error::InvalidArgument(format!("rung {rung} outside 1..={rungs}")));
    }
    let mut p = alternating_pattern(first, rungs - 1)?;
    p.insert(rung - 1, RungState::I);
    product_state(&p, 1, rungs)
}

/// Energy of a full-ladder pattern if it is an eigenstate of the uniform
/// ladder: alternating S/T patterns, `E = omega n + g_rung (#S - #T)`.
pub fn pattern_energy(pattern: &[RungState], omega: f64, g_rung: f64) -> Option<f64> {
    let alternating = pattern.windows(2).all(|w| {
        matches!((w[0], w[1]), (RungState::S, RungState::T) | (RungState::T, RungState::S))
    });
    if !alternating || !matches!(pattern.first(), Some(RungState::S | RungState::T)) {
        return None;
    }
    let s = pattern.iter().filter(|r| **r == RungState::S).count() as f64;
    let t = pattern.len() as f64 - s;
    Some(omega * pattern.len() as f64 + g_rung * (s - t))
}

/// Rank-one jump `|ket><bra|` acting within excitation sectors.
#[derive(Debug, Clone)]
pub struct RankOneJump {
    pub ket: SectorState,
    pub bra: SectorState,
}

impl RankOneJump {
    /// `|ket><bra|psi>`, `None` when `psi` is outside the bra's sector or
    /// orthogonal to it.
    pub fn apply(&self, psi: &SectorState) -> Option<SectorState> {
        if psi.basis.n_sites() != self.bra.basis.n_sites()
            || psi.basis.n_excitations() != self.bra.basis.n_excitations()
        {
            return None;
        }
        let overlap = self.bra.inner(psi);
        if overlap.norm() < 1e-12 {
            return None;
        }
        let mut out = self.ket.clone();
        out.amplitudes.iter_mut().for_each(|a| *a *= overlap);
        Some(out)
    }
}

/// The four boundary jumps that pump an `I` into an alternating S/T ladder
/// at rung 1 and remove it at rung `L`. With `B_A = STST..`,
/// `B_B = TSTS..` and `I` replacing the first or last rung:
/// `L1 = |I TS..><B_A|`, `L2 = |I ST..><B_B|`, `L3 = |B_A><ST.. I|`,
/// `L4 = |B_B><TS.. I|`.
pub fn boundary_jumps(rungs: usize) -> Result<[RankOneJump; 4]> {
    if rungs < 2 {
        return Err(Error::InvalidArgument("boundary jumps need at least 2 rungs".into()));
    }
    let ba = product_state(&alternating_pattern(RungState::S, rungs)?, 1, rungs)?;
    let bb = product_state(&alternating_pattern(RungState::T, rungs)?, 1, rungs)?;
    Ok([
        RankOneJump {
            ket: insertion_state(RungState::T, 1, rungs)?,
            bra: ba.clone(),
        },
        RankOneJump {
            ket: insertion_state(RungState::S, 1, rungs)?,
            bra: bb.clone(),
        },
        RankOneJump {
            ket: ba,
            bra: insertion_state(RungState::S, rungs, rungs)?,
        },
        RankOneJump {
            ket: bb,
            bra: insertion_state(RungState::T, rungs, rungs)?,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveStats {
    pub steps: usize,
    /// `max |<psi|psi> - <psi0|psi0>|` over the run.
    pub norm_drift: f64,
    /// `max |<H>(t) - <H>(0)|` over the run.
    pub energy_drift: f64,
    pub max_error_estimate: f64,
}

/// Propagates `state` on the grid `t_k = k dt`, `k = 0..=steps`, calling
/// `observe(k, psi)` at every grid point (including `k = 0`); returning
/// `false` stops the run after that point.
pub fn evolve_with(
    state: &SectorState,
    h: &SectorHamiltonian,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(usize, &SectorState) -> bool,
) -> Result<EvolveStats> {
    if state.basis.dim() != h.dim() {
        return Err(Error::InvalidArgument(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            state.basis.dim(),
            h.dim()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let prop = KrylovPropagator::new(&h.matrix);
    let mut psi = state.clone();
    let n0 = psi.norm().powi(2);
    let e0 = h.expectation(&psi);
    let mut stats = EvolveStats {
        steps: 0,
        norm_drift: 0.0,
        energy_drift: 0.0,
        max_error_estimate: 0.0,
    };
    if !observe(0, &psi) {
        return Ok(stats);
    }
    for k in 1..=steps {
        let s = prop.step(&mut psi.amplitudes, dt, (k - 1) as f64 * dt)?;
        stats.steps = k;
        stats.max_error_estimate = stats.max_error_estimate.max(s.error_estimate);
        stats.norm_drift = stats.norm_drift.max((psi.norm().powi(2) - n0).abs());
        stats.energy_drift = stats.energy_drift.max((h.expectation(&psi) - e0).abs());
        if !observe(k, &psi) {
            break;
        }
    }
    Ok(stats)
}

/// All states on the grid `k dt`, `k = 0..=steps`.
pub fn evolve(state: &SectorState, h: &SectorHamiltonian, dt: f64, steps: usize) -> Result<Vec<SectorState>> {
    let mut out = Vec::with_capacity(steps + 1);
    evolve_with(state, h, dt, steps, |_, psi| {
        out.push(psi.clone());
        true
    })?;
    Ok(out)
}

/// Occupation summed over each transport layer.
pub fn layer_occupations(spec: &LatticeSpec, state: &SectorState) -> Vec<f64> {
    let mut out = vec![0.0; spec.transport_len()];
    for (site, n) in state.occupations().into_iter().enumerate() {
        out[spec.layer_of(site)] += n;
    }
    out
}

/// Excitation-weighted mean layer (0-based).
pub fn excitation_center(spec: &LatticeSpec, state: &SectorState) -> f64 {
    let occ = layer_occupations(spec, state);
    let total: f64 = occ.iter().sum();
    occ.iter().enumerate().map(|(x, n)| x as f64 * n).sum::<f64>() / total
}

fn msd_of(occ: &[f64], center: f64) -> f64 {
    occ.iter()
        .enumerate()
        .map(|(x, n)| (x as f64 - center).powi(2) * n)
        .sum()
}

fn touches_boundary(occ: &[f64]) -> bool {
    occ[0] >= BOUNDARY_GUARD || occ[occ.len() - 1] >= BOUNDARY_GUARD
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsdSeries {
    pub dt: f64,
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    /// Central second differences; entry `k` belongs to `times[k + 1]`.
    pub curvature: Vec<f64>,
    pub center: f64,
    /// First grid time at which a terminal layer exceeded the guard.
    pub truncated_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl Plateau {
    /// `max |C - target|` over the window.
    pub fn max_deviation(&self, target: f64) -> f64 {
        (self.max - target).abs().max((self.min - target).abs())
    }
}

impl MsdSeries {
    fn from_msd(dt: f64, msd: Vec<f64>, center: f64, truncated_at: Option<f64>) -> Result<Self> {
        if msd.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "only {} boundary-safe grid points; need at least 3",
                msd.len()
            )));
        }
        let curvature = msd.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]) / (dt * dt)).collect();
        let times = (0..msd.len()).map(|k| k as f64 * dt).collect();
        Ok(Self {
            dt,
            times,
            msd,
            curvature,
            center,
            truncated_at,
        })
    }

    pub fn curvature_times(&self) -> &[f64] {
        &self.times[1..self.times.len() - 1]
    }

    /// Curvature statistics on `[t0, t1]` (clipped to the series); `None`
    /// if no curvature point falls inside.
    pub fn plateau(&self, t0: f64, t1: f64) -> Option<Plateau> {
        let eps = 1e-9 * self.dt;
        let pts: Vec<(f64, f64)> = self
            .curvature_times()
            .iter()
            .zip(&self.curvature)
            .filter(|(t, _)| **t >= t0 - eps && **t <= t1 + eps)
            .map(|(t, c)| (*t, *c))
            .collect();
        if pts.is_empty() {
            return None;
        }
        let vals = pts.iter().map(|p| p.1);
        Some(Plateau {
            mean: vals.clone().sum::<f64>() / pts.len() as f64,
            min: vals.clone().fold(f64::INFINITY, f64::min),
            max: vals.fold(f64::NEG_INFINITY, f64::max),
            points: pts.len(),
            t_start: pts[0].0,
            t_end: pts[pts.len() - 1].0,
        })
    }
}

/// MSD series from states on a uniform grid. `center` defaults to the
/// excitation-weighted mean position of `states[0]`. The series stops
/// before the first state whose terminal layers hold at least
/// [`BOUNDARY_GUARD`] excitations.
pub fn msd_curvature(spec: &LatticeSpec, states: &[SectorState], dt: f64, center: Option<f64>) -> Result<MsdSeries> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states to analyse".into()))?;
    let c = center.unwrap_or_else(|| excitation_center(spec, first));
    let mut msd = Vec::with_capacity(states.len());
    let mut truncated_at = None;
    for (k, s) in states.iter().enumerate() {
        let occ = layer_occupations(spec, s);
        if touches_boundary(&occ) {
            truncated_at = Some(k as f64 * dt);
            break;
        }
        msd.push(msd_of(&occ, c));
    }
    MsdSeries::from_msd(dt, msd, c, truncated_at)
}

/// Evolves `state` under the spin Hamiltonian of `spec` up to `t_max` (or
/// the boundary guard) and returns the MSD series, without storing states.
pub fn msd_run(spec: &LatticeSpec, state: &SectorState, dt: f64, t_max: f64) -> Result<(MsdSeries, EvolveStats)> {
    if spec.statistics != Statistics::Spin {
        return Err(Error::UnsupportedStatistics {
            operation: "msd_run",
            statistics: spec.statistics.name(),
        });
    }
    if state.basis.n_sites() != spec.n_sites() {
        return Err(Error::InvalidArgument(format!(
            "state lives on {} sites, lattice has {}",
            state.basis.n_sites(),
            spec.n_sites()
        )));
    }
    let h = crate::sector::build_spin_sector_hamiltonian(spec, state.basis.n_excitations())?;
    let steps = (t_max / dt).round() as usize;
    let c = excitation_center(spec, state);
    let mut msd = Vec::with_capacity(steps + 1);
    let mut truncated_at = None;
    let stats = evolve_with(state, &h, dt, steps, |k, psi| {
        let occ = layer_occupations(spec, psi);
        if touches_boundary(&occ) {
            truncated_at = Some(k as f64 * dt);
            return false;
        }
        msd.push(msd_of(&occ, c));
        true
    })?;
    Ok((MsdSeries::from_msd(dt, msd, c, truncated_at)?, stats))
}
