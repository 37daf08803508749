//! Jordan-Wigner fermionization of spin lattices.
//!
//! Spin sites are flat lattice indices; an ordering assigns each site a
//! fermion mode (its position along the string). For a `2 x L` ladder the
//! default ordering is the identity, i.e. the snake `l = l_1 + 2 (l_2 - 1)`.
//!
//! `f_p^dag = sigma^+_p prod_{q<p} s_q` with the string factor `s_q` set by
//! [`StringConvention`]. `N_p = f_p^dag f_p - f_p f_p^dag = sigma^z_p` is +1
//! on an occupied (spin up) site and -1 on an empty one.
//!
//! With the standard string a ladder fermionizes to
//! `+g_1 (f_{2l}^dag f_{2l-1} + h.c.)` on rungs and
//! `-g_2 (f_l^dag f_{l+2} N_{l+1} + h.c.)` on legs, so an empty intermediate
//! site (`N = -1`) gives plain hopping `+g_2`. Flipping the sign of every
//! mode on alternate rungs maps the leg sign to `+g_2` without touching
//! spectra.
//!
//! Operator algebra is exact: Pauli words reduce through 2x2 integer
//! matrices and fermion words are normal ordered by anticommutation with
//! integer signs. Coefficients are only ever multiplied by ±1 or ±2.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::krylov::KrylovPropagator;
use crate::lattice::{LatticeSpec, Statistics};
use crate::sector::{build_spin_sector_hamiltonian, SectorState};
use crate::sparse::CsrMatrix;

pub const MATRIX_SITE_CAP: usize = 14;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    Plus,
    Minus,
    Z,
}

/// Reduced product of Pauli factors on one site (identity is omitted).
/// `Number = sigma^+ sigma^-`, `Hole = sigma^- sigma^+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteWord {
    Plus,
    Minus,
    Z,
    Number,
    Hole,
}

type Local = [[i8; 2]; 2];

// index 0 = empty (down), 1 = occupied (up); m[to][from]
fn op_matrix(op: PauliOp) -> Local {
    match op {
        PauliOp::Plus => [[0, 0], [1, 0]],
        PauliOp::Minus => [[0, 1], [0, 0]],
        PauliOp::Z => [[-1, 0], [0, 1]],
    }
}

impl SiteWord {
    fn matrix(self) -> Local {
        match self {
            SiteWord::Plus => op_matrix(PauliOp::Plus),
            SiteWord::Minus => op_matrix(PauliOp::Minus),
            SiteWord::Z => op_matrix(PauliOp::Z),
            SiteWord::Number => [[0, 0], [0, 1]],
            SiteWord::Hole => [[1, 0], [0, 0]],
        }
    }

    /// The word as a product of Pauli factors, left to right.
    pub fn factors(self) -> Vec<PauliOp> {
        match self {
            SiteWord::Plus => vec![PauliOp::Plus],
            SiteWord::Minus => vec![PauliOp::Minus],
            SiteWord::Z => vec![PauliOp::Z],
            SiteWord::Number => vec![PauliOp::Plus, PauliOp::Minus],
            SiteWord::Hole => vec![PauliOp::Minus, PauliOp::Plus],
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            SiteWord::Plus => "+",
            SiteWord::Minus => "-",
            SiteWord::Z => "z",
            SiteWord::Number => "n",
            SiteWord::Hole => "h",
        }
    }
}

fn mat_mul(a: Local, b: Local) -> Local {
    let mut m = [[0i8; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

enum Reduced {
    Zero,
    Identity(i8),
    Word(i8, SiteWord),
}

fn classify(m: Local) -> Reduced {
    match m {
        [[0, 0], [0, 0]] => Reduced::Zero,
        [[a, 0], [0, b]] if a == b => Reduced::Identity(a),
        [[a, 0], [0, b]] if a == -b => Reduced::Word(b, SiteWord::Z),
        [[0, 0], [0, b]] => Reduced::Word(b, SiteWord::Number),
        [[a, 0], [0, 0]] => Reduced::Word(a, SiteWord::Hole),
        [[0, 0], [b, 0]] => Reduced::Word(b, SiteWord::Plus),
        [[0, a], [0, 0]] => Reduced::Word(a, SiteWord::Minus),
        _ => unreachable!("Pauli products are partial monomial matrices"),
    }
}

/// Coefficient times a product of per-site words.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub coeff: Complex64,
    pub sites: BTreeMap<usize, SiteWord>,
}

impl PauliString {
    pub fn identity(coeff: Complex64) -> Self {
        Self {
            coeff,
            sites: BTreeMap::new(),
        }
    }

    /// Product of `factors` in the given order; `None` if it vanishes.
    pub fn from_factors(coeff: Complex64, factors: &[(usize, PauliOp)]) -> Option<Self> {
        let mut per_site: BTreeMap<usize, Local> = BTreeMap::new();
        for &(site, op) in factors {
            let m = per_site.entry(site).or_insert([[1, 0], [0, 1]]);
            *m = mat_mul(*m, op_matrix(op));
        }
        let mut out = Self::identity(coeff);
        for (site, m) in per_site {
            match classify(m) {
                Reduced::Zero => return None,
                Reduced::Identity(s) => out.coeff *= s as f64,
                Reduced::Word(s, w) => {
                    out.coeff *= s as f64;
                    out.sites.insert(site, w);
                }
            }
        }
        Some(out)
    }

    pub fn single(coeff: Complex64, site: usize, word: SiteWord) -> Self {
        let mut s = Self::identity(coeff);
        s.sites.insert(site, word);
        s
    }

    /// `self * other`; `None` if the product vanishes.
    pub fn mul(&self, other: &Self) -> Option<Self> {
        let factors: Vec<(usize, PauliOp)> = self
            .factor_list()
            .into_iter()
            .chain(other.factor_list())
            .collect();
        Self::from_factors(self.coeff * other.coeff, &factors)
    }

    /// Words flattened to `(site, factor)` pairs, sites ascending.
    pub fn factor_list(&self) -> Vec<(usize, PauliOp)> {
        self.sites
            .iter()
            .flat_map(|(&s, w)| w.factors().into_iter().map(move |f| (s, f)))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|(&s, &w)| {
                let w = match w {
                    SiteWord::Plus => SiteWord::Minus,
                    SiteWord::Minus => SiteWord::Plus,
                    other => other,
                };
                (s, w)
            })
            .collect();
        Self {
            coeff: self.coeff.conj(),
            sites,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i)", self.coeff.re, self.coeff.im)?;
        for (s, w) in &self.sites {
            write!(f, " {}{}", w.symbol(), s + 1)?;
        }
        Ok(())
    }
}

/// Expands `Number = (1 + Z)/2` and `Hole = (1 - Z)/2` and collects equal
/// words, giving the unique expansion over `{1, Z, sigma^+, sigma^-}` per
/// site. Zero terms are dropped.
pub fn canonical_pauli(terms: &[PauliString]) -> Vec<PauliString> {
    let mut acc: BTreeMap<Vec<(usize, SiteWord)>, Complex64> = BTreeMap::new();
    for t in terms {
        let mut partial: Vec<(Complex64, Vec<(usize, SiteWord)>)> = vec![(t.coeff, Vec::new())];
        for (&s, &w) in &t.sites {
            partial = partial
                .into_iter()
                .flat_map(|(k, word)| {
                    let opts: Vec<(f64, Option<SiteWord>)> = match w {
                        SiteWord::Number => vec![(0.5, None), (0.5, Some(SiteWord::Z))],
                        SiteWord::Hole => vec![(0.5, None), (-0.5, Some(SiteWord::Z))],
                        other => vec![(1.0, Some(other))],
                    };
                    opts.into_iter().map(move |(f, w2)| {
                        let mut word = word.clone();
                        word.extend(w2.map(|w2| (s, w2)));
                        (k * f, word)
                    })
                })
                .collect();
        }
        for (k, word) in partial {
            *acc.entry(word).or_default() += k;
        }
    }
    acc.into_iter()
        .filter(|(_, k)| *k != c(0.0))
        .map(|(word, coeff)| PauliString {
            coeff,
            sites: word.into_iter().collect(),
        })
        .collect()
}

/// Excitation-conserving spin Hamiltonian of a lattice as Pauli strings:
/// `eps_i n_i` per site and `g (sigma^+_a sigma^-_b + h.c.)` per bond.
pub fn spin_hamiltonian_terms(spec: &LatticeSpec) -> Vec<PauliString> {
    let mut out = Vec::new();
    for i in 0..spec.n_sites() {
        let e = spec.onsite_energy(i);
        if e != 0.0 {
            out.push(PauliString::single(c(e), i, SiteWord::Number));
        }
    }
    for b in spec.bonds() {
        if b.weight == 0.0 {
            continue;
        }
        for (x, y) in [(b.a, b.b), (b.b, b.a)] {
            let p = PauliString::from_factors(c(b.weight), &[(x, PauliOp::Plus), (y, PauliOp::Minus)])
                .expect("distinct sites");
            out.push(p);
        }
    }
    out
}

/// String factor of the transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StringConvention {
    /// `s_q = -sigma^z_q = 1 - 2 n_q`, the usual fermion sign.
    #[default]
    Standard,
    /// `s_q = sigma^z_q`, literally `prod sigma^z`.
    SigmaZ,
}

impl StringConvention {
    /// `eta` in `s_q = eta N_q`.
    fn eta(self) -> f64 {
        match self {
            StringConvention::Standard => -1.0,
            StringConvention::SigmaZ => 1.0,
        }
    }
}

/// Bijection from spin sites to string positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JwOrdering {
    position: Vec<usize>,
    site: Vec<usize>,
}

impl JwOrdering {
    /// `position[site]` = mode index of that site.
    pub fn from_positions(position: Vec<usize>) -> Result<Self> {
        let n = position.len();
        let mut site = vec![usize::MAX; n];
        for (s, &p) in position.iter().enumerate() {
            if p >= n || site[p] != usize::MAX {
                return Err(Error::InvalidOrdering(format!(
                    "position {p} of site {s} is out of range or repeated"
                )));
            }
            site[p] = s;
        }
        Ok(Self { position, site })
    }

    /// Identity ordering; on a ladder this is the rung-by-rung snake.
    pub fn natural(n: usize) -> Self {
        Self {
            position: (0..n).collect(),
            site: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub fn position(&self, site: usize) -> usize {
        self.position[site]
    }

    pub fn site(&self, position: usize) -> usize {
        self.site[position]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FermionOp {
    Create(usize),
    Annihilate(usize),
    /// `N_p = f_p^dag f_p - f_p f_p^dag`.
    Parity(usize),
}

impl FermionOp {
    fn mode(self) -> usize {
        match self {
            FermionOp::Create(p) | FermionOp::Annihilate(p) | FermionOp::Parity(p) => p,
        }
    }
}

/// `coeff * f^dag_{c_1} .. f^dag_{c_k} f_{a_1} .. f_{a_m} N_{p_1} .. N_{p_r}`
/// with both index lists ascending and the parity modes disjoint from them.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionString {
    pub coeff: Complex64,
    pub creators: Vec<usize>,
    pub annihilators: Vec<usize>,
    pub parities: Vec<usize>,
}

type FKey = (Vec<usize>, Vec<usize>, Vec<usize>);

impl FermionString {
    fn key(&self) -> FKey {
        (self.creators.clone(), self.annihilators.clone(), self.parities.clone())
    }

    pub fn ops(&self) -> Vec<FermionOp> {
        self.creators
            .iter()
            .map(|&p| FermionOp::Create(p))
            .chain(self.annihilators.iter().map(|&p| FermionOp::Annihilate(p)))
            .chain(self.parities.iter().map(|&p| FermionOp::Parity(p)))
            .collect()
    }

    /// Replaces every `N_p` by `2 f_p^dag f_p - 1` and normal orders.
    pub fn expand(&self) -> Vec<FermionString> {
        let mut terms = vec![(self.coeff, self.creators.clone(), self.annihilators.clone())];
        for &p in &self.parities {
            let mut next = Vec::new();
            for (k, cr, an) in terms {
                let mut word: Vec<FermionOp> = cr.iter().map(|&q| FermionOp::Create(q)).collect();
                word.extend(an.iter().map(|&q| FermionOp::Annihilate(q)));
                next.push((-k, cr.clone(), an.clone()));
                word.push(FermionOp::Create(p));
                word.push(FermionOp::Annihilate(p));
                for t in normal_order(k * 2.0, &word) {
                    next.push((t.coeff, t.creators, t.annihilators));
                }
            }
            terms = next;
        }
        collect_terms(
            terms
                .into_iter()
                .map(|(coeff, creators, annihilators)| FermionString {
                    coeff,
                    creators,
                    annihilators,
                    parities: Vec::new(),
                })
                .collect(),
        )
    }

    pub fn adjoint(&self) -> Vec<FermionString> {
        // (C A P)^dag = P A^dag C^dag
        let mut word: Vec<FermionOp> = self.parities.iter().map(|&p| FermionOp::Parity(p)).collect();
        word.extend(self.annihilators.iter().rev().map(|&p| FermionOp::Create(p)));
        word.extend(self.creators.iter().rev().map(|&p| FermionOp::Annihilate(p)));
        normal_order(self.coeff.conj(), &word)
    }
}

impl fmt::Display for FermionString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i)", self.coeff.re, self.coeff.im)?;
        for p in &self.creators {
            write!(f, " c{}", p + 1)?;
        }
        for p in &self.annihilators {
            write!(f, " a{}", p + 1)?;
        }
        for p in &self.parities {
            write!(f, " N{}", p + 1)?;
        }
        Ok(())
    }
}

/// Sums equal strings and drops exact zeros; result sorted by key.
pub fn collect_terms(terms: Vec<FermionString>) -> Vec<FermionString> {
    let mut acc: BTreeMap<FKey, Complex64> = BTreeMap::new();
    for t in terms {
        *acc.entry(t.key()).or_default() += t.coeff;
    }
    acc.into_iter()
        .filter(|(_, k)| *k != c(0.0))
        .map(|((creators, annihilators, parities), coeff)| FermionString {
            coeff,
            creators,
            annihilators,
            parities,
        })
        .collect()
}

/// Fully expanded, normal-ordered, collected form: a unique representation
/// for comparing operators.
pub fn canonical_fermion(terms: &[FermionString]) -> Vec<FermionString> {
    collect_terms(terms.iter().flat_map(FermionString::expand).collect())
}

/// Normal orders `coeff * word` into canonical strings (not collected).
pub fn normal_order(coeff: Complex64, word: &[FermionOp]) -> Vec<FermionString> {
    let mut k = coeff;
    let mut ops: Vec<FermionOp> = word.to_vec();
    let touched: BTreeSet<usize> = ops
        .iter()
        .filter(|o| !matches!(o, FermionOp::Parity(_)))
        .map(|o| o.mode())
        .collect();
    let mut parities = BTreeSet::new();
    // absorb parities: N commutes with everything on other modes
    while let Some(i) = ops.iter().position(|o| matches!(o, FermionOp::Parity(_))) {
        let p = ops[i].mode();
        ops.remove(i);
        if !touched.contains(&p) {
            if !parities.remove(&p) {
                parities.insert(p);
            }
            continue;
        }
        let right = ops[i..]
            .iter()
            .find(|o| !matches!(o, FermionOp::Parity(_)) && o.mode() == p);
        let sign = match right {
            // N f^dag = f^dag, N f = -f
            Some(FermionOp::Create(_)) => 1.0,
            Some(FermionOp::Annihilate(_)) => -1.0,
            _ => {
                let left = ops[..i]
                    .iter()
                    .rev()
                    .find(|o| !matches!(o, FermionOp::Parity(_)) && o.mode() == p);
                match left {
                    // f^dag N = -f^dag, f N = f
                    Some(FermionOp::Create(_)) => -1.0,
                    Some(FermionOp::Annihilate(_)) => 1.0,
                    _ => unreachable!("touched mode has an operator"),
                }
            }
        };
        k *= sign;
    }
    let mut out = Vec::new();
    order_rec(k, ops, &parities.into_iter().collect::<Vec<_>>(), &mut out);
    out
}

fn rank(op: FermionOp) -> (u8, usize) {
    match op {
        FermionOp::Create(p) => (0, p),
        FermionOp::Annihilate(p) => (1, p),
        FermionOp::Parity(_) => unreachable!(),
    }
}

fn order_rec(k: Complex64, ops: Vec<FermionOp>, parities: &[usize], out: &mut Vec<FermionString>) {
    for i in 0..ops.len().saturating_sub(1) {
        let (a, b) = (ops[i], ops[i + 1]);
        if rank(a) < rank(b) {
            continue;
        }
        if a == b {
            return; // f f = f^dag f^dag = 0
        }
        let mut swapped = ops.clone();
        swapped.swap(i, i + 1);
        if let (FermionOp::Annihilate(p), FermionOp::Create(q)) = (a, b) {
            if p == q {
                let mut contracted = ops.clone();
                contracted.drain(i..i + 2);
                order_rec(k, contracted, parities, out);
            }
        }
        order_rec(-k, swapped, parities, out);
        return;
    }
    let creators = ops.iter().filter_map(|o| match o {
        FermionOp::Create(p) => Some(*p),
        _ => None,
    });
    let annihilators = ops.iter().filter_map(|o| match o {
        FermionOp::Annihilate(p) => Some(*p),
        _ => None,
    });
    out.push(FermionString {
        coeff: k,
        creators: creators.collect(),
        annihilators: annihilators.collect(),
        parities: parities.to_vec(),
    });
}

/// Fermionizes Pauli strings. Mode indices are string positions.
pub fn jw_transform(
    terms: &[PauliString],
    ordering: &JwOrdering,
    convention: StringConvention,
) -> Result<Vec<FermionString>> {
    let eta = convention.eta();
    let mut out = Vec::new();
    for t in terms {
        let mut factors: Vec<(usize, SiteWord)> = Vec::with_capacity(t.sites.len());
        for (&s, &w) in &t.sites {
            if s >= ordering.len() {
                return Err(Error::InvalidOrdering(format!("site {s} is not covered by the ordering")));
            }
            factors.push((ordering.position(s), w));
        }
        factors.sort_by_key(|f| f.0);
        // sigma^+_p = f^dag_p S_p, sigma^-_p = f_p S_p; all strings commute to
        // the right, leaving prod_j s_j^{c_j} with c_j the parity of string
        // carrying factors above j
        let mut word = Vec::new();
        let mut carriers = Vec::new();
        for &(p, w) in &factors {
            match w {
                SiteWord::Plus => {
                    word.push(FermionOp::Create(p));
                    carriers.push(p);
                }
                SiteWord::Minus => {
                    word.push(FermionOp::Annihilate(p));
                    carriers.push(p);
                }
                SiteWord::Z => word.push(FermionOp::Parity(p)),
                SiteWord::Number => word.extend([FermionOp::Create(p), FermionOp::Annihilate(p)]),
                SiteWord::Hole => word.extend([FermionOp::Annihilate(p), FermionOp::Create(p)]),
            }
        }
        let mut k = t.coeff;
        let top = carriers.iter().copied().max().unwrap_or(0);
        for j in 0..top {
            let above = carriers.iter().filter(|&&p| p > j).count();
            if above % 2 == 1 {
                word.push(FermionOp::Parity(j));
                k *= eta;
            }
        }
        out.extend(normal_order(k, &word));
    }
    Ok(collect_terms(out))
}

/// Inverse map back to Pauli strings on the original sites, collected in
/// [`canonical_pauli`] form.
pub fn inverse_jw(
    terms: &[FermionString],
    ordering: &JwOrdering,
    convention: StringConvention,
) -> Result<Vec<PauliString>> {
    let eta = convention.eta();
    let mut out = Vec::new();
    for t in terms {
        let mut factors = Vec::new();
        let mut k = t.coeff;
        for op in t.ops() {
            let p = op.mode();
            if p >= ordering.len() {
                return Err(Error::InvalidOrdering(format!("mode {p} is not covered by the ordering")));
            }
            let s = ordering.site(p);
            let local = match op {
                FermionOp::Create(_) => PauliOp::Plus,
                FermionOp::Annihilate(_) => PauliOp::Minus,
                FermionOp::Parity(_) => {
                    factors.push((s, PauliOp::Z));
                    continue;
                }
            };
            factors.push((s, local));
            for q in 0..p {
                factors.push((ordering.site(q), PauliOp::Z));
                k *= eta;
            }
        }
        if let Some(ps) = PauliString::from_factors(k, &factors) {
            out.push(ps);
        }
    }
    Ok(canonical_pauli(&out))
}

/// Fermionized `2 x L` ladder written down directly (not via the
/// transformation): `omega sum n`, rungs `s g_1 (f_{2l}^dag f_{2l-1} + h.c.)`
/// with `s = +1` for the standard string and `-1` for the sigma^z string, legs
/// `-g_2 (f_l^dag f_{l+2} N_{l+1} + h.c.)` in both conventions.
pub fn fermionized_ladder_terms(
    rungs: usize,
    omega: f64,
    g_rung: f64,
    g_leg: f64,
    convention: StringConvention,
) -> Vec<FermionString> {
    let rung_sign = -convention.eta();
    let mut out = Vec::new();
    let term = |k: f64, word: &[FermionOp]| normal_order(c(k), word);
    for p in 0..2 * rungs {
        out.extend(term(omega, &[FermionOp::Create(p), FermionOp::Annihilate(p)]));
    }
    for r in 0..rungs {
        let (a, b) = (2 * r, 2 * r + 1);
        out.extend(term(rung_sign * g_rung, &[FermionOp::Create(b), FermionOp::Annihilate(a)]));
        out.extend(term(rung_sign * g_rung, &[FermionOp::Create(a), FermionOp::Annihilate(b)]));
    }
    for l in 0..(2 * rungs).saturating_sub(2) {
        out.extend(term(
            -g_leg,
            &[FermionOp::Create(l), FermionOp::Annihilate(l + 2), FermionOp::Parity(l + 1)],
        ));
        out.extend(term(
            -g_leg,
            &[FermionOp::Create(l + 2), FermionOp::Annihilate(l), FermionOp::Parity(l + 1)],
        ));
    }
    collect_terms(out)
}

fn check_size(n: usize) -> Result<()> {
    if n > MATRIX_SITE_CAP {
        return Err(Error::DimensionCap {
            dim: 1usize << n.min(63),
            cap: 1 << MATRIX_SITE_CAP,
        });
    }
    Ok(())
}

/// Bit of qubit `p` in a basis index; qubit 0 is the most significant bit.
fn qubit_bit(n: usize, p: usize) -> usize {
    1 << (n - 1 - p)
}

/// Matrix of Pauli strings on `2^n` states, site `s` acting on qubit
/// `ordering.position(s)`.
pub fn pauli_matrix(terms: &[PauliString], ordering: &JwOrdering) -> Result<CsrMatrix<Complex64>> {
    let n = ordering.len();
    check_size(n)?;
    let dim = 1usize << n;
    let mut t = Vec::new();
    for col in 0..dim {
        'term: for term in terms {
            let mut row = col;
            let mut amp = term.coeff;
            for (&s, &w) in &term.sites {
                let bit = qubit_bit(n, ordering.position(s));
                let from = usize::from(row & bit != 0);
                let m = w.matrix();
                let to = if m[0][from] != 0 { 0 } else if m[1][from] != 0 { 1 } else { continue 'term };
                amp *= m[to][from] as f64;
                row = if to == 1 { row | bit } else { row & !bit };
            }
            t.push((row, col, amp));
        }
    }
    Ok(CsrMatrix::from_triplets(dim, dim, t))
}

/// Matrix of fermion strings on `2^n` states with the JW sign of
/// `convention`; mode `p` is qubit `p`.
pub fn fermion_matrix(terms: &[FermionString], n: usize, convention: StringConvention) -> Result<CsrMatrix<Complex64>> {
    check_size(n)?;
    let eta = convention.eta();
    let dim = 1usize << n;
    let string = |state: usize, p: usize| -> f64 {
        (0..p)
            .map(|q| eta * if state & qubit_bit(n, q) != 0 { 1.0 } else { -1.0 })
            .product()
    };
    let mut t = Vec::new();
    for col in 0..dim {
        'term: for term in terms {
            let mut state = col;
            let mut amp = term.coeff;
            for op in term.ops().into_iter().rev() {
                let p = op.mode();
                let bit = qubit_bit(n, p);
                let occ = state & bit != 0;
                match op {
                    FermionOp::Parity(_) => amp *= if occ { 1.0 } else { -1.0 },
                    FermionOp::Annihilate(_) => {
                        if !occ {
                            continue 'term;
                        }
                        state &= !bit;
                        amp *= string(state, p);
                    }
                    FermionOp::Create(_) => {
                        if occ {
                            continue 'term;
                        }
                        amp *= string(state, p);
                        state |= bit;
                    }
                }
            }
            t.push((state, col, amp));
        }
    }
    Ok(CsrMatrix::from_triplets(dim, dim, t))
}

/// Dense block of a `2^n` matrix on states with `k` excitations, basis
/// states in increasing index order.
pub fn sector_block(m: &CsrMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let states: Vec<usize> = (0..m.nrows()).filter(|s| s.count_ones() as usize == k).collect();
    let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut b = DMatrix::zeros(states.len(), states.len());
    for (i, &r) in states.iter().enumerate() {
        for (col, v) in m.row(r) {
            if let Some(&j) = pos.get(&col) {
                b[(i, j)] += v;
            }
        }
    }
    b
}

/// Single-excitation block with row `p` = qubit `p` occupied.
pub fn single_excitation_block(m: &CsrMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |p, q| m.get(qubit_bit(n, p), qubit_bit(n, q)))
}

// ---- ballistic subspaces ----

const FROZEN_TOL: f64 = 1e-10;
const PATTERN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallisticReport {
    pub ballistic: bool,
    /// Common eigenvalue of the intermediate-site parity on every active
    /// leg hop; `None` when no leg hop is active.
    pub c: Option<i8>,
    /// Distinct parities seen (both when the check fails).
    pub seen: Vec<i8>,
    /// Number of trajectory samples examined.
    pub samples: usize,
    pub t_max: f64,
}

/// Decides whether the dynamics started from `state` stays in a subspace
/// where every leg hop sees one fixed intermediate parity `c`.
///
/// The subspace is explored along the trajectory `psi(t)` under the spin
/// Hamiltonian, sampled every `0.1/g` up to `(2L + 10)/g` (a few ladder
/// crossings; `g` the largest coupling). Building the space from Lanczos
/// vectors instead is unstable: rounding noise outside an exactly invariant
/// subspace grows by `|H|/beta` per step and swamps the frozen-pair test
/// after a dozen vectors.
///
/// For every sample, every rung pair `(r, r+1)` and every configuration of
/// the other sites, the four-site pair amplitude is examined. If the leg
/// hops annihilate it (e.g. `|ST>`) the pair is frozen and skipped;
/// otherwise each configuration that allows a leg hop contributes the
/// parity of that hop's intermediate site: `(2,r)` for the first leg,
/// `(1,r+1)` for the second.
pub fn ballistic_subspace_check(state: &SectorState, spec: &LatticeSpec) -> Result<BallisticReport> {
    let g = spec.couplings.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if g == 0.0 {
        return ballistic_subspace_check_with(state, spec, 1.0, 0.0);
    }
    let rungs = spec.dims.get(1).copied().unwrap_or(0) as f64;
    ballistic_subspace_check_with(state, spec, 0.1 / g, (2.0 * rungs + 10.0) / g)
}

/// [`ballistic_subspace_check`] with an explicit sampling grid.
pub fn ballistic_subspace_check_with(
    state: &SectorState,
    spec: &LatticeSpec,
    dt: f64,
    t_max: f64,
) -> Result<BallisticReport> {
    if spec.statistics != Statistics::Spin || spec.dims.len() != 2 || spec.dims[0] != 2 {
        return Err(Error::InvalidArgument("ballistic check needs a 2 x L spin ladder".into()));
    }
    let rungs = spec.dims[1];
    let basis = &state.basis;
    if basis.n_sites() != 2 * rungs {
        return Err(Error::InvalidArgument(format!(
            "state lives on {} sites, ladder has {}",
            basis.n_sites(),
            2 * rungs
        )));
    }
    if state.norm() == 0.0 {
        return Err(Error::InvalidArgument("ballistic check of the zero state".into()));
    }
    let h = build_spin_sector_hamiltonian(spec, basis.n_excitations())?;
    let prop = KrylovPropagator::new(&h.matrix);
    let steps = if t_max > 0.0 { (t_max / dt).ceil() as usize } else { 0 };
    let mut psi: Vec<Complex64> = state.amplitudes.iter().map(|a| a / state.norm()).collect();
    let mut seen = BTreeSet::new();
    for k in 0..=steps {
        if k > 0 {
            prop.step(&mut psi, dt, (k - 1) as f64 * dt)?;
        }
        record_parities(basis.states(), &psi, rungs, &mut seen);
    }
    let seen: Vec<i8> = seen.into_iter().collect();
    Ok(BallisticReport {
        ballistic: seen.len() <= 1,
        c: if seen.len() == 1 { Some(seen[0]) } else { None },
        seen,
        samples: steps + 1,
        t_max: steps as f64 * dt,
    })
}

fn record_parities(states: &[u64], v: &[Complex64], rungs: usize, seen: &mut BTreeSet<i8>) {
    for r in 0..rungs.saturating_sub(1) {
        let shift = 2 * r;
        let pmask = 0b1111u64 << shift;
        let mut groups: HashMap<u64, [Complex64; 16]> = HashMap::new();
        for (&mask, a) in states.iter().zip(v) {
            if a.norm() == 0.0 {
                continue;
            }
            let local = ((mask & pmask) >> shift) as usize;
            groups.entry(mask & !pmask).or_insert([c(0.0); 16])[local] += a;
        }
        for phi in groups.values() {
            // bits: 0 = (1,r), 1 = (2,r), 2 = (1,r+1), 3 = (2,r+1)
            let mut hopped = [c(0.0); 16];
            for (x, a) in phi.iter().enumerate() {
                if (x & 1 != 0) != (x & 4 != 0) {
                    hopped[x ^ 0b0101] += a;
                }
                if (x & 2 != 0) != (x & 8 != 0) {
                    hopped[x ^ 0b1010] += a;
                }
            }
            let moved = hopped.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if moved < FROZEN_TOL {
                continue;
            }
            for (x, a) in phi.iter().enumerate() {
                if a.norm() <= PATTERN_TOL {
                    continue;
                }
                if (x & 1 != 0) != (x & 4 != 0) {
                    seen.insert(if x & 2 != 0 { 1i8 } else { -1 });
                }
                if (x & 2 != 0) != (x & 8 != 0) {
                    seen.insert(if x & 4 != 0 { 1i8 } else { -1 });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_hopping_matrix;
    use std::sync::Arc;

    fn one(x: f64) -> Complex64 {
        c(x)
    }

    #[test]
    fn first_site_creation_has_no_string() {
        let p = PauliString::single(one(1.0), 0, SiteWord::Plus);
        let f = jw_transform(&[p], &JwOrdering::natural(3), StringConvention::Standard).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].creators, vec![0]);
        assert!(f[0].annihilators.is_empty() && f[0].parities.is_empty());
        assert_eq!(f[0].coeff, one(1.0));
    }

    #[test]
    fn chain_bond_is_plain_hopping() {
        let bond = vec![
            PauliString::from_factors(one(1.0), &[(0, PauliOp::Plus), (1, PauliOp::Minus)]).unwrap(),
            PauliString::from_factors(one(1.0), &[(1, PauliOp::Plus), (0, PauliOp::Minus)]).unwrap(),
        ];
        let f = jw_transform(&bond, &JwOrdering::natural(2), StringConvention::Standard).unwrap();
        let text: Vec<String> = f.iter().map(|t| t.to_string()).collect();
        assert_eq!(text, vec!["(+1+0i) c1 a2", "(+1+0i) c2 a1"]);
    }

    #[test]
    fn leg_hop_picks_up_intermediate_parity() {
        let hop = PauliString::from_factors(one(0.5), &[(0, PauliOp::Plus), (2, PauliOp::Minus)]).unwrap();
        for conv in [StringConvention::Standard, StringConvention::SigmaZ] {
            let f = jw_transform(std::slice::from_ref(&hop), &JwOrdering::natural(3), conv).unwrap();
            assert_eq!(f.len(), 1);
            assert_eq!(f[0].to_string(), "(-0.5+0i) c1 a3 N2");
        }
    }

    #[test]
    fn number_operator_matrix_bit_order() {
        let n1 = FermionString {
            coeff: one(1.0),
            creators: vec![0],
            annihilators: vec![0],
            parities: vec![],
        };
        let m = fermion_matrix(&[n1], 2, StringConvention::Standard).unwrap().to_dense();
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn fermion_matrices_anticommute() {
        let n = 4;
        let op = |o: FermionOp| FermionString {
            coeff: one(1.0),
            creators: match o {
                FermionOp::Create(p) => vec![p],
                _ => vec![],
            },
            annihilators: match o {
                FermionOp::Annihilate(p) => vec![p],
                _ => vec![],
            },
            parities: vec![],
        };
        for conv in [StringConvention::Standard, StringConvention::SigmaZ] {
            for i in 0..n {
                for j in 0..n {
                    let a = fermion_matrix(&[op(FermionOp::Annihilate(i))], n, conv).unwrap();
                    let b = fermion_matrix(&[op(FermionOp::Create(j))], n, conv).unwrap();
                    let anti = a.matmul(&b).add(&b.matmul(&a)).to_dense();
                    let expect = if i == j { DMatrix::identity(16, 16) } else { DMatrix::zeros(16, 16) };
                    assert_eq!(anti, expect, "{conv:?} {i} {j}");
                    let aa = a.matmul(&fermion_matrix(&[op(FermionOp::Annihilate(j))], n, conv).unwrap());
                    let aa2 = fermion_matrix(&[op(FermionOp::Annihilate(j))], n, conv).unwrap().matmul(&a);
                    assert_eq!(aa.add(&aa2).nnz(), 0);
                }
            }
        }
    }

    #[test]
    fn normal_ordering_contracts() {
        // f_1 f_1^dag = 1 - f_1^dag f_1
        let t = collect_terms(normal_order(one(1.0), &[FermionOp::Annihilate(0), FermionOp::Create(0)]));
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|s| s.creators.is_empty() && s.coeff == one(1.0)));
        assert!(t.iter().any(|s| s.creators == vec![0] && s.coeff == one(-1.0)));
        // f^dag f^dag on one mode vanishes
        assert!(normal_order(one(1.0), &[FermionOp::Create(2), FermionOp::Create(2)]).is_empty());
        // N f^dag = f^dag
        let t = normal_order(one(1.0), &[FermionOp::Parity(1), FermionOp::Create(1)]);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].coeff, one(1.0));
        // N N = 1
        let t = normal_order(one(3.0), &[FermionOp::Parity(4), FermionOp::Parity(4)]);
        assert_eq!(t[0].parities, Vec::<usize>::new());
    }

    #[test]
    fn symbolic_matches_matrix_for_words() {
        let words: Vec<Vec<FermionOp>> = vec![
            vec![FermionOp::Annihilate(2), FermionOp::Create(0), FermionOp::Parity(1), FermionOp::Create(2)],
            vec![FermionOp::Parity(0), FermionOp::Annihilate(1), FermionOp::Parity(1), FermionOp::Create(1)],
            vec![FermionOp::Annihilate(0), FermionOp::Annihilate(2), FermionOp::Create(2), FermionOp::Create(0)],
        ];
        for w in words {
            let direct = w
                .iter()
                .map(|&o| {
                    fermion_matrix(
                        &normal_order(one(1.0), &[o]),
                        3,
                        StringConvention::Standard,
                    )
                    .unwrap()
                })
                .reduce(|a, b| a.matmul(&b))
                .unwrap();
            let ordered = fermion_matrix(&normal_order(one(1.0), &w), 3, StringConvention::Standard).unwrap();
            assert_eq!(direct.to_dense(), ordered.to_dense(), "{w:?}");
        }
    }

    #[test]
    fn ladder_transform_matches_written_form() {
        for conv in [StringConvention::Standard, StringConvention::SigmaZ] {
            let spec = LatticeSpec::ladder(3, 1.5, 0.7, 1.1).unwrap();
            let got = jw_transform(&spin_hamiltonian_terms(&spec), &JwOrdering::natural(6), conv).unwrap();
            let want = fermionized_ladder_terms(3, 1.5, 0.7, 1.1, conv);
            assert_eq!(canonical_fermion(&got), canonical_fermion(&want), "{conv:?}");
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let spec = LatticeSpec::ladder(3, 1.5, 0.7, 1.1).unwrap();
        let mut terms = spin_hamiltonian_terms(&spec);
        terms.push(PauliString::from_factors(one(2.0), &[(1, PauliOp::Z), (4, PauliOp::Minus), (5, PauliOp::Plus)]).unwrap());
        let ord = JwOrdering::from_positions(vec![3, 0, 5, 1, 2, 4]).unwrap();
        for conv in [StringConvention::Standard, StringConvention::SigmaZ] {
            let f = jw_transform(&terms, &ord, conv).unwrap();
            assert_eq!(inverse_jw(&f, &ord, conv).unwrap(), canonical_pauli(&terms));
        }
    }

    #[test]
    fn ordering_must_be_bijective() {
        assert!(matches!(
            JwOrdering::from_positions(vec![0, 2, 2]),
            Err(Error::InvalidOrdering(_))
        ));
        assert!(JwOrdering::from_positions(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn single_excitation_block_is_uniform_ladder() {
        let spec = LatticeSpec::ladder(4, 0.9, 0.6, 1.3).unwrap();
        let f = fermionized_ladder_terms(4, 0.9, 0.6, 1.3, StringConvention::Standard);
        let m = fermion_matrix(&f, 8, StringConvention::Standard).unwrap();
        let block = single_excitation_block(&m, 8);
        let free = build_hopping_matrix(&spec.with_statistics(Statistics::Fermion)).unwrap();
        assert_eq!(block, free.entries);
    }

    #[test]
    fn pauli_matrix_of_sector_hamiltonian() {
        let spec = LatticeSpec::ladder(2, 1.0, 0.5, 0.8).unwrap();
        let m = pauli_matrix(&spin_hamiltonian_terms(&spec), &JwOrdering::natural(4)).unwrap();
        assert!(m.hermiticity_defect() == 0.0);
        let block = sector_block(&m, 1);
        let h1 = build_spin_sector_hamiltonian(&spec, 1).unwrap().matrix.to_dense();
        // sector basis is LSB-first, qubits are MSB-first: reverse the rows
        let rev = DMatrix::from_fn(4, 4, |i, j| block[(3 - i, 3 - j)]);
        assert_eq!(rev, h1);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            fermion_matrix(&[], 15, StringConvention::Standard),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn single_excitation_is_ballistic() {
        let spec = LatticeSpec::ladder(5, 1.0, 1.0, 1.0).unwrap();
        let basis = Arc::new(crate::sector::SectorBasis::new(10, 1, 100).unwrap());
        for site in 0..10 {
            let s = SectorState::configuration(Arc::clone(&basis), 1 << site).unwrap();
            let r = ballistic_subspace_check(&s, &spec).unwrap();
            assert!(r.ballistic);
            assert_eq!(r.c, Some(-1));
        }
    }

    #[test]
    fn ballistic_check_needs_ladder() {
        let spec = LatticeSpec::chain(4, 1.0, 1.0, Statistics::Spin).unwrap();
        let basis = Arc::new(crate::sector::SectorBasis::new(4, 1, 100).unwrap());
        let s = SectorState::configuration(basis, 1).unwrap();
        assert!(ballistic_subspace_check(&s, &spec).is_err());
    }
}
