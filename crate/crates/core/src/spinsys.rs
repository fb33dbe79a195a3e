//! Spin Hamiltonians as lists of local terms, their overlap graph, term-chain
//! distances, truncated patches and single-site Pauli jump sets.

use std::collections::VecDeque;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ops::{embed, hermiticity_defect, op_norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat<c64> {
        let o = c64::new(0.0, 0.0);
        let l = c64::new(1.0, 0.0);
        let i = c64::new(0.0, 1.0);
        let e = match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        };
        Mat::from_fn(2, 2, |r, c| e[r][c])
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub const XYZ: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// Dense matrix of a Pauli string, first entry is the most significant factor.
pub fn pauli_string(ps: &[Pauli]) -> Mat<c64> {
    let mut out = Mat::<c64>::identity(1, 1);
    for p in ps {
        out = crate::linalg::ops::kron(&out, &p.matrix());
    }
    out
}

/// A sorted set of site indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Self {
        let mut sites: Vec<usize> = sites.into_iter().collect();
        sites.sort_unstable();
        sites.dedup();
        Region { sites }
    }

    pub fn empty() -> Self {
        Region { sites: Vec::new() }
    }

    pub fn all(n: usize) -> Self {
        Region::new(0..n)
    }

    /// Region checked against a system of `n` sites.
    pub fn within(sites: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let r = Region::new(sites);
        if let Some(&s) = r.sites.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidRegion(format!("site {s} outside [0, {n})")));
        }
        Ok(r)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.sites.binary_search(&s).is_ok()
    }

    pub fn intersects(&self, other: &[usize]) -> bool {
        other.iter().any(|&s| self.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.sites.iter().chain(other.sites.iter()).copied())
    }

    pub fn complement(&self, n: usize) -> Region {
        Region::new((0..n).filter(|s| !self.contains(*s)))
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.sites.iter().all(|&s| other.contains(s))
    }

    pub fn max_site(&self) -> Option<usize> {
        self.sites.last().copied()
    }
}

#[derive(Clone, Debug)]
pub struct HamTerm {
    pub support: Vec<usize>,
    pub matrix: Mat<c64>,
    pub label: String,
}

impl HamTerm {
    pub fn new(support: Vec<usize>, matrix: Mat<c64>, label: impl Into<String>) -> Result<Self> {
        let k = support.len();
        if k == 0 || matrix.nrows() != 1 << k || matrix.ncols() != 1 << k {
            return Err(Error::InvalidSize(format!(
                "term matrix {}x{} does not match support of size {k}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRegion("term support must be strictly increasing".into()));
        }
        if hermiticity_defect(&matrix) > 1e-12 {
            return Err(Error::NumericDomain(format!("term matrix is not Hermitian: {}", label_str(&matrix))));
        }
        if op_norm(&matrix) > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter("term operator norm exceeds 1".into()));
        }
        Ok(HamTerm { support, matrix, label: label.into() })
    }

    pub fn overlaps(&self, other: &HamTerm) -> bool {
        self.support.iter().any(|s| other.support.contains(s))
    }

    pub fn touches(&self, r: &Region) -> bool {
        r.intersects(&self.support)
    }
}

fn label_str(m: &Mat<c64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<HamTerm>,
    adjacency: Vec<Vec<usize>>,
    degree: usize,
}

/// Result of a term-chain distance query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    Finite(usize),
    Disconnected,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Disconnected => None,
        }
    }
}

impl Hamiltonian {
    pub fn new(n: usize, terms: Vec<HamTerm>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("n must be positive".into()));
        }
        for t in &terms {
            if let Some(&s) = t.support.iter().find(|&&s| s >= n) {
                return Err(Error::InvalidRegion(format!("term {} has site {s} >= n = {n}", t.label)));
            }
        }
        let m = terms.len();
        let adjacency: Vec<Vec<usize>> = (0..m)
            .map(|a| (0..m).filter(|&b| terms[a].overlaps(&terms[b])).collect())
            .collect();
        // Each term's degree counts the other terms it overlaps; a lone term
        // still interacts with itself, so the floor is one.
        let degree = if m == 0 {
            0
        } else {
            adjacency.iter().map(|nb| (nb.len() - 1).max(1)).max().unwrap_or(1)
        };
        Ok(Hamiltonian { n, terms, adjacency, degree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn terms(&self) -> &[HamTerm] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Degree with the self-loop counted: the largest number of terms
    /// (itself included) overlapping any one term. Bounds every count of
    /// terms sharing a site, which `degree` does not.
    pub fn degree_with_loops(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn support(&self) -> Region {
        Region::new(self.terms.iter().flat_map(|t| t.support.iter().copied()))
    }

    /// Dense 2^n x 2^n matrix.
    pub fn dense(&self) -> Mat<c64> {
        let d = self.dim();
        let mut h = Mat::<c64>::zeros(d, d);
        for t in &self.terms {
            h += embed(&t.matrix, &t.support, self.n);
        }
        h
    }

    /// Re-index onto the sub-register `sites`; every term must live inside it.
    pub fn restrict(&self, sites: &Region) -> Result<Hamiltonian> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut sup = Vec::with_capacity(t.support.len());
            for &s in &t.support {
                match sites.sites().binary_search(&s) {
                    Ok(p) => sup.push(p),
                    Err(_) => {
                        return Err(Error::InvalidRegion(format!("term {} leaves the register", t.label)))
                    }
                }
            }
            terms.push(HamTerm { support: sup, matrix: t.matrix.clone(), label: t.label.clone() });
        }
        Hamiltonian::new(sites.len().max(1), terms)
    }

    pub fn term_ids_touching(&self, r: &Region) -> Vec<usize> {
        (0..self.terms.len()).filter(|&i| self.terms[i].touches(r)).collect()
    }
}

fn two() -> c64 {
    c64::new(2.0, 0.0)
}

pub fn build_tfim_chain(n: usize, j: f64, g: f64, periodic: bool) -> Result<Hamiltonian> {
    if j.abs() > 1.0 || g.abs() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("|J|, |g| must be <= 1 (J = {j}, g = {g})")));
    }
    tfim_terms(n, j, g.clamp(-1.0, 1.0), periodic)
}

fn tfim_terms(n: usize, j: f64, g: f64, periodic: bool) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("chain needs n >= 2, got {n}")));
    }
    let zz = pauli_string(&[Pauli::Z, Pauli::Z]);
    let x = Pauli::X.matrix();
    let mut terms = Vec::new();
    if j != 0.0 {
        let bonds = if periodic && n > 2 { n } else { n - 1 };
        for i in 0..bonds {
            let a = i;
            let b = (i + 1) % n;
            let sup = if a < b { vec![a, b] } else { vec![b, a] };
            let m = Mat::from_fn(4, 4, |r, c| zz[(r, c)] * j);
            terms.push(HamTerm::new(sup, m, format!("ZZ({a},{b})"))?);
        }
    }
    if g != 0.0 {
        // a field stronger than 1 is split into equal pieces of norm <= 1
        let pieces = g.abs().ceil().max(1.0) as usize;
        let gp = g / pieces as f64;
        for i in 0..n {
            for k in 0..pieces {
                let m = Mat::from_fn(2, 2, |r, c| x[(r, c)] * gp);
                let label = if pieces == 1 { format!("X({i})") } else { format!("X({i})#{k}") };
                terms.push(HamTerm::new(vec![i], m, label)?);
            }
        }
    }
    Hamiltonian::new(n, terms)
}

/// TFIM chain with any field strength; each g X_i is stored as ceil(|g|)
/// equal single-site terms.
pub fn build_tfim_chain_split(n: usize, j: f64, g: f64, periodic: bool) -> Result<Hamiltonian> {
    if j.abs() > 1.0 || !g.is_finite() {
        return Err(Error::InvalidParameter(format!("|J| must be <= 1 and g finite (J = {j}, g = {g})")));
    }
    tfim_terms(n, j, g, periodic)
}

/// Classical Ising chain sum_i J Z_i Z_{i+1}.
pub fn build_ising_chain(n: usize, j: f64, periodic: bool) -> Result<Hamiltonian> {
    build_tfim_chain(n, j, 0.0, periodic)
}

/// GUE-like Hermitian matrix of dimension d scaled to unit operator norm.
pub fn random_unit_hermitian(d: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let mut g = Mat::<c64>::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(r, c)] = c64::new(re, im);
        }
    }
    let mut h = Mat::from_fn(d, d, |r, c| (g[(r, c)] + g[(c, r)].conj()) / two());
    let nrm = op_norm(&h);
    h = Mat::from_fn(d, d, |r, c| h[(r, c)] / nrm);
    // remove rounding asymmetry so the Hermitian check is exact
    Mat::from_fn(d, d, |r, c| (h[(r, c)] + h[(c, r)].conj()) / two())
}

pub fn build_random_local(n: usize, k: usize, m: usize, seed: u64) -> Result<Hamiltonian> {
    if k > n {
        return Err(Error::InvalidLocality { k, n });
    }
    if k == 0 || m == 0 {
        return Err(Error::InvalidSize("k and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(m);
    for t in 0..m {
        let mut sup = rand::seq::index::sample(&mut rng, n, k).into_vec();
        sup.sort_unstable();
        let mut mat = random_unit_hermitian(1 << k, &mut rng);
        let nrm = op_norm(&mat);
        if nrm > 1.0 {
            mat = Mat::from_fn(mat.nrows(), mat.ncols(), |r, c| mat[(r, c)] / nrm);
        }
        terms.push(HamTerm::new(sup, mat, format!("R{t}"))?);
    }
    Hamiltonian::new(n, terms)
}

/// Term-level BFS distances: terms touching `a` get level 1.
fn term_levels(h: &Hamiltonian, a: &Region) -> Vec<Option<usize>> {
    let m = h.terms.len();
    let mut level = vec![None; m];
    let mut queue = VecDeque::new();
    for i in h.term_ids_touching(a) {
        level[i] = Some(1);
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        let li = level[i].unwrap();
        for &j in &h.adjacency[i] {
            if level[j].is_none() {
                level[j] = Some(li + 1);
                queue.push_back(j);
            }
        }
    }
    level
}

/// Minimal number of terms in a chain A ~ g_1 ~ ... ~ g_l ~ B.
pub fn graph_distance(h: &Hamiltonian, a: &Region, b: &Region) -> Result<Distance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidRegion("distance needs nonempty regions".into()));
    }
    let levels = term_levels(h, a);
    let best = h
        .term_ids_touching(b)
        .into_iter()
        .filter_map(|i| levels[i])
        .min();
    Ok(best.map_or(Distance::Disconnected, Distance::Finite))
}

/// Local patch H_l: terms touching A plus terms at distance < l - 1 from A.
pub fn truncate_patch(h: &Hamiltonian, a: &Region, ell: usize) -> Result<Hamiltonian> {
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be >= 1".into()));
    }
    let mut terms = Vec::new();
    for t in &h.terms {
        let keep = if a.is_empty() {
            false
        } else if t.touches(a) {
            true
        } else {
            let sup = Region::new(t.support.iter().copied());
            match graph_distance(h, &sup, a)? {
                Distance::Finite(d) => d + 1 < ell,
                Distance::Disconnected => false,
            }
        };
        if keep {
            terms.push(t.clone());
        }
    }
    Hamiltonian::new(h.n, terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub label: String,
    pub site: usize,
    pub pauli: Pauli,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    pub jumps: Vec<Jump>,
}

impl JumpSet {
    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn region(&self) -> Region {
        Region::new(self.jumps.iter().map(|j| j.site))
    }

    /// Dense jump matrices on an `n`-site register.
    pub fn dense(&self, n: usize) -> Vec<Mat<c64>> {
        self.jumps.iter().map(|j| embed(&j.pauli.matrix(), &[j.site], n)).collect()
    }

    /// Re-index the jumps onto the sub-register `sites`.
    pub fn restrict(&self, sites: &Region) -> Result<JumpSet> {
        let mut jumps = Vec::with_capacity(self.jumps.len());
        for j in &self.jumps {
            let p = sites
                .sites()
                .binary_search(&j.site)
                .map_err(|_| Error::InvalidRegion(format!("jump {} leaves the register", j.label)))?;
            jumps.push(Jump { label: j.label.clone(), site: p, pauli: j.pauli });
        }
        Ok(JumpSet { jumps })
    }
}

pub fn single_site_jumps(a: &Region) -> Result<JumpSet> {
    if a.is_empty() {
        return Err(Error::InvalidRegion("jump region is empty".into()));
    }
    let mut jumps = Vec::with_capacity(3 * a.len());
    for &s in a.sites() {
        for p in Pauli::XYZ {
            jumps.push(Jump { label: format!("{}_{s}", p.symbol()), site: s, pauli: p });
        }
    }
    Ok(JumpSet { jumps })
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    support: Vec<usize>,
    label: String,
    /// row-major [re, im] pairs
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianRecord {
    n: usize,
    terms: Vec<TermRecord>,
}

impl Hamiltonian {
    pub fn to_json(&self) -> String {
        let rec = HamiltonianRecord {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let d = t.matrix.nrows();
                    let mut entries = Vec::with_capacity(d * d);
                    for r in 0..d {
                        for c in 0..d {
                            let z = t.matrix[(r, c)];
                            entries.push([z.re, z.im]);
                        }
                    }
                    TermRecord { support: t.support.clone(), label: t.label.clone(), entries }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rec).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: HamiltonianRecord = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut terms = Vec::with_capacity(rec.terms.len());
        for t in rec.terms {
            let d = 1usize << t.support.len();
            if t.entries.len() != d * d {
                return Err(Error::Parse(format!("term {} has {} entries, want {}", t.label, t.entries.len(), d * d)));
            }
            let m = Mat::from_fn(d, d, |r, c| {
                let [re, im] = t.entries[r * d + c];
                c64::new(re, im)
            });
            terms.push(HamTerm::new(t.support, m, t.label)?);
        }
        Hamiltonian::new(rec.n, terms)
    }
}
