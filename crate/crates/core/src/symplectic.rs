//! Exact linear and symplectic algebra over the prime field `Z_p`.
//!
//! Vectors live in `Z_p^{2n}` and use the split convention
//! `(a_1 .. a_n | b_1 .. b_n)`: the first half holds X-exponents, the second
//! half Z-exponents. The symplectic inner product of `x = (a|b)` and
//! `y = (c|d)` is
//!
//! ```text
//! <x, y> = sum_i (b_i c_i - a_i d_i)  mod p
//! ```
//!
//! so `<x, y>` is the phase exponent picked up when `XZ(x)` and `XZ(y)` are
//! commuted past each other. Subspaces are kept in reduced row echelon form,
//! which makes equality, membership, and coset representatives canonical.

use num_bigint::BigUint;
use std::fmt;

use crate::{Error, Result};

/// Trial division; moduli here are tiny.
pub fn is_prime(p: u8) -> bool {
    if p < 2 {
        return false;
    }
    (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn inv_mod(x: u8, p: u8) -> u8 {
    debug_assert!(x % p != 0);
    (1..p).find(|&y| (x as u16 * y as u16) % p as u16 == 1).unwrap()
}

/// A vector in `Z_p^{2n}`, split convention `(a_1..a_n | b_1..b_n)`.
///
/// Coordinates are reduced residues `0..p`. Ordering is lexicographic on the
/// coordinate list, which matches the numeric order of [`GfVector::index`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GfVector {
    p: u8,
    coords: Vec<u8>,
}

impl GfVector {
    /// Builds a vector, validating the modulus and the coordinate range.
    pub fn new(p: u8, coords: Vec<u8>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
        }
        if coords.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "coordinate length {} is odd",
                coords.len()
            )));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= p) {
            return Err(Error::InvalidParameter(format!("coordinate {c} >= p = {p}")));
        }
        Ok(GfVector { p, coords })
    }

    /// The zero vector of `Z_p^{2n}`.
    pub fn zero(p: u8, n: usize) -> Self {
        GfVector { p, coords: vec![0; 2 * n] }
    }

    /// Builds `(a | b)` from the two halves.
    pub fn from_halves(p: u8, a: &[u8], b: &[u8]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(a.len(), b.len()));
        }
        let mut coords = a.to_vec();
        coords.extend_from_slice(b);
        GfVector::new(p, coords)
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    /// Ambient dimension `2n`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of qudit slots `n`.
    pub fn slots(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[u8] {
        &self.coords
    }

    /// X-exponent on slot `i` (0-based).
    pub fn a(&self, i: usize) -> u8 {
        self.coords[i]
    }

    /// Z-exponent on slot `i` (0-based).
    pub fn b(&self, i: usize) -> u8 {
        self.coords[self.slots() + i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &GfVector) -> GfVector {
        self.check_compatible(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&x, &y)| (x + y) % self.p)
            .collect();
        GfVector { p: self.p, coords }
    }

    pub fn sub(&self, other: &GfVector) -> GfVector {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GfVector {
        let coords = self.coords.iter().map(|&x| (self.p - x) % self.p).collect();
        GfVector { p: self.p, coords }
    }

    pub fn scaled(&self, c: u8) -> GfVector {
        let c = c % self.p;
        let coords = self
            .coords
            .iter()
            .map(|&x| ((x as u16 * c as u16) % self.p as u16) as u8)
            .collect();
        GfVector { p: self.p, coords }
    }

    /// The symplectic inner product `<self, other> mod p`.
    ///
    /// Panics if the operands disagree in modulus or dimension; callers
    /// validate vectors at the boundary and mix them freely afterwards.
    pub fn symplectic_product(&self, other: &GfVector) -> u8 {
        self.check_compatible(other);
        let n = self.slots();
        let p = self.p as u32;
        let mut acc: u32 = 0;
        for i in 0..n {
            let pos = self.b(i) as u32 * other.a(i) as u32;
            let neg = self.a(i) as u32 * other.b(i) as u32;
            acc = (acc + pos + (p - 1) * neg) % p;
        }
        acc as u8
    }

    /// Number in `0 .. p^{2n}` with the first coordinate most significant.
    pub fn index(&self) -> usize {
        self.coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    /// Inverse of [`GfVector::index`].
    pub fn from_index(p: u8, dim: usize, mut idx: usize) -> Self {
        let mut coords = vec![0u8; dim];
        for c in coords.iter_mut().rev() {
            *c = (idx % p as usize) as u8;
            idx /= p as usize;
        }
        debug_assert_eq!(idx, 0);
        GfVector { p, coords }
    }

    fn check_compatible(&self, other: &GfVector) {
        assert_eq!(self.p, other.p, "modulus mismatch");
        assert_eq!(self.coords.len(), other.coords.len(), "dimension mismatch");
    }
}

impl fmt::Display for GfVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.slots();
        write!(f, "(")?;
        for i in 0..n {
            write!(f, "{}", self.a(i))?;
        }
        write!(f, "|")?;
        for i in 0..n {
            write!(f, "{}", self.b(i))?;
        }
        write!(f, ")")
    }
}

// Vectors read better as (1010|1100) in assertion output.
impl fmt::Debug for GfVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ---------------------------------------------------------------------------
// Row reduction

/// Reduced row echelon form mod `p`. Returns the nonzero rows and the pivot
/// column of each row, pivots strictly increasing, pivot entries 1, pivot
/// columns cleared elsewhere. The RREF basis of a subspace is unique, so two
/// spans are equal iff their RREFs are equal.
fn rref(p: u8, mut rows: Vec<Vec<u8>>) -> (Vec<Vec<u8>>, Vec<usize>) {
    let width = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut done = 0usize;
    for col in 0..width {
        let Some(r) = (done..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(done, r);
        let inv = inv_mod(rows[done][col], p);
        for x in rows[done].iter_mut() {
            *x = ((*x as u16 * inv as u16) % p as u16) as u8;
        }
        for r in 0..rows.len() {
            if r != done && rows[r][col] != 0 {
                let c = rows[r][col];
                for j in 0..width {
                    let sub = (c as u16 * rows[done][j] as u16) % p as u16;
                    rows[r][j] = ((rows[r][j] as u16 + p as u16 - sub) % p as u16) as u8;
                }
            }
        }
        pivots.push(col);
        done += 1;
        if done == rows.len() {
            break;
        }
    }
    rows.truncate(done);
    (rows, pivots)
}

/// A subspace of `Z_p^{2n}`, stored as its unique RREF basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    p: u8,
    ambient: usize,
    rows: Vec<GfVector>,
    pivots: Vec<usize>,
}

impl Subspace {
    /// The zero subspace.
    pub fn trivial(p: u8, ambient: usize) -> Self {
        Subspace { p, ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    /// All of `Z_p^{2n}`.
    pub fn full(p: u8, ambient: usize) -> Self {
        let rows = (0..ambient)
            .map(|i| {
                let mut c = vec![0u8; ambient];
                c[i] = 1;
                GfVector { p, coords: c }
            })
            .collect();
        Subspace { p, ambient, rows, pivots: (0..ambient).collect() }
    }

    /// The span of `vecs`, canonicalized by row reduction.
    pub fn from_span(p: u8, ambient: usize, vecs: &[GfVector]) -> Result<Self> {
        for v in vecs {
            if v.p() != p {
                return Err(Error::ModulusMismatch(v.p(), p));
            }
            if v.dim() != ambient {
                return Err(Error::DimensionMismatch(v.dim(), ambient));
            }
        }
        let raw: Vec<Vec<u8>> = vecs.iter().map(|v| v.coords.clone()).collect();
        let (rows, pivots) = rref(p, raw);
        let rows = rows.into_iter().map(|coords| GfVector { p, coords }).collect();
        Ok(Subspace { p, ambient, rows, pivots })
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// The canonical (RREF) basis rows.
    pub fn rows(&self) -> &[GfVector] {
        &self.rows
    }

    /// Reduces `v` modulo this subspace by clearing every pivot column.
    /// The result is the canonical representative of the coset `v + self`:
    /// cosets are equal iff their representatives are equal.
    pub fn reduce(&self, v: &GfVector) -> GfVector {
        assert_eq!(v.p(), self.p, "modulus mismatch");
        assert_eq!(v.dim(), self.ambient, "dimension mismatch");
        let mut out = v.clone();
        for (row, &col) in self.rows.iter().zip(&self.pivots) {
            let c = out.coords[col];
            if c != 0 {
                out = out.sub(&row.scaled(c));
            }
        }
        out
    }

    pub fn contains(&self, v: &GfVector) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }

    /// Symplectic orthogonal complement: all `y` with `<x, y> = 0` for every
    /// `x` here. `dim + dim(complement) = 2n` always holds because the form
    /// is nondegenerate.
    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.ambient / 2;
        // <x, .> is the ordinary dot product with (b | -a).
        let rows: Vec<Vec<u8>> = self
            .rows
            .iter()
            .map(|x| {
                let mut j = vec![0u8; self.ambient];
                for i in 0..n {
                    j[i] = x.b(i);
                    j[n + i] = (self.p - x.a(i)) % self.p;
                }
                j
            })
            .collect();
        let kernel = nullspace(self.p, self.ambient, rows);
        Subspace::from_span(self.p, self.ambient, &kernel).expect("kernel basis is valid")
    }

    /// True iff every pair of basis vectors has symplectic product 0, i.e.
    /// the subspace is contained in its own complement.
    pub fn is_self_orthogonal(&self) -> bool {
        self.rows
            .iter()
            .all(|x| self.rows.iter().all(|y| x.symplectic_product(y) == 0))
    }

    /// All `p^dim` elements, in odometer order over basis coefficients.
    pub fn elements(&self) -> impl Iterator<Item = GfVector> + '_ {
        let count = (self.p as usize).pow(self.dim() as u32);
        (0..count).map(move |idx| {
            let coeffs = GfVector::from_index(self.p, self.dim(), idx);
            let mut acc = GfVector::zero(self.p, self.ambient / 2);
            for (c, row) in coeffs.coords().iter().zip(&self.rows) {
                if *c != 0 {
                    acc = acc.add(&row.scaled(*c));
                }
            }
            acc
        })
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{{")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Basis of the kernel of the matrix `rows` (acting by dot product), via the
/// standard free-column construction on the RREF.
fn nullspace(p: u8, width: usize, rows: Vec<Vec<u8>>) -> Vec<GfVector> {
    let (red, pivots) = rref(p, rows);
    let mut basis = Vec::new();
    for free in (0..width).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u8; width];
        v[free] = 1;
        for (row, &pc) in red.iter().zip(&pivots) {
            v[pc] = (p - row[free]) % p;
        }
        basis.push(GfVector { p, coords: v });
    }
    basis
}

// ---------------------------------------------------------------------------
// Hyperbolic bases

/// A hyperbolic basis `{xi_1..xi_n, eta_1..eta_n}` of `Z_p^{2n}`:
/// `<xi_i, eta_j> = delta_ij` and both families are isotropic
/// (`<xi_i, xi_j> = <eta_i, eta_j> = 0`).
#[derive(Clone, PartialEq, Eq)]
pub struct HyperbolicExtension {
    xi: Vec<GfVector>,
    eta: Vec<GfVector>,
}

impl HyperbolicExtension {
    /// Validates the hyperbolic relations.
    pub fn new(xi: Vec<GfVector>, eta: Vec<GfVector>) -> Result<Self> {
        if xi.len() != eta.len() {
            return Err(Error::DimensionMismatch(xi.len(), eta.len()));
        }
        if let Some(v) = xi.iter().chain(&eta).find(|v| v.dim() != 2 * xi.len()) {
            return Err(Error::DimensionMismatch(v.dim(), 2 * xi.len()));
        }
        if !relations_hold(&xi, &eta) {
            return Err(Error::BadProducts);
        }
        Ok(HyperbolicExtension { xi, eta })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn p(&self) -> u8 {
        self.xi[0].p()
    }

    pub fn xi(&self) -> &[GfVector] {
        &self.xi
    }

    pub fn eta(&self) -> &[GfVector] {
        &self.eta
    }
}

impl fmt::Debug for HyperbolicExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xi={:?} eta={:?}", self.xi, self.eta)
    }
}

/// Checks `<xi_i, eta_j> = delta_ij`, `<xi_i, xi_j> = 0`, `<eta_i, eta_j> = 0`.
pub fn relations_hold(xi: &[GfVector], eta: &[GfVector]) -> bool {
    xi.iter().enumerate().all(|(i, x)| {
        xi[i + 1..].iter().all(|x2| x.symplectic_product(x2) == 0)
            && eta.iter().enumerate().all(|(j, y)| {
                x.symplectic_product(y) == u8::from(i == j)
            })
    }) && eta
        .iter()
        .enumerate()
        .all(|(i, y)| eta[i + 1..].iter().all(|y2| y.symplectic_product(y2) == 0))
}

/// Extends an independent isotropic family `xi_low` to a full hyperbolic
/// basis of `Z_p^{2n}`, deterministically: each `eta_i` is the
/// lexicographically smallest vector satisfying its constraints, and any
/// remaining pairs are filled in with the smallest admissible `xi` first.
/// The input vectors become `xi_1 .. xi_r` unchanged.
pub fn complete_hyperbolic(p: u8, ambient: usize, xi_low: &[GfVector]) -> Result<HyperbolicExtension> {
    complete_with_high_pairs(p, ambient, xi_low, &[])
}

/// Like [`complete_hyperbolic`], but with the last pairs of the basis fixed
/// in advance: the output is `xi = (xi_low.., auto.., high.x..)`,
/// `eta = (solved.., auto.., high.y..)`. Used to materialize an encoding
/// class, where the high pairs are the class representatives and only the
/// low `eta`'s need solving.
pub fn complete_with_high_pairs(
    p: u8,
    ambient: usize,
    xi_low: &[GfVector],
    high: &[(GfVector, GfVector)],
) -> Result<HyperbolicExtension> {
    let n = ambient / 2;
    if ambient % 2 != 0 || xi_low.len() + high.len() > n {
        return Err(Error::InvalidParameter(format!(
            "cannot fit {} low + {} high pairs in dimension {ambient}",
            xi_low.len(),
            high.len()
        )));
    }
    for v in xi_low.iter().chain(high.iter().flat_map(|(x, y)| [x, y])) {
        if v.p() != p {
            return Err(Error::ModulusMismatch(v.p(), p));
        }
        if v.dim() != ambient {
            return Err(Error::DimensionMismatch(v.dim(), ambient));
        }
    }
    let span_low = Subspace::from_span(p, ambient, xi_low)?;
    if span_low.dim() != xi_low.len() {
        return Err(Error::DependentVectors);
    }
    // Required products among the inputs: low family isotropic and orthogonal
    // to every high vector; high pairs hyperbolic among themselves.
    let low_ok = xi_low.iter().enumerate().all(|(i, x)| {
        xi_low[i..].iter().all(|y| x.symplectic_product(y) == 0)
            && high
                .iter()
                .all(|(hx, hy)| x.symplectic_product(hx) == 0 && x.symplectic_product(hy) == 0)
    });
    let high_xi: Vec<GfVector> = high.iter().map(|(x, _)| x.clone()).collect();
    let high_eta: Vec<GfVector> = high.iter().map(|(_, y)| y.clone()).collect();
    if !low_ok || !relations_hold(&high_xi, &high_eta) {
        return Err(Error::BadProducts);
    }

    let total = (p as usize).pow(ambient as u32);
    // Pairs already fixed; a new vector must be symplectically orthogonal to
    // every vector of every fixed pair.
    let mut fixed: Vec<(GfVector, GfVector)> = high.to_vec();
    let mut eta_low = Vec::with_capacity(xi_low.len());
    for (i, xi) in xi_low.iter().enumerate() {
        let partner = (0..total)
            .map(|idx| GfVector::from_index(p, ambient, idx))
            .find(|v| {
                xi.symplectic_product(v) == 1
                    && xi_low
                        .iter()
                        .enumerate()
                        .all(|(j, x)| j == i || x.symplectic_product(v) == 0)
                    && orthogonal_to_pairs(v, &fixed)
            })
            .ok_or(Error::NoPartner)?;
        fixed.push((xi.clone(), partner.clone()));
        eta_low.push(partner);
    }
    let mut auto_pairs = Vec::new();
    while fixed.len() < n {
        let x = (1..total)
            .map(|idx| GfVector::from_index(p, ambient, idx))
            .find(|v| orthogonal_to_pairs(v, &fixed))
            .ok_or(Error::NoPartner)?;
        let y = (0..total)
            .map(|idx| GfVector::from_index(p, ambient, idx))
            .find(|v| x.symplectic_product(v) == 1 && orthogonal_to_pairs(v, &fixed))
            .ok_or(Error::NoPartner)?;
        fixed.push((x.clone(), y.clone()));
        auto_pairs.push((x, y));
    }

    let mut xi: Vec<GfVector> = xi_low.to_vec();
    let mut eta = eta_low;
    for (x, y) in auto_pairs {
        xi.push(x);
        eta.push(y);
    }
    for (x, y) in high {
        xi.push(x.clone());
        eta.push(y.clone());
    }
    HyperbolicExtension::new(xi, eta)
}

fn orthogonal_to_pairs(v: &GfVector, pairs: &[(GfVector, GfVector)]) -> bool {
    pairs
        .iter()
        .all(|(x, y)| x.symplectic_product(v) == 0 && y.symplectic_product(v) == 0)
}

// ---------------------------------------------------------------------------
// Quotient C^perp / C

/// The symplectic quotient `C^perp / C` of a self-orthogonal subspace `C`.
///
/// Cosets are named by canonical representatives (pivot-column reduction by
/// `C`). The quotient inherits a nondegenerate symplectic form from the
/// ambient product, and coordinates on it come from a fixed reference
/// hyperbolic extension of `C`.
pub struct QuotientSpace {
    c: Subspace,
    cperp: Subspace,
    ref_xi_high: Vec<GfVector>,
    ref_eta_high: Vec<GfVector>,
}

impl QuotientSpace {
    /// Builds the quotient of a self-orthogonal `c`.
    pub fn new(c: &Subspace) -> Result<Self> {
        if !c.is_self_orthogonal() {
            return Err(Error::BadProducts);
        }
        let cperp = c.orthogonal_complement();
        let ext = complete_hyperbolic(c.p(), c.ambient_dim(), c.rows())?;
        let r = c.dim();
        Ok(QuotientSpace {
            c: c.clone(),
            cperp,
            ref_xi_high: ext.xi()[r..].to_vec(),
            ref_eta_high: ext.eta()[r..].to_vec(),
        })
    }

    pub fn p(&self) -> u8 {
        self.c.p()
    }

    /// Half the quotient dimension: the quotient is `Z_p^{2k}` symplectic.
    pub fn k(&self) -> usize {
        self.ref_xi_high.len()
    }

    pub fn c(&self) -> &Subspace {
        &self.c
    }

    pub fn cperp(&self) -> &Subspace {
        &self.cperp
    }

    /// Canonical representative of `v + C`; errors if `v` is not in `C^perp`.
    pub fn canonical_rep(&self, v: &GfVector) -> Result<GfVector> {
        if !self.cperp.contains(v) {
            return Err(Error::OutsideComplement);
        }
        Ok(self.c.reduce(v))
    }

    /// The induced symplectic product on cosets. Well defined because both
    /// arguments lie in `C^perp` and `C` pairs to zero with everything there.
    pub fn coset_product(&self, x: &GfVector, y: &GfVector) -> Result<u8> {
        if !self.cperp.contains(x) || !self.cperp.contains(y) {
            return Err(Error::OutsideComplement);
        }
        Ok(x.symplectic_product(y))
    }

    /// Coordinates `(c_1..c_k | d_1..d_k)` of `v + C` in the reference basis:
    /// `v = sum c_i xi_i + d_i eta_i (mod C)`.
    pub fn coords(&self, v: &GfVector) -> Result<Vec<u8>> {
        if !self.cperp.contains(v) {
            return Err(Error::OutsideComplement);
        }
        let k = self.k();
        let mut out = vec![0u8; 2 * k];
        for i in 0..k {
            // <v, eta_i> = c_i and <xi_i, v> = d_i by the hyperbolic relations.
            out[i] = v.symplectic_product(&self.ref_eta_high[i]);
            out[k + i] = self.ref_xi_high[i].symplectic_product(v);
        }
        Ok(out)
    }

    /// A representative of the coset with the given reference coordinates.
    pub fn lift(&self, coords: &[u8]) -> GfVector {
        let k = self.k();
        assert_eq!(coords.len(), 2 * k, "coordinate length");
        let n = self.c.ambient_dim() / 2;
        let mut acc = GfVector::zero(self.p(), n);
        for i in 0..k {
            acc = acc.add(&self.ref_xi_high[i].scaled(coords[i]));
            acc = acc.add(&self.ref_eta_high[i].scaled(coords[k + i]));
        }
        acc
    }
}

/// The symplectic form of `Z_p^{2k}` in quotient coordinates
/// `(c|d), (c'|d') -> sum_i c_i d'_i - d_i c'_i`.
///
/// Note the sign: with the coordinate convention of [`QuotientSpace::coords`]
/// this reproduces the ambient product of representatives.
pub fn quotient_form(p: u8, x: &[u8], y: &[u8]) -> u8 {
    debug_assert_eq!(x.len(), y.len());
    let k = x.len() / 2;
    let p32 = p as u32;
    let mut acc = 0u32;
    for i in 0..k {
        acc = (acc + x[i] as u32 * y[k + i] as u32 + (p32 - 1) * (x[k + i] as u32 * y[i] as u32))
            % p32;
    }
    acc as u8
}

// ---------------------------------------------------------------------------
// Enumeration

/// Iterates every self-orthogonal subspace of dimension `n - k` in
/// `Z_p^{2n}`, each exactly once, in a deterministic order.
///
/// Candidates are generated as RREF matrices (pivot-column combinations in
/// lexicographic order, free entries in odometer order) and filtered by
/// self-orthogonality, so the stream order is stable across runs.
pub fn enumerate_self_orthogonal(n: usize, k: usize, p: u8) -> Result<SelfOrthogonalIter> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
    }
    if k > n || n == 0 {
        return Err(Error::InvalidParameter(format!("invalid (n, k) = ({n}, {k})")));
    }
    Ok(SelfOrthogonalIter::new(n, k, p))
}

pub struct SelfOrthogonalIter {
    p: u8,
    ambient: usize,
    rank: usize,
    pivots: Option<Vec<usize>>,
    digits: Vec<u8>,
    free_cells: Vec<(usize, usize)>,
    emitted_trivial: bool,
}

impl SelfOrthogonalIter {
    fn new(n: usize, k: usize, p: u8) -> Self {
        let rank = n - k;
        let pivots: Option<Vec<usize>> = (rank > 0).then(|| (0..rank).collect());
        let mut it = SelfOrthogonalIter {
            p,
            ambient: 2 * n,
            rank,
            pivots,
            digits: Vec::new(),
            free_cells: Vec::new(),
            emitted_trivial: false,
        };
        it.reset_cells();
        it
    }

    /// Free cells for the current pivot set: row-major positions right of the
    /// row's pivot and outside all pivot columns.
    fn reset_cells(&mut self) {
        self.free_cells.clear();
        if let Some(pivots) = &self.pivots {
            for (r, &pc) in pivots.iter().enumerate() {
                for c in pc + 1..self.ambient {
                    if !pivots.contains(&c) {
                        self.free_cells.push((r, c));
                    }
                }
            }
        }
        self.digits = vec![0; self.free_cells.len()];
    }

    fn current_candidate(&self) -> Subspace {
        let pivots = self.pivots.as_ref().unwrap();
        let mut rows = vec![vec![0u8; self.ambient]; self.rank];
        for (r, &pc) in pivots.iter().enumerate() {
            rows[r][pc] = 1;
        }
        for (&(r, c), &d) in self.free_cells.iter().zip(&self.digits) {
            rows[r][c] = d;
        }
        let rows: Vec<GfVector> = rows
            .into_iter()
            .map(|coords| GfVector { p: self.p, coords })
            .collect();
        Subspace {
            p: self.p,
            ambient: self.ambient,
            rows,
            pivots: pivots.clone(),
        }
    }

    /// Advances the odometer; on overflow, moves to the next pivot set.
    /// Returns false when the whole enumeration is exhausted.
    fn advance(&mut self) -> bool {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.p {
                return true;
            }
            *d = 0;
        }
        let pivots = self.pivots.as_mut().unwrap();
        // Next r-combination of 0..2n in lexicographic order.
        let m = self.ambient;
        let r = self.rank;
        let mut i = r;
        loop {
            if i == 0 {
                self.pivots = None;
                return false;
            }
            i -= 1;
            if pivots[i] < m - r + i {
                pivots[i] += 1;
                for j in i + 1..r {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
        self.reset_cells();
        true
    }
}

impl Iterator for SelfOrthogonalIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.rank == 0 {
            if self.emitted_trivial {
                return None;
            }
            self.emitted_trivial = true;
            return Some(Subspace::trivial(self.p, self.ambient));
        }
        while self.pivots.is_some() {
            let cand = self.current_candidate();
            let keep = cand.is_self_orthogonal();
            if !self.advance() {
                self.pivots = None;
            }
            if keep {
                return Some(cand);
            }
        }
        None
    }
}

/// Visits every ordered hyperbolic basis `((x_1, y_1), .., (x_m, y_m))` of
/// the coordinate space `Z_p^dim` under the given symplectic form, in
/// lexicographic vector order (smallest admissible `x`, then smallest
/// admissible `y`, recursing). Errors if the form is degenerate.
pub fn for_each_hyperbolic_basis<F, V>(p: u8, dim: usize, form: F, mut visit: V) -> Result<()>
where
    F: Fn(&[u8], &[u8]) -> u8,
    V: FnMut(&[(Vec<u8>, Vec<u8>)]),
{
    if dim % 2 != 0 {
        return Err(Error::DegenerateForm);
    }
    let total = (p as usize).pow(dim as u32);
    let vectors: Vec<Vec<u8>> = (0..total)
        .map(|idx| GfVector::from_index(p, dim, idx).coords().to_vec())
        .collect();
    // Nondegeneracy: the Gram matrix on unit vectors must have full rank.
    let gram: Vec<Vec<u8>> = (0..dim)
        .map(|i| (0..dim).map(|j| form(&vectors[unit(p, dim, i)], &vectors[unit(p, dim, j)]) % p).collect())
        .collect();
    if rref(p, gram).1.len() != dim {
        return Err(Error::DegenerateForm);
    }
    let mut chosen: Vec<(Vec<u8>, Vec<u8>)> = Vec::with_capacity(dim / 2);
    recurse(p, dim / 2, &vectors, &form, &mut chosen, &mut visit);
    return Ok(());

    fn unit(p: u8, dim: usize, i: usize) -> usize {
        (p as usize).pow((dim - 1 - i) as u32)
    }

    fn recurse<F, V>(
        p: u8,
        pairs: usize,
        vectors: &[Vec<u8>],
        form: &F,
        chosen: &mut Vec<(Vec<u8>, Vec<u8>)>,
        visit: &mut V,
    ) where
        F: Fn(&[u8], &[u8]) -> u8,
        V: FnMut(&[(Vec<u8>, Vec<u8>)]),
    {
        if chosen.len() == pairs {
            visit(chosen);
            return;
        }
        let ok = |v: &[u8], chosen: &[(Vec<u8>, Vec<u8>)]| {
            chosen
                .iter()
                .all(|(x, y)| form(x, v) % p == 0 && form(y, v) % p == 0)
        };
        for x in &vectors[1..] {
            if !ok(x, chosen) {
                continue;
            }
            for y in vectors {
                if form(x, y) % p != 1 || !ok(y, chosen) {
                    continue;
                }
                chosen.push((x.clone(), y.clone()));
                recurse(p, pairs, vectors, form, chosen, visit);
                chosen.pop();
            }
        }
    }
}

/// Collects [`for_each_hyperbolic_basis`]; convenient for small spaces.
pub fn enumerate_hyperbolic_bases(p: u8, dim: usize) -> Result<Vec<Vec<(Vec<u8>, Vec<u8>)>>> {
    let mut out = Vec::new();
    for_each_hyperbolic_basis(p, dim, |x, y| quotient_form(p, x, y), |b| out.push(b.to_vec()))?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Counting

/// Order of the symplectic group Sp(2m, p): `p^{m^2} * prod_{i=1..m} (p^{2i} - 1)`.
pub fn sp_order(m: u32, p: u8) -> BigUint {
    let p = BigUint::from(p);
    let mut acc = p.pow(m * m);
    for i in 1..=m {
        acc *= p.pow(2 * i) - 1u8;
    }
    acc
}

/// Number of self-orthogonal subspaces of dimension `n - k` in `Z_p^{2n}`:
/// `prod_{i=0}^{n-k-1} (p^{2n-i} - p^i) / (p^{n-k} - p^i)`.
pub fn selforth_count(n: u32, k: u32, p: u8) -> BigUint {
    let p = BigUint::from(p);
    let mut num = BigUint::from(1u8);
    let mut den = BigUint::from(1u8);
    for i in 0..n - k {
        num *= p.pow(2 * n - i) - p.pow(i);
        den *= p.pow(n - k) - p.pow(i);
    }
    debug_assert!((&num % &den) == BigUint::from(0u8));
    num / den
}

/// How many times smaller the protocol search space is than the full
/// symplectic group: `Sp(2n) / (selforth(n,k) * Sp(2k))`, in closed form
/// `p^{n^2 - k^2} * prod_{i=1..n-k} (p^i - 1)`.
pub fn reduction_factor(n: u32, k: u32, p: u8) -> BigUint {
    let p = BigUint::from(p);
    let mut acc = p.pow(n * n - k * k);
    for i in 1..=n - k {
        acc *= p.pow(i) - 1u8;
    }
    acc
}

/// Shared test fixtures: the reference [[4,2]] protocol's vectors.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub(crate) fn gf(p: u8, a: &[u8], b: &[u8]) -> GfVector {
        GfVector::from_halves(p, a, b).unwrap()
    }

    /// The running 4-qudit example: C = span{(1111|0000), (0000|1111)}.
    pub(crate) fn example_c() -> Subspace {
        let x = gf(2, &[1, 1, 1, 1], &[0, 0, 0, 0]);
        let z = gf(2, &[0, 0, 0, 0], &[1, 1, 1, 1]);
        Subspace::from_span(2, 8, &[x, z]).unwrap()
    }

    /// The xi family of the reference protocol's printed basis.
    pub(crate) fn example_xi() -> Vec<GfVector> {
        vec![
            gf(2, &[1, 1, 1, 1], &[0, 0, 0, 0]),
            gf(2, &[0, 0, 0, 0], &[1, 1, 1, 1]),
            gf(2, &[1, 1, 0, 0], &[0, 0, 0, 0]),
            gf(2, &[1, 0, 1, 0], &[0, 0, 0, 0]),
        ]
    }

    /// The printed eta family. Note <eta_1, eta_2> = 1: the low pair is not
    /// isotropic, so this is not a hyperbolic basis in the strict sense,
    /// though every relation involving a xi or a high eta holds.
    pub(crate) fn example_eta() -> Vec<GfVector> {
        vec![
            gf(2, &[0, 0, 0, 0], &[1, 1, 1, 0]),
            gf(2, &[1, 1, 1, 0], &[0, 0, 0, 0]),
            gf(2, &[0, 0, 0, 0], &[1, 0, 1, 0]),
            gf(2, &[1, 0, 1, 0], &[1, 1, 0, 0]),
        ]
    }
}
