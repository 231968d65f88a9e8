//! Phase-tracked Pauli arithmetic.
//!
//! A Pauli element is `phase * X^{a_1}Z^{b_1} (x) .. (x) X^{a_n}Z^{b_n}`,
//! written `XZ(v)` for `v = (a|b)`. Products stay in this normal form: the
//! only relation needed is `ZX = w XZ` per slot, so
//!
//! ```text
//! XZ(a|b) * XZ(c|d) = w^{b.c} XZ(a+c | b+d)
//! ```
//!
//! Phases are tracked as exponents: of `w = exp(2 pi i / p)` for `p >= 3`,
//! of `i` for `p = 2` (where `w = -1` and commuting contributes `i^2` per
//! crossing). Everything here is exact integer arithmetic; matrices live in
//! the `oracle` module.

use std::fmt;

use crate::symplectic::{GfVector, Subspace};
use crate::{Error, Result};

/// Modulus of the phase exponent: 4 for `p = 2` (powers of `i`), `p` otherwise.
pub fn phase_modulus(p: u8) -> u8 {
    if p == 2 {
        4
    } else {
        p
    }
}

/// Converts an exponent of `w` into the native phase exponent.
pub fn omega_to_phase(p: u8, j: u8) -> u8 {
    if p == 2 {
        (2 * (j % 2)) % 4
    } else {
        j % p
    }
}

/// `m(v)`: the number of slots carrying both an X and a Z, i.e. the number
/// of `XZ` factors in `XZ(v)` when `p = 2`.
pub fn xz_slot_count(v: &GfVector) -> usize {
    (0..v.slots()).filter(|&i| v.a(i) != 0 && v.b(i) != 0).count()
}

/// Phase exponent of `mu(v) = i^{m(v)}`, the factor that makes
/// `(mu(v) XZ(v))^2 = I` when `p = 2`. Undefined for larger `p`.
pub fn mu_exponent(v: &GfVector) -> Result<u8> {
    if v.p() != 2 {
        return Err(Error::InvalidParameter(format!(
            "mu is defined only for p = 2, got p = {}",
            v.p()
        )));
    }
    Ok((xz_slot_count(v) % 4) as u8)
}

/// A Pauli group element in normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliElement {
    phase_num: u8,
    vec: GfVector,
}

impl PauliElement {
    pub fn identity(p: u8, n: usize) -> Self {
        PauliElement { phase_num: 0, vec: GfVector::zero(p, n) }
    }

    /// `XZ(v)` with no phase.
    pub fn from_vec(vec: GfVector) -> Self {
        PauliElement { phase_num: 0, vec }
    }

    /// `phase * XZ(v)`; the exponent is reduced mod the phase modulus.
    pub fn with_phase(phase_num: u8, vec: GfVector) -> Self {
        PauliElement { phase_num: phase_num % phase_modulus(vec.p()), vec }
    }

    pub fn p(&self) -> u8 {
        self.vec.p()
    }

    pub fn slots(&self) -> usize {
        self.vec.slots()
    }

    pub fn phase_num(&self) -> u8 {
        self.phase_num
    }

    pub fn vec(&self) -> &GfVector {
        &self.vec
    }

    /// Group product, renormalized: the Z half of `self` commutes past the
    /// X half of `rhs`, contributing `w^{b.c}`.
    pub fn mul(&self, rhs: &PauliElement) -> PauliElement {
        let p = self.p();
        assert_eq!(p, rhs.p(), "modulus mismatch");
        assert_eq!(self.slots(), rhs.slots(), "dimension mismatch");
        let cross: u32 = (0..self.slots())
            .map(|i| self.vec.b(i) as u32 * rhs.vec.a(i) as u32)
            .sum();
        let m = phase_modulus(p) as u32;
        let cross_phase = if p == 2 { 2 * cross } else { cross };
        let phase_num = ((self.phase_num as u32 + rhs.phase_num as u32 + cross_phase) % m) as u8;
        PauliElement { phase_num, vec: self.vec.add(&rhs.vec) }
    }

    /// `self^e` by repeated multiplication; exponents are tiny here.
    pub fn pow(&self, e: u8) -> PauliElement {
        let mut acc = PauliElement::identity(self.p(), self.slots());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Group inverse: `XZ(-v)` with the phase that cancels the crossing.
    pub fn inverse(&self) -> PauliElement {
        let p = self.p();
        let m = phase_modulus(p) as u32;
        let neg = self.vec.neg();
        let cross: u32 = (0..self.slots())
            .map(|i| neg.b(i) as u32 * self.vec.a(i) as u32)
            .sum();
        let cross_phase = if p == 2 { 2 * cross } else { cross };
        let phase_num = ((2 * m - self.phase_num as u32 - cross_phase % m) % m) as u8;
        PauliElement { phase_num: phase_num % m as u8, vec: neg }
    }

    /// The commutation exponent `c` in `A B = w^c B A`; equals the
    /// symplectic product of the label vectors.
    pub fn commutation_exponent(&self, rhs: &PauliElement) -> u8 {
        self.vec.symplectic_product(&rhs.vec)
    }
}

impl fmt::Display for PauliElement {
    /// Renders e.g. `i XZ.Z.X.I` (p = 2) or `w^2 X.XZ^2.I` (p >= 3).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.p();
        if p == 2 {
            f.write_str(["", "i ", "-", "-i "][self.phase_num as usize])?;
        } else if self.phase_num == 1 {
            f.write_str("w ")?;
        } else if self.phase_num > 1 {
            write!(f, "w^{} ", self.phase_num)?;
        }
        for i in 0..self.slots() {
            if i > 0 {
                f.write_str(".")?;
            }
            let (a, b) = (self.vec.a(i), self.vec.b(i));
            if a == 0 && b == 0 {
                f.write_str("I")?;
                continue;
            }
            match a {
                0 => {}
                1 => f.write_str("X")?,
                _ => write!(f, "X^{a}")?,
            }
            match b {
                0 => {}
                1 => f.write_str("Z")?,
                _ => write!(f, "Z^{b}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PauliElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A stabilizer: an ordered, independent, mutually orthogonal generator
/// family `xi_1 .. xi_{n-k}` together with the eigenvalue labels
/// `lambda_i` that pick out the code space `Q(0)`.
///
/// For `p = 2` the label is an exponent of `i` and must match the parity of
/// `m(xi_i)`: `XZ(xi)^2 = (-1)^{m} I`, so eigenvalues are `+-1` for even `m`
/// and `+-i` for odd `m`. For `p >= 3` the label is an exponent of `w`.
#[derive(Clone, PartialEq, Eq)]
pub struct Stabilizer {
    generators: Vec<GfVector>,
    lambda: Vec<u8>,
    c: Subspace,
    cperp: Subspace,
}

impl Stabilizer {
    pub fn new(p: u8, n: usize, generators: Vec<GfVector>, lambda: Vec<u8>) -> Result<Self> {
        if generators.len() != lambda.len() {
            return Err(Error::DimensionMismatch(generators.len(), lambda.len()));
        }
        if generators.len() > n {
            return Err(Error::InvalidParameter(format!(
                "{} generators exceed n = {n}",
                generators.len()
            )));
        }
        for g in &generators {
            if g.p() != p {
                return Err(Error::ModulusMismatch(g.p(), p));
            }
            if g.dim() != 2 * n {
                return Err(Error::DimensionMismatch(g.dim(), 2 * n));
            }
        }
        let c = Subspace::from_span(p, 2 * n, &generators)?;
        if c.dim() != generators.len() {
            return Err(Error::DependentVectors);
        }
        if !c.is_self_orthogonal() {
            return Err(Error::BadProducts);
        }
        for (g, &l) in generators.iter().zip(&lambda) {
            if l >= phase_modulus(p) {
                return Err(Error::BadEigenvalue);
            }
            if p == 2 && (l as usize % 2) != (xz_slot_count(g) % 2) {
                return Err(Error::BadEigenvalue);
            }
        }
        let cperp = c.orthogonal_complement();
        Ok(Stabilizer { generators, lambda, c, cperp })
    }

    /// Builds from the canonical basis of a self-orthogonal subspace with
    /// default eigenvalue labels: +1 wherever the operator order allows it,
    /// and `i` for the `p = 2` generators of odd `m` (which square to `-I`
    /// and so have no +1 eigenspace).
    pub fn from_subspace(c: &Subspace) -> Result<Self> {
        let p = c.p();
        let lambda = c
            .rows()
            .iter()
            .map(|g| {
                if p == 2 && xz_slot_count(g) % 2 == 1 {
                    1
                } else {
                    0
                }
            })
            .collect();
        Stabilizer::new(p, c.ambient_dim() / 2, c.rows().to_vec(), lambda)
    }

    pub fn p(&self) -> u8 {
        self.c.p()
    }

    pub fn n(&self) -> usize {
        self.c.ambient_dim() / 2
    }

    /// Number of generators `n - k`.
    pub fn r(&self) -> usize {
        self.generators.len()
    }

    pub fn k(&self) -> usize {
        self.n() - self.r()
    }

    pub fn generators(&self) -> &[GfVector] {
        &self.generators
    }

    pub fn lambda(&self) -> &[u8] {
        &self.lambda
    }

    pub fn c(&self) -> &Subspace {
        &self.c
    }

    pub fn cperp(&self) -> &Subspace {
        &self.cperp
    }

    /// The syndrome `(<xi_1, t>, .., <xi_{n-k}, t>)` of an error label.
    pub fn syndrome(&self, t: &GfVector) -> Vec<u8> {
        self.generators.iter().map(|x| x.symplectic_product(t)).collect()
    }

    /// Some vector with the given syndrome (free coordinates zero). Always
    /// solvable: independent generators give independent functionals.
    pub fn syndrome_rep(&self, s: &[u8]) -> GfVector {
        assert_eq!(s.len(), self.r(), "syndrome length");
        let p = self.p();
        let n = self.n();
        let width = 2 * n;
        // Row i of the system is the functional <xi_i, .> = dot((b | -a), .),
        // augmented with the target s_i.
        let rows: Vec<Vec<u8>> = self
            .generators
            .iter()
            .zip(s)
            .map(|(x, &si)| {
                let mut row = vec![0u8; width + 1];
                for i in 0..n {
                    row[i] = x.b(i);
                    row[n + i] = (p - x.a(i)) % p;
                }
                row[width] = si % p;
                row
            })
            .collect();
        let (red, pivots) = rref_rows(p, rows);
        let mut t = vec![0u8; width];
        for (row, &pc) in red.iter().zip(&pivots) {
            assert!(pc < width, "inconsistent syndrome system");
            t[pc] = row[width];
        }
        GfVector::new(p, t).expect("entries already reduced")
    }

    /// Iterates the coset `D(s)` of all labels with syndrome `s`, in the
    /// deterministic order `rep + u` for `u` over `C^perp`' elements.
    pub fn coset(&self, s: &[u8]) -> impl Iterator<Item = GfVector> + '_ {
        let rep = self.syndrome_rep(s);
        self.cperp.elements().map(move |u| rep.add(&u))
    }

    /// All syndromes in odometer order.
    pub fn syndromes(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        let p = self.p();
        let r = self.r();
        (0..(p as usize).pow(r as u32))
            .map(move |idx| GfVector::from_index(p, r, idx).coords().to_vec())
    }
}

impl fmt::Debug for Stabilizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Stabilizer{{{:?}, lambda={:?}}}", self.c, self.lambda)
    }
}

/// RREF over possibly-augmented rows; local copy to keep `symplectic`'s
/// version private to vectors.
fn rref_rows(p: u8, mut rows: Vec<Vec<u8>>) -> (Vec<Vec<u8>>, Vec<usize>) {
    let width = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut done = 0usize;
    for col in 0..width {
        let Some(r) = (done..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(done, r);
        let inv = (1..p).find(|&y| (rows[done][col] as u16 * y as u16) % p as u16 == 1).unwrap();
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
