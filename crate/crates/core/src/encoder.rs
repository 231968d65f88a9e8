//! Encoding operators and their classification.
//!
//! An encoder for an `[[n, k]]_p` stabilizer code is described by a basis
//! extension `xi_1..xi_n, eta_1..eta_n` of the generator family, plus phase
//! choices. Protocol behavior on Bell-diagonal inputs depends on none of the
//! phases and not even on the low `eta`'s: it is fully determined by the
//! high rows modulo `C`, captured here as [`EncodingClass`]. The classical
//! maps that drive the fast simulation path also live here: the error
//! correction map `f` (subtract a syndrome representative) and the label
//! map `g` (read off the logical content of a corrected error).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pauli::{mu_exponent, phase_modulus, PauliElement, Stabilizer};
use crate::sim::BellDiagonal;
use crate::symplectic::{complete_with_high_pairs, GfVector, Subspace};
use crate::{Error, Result};

/// Phase exponent of `theta_z(f_i)` for eigenvalue label `lambda_num`:
/// the conjugate of `lambda_i`, times the conjugate of `mu(xi_i)` for
/// `p = 2`, so that `theta_z mu XZ(xi_i)` fixes the code space.
pub fn theta_z_exponent(xi: &GfVector, lambda_num: u8) -> u8 {
    let p = xi.p();
    let m = phase_modulus(p);
    if p == 2 {
        let mu = mu_exponent(xi).expect("p = 2");
        ((2 * m - lambda_num - mu) % m) as u8
    } else {
        (m - lambda_num % m) % m
    }
}

/// Concrete encoder data: the basis extension and the free phase choices.
///
/// Validation is deliberately weaker than [`crate::symplectic::HyperbolicExtension`]:
/// all products involving a `xi`, and every `eta` product touching the high
/// block, must be hyperbolic, but the low `eta`'s need not be mutually
/// isotropic. A defect there twists only the ancilla block of the decoded
/// state, which the protocol discards, and useful operator tables (the
/// reference `[[4,2]]` one included) are often written with such bases.
#[derive(Clone, PartialEq)]
pub struct EncoderParams {
    stab: Stabilizer,
    xi: Vec<GfVector>,
    eta: Vec<GfVector>,
    theta_x: Vec<u8>,
    lambda_high: Option<Vec<u8>>,
}

impl EncoderParams {
    /// Builds from a stabilizer and a full extension; `xi[..n-k]` must equal
    /// the stabilizer generators in order. `theta_x` entries are native
    /// phase exponents and must be powers of `w` (even exponents of `i`
    /// when `p = 2`).
    pub fn new(
        stab: Stabilizer,
        xi: Vec<GfVector>,
        eta: Vec<GfVector>,
        theta_x: Vec<u8>,
    ) -> Result<Self> {
        let n = stab.n();
        let p = stab.p();
        if xi.len() != n || eta.len() != n || theta_x.len() != n {
            return Err(Error::DimensionMismatch(xi.len().max(eta.len()).max(theta_x.len()), n));
        }
        if xi[..stab.r()] != *stab.generators() {
            return Err(Error::InvalidSpec(
                "xi_1..xi_{n-k} must equal the stabilizer generators".into(),
            ));
        }
        for v in xi.iter().chain(&eta) {
            if v.p() != p {
                return Err(Error::ModulusMismatch(v.p(), p));
            }
            if v.dim() != 2 * n {
                return Err(Error::DimensionMismatch(v.dim(), 2 * n));
            }
        }
        for &t in &theta_x {
            if t >= phase_modulus(p) || (p == 2 && t % 2 != 0) {
                return Err(Error::InvalidSpec(format!("theta_x exponent {t} is not a power of w")));
            }
        }
        if !encoder_relations_hold(stab.r(), &xi, &eta) {
            return Err(Error::BadProducts);
        }
        let span = Subspace::from_span(p, 2 * n, &xi.iter().chain(&eta).cloned().collect::<Vec<_>>())?;
        if span.dim() != 2 * n {
            return Err(Error::DependentVectors);
        }
        Ok(EncoderParams { stab, xi, eta, theta_x, lambda_high: None })
    }

    /// Materializes a representative encoder for an encoding class:
    /// low `eta`'s are solved deterministically, `theta_x` is all ones.
    pub fn from_class(stab: &Stabilizer, class: &EncodingClass) -> Result<Self> {
        if class.k() != stab.k() {
            return Err(Error::DimensionMismatch(class.k(), stab.k()));
        }
        let high: Vec<(GfVector, GfVector)> = class
            .h_rows()
            .iter()
            .cloned()
            .zip(class.g_rows().iter().cloned())
            .collect();
        let ext = complete_with_high_pairs(stab.p(), 2 * stab.n(), stab.generators(), &high)?;
        EncoderParams::new(
            stab.clone(),
            ext.xi().to_vec(),
            ext.eta().to_vec(),
            vec![0; stab.n()],
        )
    }

    /// Replaces the free `theta_x` phases.
    pub fn with_theta_x(mut self, theta_x: Vec<u8>) -> Result<Self> {
        let p = self.p();
        if theta_x.len() != self.n() {
            return Err(Error::DimensionMismatch(theta_x.len(), self.n()));
        }
        for &t in &theta_x {
            if t >= phase_modulus(p) || (p == 2 && t % 2 != 0) {
                return Err(Error::InvalidSpec(format!("theta_x exponent {t} is not a power of w")));
            }
        }
        self.theta_x = theta_x;
        Ok(self)
    }

    /// Pins the eigenvalue labels of `XZ(xi_i)` for the high `i`, selecting
    /// a particular one-dimensional seed space. `None` (default) lets the
    /// dense construction pick the first label that works.
    pub fn with_lambda_high(mut self, lambda_high: Vec<u8>) -> Result<Self> {
        if lambda_high.len() != self.k() {
            return Err(Error::DimensionMismatch(lambda_high.len(), self.k()));
        }
        for (i, &l) in lambda_high.iter().enumerate() {
            let xi = &self.xi[self.stab.r() + i];
            if l >= phase_modulus(self.p())
                || (self.p() == 2 && l as usize % 2 != crate::pauli::xz_slot_count(xi) % 2)
            {
                return Err(Error::BadEigenvalue);
            }
        }
        self.lambda_high = Some(lambda_high);
        Ok(self)
    }

    pub fn p(&self) -> u8 {
        self.stab.p()
    }

    pub fn n(&self) -> usize {
        self.stab.n()
    }

    pub fn k(&self) -> usize {
        self.stab.k()
    }

    pub fn stab(&self) -> &Stabilizer {
        &self.stab
    }

    pub fn xi(&self) -> &[GfVector] {
        &self.xi
    }

    pub fn eta(&self) -> &[GfVector] {
        &self.eta
    }

    pub fn theta_x(&self) -> &[u8] {
        &self.theta_x
    }

    pub fn lambda_high(&self) -> Option<&[u8]> {
        self.lambda_high.as_deref()
    }

    /// The encoded X generator `theta_x(f_i) mu(eta_i) XZ(eta_i)`
    /// (`mu` only for `p = 2`).
    pub fn encoded_x_op(&self, i: usize) -> PauliElement {
        let eta = &self.eta[i];
        let mut phase = self.theta_x[i];
        if self.p() == 2 {
            phase = (phase + mu_exponent(eta).expect("p = 2")) % 4;
        }
        PauliElement::with_phase(phase, eta.clone())
    }

    /// The encoded Z generator `theta_z(f_i) mu(xi_i) XZ(xi_i)` for the
    /// given eigenvalue label.
    pub fn encoded_z_op(&self, i: usize, lambda_num: u8) -> PauliElement {
        let xi = &self.xi[i];
        let mut phase = theta_z_exponent(xi, lambda_num);
        if self.p() == 2 {
            phase = (phase + mu_exponent(xi).expect("p = 2")) % 4;
        }
        PauliElement::with_phase(phase, xi.clone())
    }

    /// Encoded Z for a low index, whose label comes from the stabilizer.
    pub fn encoded_z_low_op(&self, i: usize) -> PauliElement {
        self.encoded_z_op(i, self.stab.lambda()[i])
    }

    /// The class of this encoder: its high rows modulo `C`.
    pub fn class(&self) -> EncodingClass {
        let r = self.stab.r();
        EncodingClass::build(self.stab.c(), &self.xi[r..], &self.eta[r..])
            .expect("validated at construction")
    }
}

impl fmt::Debug for EncoderParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncoderParams{{xi={:?}, eta={:?}, theta_x={:?}}}", self.xi, self.eta, self.theta_x)
    }
}

/// The relation set the encoder construction actually needs: everything
/// hyperbolic except isotropy among the low `eta`'s.
pub fn encoder_relations_hold(r: usize, xi: &[GfVector], eta: &[GfVector]) -> bool {
    let n = xi.len();
    for i in 0..n {
        for j in 0..n {
            if xi[i].symplectic_product(&eta[j]) != u8::from(i == j) {
                return false;
            }
            if xi[i].symplectic_product(&xi[j]) != 0 {
                return false;
            }
            if (i >= r || j >= r) && i != j && eta[i].symplectic_product(&eta[j]) != 0 {
                return false;
            }
        }
    }
    true
}

/// An encoding class: the canonical representatives modulo `C` of the high
/// basis rows. `h` holds the `xi_{n-k+i}` cosets, `g` the `eta_{n-k+i}`
/// cosets. Two encoders induce identical protocols on Bell-diagonal inputs
/// iff their classes are equal, so this is the unit the search enumerates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodingClass {
    h: Vec<GfVector>,
    g: Vec<GfVector>,
}

impl EncodingClass {
    /// Canonicalizes the given high rows modulo `c` and validates that the
    /// cosets form a hyperbolic basis of `C^perp / C`.
    pub fn build(c: &Subspace, xi_high: &[GfVector], eta_high: &[GfVector]) -> Result<Self> {
        if xi_high.len() != eta_high.len() {
            return Err(Error::DimensionMismatch(xi_high.len(), eta_high.len()));
        }
        let cperp = c.orthogonal_complement();
        for v in xi_high.iter().chain(eta_high) {
            if !cperp.contains(v) {
                return Err(Error::OutsideComplement);
            }
        }
        let h: Vec<GfVector> = xi_high.iter().map(|v| c.reduce(v)).collect();
        let g: Vec<GfVector> = eta_high.iter().map(|v| c.reduce(v)).collect();
        let k = h.len();
        for i in 0..k {
            for j in 0..k {
                if h[i].symplectic_product(&g[j]) != u8::from(i == j)
                    || h[i].symplectic_product(&h[j]) != 0
                    || g[i].symplectic_product(&g[j]) != 0
                {
                    return Err(Error::BadProducts);
                }
            }
        }
        Ok(EncodingClass { h, g })
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    /// Canonical representatives of the `xi_{n-k+i}` cosets.
    pub fn h_rows(&self) -> &[GfVector] {
        &self.h
    }

    /// Canonical representatives of the `eta_{n-k+i}` cosets.
    pub fn g_rows(&self) -> &[GfVector] {
        &self.g
    }

    /// The label map on `C^perp`, no membership check: for
    /// `u = l.G + m.H + c`, returns `w = (l | m)` via
    /// `l_i = <h_i, u>`, `m_i = <u, g_i>`. Linear with kernel exactly `C`.
    pub fn g_map_unchecked(&self, u: &GfVector) -> GfVector {
        let k = self.k();
        let p = u.p();
        let mut coords = vec![0u8; 2 * k];
        for i in 0..k {
            coords[i] = self.h[i].symplectic_product(u);
            coords[k + i] = u.symplectic_product(&self.g[i]);
        }
        GfVector::new(p, coords).expect("reduced coords")
    }
}

impl fmt::Debug for EncodingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncodingClass{{h={:?}, g={:?}}}", self.h, self.g)
    }
}

/// An error correction rule: one chosen representative `t'(s)` per syndrome.
#[derive(Clone, PartialEq, Debug)]
pub struct FRule {
    reps: BTreeMap<Vec<u8>, GfVector>,
}

impl FRule {
    /// The rule that picks the most likely error in each coset under
    /// `p_in`, ties broken lexicographically on the label vector.
    pub fn most_likely(stab: &Stabilizer, p_in: &BellDiagonal) -> FRule {
        let mut reps = BTreeMap::new();
        for s in stab.syndromes() {
            let mut best: Option<(f64, GfVector)> = None;
            for t in stab.coset(&s) {
                let prob = p_in.prob(&t);
                let better = match &best {
                    None => true,
                    Some((bp, bv)) => prob > *bp || (prob == *bp && t < *bv),
                };
                if better {
                    best = Some((prob, t));
                }
            }
            reps.insert(s, best.expect("nonempty coset").1);
        }
        FRule { reps }
    }

    /// The input-independent rule `t'(s) = lexicographic minimum of D(s)`;
    /// in particular `t'(0) = 0`.
    pub fn lex_min(stab: &Stabilizer) -> FRule {
        let mut reps = BTreeMap::new();
        for s in stab.syndromes() {
            let rep = stab.coset(&s).min().expect("nonempty coset");
            reps.insert(s, rep);
        }
        FRule { reps }
    }

    /// Builds from explicit representatives; each must have its own syndrome.
    pub fn from_reps(stab: &Stabilizer, reps: BTreeMap<Vec<u8>, GfVector>) -> Result<FRule> {
        for (s, t) in &reps {
            if stab.syndrome(t) != *s {
                return Err(Error::InvalidSpec(format!("representative {t} not in D({s:?})")));
            }
        }
        Ok(FRule { reps })
    }

    pub fn rep(&self, s: &[u8]) -> &GfVector {
        &self.reps[s]
    }
}

/// The corrected error `f(t) = t - t'(syndrome(t))`; always lands in
/// `C^perp` because the syndromes cancel.
pub fn f_map(stab: &Stabilizer, rule: &FRule, t: &GfVector) -> GfVector {
    t.sub(rule.rep(&stab.syndrome(t)))
}

/// A complete protocol: code, encoding class, and acceptance set.
///
/// The correction rule is not part of the value; it is derived from the
/// input distribution at run time unless a fixed rule is attached with
/// [`ProtocolSpec::with_frule`] (used by classification tests).
#[derive(Clone, PartialEq, Debug)]
pub struct ProtocolSpec {
    stab: Stabilizer,
    class: EncodingClass,
    t_set: Vec<Vec<u8>>,
    frule: Option<FRule>,
}

impl ProtocolSpec {
    /// Validates and canonicalizes: `t_set` is sorted, deduplicated, and
    /// must contain the zero syndrome.
    pub fn new(stab: Stabilizer, class: EncodingClass, t_set: Vec<Vec<u8>>) -> Result<Self> {
        if class.k() != stab.k() {
            return Err(Error::InvalidSpec(format!(
                "class is for k = {}, stabilizer has k = {}",
                class.k(),
                stab.k()
            )));
        }
        for row in class.h_rows().iter().chain(class.g_rows()) {
            if !stab.cperp().contains(row) {
                return Err(Error::InvalidSpec("class row outside C-perp".into()));
            }
        }
        let mut t_set = t_set;
        for s in &t_set {
            if s.len() != stab.r() || s.iter().any(|&x| x >= stab.p()) {
                return Err(Error::InvalidSpec(format!("invalid syndrome {s:?} in T")));
            }
        }
        t_set.sort();
        t_set.dedup();
        if t_set.first().map(Vec::as_slice) != Some(vec![0; stab.r()].as_slice()) {
            return Err(Error::InvalidSpec("acceptance set must contain the zero syndrome".into()));
        }
        Ok(ProtocolSpec { stab, class, t_set, frule: None })
    }

    /// The default protocol for a class: accept only agreeing outcomes.
    pub fn with_zero_t(stab: Stabilizer, class: EncodingClass) -> Result<Self> {
        let r = stab.r();
        ProtocolSpec::new(stab, class, vec![vec![0; r]])
    }

    /// Attaches a fixed correction rule.
    pub fn with_frule(mut self, rule: FRule) -> Self {
        self.frule = Some(rule);
        self
    }

    pub fn p(&self) -> u8 {
        self.stab.p()
    }

    pub fn n(&self) -> usize {
        self.stab.n()
    }

    pub fn k(&self) -> usize {
        self.stab.k()
    }

    pub fn stab(&self) -> &Stabilizer {
        &self.stab
    }

    pub fn class(&self) -> &EncodingClass {
        &self.class
    }

    pub fn t_set(&self) -> &[Vec<u8>] {
        &self.t_set
    }

    pub fn frule(&self) -> Option<&FRule> {
        self.frule.as_ref()
    }

    /// Checked label map: errors if `u` is outside `C^perp`.
    pub fn g_map(&self, u: &GfVector) -> Result<GfVector> {
        if !self.stab.cperp().contains(u) {
            return Err(Error::OutsideComplement);
        }
        Ok(self.class.g_map_unchecked(u))
    }

    /// Canonical single-line JSON form; equal specs serialize identically.
    pub fn to_canonical_json(&self) -> String {
        let doc = SpecDoc {
            p: self.p(),
            n: self.n(),
            k: self.k(),
            xi: self.stab.generators().iter().map(|v| v.coords().to_vec()).collect(),
            eta_high: self.class.g_rows().iter().map(|v| v.coords().to_vec()).collect(),
            xi_high: self.class.h_rows().iter().map(|v| v.coords().to_vec()).collect(),
            lambda: self.stab.lambda().to_vec(),
            t: self.t_set.clone(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    /// Parses and fully validates a JSON document. Non-canonical class rows
    /// are reduced modulo `C`, so re-serialization is canonical.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        if doc.n < doc.k {
            return Err(Error::InvalidSpec(format!("k = {} exceeds n = {}", doc.k, doc.n)));
        }
        let to_vec = |rows: &[Vec<u8>]| -> Result<Vec<GfVector>> {
            rows.iter()
                .map(|r| {
                    if r.len() != 2 * doc.n {
                        return Err(Error::DimensionMismatch(r.len(), 2 * doc.n));
                    }
                    GfVector::new(doc.p, r.clone())
                })
                .collect()
        };
        let xi = to_vec(&doc.xi)?;
        if xi.len() != doc.n - doc.k {
            return Err(Error::InvalidSpec(format!(
                "expected {} generators, found {}",
                doc.n - doc.k,
                xi.len()
            )));
        }
        let stab = Stabilizer::new(doc.p, doc.n, xi, doc.lambda)?;
        let xi_high = to_vec(&doc.xi_high)?;
        let eta_high = to_vec(&doc.eta_high)?;
        if xi_high.len() != doc.k || eta_high.len() != doc.k {
            return Err(Error::InvalidSpec("class must have k rows per family".into()));
        }
        let class = EncodingClass::build(stab.c(), &xi_high, &eta_high)?;
        ProtocolSpec::new(stab, class, doc.t)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    p: u8,
    n: usize,
    k: usize,
    xi: Vec<Vec<u8>>,
    eta_high: Vec<Vec<u8>>,
    xi_high: Vec<Vec<u8>>,
    lambda: Vec<u8>,
    #[serde(rename = "T")]
    t: Vec<Vec<u8>>,
}

/// The reference `[[4,2]]_2` protocol used as a fixture throughout the test
/// suite: stabilizer `{XXXX, ZZZZ}` with the printed high pairs, `T = {0}`.
pub fn reference_protocol_442() -> ProtocolSpec {
    let gf = |a: &[u8], b: &[u8]| GfVector::from_halves(2, a, b).unwrap();
    let c = Subspace::from_span(
        2,
        8,
        &[gf(&[1, 1, 1, 1], &[0, 0, 0, 0]), gf(&[0, 0, 0, 0], &[1, 1, 1, 1])],
    )
    .unwrap();
    let stab = Stabilizer::from_subspace(&c).unwrap();
    let xi_high = [gf(&[1, 1, 0, 0], &[0, 0, 0, 0]), gf(&[1, 0, 1, 0], &[0, 0, 0, 0])];
    let eta_high = [gf(&[0, 0, 0, 0], &[1, 0, 1, 0]), gf(&[1, 0, 1, 0], &[1, 1, 0, 0])];
    let class = EncodingClass::build(stab.c(), &xi_high, &eta_high).unwrap();
    ProtocolSpec::with_zero_t(stab, class).unwrap()
}

/// The printed full extension of the reference protocol (including its
/// non-isotropic low `eta` pair), as concrete `EncoderParams`.
pub fn reference_params_442() -> EncoderParams {
    let gf = |a: &[u8], b: &[u8]| GfVector::from_halves(2, a, b).unwrap();
    let spec = reference_protocol_442();
    let xi = vec![
        gf(&[1, 1, 1, 1], &[0, 0, 0, 0]),
        gf(&[0, 0, 0, 0], &[1, 1, 1, 1]),
        gf(&[1, 1, 0, 0], &[0, 0, 0, 0]),
        gf(&[1, 0, 1, 0], &[0, 0, 0, 0]),
    ];
    let eta = vec![
        gf(&[0, 0, 0, 0], &[1, 1, 1, 0]),
        gf(&[1, 1, 1, 0], &[0, 0, 0, 0]),
        gf(&[0, 0, 0, 0], &[1, 0, 1, 0]),
        gf(&[1, 0, 1, 0], &[1, 1, 0, 0]),
    ];
    EncoderParams::new(spec.stab().clone(), xi, eta, vec![0; 4]).unwrap()
}
