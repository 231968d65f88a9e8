//! Dense state-vector ground truth.
//!
//! Everything the fast label-distribution path claims is re-derivable by
//! brute force on small instances: materialize the Pauli matrices, the
//! fixed state `psi(0)`, the encoding unitary, and run the literal
//! measure/correct/decode protocol on dense vectors. This module trades
//! all efficiency for directness and is only used in tests and `verify`.
//!
//! Computational-basis conventions: qudit 1 is the most significant base-p
//! digit; each side orders its qudits (ancilla block, logical block); a
//! bipartite index is `alice * p^n + bob`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::encoder::{EncoderParams, FRule, ProtocolSpec};
use crate::pauli::{phase_modulus, PauliElement};
use crate::sim::{BellDiagonal, BranchResult};
use crate::symplectic::GfVector;
use crate::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Largest single-side dimension for explicit matrices.
const MAX_SIDE_DIM: usize = 256;
/// Largest two-side dimension for protocol runs.
const MAX_PAIR_DIM: usize = 6561;

fn checked_pow(p: u8, e: usize, limit: usize) -> Result<usize> {
    let mut acc = 1usize;
    for _ in 0..e {
        acc *= p as usize;
        if acc > limit {
            return Err(Error::SizeLimit(acc, limit));
        }
    }
    Ok(acc)
}

/// The phase `i^num` for `p = 2` (exponent mod 4), `w^num` otherwise.
pub fn phase_value(p: u8, num: u8) -> Complex64 {
    let m = phase_modulus(p) as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * num as f64 / m)
}

fn omega(p: u8) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / p as f64)
}

/// Base-p digits of a computational index, most significant first.
fn digits(p: u8, slots: usize, mut idx: usize) -> Vec<u8> {
    let mut out = vec![0u8; slots];
    for d in out.iter_mut().rev() {
        *d = (idx % p as usize) as u8;
        idx /= p as usize;
    }
    out
}

fn index_of(p: u8, ds: &[u8]) -> usize {
    ds.iter().fold(0usize, |acc, &d| acc * p as usize + d as usize)
}

/// Applies `XZ^n(v)` (no extra phase) to an n-qudit state vector:
/// `XZ(v)|c> = w^{sum b_i c_i} |c + a>`.
pub fn apply_xz(v: &GfVector, state: &CVec) -> CVec {
    let p = v.p();
    let n = v.slots();
    let dim = state.len();
    let w = omega(p);
    let mut out = CVec::zeros(dim);
    for c in 0..dim {
        if state[c] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ds = digits(p, n, c);
        let mut zexp = 0u32;
        let mut shifted = vec![0u8; n];
        for i in 0..n {
            zexp += v.b(i) as u32 * ds[i] as u32;
            shifted[i] = (ds[i] + v.a(i)) % p;
        }
        out[index_of(p, &shifted)] += w.powu(zexp % p as u32) * state[c];
    }
    out
}

/// Applies a phased Pauli element to a state vector.
pub fn apply_pauli(elem: &PauliElement, state: &CVec) -> CVec {
    let phase = phase_value(elem.vec().p(), elem.phase_num());
    apply_xz(elem.vec(), state) * phase
}

/// Dense matrix of `w^{phase_num} XZ^n(v)`; errors above 256 dimensions.
pub fn xz_matrix(v: &GfVector, phase_num: u8) -> Result<CMat> {
    let dim = checked_pow(v.p(), v.slots(), MAX_SIDE_DIM)?;
    let mut mat = CMat::zeros(dim, dim);
    for c in 0..dim {
        let mut e = CVec::zeros(dim);
        e[c] = Complex64::new(1.0, 0.0);
        let col = apply_xz(v, &e) * phase_value(v.p(), phase_num);
        mat.set_column(c, &col);
    }
    Ok(mat)
}

/// Dense matrix of a phased Pauli element.
pub fn pauli_matrix(elem: &PauliElement) -> Result<CMat> {
    xz_matrix(elem.vec(), elem.phase_num())
}

/// `max |(U^dag U - I)_{ij}|`.
pub fn unitarity_defect(mat: &CMat) -> f64 {
    let prod = mat.adjoint() * mat;
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let expect = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((prod[(i, j)] - expect).norm());
        }
    }
    worst
}

/// `|<x|y>| / (|x| |y|)`: 1 means equal up to a global phase.
pub fn overlap_mag(x: &CVec, y: &CVec) -> f64 {
    x.dotc(y).norm() / (x.norm() * y.norm())
}

/// Recovers `w^e XZ(v)` from a dense matrix, or errors if the matrix is
/// not a phased Pauli within 1e-9.
pub fn decompose_pauli(p: u8, mat: &CMat) -> Result<PauliElement> {
    let dim = mat.nrows();
    let mut slots = 0usize;
    let mut acc = 1usize;
    while acc < dim {
        acc *= p as usize;
        slots += 1;
    }
    if acc != dim || mat.ncols() != dim {
        return Err(Error::DimensionMismatch(dim, acc));
    }
    // Shift part from column 0.
    let mut a_row = None;
    for r in 0..dim {
        if mat[(r, 0)].norm() > 0.5 {
            if a_row.is_some() {
                return Err(Error::InvalidParameter("not a Pauli matrix".into()));
            }
            a_row = Some(r);
        }
    }
    let a_row = a_row.ok_or_else(|| Error::InvalidParameter("not a Pauli matrix".into()))?;
    let a = digits(p, slots, a_row);
    let phase0 = mat[(a_row, 0)];
    if (phase0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("not a Pauli matrix".into()));
    }
    // Z part from the unit-vector columns.
    let w = omega(p);
    let mut b = vec![0u8; slots];
    for i in 0..slots {
        let mut ds = vec![0u8; slots];
        ds[i] = 1;
        let c = index_of(p, &ds);
        let mut shifted = ds.clone();
        for (j, s) in shifted.iter_mut().enumerate() {
            *s = (*s + a[j]) % p;
        }
        let ratio = mat[(index_of(p, &shifted), c)] / phase0;
        let mut found = None;
        for e in 0..p {
            if (ratio - w.powu(e as u32)).norm() <= 1e-7 {
                found = Some(e);
            }
        }
        b[i] = found.ok_or_else(|| Error::InvalidParameter("not a Pauli matrix".into()))?;
    }
    let v = GfVector::new(p, a.iter().chain(&b).copied().collect())?;
    // Global phase must be a power of the native root.
    let m = phase_modulus(p);
    let mut phase_num = None;
    for e in 0..m {
        if (phase0 - phase_value(p, e)).norm() <= 1e-8 {
            phase_num = Some(e);
        }
    }
    let phase_num =
        phase_num.ok_or_else(|| Error::InvalidParameter("phase not in the Pauli group".into()))?;
    let candidate = PauliElement::with_phase(phase_num, v);
    // Full verification against the claimed form.
    let rebuilt = pauli_matrix(&candidate)?;
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            worst = worst.max((mat[(r, c)] - rebuilt[(r, c)]).norm());
        }
    }
    if worst > 1e-9 {
        return Err(Error::InvalidParameter("not a Pauli matrix".into()));
    }
    Ok(candidate)
}

/// The fixed state of an encoder together with the eigenvalue labels that
/// were resolved for the high generators.
pub struct FixedState {
    pub state: CVec,
    pub lambda_high: Vec<u8>,
}

/// Allowed eigenvalue exponents of `XZ(xi)` in resolution order.
fn lambda_candidates(xi: &GfVector) -> Vec<u8> {
    if xi.p() == 2 {
        if crate::pauli::xz_slot_count(xi) % 2 == 0 {
            vec![0, 2]
        } else {
            vec![1, 3]
        }
    } else {
        (0..xi.p()).collect()
    }
}

/// Averaging projector `(1/p) sum_j op^j` applied to a state.
fn project(op: &PauliElement, state: &CVec) -> CVec {
    let p = op.vec().p();
    let mut acc = state.clone();
    let mut power = op.clone();
    for _ in 1..p {
        acc += apply_pauli(&power, state);
        power = power.mul(op);
    }
    acc / Complex64::new(p as f64, 0.0)
}

/// Computes the unit vector fixed by every encoded Z generator, i.e. the
/// common +1 eigenvector spanning the one-dimensional seed space of the
/// encoder.
///
/// Low generators use the stabilizer's eigenvalue labels. High generators
/// use the pinned labels when present; otherwise each label resolves to
/// the first candidate whose averaging projector keeps the seed vector
/// alive. Seed kets are tried in index order starting from `|0...0>`.
/// Phase convention: first nonzero amplitude is real positive.
pub fn psi_zero(params: &EncoderParams) -> Result<FixedState> {
    let p = params.p();
    let n = params.n();
    let r = params.stab().r();
    let dim = checked_pow(p, n, MAX_SIDE_DIM)?;
    'seed: for seed in 0..dim {
        let mut state = CVec::zeros(dim);
        state[seed] = Complex64::new(1.0, 0.0);
        for i in 0..r {
            state = project(&params.encoded_z_low_op(i), &state);
            if state.norm() < 1e-9 {
                continue 'seed;
            }
        }
        let mut lambda_high = Vec::with_capacity(params.k());
        for i in r..n {
            let pinned = params.lambda_high().map(|l| l[i - r]);
            let candidates: Vec<u8> = match pinned {
                Some(l) => vec![l],
                None => lambda_candidates(&params.xi()[i]),
            };
            let mut advanced = None;
            for l in candidates {
                let next = project(&params.encoded_z_op(i, l), &state);
                if next.norm() >= 1e-9 {
                    advanced = Some((l, next));
                    break;
                }
            }
            match advanced {
                Some((l, next)) => {
                    lambda_high.push(l);
                    state = next;
                }
                None => continue 'seed,
            }
        }
        state /= Complex64::new(state.norm(), 0.0);
        let first = (0..dim).find(|&i| state[i].norm() > 1e-9).expect("unit vector");
        let fix = state[first].conj() / Complex64::new(state[first].norm(), 0.0);
        state *= fix;
        return Ok(FixedState { state, lambda_high });
    }
    Err(Error::ZeroProjector)
}

/// A materialized encoding unitary.
pub struct Encoder {
    p: u8,
    n: usize,
    k: usize,
    mat: CMat,
    psi0: CVec,
    lambda_high: Vec<u8>,
}

impl Encoder {
    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn psi0(&self) -> &CVec {
        &self.psi0
    }

    pub fn lambda_high(&self) -> &[u8] {
        &self.lambda_high
    }

    pub fn column(&self, u: usize) -> CVec {
        self.mat.column(u).into_owned()
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.mat * v
    }

    pub fn apply_adjoint(&self, v: &CVec) -> CVec {
        self.mat.adjoint() * v
    }

    pub fn apply_conj(&self, v: &CVec) -> CVec {
        self.mat.conjugate() * v
    }

    /// `U^T v`, the adjoint of the conjugated encoder Alice applies.
    pub fn apply_transpose(&self, v: &CVec) -> CVec {
        self.mat.transpose() * v
    }
}

/// Builds the encoding unitary column by column: column `u` is
/// `X~^n(u) |psi(0)>` with `X~^n(u) = prod_i X~(f_i)^{u_i}` in ascending
/// factor order. Errors if the result is not unitary to 1e-10.
pub fn build_encoder(params: &EncoderParams) -> Result<Encoder> {
    let p = params.p();
    let n = params.n();
    let dim = checked_pow(p, n, MAX_SIDE_DIM)?;
    let fixed = psi_zero(params)?;
    let mut mat = CMat::zeros(dim, dim);
    for u in 0..dim {
        let ds = digits(p, n, u);
        let mut op = PauliElement::identity(p, n);
        for (i, &ui) in ds.iter().enumerate() {
            op = op.mul(&params.encoded_x_op(i).pow(ui));
        }
        let col = apply_pauli(&op, &fixed.state);
        mat.set_column(u, &col);
    }
    let defect = unitarity_defect(&mat);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    Ok(Encoder { p, n, k: params.k(), mat, psi0: fixed.state, lambda_high: fixed.lambda_high })
}

/// `|beta^n(v)> = (I tensor XZ^n(v)) (1/sqrt(p^n)) sum_c |c>|c>`.
pub fn bell_state(v: &GfVector) -> Result<CVec> {
    let p = v.p();
    let n = v.slots();
    let side = checked_pow(p, n, MAX_SIDE_DIM)?;
    checked_pow(p, 2 * n, MAX_PAIR_DIM)?;
    let w = omega(p);
    let norm = Complex64::new(1.0 / (side as f64).sqrt(), 0.0);
    let mut out = CVec::zeros(side * side);
    for c in 0..side {
        let ds = digits(p, n, c);
        let mut zexp = 0u32;
        let mut shifted = vec![0u8; n];
        for i in 0..n {
            zexp += v.b(i) as u32 * ds[i] as u32;
            shifted[i] = (ds[i] + v.a(i)) % p;
        }
        out[c * side + index_of(p, &shifted)] = w.powu(zexp % p as u32) * norm;
    }
    Ok(out)
}

/// The k-pair Bell state with error `w = (l|m)` on Bob's logical block and
/// ancilla kets `|e>` on both sides, laid out (ancilla, logical) per side.
pub fn bell_with_ancilla(p: u8, n: usize, k: usize, w: &GfVector, e: &[u8]) -> Result<CVec> {
    assert_eq!(w.slots(), k, "label must cover the logical block");
    assert_eq!(e.len(), n - k, "ancilla digits must cover the rest");
    let side = checked_pow(p, n, MAX_SIDE_DIM)?;
    checked_pow(p, 2 * n, MAX_PAIR_DIM)?;
    let kdim = (p as usize).pow(k as u32);
    let om = omega(p);
    let norm = Complex64::new(1.0 / (kdim as f64).sqrt(), 0.0);
    let mut out = CVec::zeros(side * side);
    for v in 0..kdim {
        let vd = digits(p, k, v);
        let mut zexp = 0u32;
        let mut shifted = vec![0u8; k];
        for i in 0..k {
            zexp += w.b(i) as u32 * vd[i] as u32;
            shifted[i] = (vd[i] + w.a(i)) % p;
        }
        let alice = index_of(p, &e.iter().chain(&vd).copied().collect::<Vec<_>>());
        let bob = index_of(p, &e.iter().chain(&shifted).copied().collect::<Vec<_>>());
        out[alice * side + bob] = om.powu(zexp % p as u32) * norm;
    }
    Ok(out)
}

/// Literal protocol run on a Bell-diagonal input: for every error label,
/// measure both sides, keep branches whose syndrome difference lies in
/// `T`, correct with `XZ(-t')`, decode, discard ancillas, and read the
/// Bell-basis weights of the k-pair remainder. Alice's outcome is fixed
/// to zero; outcome invariance is a separately checked property.
pub fn run_protocol_dense(
    p_in: &BellDiagonal,
    spec: &ProtocolSpec,
    params: &EncoderParams,
) -> Result<Vec<BranchResult>> {
    let a = vec![0u8; spec.stab().r()];
    run_protocol_dense_at(p_in, spec, params, &a)
}

/// [`run_protocol_dense`] with an explicit Alice measurement outcome.
pub fn run_protocol_dense_at(
    p_in: &BellDiagonal,
    spec: &ProtocolSpec,
    params: &EncoderParams,
    alice_outcome: &[u8],
) -> Result<Vec<BranchResult>> {
    let p = spec.p();
    let n = spec.n();
    let k = spec.k();
    let r = spec.stab().r();
    if p_in.p() != p {
        return Err(Error::ModulusMismatch(p_in.p(), p));
    }
    if p_in.pairs() != n || alice_outcome.len() != r {
        return Err(Error::DimensionMismatch(p_in.pairs(), n));
    }
    if params.stab() != spec.stab() {
        return Err(Error::InvalidSpec("params built for a different stabilizer".into()));
    }
    checked_pow(p, 2 * n, MAX_PAIR_DIM)?;
    let side = (p as usize).pow(n as u32);
    let kdim = (p as usize).pow(k as u32);
    let stab = spec.stab();
    let rule = match spec.frule() {
        Some(rule) => rule.clone(),
        None => FRule::most_likely(stab, p_in),
    };
    let enc = build_encoder(params)?;
    // Bell readout basis for the k-pair remainder.
    let mut bell_k = Vec::with_capacity(kdim * kdim);
    for wi in 0..kdim * kdim {
        bell_k.push(bell_state(&GfVector::from_index(p, 2 * k, wi))?);
    }
    let mut slots: std::collections::BTreeMap<&[u8], usize> = std::collections::BTreeMap::new();
    for (i, s) in spec.t_set().iter().enumerate() {
        slots.insert(s.as_slice(), i);
    }
    let mut accepts = vec![0.0; spec.t_set().len()];
    let mut outs = vec![vec![0.0; kdim * kdim]; spec.t_set().len()];
    let a_num = index_of(p, alice_outcome);
    for t_idx in 0..(p as usize).pow(2 * n as u32) {
        let prob = p_in.probs()[t_idx];
        if prob == 0.0 {
            continue;
        }
        let t = GfVector::from_index(p, 2 * n, t_idx);
        let s = stab.syndrome(&t);
        let Some(&slot) = slots.get(s.as_slice()) else { continue };
        let mut b = vec![0u8; r];
        for i in 0..r {
            b[i] = (alice_outcome[i] + s[i]) % p;
        }
        let b_num = index_of(p, &b);
        let minus_t_prime = rule.rep(&s).neg();
        // In the decoded frame, the Alice-row block `(a, x)` of the shared
        // state is the vector U^dag XZ(t) U |a, x> on Bob's side.
        let mut chi = CVec::zeros(kdim * kdim);
        for x in 0..kdim {
            let col = enc.column(a_num * kdim + x);
            let w_x = enc.apply_adjoint(&apply_xz(&t, &col));
            // Bob's measurement: all weight must sit in the b ancilla block.
            let mut in_block = 0.0f64;
            for bob in 0..side {
                let nb = w_x[bob].norm_sqr();
                if bob / kdim == b_num {
                    in_block += nb;
                } else if nb > 1e-20 {
                    return Err(Error::InvalidSpec(format!(
                        "syndrome leak: weight {nb} outside block {b_num}"
                    )));
                }
            }
            if (in_block - 1.0).abs() > 1e-9 {
                return Err(Error::NotUnitary(in_block));
            }
            // Correction then decode on Bob's side.
            let u_x = enc.apply_adjoint(&apply_xz(&minus_t_prime, &enc.apply(&w_x)));
            // After correction the ancilla block must be back at `a`.
            for bob in 0..side {
                if bob / kdim != a_num && u_x[bob].norm_sqr() > 1e-18 {
                    return Err(Error::InvalidSpec("correction missed the code space".into()));
                }
            }
            for y in 0..kdim {
                chi[x * kdim + y] = u_x[a_num * kdim + y];
            }
        }
        chi /= Complex64::new((kdim as f64).sqrt(), 0.0);
        let norm = chi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitary(norm));
        }
        accepts[slot] += prob;
        for (wi, basis) in bell_k.iter().enumerate() {
            outs[slot][wi] += prob * basis.dotc(&chi).norm_sqr();
        }
    }
    let mut results = Vec::with_capacity(accepts.len());
    for (i, s) in spec.t_set().iter().enumerate() {
        let p_out = if accepts[i] > 0.0 {
            let probs: Vec<f64> = outs[i].iter().map(|&q| q / accepts[i]).collect();
            Some(BellDiagonal::new(p, k, probs)?)
        } else {
            None
        };
        results.push(BranchResult { syndrome: s.clone(), accept_prob: accepts[i], p_out });
    }
    Ok(results)
}

/// Checks the encoded-Bell law: `conj(U) tensor U` maps the k-pair Bell
/// state with error `w = (l|m)` and ancillas `|e>|e>` to
/// `(I tensor XZ(lG + mH))` applied to the error-free image, up to a
/// global phase. `G` and `H` are the high eta and xi rows.
pub fn verify_encoded_bell(params: &EncoderParams, e: &[u8], w: &GfVector) -> Result<bool> {
    let p = params.p();
    let n = params.n();
    let k = params.k();
    let enc = build_encoder(params)?;
    let side = (p as usize).pow(n as u32);
    let input = bell_with_ancilla(p, n, k, w, e)?;
    let lhs = apply_two_sided(&input, side, |v| enc.apply_conj(v), |v| enc.apply(v));
    let zero = bell_with_ancilla(p, n, k, &GfVector::zero(p, k), e)?;
    let phi_e = apply_two_sided(&zero, side, |v| enc.apply_conj(v), |v| enc.apply(v));
    let mut lg_mh = GfVector::zero(p, n);
    for i in 0..k {
        lg_mh = lg_mh
            .add(&params.eta()[n - k + i].scaled(w.a(i)))
            .add(&params.xi()[n - k + i].scaled(w.b(i)));
    }
    let rhs = apply_two_sided(&phi_e, side, |v| v.clone(), |v| apply_xz(&lg_mh, v));
    Ok(overlap_mag(&lhs, &rhs) >= 1.0 - 1e-10)
}

/// Applies `A tensor B` given as closures acting on single-side vectors.
fn apply_two_sided<FA, FB>(state: &CVec, side: usize, fa: FA, fb: FB) -> CVec
where
    FA: Fn(&CVec) -> CVec,
    FB: Fn(&CVec) -> CVec,
{
    // Bob on every Alice row, then Alice on every Bob column.
    let mut rows: Vec<CVec> = Vec::with_capacity(side);
    for ai in 0..side {
        let mut row = CVec::zeros(side);
        for bi in 0..side {
            row[bi] = state[ai * side + bi];
        }
        rows.push(fb(&row));
    }
    let mut out = CVec::zeros(side * side);
    for bi in 0..side {
        let mut col = CVec::zeros(side);
        for ai in 0..side {
            col[ai] = rows[ai][bi];
        }
        let col = fa(&col);
        for ai in 0..side {
            out[ai * side + bi] = col[ai];
        }
    }
    out
}

/// Alice's measurement with outcome `a`: projects onto the span of the
/// conjugated code blocks and returns the unnormalized result.
pub fn project_alice(enc: &Encoder, state: &CVec, a: &[u8]) -> CVec {
    let side = enc.matrix().nrows();
    let kdim = (enc.p() as usize).pow(enc.k() as u32);
    let a_num = index_of(enc.p(), a);
    apply_two_sided(
        state,
        side,
        |v| {
            // conj(U) Pi_a conj(U)^dag with conj(U)^dag = U^T.
            let mut inner = enc.apply_transpose(v);
            for i in 0..side {
                if i / kdim != a_num {
                    inner[i] = Complex64::new(0.0, 0.0);
                }
            }
            enc.apply_conj(&inner)
        },
        |v| v.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{reference_params_442, reference_protocol_442, EncodingClass};
    use crate::pauli::Stabilizer;
    use crate::symplectic::fixtures::gf;
    use crate::symplectic::{complete_hyperbolic, Subspace};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn xz_matrix_examples() {
        let id = xz_matrix(&GfVector::zero(2, 2), 0).unwrap();
        assert_eq!(id, CMat::identity(4, 4));

        let xz = xz_matrix(&gf(2, &[1], &[1]), 0).unwrap();
        assert_abs_diff_eq!((xz[(0, 0)] - c64(0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((xz[(0, 1)] - c64(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((xz[(1, 0)] - c64(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((xz[(1, 1)] - c64(0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);

        // ZX = wXZ.
        let x = xz_matrix(&gf(3, &[1], &[0]), 0).unwrap();
        let z = xz_matrix(&gf(3, &[0], &[1]), 0).unwrap();
        let lhs = &z * &x;
        let rhs = (&x * &z) * omega(3);
        assert!((lhs - rhs).norm() < 1e-12);

        assert!(xz_matrix(&GfVector::zero(2, 9), 0).is_err());
    }

    #[test]
    fn matrices_respect_pauli_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &p in &[2u8, 3] {
            let n = 2;
            for _ in 0..100 {
                let rand_elem = |rng: &mut ChaCha8Rng| {
                    let coords: Vec<u8> = (0..2 * n).map(|_| rng.gen_range(0..p)).collect();
                    let phase = rng.gen_range(0..phase_modulus(p));
                    PauliElement::with_phase(phase, GfVector::new(p, coords).unwrap())
                };
                let a = rand_elem(&mut rng);
                let b = rand_elem(&mut rng);
                let lhs = pauli_matrix(&a).unwrap() * pauli_matrix(&b).unwrap();
                let rhs = pauli_matrix(&a.mul(&b)).unwrap();
                assert!((lhs - rhs).norm() < 1e-10, "mul mismatch for {a} times {b}");
            }
        }
    }

    #[test]
    fn decompose_pauli_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &p in &[2u8, 3] {
            for _ in 0..50 {
                let coords: Vec<u8> = (0..4).map(|_| rng.gen_range(0..p)).collect();
                let phase = rng.gen_range(0..phase_modulus(p));
                let elem = PauliElement::with_phase(phase, GfVector::new(p, coords).unwrap());
                let back = decompose_pauli(p, &pauli_matrix(&elem).unwrap()).unwrap();
                assert_eq!(back, elem);
            }
        }
        let not_pauli = CMat::from_diagonal_element(4, 4, c64(0.5, 0.0));
        assert!(decompose_pauli(2, &not_pauli).is_err());
    }

    #[test]
    fn psi_zero_single_qubit() {
        // Stabilizer {Z}: the fixed state is |0>.
        let c = Subspace::from_span(2, 2, &[gf(2, &[0], &[1])]).unwrap();
        let stab = Stabilizer::from_subspace(&c).unwrap();
        let ext = complete_hyperbolic(2, 2, stab.generators()).unwrap();
        let params =
            EncoderParams::new(stab, ext.xi().to_vec(), ext.eta().to_vec(), vec![0]).unwrap();
        let fixed = psi_zero(&params).unwrap();
        assert_abs_diff_eq!((fixed.state[0] - c64(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fixed.state[1].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn psi_zero_matches_printed_superposition() {
        let params = reference_params_442();
        let fixed = psi_zero(&params).unwrap();
        assert_eq!(fixed.lambda_high, vec![0, 0]);
        // Even-weight kets with equal positive amplitudes.
        let expect: Vec<usize> =
            vec![0b0000, 0b1111, 0b0011, 0b1100, 0b1001, 0b0110, 0b0101, 0b1010];
        let amp = 1.0 / (8.0f64).sqrt();
        for i in 0..16 {
            let want = if expect.contains(&i) { amp } else { 0.0 };
            assert_abs_diff_eq!((fixed.state[i] - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_zero_is_fixed_by_encoded_z_ops() {
        let params = reference_params_442();
        let fixed = psi_zero(&params).unwrap();
        for i in 0..2 {
            let moved = apply_pauli(&params.encoded_z_low_op(i), &fixed.state);
            assert!((moved - &fixed.state).norm() < 1e-10);
        }
        for i in 2..4 {
            let moved =
                apply_pauli(&params.encoded_z_op(i, fixed.lambda_high[i - 2]), &fixed.state);
            assert!((moved - &fixed.state).norm() < 1e-10);
        }
    }

    #[test]
    fn pinned_lambda_high_selects_other_seed_spaces() {
        let params = reference_params_442();
        let minus = params.clone().with_lambda_high(vec![2, 2]).unwrap();
        let fixed = psi_zero(&minus).unwrap();
        assert_eq!(fixed.lambda_high, vec![2, 2]);
        // XZ(xi_3) = XXII now has eigenvalue -1 on the state.
        let op = PauliElement::from_vec(gf(2, &[1, 1, 0, 0], &[0, 0, 0, 0]));
        let moved = apply_pauli(&op, &fixed.state);
        assert!((moved + &fixed.state).norm() < 1e-10);
        // Odd i-exponent for an even-overlap generator is rejected up front.
        assert!(params.clone().with_lambda_high(vec![1, 0]).is_err());
    }

    #[test]
    fn encoder_is_unitary_and_conjugates_correctly() {
        // Fully hyperbolic extension: both conjugation laws hold verbatim.
        let spec = reference_protocol_442();
        let params = EncoderParams::from_class(spec.stab(), spec.class()).unwrap();
        let enc = build_encoder(&params).unwrap();
        assert!(unitarity_defect(enc.matrix()) <= 1e-10);
        for i in 0..4 {
            let mut s = vec![0u8; 4];
            s[i] = 1;
            let x_n = xz_matrix(&GfVector::from_halves(2, &s, &[0; 4]).unwrap(), 0).unwrap();
            let lhs = enc.matrix() * x_n * enc.matrix().adjoint();
            let rhs = pauli_matrix(&params.encoded_x_op(i)).unwrap();
            assert!((lhs - rhs).norm() < 1e-9, "X conjugation law at {i}");

            let z_n = xz_matrix(&GfVector::from_halves(2, &[0; 4], &s).unwrap(), 0).unwrap();
            let lhs = enc.matrix() * z_n * enc.matrix().adjoint();
            let lambda = if i < 2 { params.stab().lambda()[i] } else { enc.lambda_high()[i - 2] };
            let rhs = pauli_matrix(&params.encoded_z_op(i, lambda)).unwrap();
            assert!((lhs - rhs).norm() < 1e-9, "Z conjugation law at {i}");
        }
    }

    #[test]
    fn conjugation_images_match_printed_tables() {
        // The printed extension has a twisted low eta pair, so the X image
        // of the second logical unit picks up the first encoded Z factor;
        // everything else matches the printed operators directly.
        let params = reference_params_442();
        let enc = build_encoder(&params).unwrap();
        let mut x_images = Vec::new();
        let mut z_images = Vec::new();
        for i in 0..4 {
            let mut s = vec![0u8; 4];
            s[i] = 1;
            let x_n = xz_matrix(&GfVector::from_halves(2, &s, &[0; 4]).unwrap(), 0).unwrap();
            let img = decompose_pauli(2, &(enc.matrix() * x_n * enc.matrix().adjoint())).unwrap();
            x_images.push(img);
            let z_n = xz_matrix(&GfVector::from_halves(2, &[0; 4], &s).unwrap(), 0).unwrap();
            let img = decompose_pauli(2, &(enc.matrix() * z_n * enc.matrix().adjoint())).unwrap();
            z_images.push(img.to_string());
        }
        assert_eq!(x_images[0].to_string(), "Z.Z.Z.I");
        assert_eq!(x_images[1], params.encoded_x_op(1).mul(&params.encoded_z_low_op(0)));
        assert_eq!(x_images[2].to_string(), "Z.I.Z.I");
        assert_eq!(x_images[3].to_string(), "i XZ.Z.X.I");
        assert_eq!(z_images, vec!["X.X.X.X", "Z.Z.Z.Z", "X.X.I.I", "X.I.X.I"]);
        // The operator tables themselves render as printed.
        let table: Vec<String> = (0..4).map(|i| params.encoded_x_op(i).to_string()).collect();
        assert_eq!(table, vec!["Z.Z.Z.I", "X.X.X.I", "Z.I.Z.I", "i XZ.Z.X.I"]);
    }

    #[test]
    fn encoder_normalizes_pauli_group() {
        // Clifford membership: conjugates of the single-qudit generators
        // decompose as phased Pauli matrices.
        let params = reference_params_442();
        let enc = build_encoder(&params).unwrap();
        for i in 0..4 {
            let mut s = vec![0u8; 4];
            s[i] = 1;
            for half in 0..2 {
                let v = if half == 0 {
                    GfVector::from_halves(2, &s, &[0; 4]).unwrap()
                } else {
                    GfVector::from_halves(2, &[0; 4], &s).unwrap()
                };
                let m = xz_matrix(&v, 0).unwrap();
                let conj = enc.matrix() * m * enc.matrix().adjoint();
                assert!(decompose_pauli(2, &conj).is_ok());
            }
        }
    }

    #[test]
    fn dense_point_mass_runs() {
        let spec = reference_protocol_442();
        let params = reference_params_442();
        let zero_in = BellDiagonal::point_mass(&GfVector::zero(2, 4));
        let branches = run_protocol_dense(&zero_in, &spec, &params).unwrap();
        assert_eq!(branches.len(), 1);
        assert_abs_diff_eq!(branches[0].accept_prob, 1.0, epsilon = 1e-12);
        let out = branches[0].p_out.as_ref().unwrap();
        assert_abs_diff_eq!(out.fidelity(), 1.0, epsilon = 1e-10);

        // Pure eta_3 error with the t'(0) = 0 rule decodes to label (10|00).
        let g1 = params.eta()[2].clone();
        let fixed = spec.clone().with_frule(FRule::lex_min(spec.stab()));
        let branches =
            run_protocol_dense(&BellDiagonal::point_mass(&g1), &fixed, &params).unwrap();
        let out = branches[0].p_out.as_ref().unwrap();
        assert_abs_diff_eq!(out.prob(&gf(2, &[1, 0], &[0, 0])), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn dense_agrees_with_fast_path_on_reference() {
        let spec = reference_protocol_442();
        let params = reference_params_442();
        let p_in = BellDiagonal::werner(2, 4, 0.8).unwrap();
        let dense = run_protocol_dense(&p_in, &spec, &params).unwrap();
        let fast = crate::sim::run_protocol(&p_in, &spec).unwrap();
        assert_eq!(dense.len(), fast.len());
        for (d, f) in dense.iter().zip(&fast) {
            assert_abs_diff_eq!(d.accept_prob, f.accept_prob, epsilon = 1e-9);
            let dp = d.p_out.as_ref().unwrap();
            let fp = f.p_out.as_ref().unwrap();
            for (x, y) in dp.probs().iter().zip(fp.probs()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dense_outcome_is_independent_of_alice_result() {
        let spec = reference_protocol_442();
        let params = reference_params_442();
        let p_in = BellDiagonal::werner(2, 4, 0.7).unwrap();
        let base = run_protocol_dense_at(&p_in, &spec, &params, &[0, 0]).unwrap();
        for a in [[0, 1], [1, 0], [1, 1]] {
            let other = run_protocol_dense_at(&p_in, &spec, &params, &a).unwrap();
            for (x, y) in base.iter().zip(&other) {
                assert_abs_diff_eq!(x.accept_prob, y.accept_prob, epsilon = 1e-10);
                for (u, v) in x
                    .p_out
                    .as_ref()
                    .unwrap()
                    .probs()
                    .iter()
                    .zip(y.p_out.as_ref().unwrap().probs())
                {
                    assert_abs_diff_eq!(u, v, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn alice_outcomes_are_uniform() {
        let params = reference_params_442();
        let enc = build_encoder(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let coords: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2)).collect();
            let t = GfVector::new(2, coords).unwrap();
            let beta = bell_state(&t).unwrap();
            let mut total = 0.0;
            for a_num in 0..4u8 {
                let a = [a_num / 2, a_num % 2];
                let projected = project_alice(&enc, &beta, &a);
                let prob = projected.norm_squared();
                assert_abs_diff_eq!(prob, 0.25, epsilon = 1e-10);
                total += prob;
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn state_after_first_measurement_has_claimed_form() {
        let params = reference_params_442();
        let enc = build_encoder(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3 {
            let coords: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2)).collect();
            let u = GfVector::new(2, coords).unwrap();
            let a = [rng.gen_range(0..2u8), rng.gen_range(0..2u8)];
            let a_num = index_of(2, &a);
            let projected = project_alice(&enc, &bell_state(&u).unwrap(), &a);
            // Expected: sum_x conj(theta(a,x)) tensor XZ(u) theta(a,x).
            let side = 16;
            let mut expect = CVec::zeros(side * side);
            for x in 0..4 {
                let theta = enc.column(a_num * 4 + x);
                let errored = apply_xz(&u, &theta);
                for ai in 0..side {
                    for bi in 0..side {
                        expect[ai * side + bi] += theta[ai].conj() * errored[bi];
                    }
                }
            }
            assert!(
                overlap_mag(&projected, &expect) >= 1.0 - 1e-9,
                "projected state differs from the claimed form"
            );
        }
    }

    #[test]
    fn encoded_bell_law_holds_for_reference() {
        let params = reference_params_442();
        for wi in 0..16 {
            let w = GfVector::from_index(2, 4, wi);
            assert!(verify_encoded_bell(&params, &[0, 0], &w).unwrap(), "w = {w}");
        }
        // Nonzero ancilla content too.
        assert!(verify_encoded_bell(&params, &[1, 0], &gf(2, &[1, 1], &[0, 1])).unwrap());
    }

    #[test]
    fn encoded_bell_law_holds_for_p3_code() {
        let g = gf(3, &[1, 1, 1], &[0, 1, 2]);
        let c = Subspace::from_span(3, 6, &[g]).unwrap();
        let stab = Stabilizer::from_subspace(&c).unwrap();
        let ext = complete_hyperbolic(3, 6, stab.generators()).unwrap();
        let params =
            EncoderParams::new(stab, ext.xi().to_vec(), ext.eta().to_vec(), vec![0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let w = GfVector::new(3, (0..4).map(|_| rng.gen_range(0..3)).collect()).unwrap();
            let e = [rng.gen_range(0..3u8)];
            assert!(verify_encoded_bell(&params, &e, &w).unwrap());
        }
    }

    #[test]
    fn theta_x_and_eta_low_do_not_change_results() {
        // Same class, different free parameters: identical dense branches.
        let spec = reference_protocol_442();
        let base = reference_params_442();
        let strict = EncoderParams::from_class(spec.stab(), spec.class()).unwrap();
        let twisted = base.clone().with_theta_x(vec![2, 2, 0, 2]).unwrap();
        let relabeled = base.clone().with_lambda_high(vec![2, 0]).unwrap();
        let p_in = BellDiagonal::werner(2, 4, 0.75).unwrap();
        let reference = run_protocol_dense(&p_in, &spec, &base).unwrap();
        for params in [&strict, &twisted, &relabeled] {
            let got = run_protocol_dense(&p_in, &spec, params).unwrap();
            for (x, y) in reference.iter().zip(&got) {
                assert_abs_diff_eq!(x.accept_prob, y.accept_prob, epsilon = 1e-10);
                for (u, v) in x
                    .p_out
                    .as_ref()
                    .unwrap()
                    .probs()
                    .iter()
                    .zip(y.p_out.as_ref().unwrap().probs())
                {
                    assert_abs_diff_eq!(u, v, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn distinct_classes_are_separated_by_witness_input() {
        let spec = reference_protocol_442();
        let stab = spec.stab();
        let xi = crate::symplectic::fixtures::example_xi();
        let eta = crate::symplectic::fixtures::example_eta();
        let other_class = EncodingClass::build(
            stab.c(),
            &[xi[3].clone(), xi[2].clone()],
            &[eta[3].clone(), eta[2].clone()],
        )
        .unwrap();
        let u = stab
            .cperp()
            .elements()
            .find(|u| spec.class().g_map_unchecked(u) != other_class.g_map_unchecked(u))
            .expect("distinct classes differ somewhere");
        // Witness: uniform over the fiber of u under a shared rule.
        let rule = FRule::lex_min(stab);
        let mut probs = vec![0.0; 256];
        let mut count = 0usize;
        for s in stab.syndromes() {
            let t = u.add(rule.rep(&s));
            probs[t.index()] += 1.0;
            count += 1;
        }
        for q in probs.iter_mut() {
            *q /= count as f64;
        }
        let p_in = BellDiagonal::new(2, 4, probs).unwrap();
        let spec_a = spec.clone().with_frule(rule.clone());
        let spec_b =
            ProtocolSpec::with_zero_t(stab.clone(), other_class.clone()).unwrap().with_frule(rule);
        let params_a = EncoderParams::from_class(stab, spec.class()).unwrap();
        let params_b = EncoderParams::from_class(stab, &other_class).unwrap();
        let out_a = run_protocol_dense(&p_in, &spec_a, &params_a).unwrap();
        let out_b = run_protocol_dense(&p_in, &spec_b, &params_b).unwrap();
        let pa = out_a[0].p_out.as_ref().unwrap();
        let pb = out_b[0].p_out.as_ref().unwrap();
        assert_abs_diff_eq!(pa.prob(&spec.class().g_map_unchecked(&u)), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pb.prob(&other_class.g_map_unchecked(&u)), 1.0, epsilon = 1e-9);
        let differs = pa.probs().iter().zip(pb.probs()).any(|(x, y)| (x - y).abs() > 1e-6);
        assert!(differs);
    }
}
