//! The induction engine: base case, one inductive step, and the driver
//! that iterates the step into a verified construction trace.
//!
//! Every step re-verifies the statements it relies on in exact
//! arithmetic; a violated statement aborts the run with the statement's
//! identifier instead of silently producing a corrupt trace.

use crate::lattice::{det2, find_w, inner, span_equality, IntVec2, LatticeError, RatVec2};
use crate::psi::{psi_eval, PsiError, PsiSpec, PsiValue};
use crate::quad::{sqrt_sum_less_than_sqrt, QuadRadical, QuadReal};
use crate::rational::{dist_to_z, nearest_integer, parse_rat, sqrt_enclosure, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("inadmissible psi: {0}")]
    InadmissiblePsi(String),
    #[error("step {k}: verification of {statement} failed")]
    StepVerificationFailed { k: u32, statement: &'static str },
    #[error("step {k}: sign law lambda1/|lambda1| = delta violated")]
    SignLawViolated { k: u32 },
    #[error("singular 2x2 system: det(m_k1, m_k2) = 0")]
    SingularSystem,
    #[error("step {k}: triple-switch equality violated")]
    TripleSwitchViolated { k: u32 },
    #[error("step {k}: no feasible next approximation in the admissible window")]
    NoCandidate { k: u32 },
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "norm")]
    Norm,
    #[serde(rename = "index")]
    Index,
}

/// Supplier of recorded tie decisions. Reading past the seed yields 0;
/// every consumed bit is recorded so a trace can name the branch taken.
#[derive(Clone, Debug, Default)]
pub struct BranchReader {
    seed: Vec<bool>,
    pos: usize,
    consumed: Vec<bool>,
}

impl BranchReader {
    pub fn from_bitstring(s: &str) -> Result<Self, String> {
        let mut seed = Vec::new();
        for ch in s.chars() {
            match ch {
                '0' => seed.push(false),
                '1' => seed.push(true),
                _ => return Err(format!("branch seed must be a bitstring, got `{s}`")),
            }
        }
        Ok(BranchReader { seed, pos: 0, consumed: Vec::new() })
    }

    pub fn next_bit(&mut self) -> bool {
        let bit = self.seed.get(self.pos).copied().unwrap_or(false);
        self.pos += 1;
        self.consumed.push(bit);
        bit
    }

    pub fn consumed_bitstring(&self) -> String {
        self.consumed.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

/// Per-step verification record (all must be true in a valid trace):
/// c1 <m_k, m_k1> <= 0; c2 span equality of the anchor; c3 nesting of
/// the half-balls (radius chain and half-plane); c4 the determinant
/// window gamma < |det|/|m_k|^2 < 3 gamma; c5 the norm-ratio window;
/// c6 the step window |det_next|/|m_k|^2 in [1/psi, 1/psi + 3 gamma)
/// together with the sign law and the triple-switch equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepChecks {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub c5: bool,
    pub c6: bool,
}

impl StepChecks {
    pub fn all_true() -> Self {
        StepChecks { c1: true, c2: true, c3: true, c4: true, c5: true, c6: true }
    }

    pub fn is_all_true(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4 && self.c5 && self.c6
    }
}

/// State after step k: the pair (m_k, m_{k+1}), the anchor alpha_k, the
/// half-ball side delta_k, a 128-bit enclosure of the radius
/// R_k = (2 |m_{k+1}| |det(m_k, m_{k+1})|)^-1, and the psi staircase
/// value used at this step.
#[derive(Clone, Debug)]
pub struct StepState {
    pub k: u32,
    pub m_k: IntVec2,
    pub m_k1: IntVec2,
    pub alpha: RatVec2,
    pub delta: i8,
    pub r_lower: Rat,
    pub r_upper: Rat,
    pub psi_hat: PsiValue,
    pub checks: StepChecks,
}

#[derive(Clone, Debug)]
pub struct ConstructionTrace {
    pub psi_spec: PsiSpec,
    pub mode: Mode,
    pub branch: String,
    pub steps: Vec<StepState>,
    /// rational box guaranteed to contain the limit form alpha
    pub final_enclosure: ((Rat, Rat), (Rat, Rat)),
}

/// 1/(2 gamma^3), the operative admissibility bound for psi_hat_1 (the
/// base-case radicand is non-negative exactly on psi_1 <= this).
pub fn operative_bound() -> QuadReal {
    let g = QuadReal::gamma();
    (QuadReal::from_int(2) * &g * &g * &g).recip().unwrap()
}

fn gamma_psi_windows(psi: &Rat) -> (QuadReal, QuadReal) {
    // ((2 gamma psi)^-1, (gamma psi)^-1)
    let g = QuadReal::gamma();
    let p = QuadReal::from_rat(psi.clone());
    let hi = (&g * &p).recip().unwrap();
    let lo = (QuadReal::from_int(2) * &g * &p).recip().unwrap();
    (lo, hi)
}

fn r_squared(m_k1: &IntVec2, d: &BigInt) -> Rat {
    // R^2 = 1/(4 |m_{k+1}|^2 det^2)
    Rat::new(BigInt::one(), BigInt::from(4) * m_k1.sq_norm() * d * d)
}

fn r_enclosure(m_k1: &IntVec2, d: &BigInt) -> (Rat, Rat) {
    sqrt_enclosure(&r_squared(m_k1, d), 128)
}

/// Verify the standing invariants of a state; returns the identifier of
/// the first violated condition.
pub fn verify_state_invariants(state: &StepState) -> Result<(), &'static str> {
    let d = det2(&state.m_k, &state.m_k1);
    if d.is_zero() {
        return Err("cond4");
    }
    if inner(&state.m_k, &state.m_k1).is_positive() {
        return Err("cond1");
    }
    if !span_equality(&state.alpha, &state.m_k, &state.m_k1) {
        return Err("cond2");
    }
    // gamma < |det|/|m_k|^2 < 3 gamma
    let g = QuadReal::gamma();
    let ratio = QuadReal::from_rat(Rat::new(d.abs(), state.m_k.sq_norm()));
    if !(&ratio - &g).is_positive() || !(QuadReal::from_int(3) * &g - &ratio).is_positive() {
        return Err("cond4");
    }
    // the recorded 128-bit enclosure of R = (2 |m_{k+1}| |det|)^-1
    let (rlo, rhi) = r_enclosure(&state.m_k1, &d);
    if state.r_lower != rlo || state.r_upper != rhi {
        return Err("radius_enclosure");
    }
    // (2 gamma psi)^-1 <= |m_k1|^2/|m_k|^2 < (gamma psi)^-1
    let (lo, hi) = gamma_psi_windows(&state.psi_hat.value);
    let r5 = QuadReal::from_rat(Rat::new(state.m_k1.sq_norm(), state.m_k.sq_norm()));
    if (&lo - &r5).is_positive() || !(&hi - &r5).is_positive() {
        return Err("cond5");
    }
    Ok(())
}

/// Base case of the induction: m_1 = (1, 0),
/// m_2 = (-ceil(sqrt((2 gamma psi_1)^-1 - gamma^2)), 3), alpha_1 = (0, 1/3).
/// delta_1 is a free choice recorded as a branch bit by the caller.
pub fn base_case(psi1: &PsiValue, delta1: i8) -> Result<StepState, ConstructionError> {
    assert!(delta1 == 1 || delta1 == -1);
    let g = QuadReal::gamma();
    let bound = operative_bound();
    let p1 = QuadReal::from_rat(psi1.value.clone());
    if (&p1 - &bound).is_positive() {
        return Err(ConstructionError::InadmissiblePsi(format!(
            "psi_1 = {} exceeds the operative bound 1/(2 gamma^3) ~ {:.6}",
            psi1.value,
            bound.to_f64()
        )));
    }
    // radicand (2 gamma psi_1)^-1 - gamma^2
    let radicand = (QuadReal::from_int(2) * &g * &p1).recip().unwrap() - &g * &g;
    if radicand.is_negative() {
        return Err(ConstructionError::InadmissiblePsi(
            "base-case radicand (2 gamma psi_1)^-1 - gamma^2 is negative".into(),
        ));
    }
    let cc = QuadRadical::sqrt(radicand).unwrap().ceil();
    let m1 = IntVec2::new(1, 0);
    let m2 = IntVec2::new(-cc, 3);
    let alpha = RatVec2::new(Rat::zero(), parse_rat("1/3").unwrap());
    let d = det2(&m1, &m2);
    let (r_lower, r_upper) = r_enclosure(&m2, &d);
    let state = StepState {
        k: 1,
        m_k: m1,
        m_k1: m2,
        alpha,
        delta: delta1,
        r_lower,
        r_upper,
        psi_hat: psi1.clone(),
        checks: StepChecks::all_true(),
    };
    verify_state_invariants(&state).map_err(|stmt| {
        if stmt == "cond5" {
            ConstructionError::InadmissiblePsi(
                "base case violates the norm-ratio window (condition 5)".into(),
            )
        } else {
            ConstructionError::StepVerificationFailed { k: 1, statement: stmt }
        }
    })?;
    Ok(state)
}

/// The rotation of m_k1 by 90 degrees, oriented toward m_k.
fn perp_toward(m_k1: &IntVec2, m_k: &IntVec2) -> Result<IntVec2, ConstructionError> {
    let cand = m_k1.perp();
    if inner(&cand, m_k).is_positive() {
        return Ok(cand);
    }
    let cand = cand.neg();
    if inner(&cand, m_k).is_positive() {
        return Ok(cand);
    }
    Err(ConstructionError::SingularSystem)
}

/// The target point v = c1 delta m_k1-perp - c2 m_k1 with
/// c1 = psi_k^-1 |m_k|^2/|m_k1|^2 and c2 = sqrt((2 gamma psi_k1)^-1 - c1^2),
/// as a pair of radical coordinates. None when the radicand is negative
/// (the window then degenerates and the selection clamps c2 to 0).
pub fn point_v(
    m_k: &IntVec2,
    m_k1: &IntVec2,
    delta: i8,
    psi_k: &Rat,
    psi_next: &Rat,
) -> Option<(QuadRadical, QuadRadical)> {
    let mp = perp_toward(m_k1, m_k).ok()?;
    let c1 = psi_k.recip() * Rat::new(m_k.sq_norm(), m_k1.sq_norm());
    let (lo_next, _) = gamma_psi_windows(psi_next);
    let radicand = lo_next - QuadReal::from_rat(&c1 * &c1);
    if radicand.is_negative() {
        return None;
    }
    let sgn = Rat::from_integer(BigInt::from(delta));
    let coord = |i: usize| {
        let p = QuadReal::from_rat(
            &c1 * &sgn
                * Rat::from_integer(if i == 0 { mp.x.clone() } else { mp.y.clone() }),
        );
        let q = QuadReal::from_rat(Rat::from_integer(if i == 0 {
            -&m_k1.x
        } else {
            -&m_k1.y
        }));
        QuadRadical::new(p, q, radicand.clone()).unwrap()
    };
    Some((coord(0), coord(1)))
}

/// Outcome of selecting m_{k+2}: the point itself, its decomposition
/// x = w + lambda-coordinates over (m_k, m_k1), the determinant
/// |det(m_k1, m_next)|, and whether the ideal window had collapsed
/// (negative radicand), forcing the clamped search.
#[derive(Clone, Debug)]
pub struct Selection {
    pub m_next: IntVec2,
    pub lambda1: Rat,
    pub lambda2: Rat,
    pub det_next_abs: BigInt,
    pub clamped: bool,
}

struct Candidate {
    rho2: Rat,
    j: u32,
    b: BigInt,
    a: BigInt,
}

impl Candidate {
    fn key(&self) -> (Rat, u32, BigInt) {
        (self.rho2.clone(), self.j, self.b.clone())
    }
}

/// Choose m_{k+2} = w + a m_k + b m_k1. Candidates range over the
/// projection grid allowed by the step window (statement 6) and the
/// non-positive parallel offsets; each candidate's squared norm ratio
/// must land in [(2 gamma psi')^-1, (gamma psi')^-1). Among candidates
/// that keep the next window solvable (a one-step lookahead in exact
/// arithmetic) the smallest is taken; if none is safe, the largest
/// candidate is returned and the following step re-checks everything.
pub fn select_m_next(
    k: u32,
    w: &IntVec2,
    m_k: &IntVec2,
    m_k1: &IntVec2,
    delta: i8,
    psi_k: &Rat,
    psi_next: &Rat,
) -> Result<Selection, ConstructionError> {
    let mp = perp_toward(m_k1, m_k)?;
    let n1 = m_k.sq_norm();
    let n2 = m_k1.sq_norm();
    let c1 = psi_k.recip() * Rat::new(n1.clone(), n2.clone());
    let c1n2 = &c1 * Rat::from_integer(n2.clone()); // threshold <v, delta mp>
    let clamped = point_v(m_k, m_k1, delta, psi_k, psi_next).is_none();

    let g = inner(m_k, &mp); // > 0 by orientation of mp
    debug_assert!(g.is_positive());
    let h = Rat::from_integer(BigInt::from(delta) * inner(w, &mp));
    // minimal a (in the delta direction) with delta <w + a m_k, mp> >= c1 n2
    let a0_scaled = ((&c1n2 - &h) / Rat::from_integer(g.clone())).ceil().to_integer();
    let a0 = BigInt::from(delta) * a0_scaled;

    let (lo, hi) = gamma_psi_windows(psi_next);
    let g_quad = QuadReal::gamma();
    let psi_k_inv = QuadReal::from_rat(psi_k.recip());
    let stmt6_hi = &psi_k_inv + &(QuadReal::from_int(3) * &g_quad);

    let mut best_safe: Option<Candidate> = None;
    let mut best_unsafe: Option<Candidate> = None;

    for j in 0..64u32 {
        let a = &a0 + BigInt::from(delta) * BigInt::from(j);
        // delta <w + a m_k, mp>, an integer: |det(m_k1, candidate)|
        let projn2 = BigInt::from(delta) * (inner(w, &mp) + &a * &g);
        debug_assert!(projn2.is_positive());
        // stop when statement 6 can no longer hold: projn2/n1 >= 1/psi + 3 gamma
        let r6 = QuadReal::from_rat(Rat::new(projn2.clone(), n1.clone()));
        if !(&stmt6_hi - &r6).is_positive() {
            break;
        }
        let proj2 = Rat::new(&projn2 * &projn2, &n2 * &n2);
        let base_ip = inner(&w.add(&m_k.scale(&a)), m_k1);
        // largest b keeping the parallel offset o = (base_ip + b n2)/n2 <= 0
        let mut b = Rat::new(-&base_ip, n2.clone()).floor().to_integer();
        loop {
            let o = Rat::new(&base_ip + &b * &n2, n2.clone());
            debug_assert!(!o.is_positive());
            let rho2 = &proj2 + &o * &o;
            let rho2_q = QuadReal::from_rat(rho2.clone());
            if !(&hi - &rho2_q).is_positive() {
                break; // larger |o| only grows rho2
            }
            if !(&lo - &rho2_q).is_positive() {
                let cand = Candidate { rho2, j, b: b.clone(), a: a.clone() };
                let nx = &rho2_q * &QuadReal::from_rat(Rat::from_integer(n2.clone()));
                if lookahead_safe(&projn2, &nx, &n2, psi_next) {
                    if best_safe.as_ref().is_none_or(|c| cand.key() < c.key()) {
                        best_safe = Some(cand);
                    }
                } else if best_unsafe.as_ref().is_none_or(|c| cand.key() > c.key()) {
                    best_unsafe = Some(cand);
                }
            }
            b -= 1;
        }
    }

    let chosen = best_safe
        .or(best_unsafe)
        .ok_or(ConstructionError::NoCandidate { k })?;
    let a = chosen.a;
    let b = chosen.b;
    let m_next = w.add(&m_k.scale(&a)).add(&m_k1.scale(&b));
    let d_signed = det2(m_k, m_k1);
    // fractional coordinates of w over (m_k, m_k1)
    let s_w = Rat::new(det2(w, m_k1), d_signed.clone());
    let t_w = Rat::new(det2(m_k, w), d_signed);
    let lambda1 = s_w + Rat::from_integer(a);
    let lambda2 = t_w + Rat::from_integer(b);
    // sign law (lambda1 has the sign of delta)
    let sign_ok = if delta > 0 { lambda1.is_positive() } else { lambda1.is_negative() };
    if !sign_ok {
        return Err(ConstructionError::SignLawViolated { k });
    }
    Ok(Selection {
        det_next_abs: det2(m_k1, &m_next).abs(),
        m_next,
        lambda1,
        lambda2,
        clamped,
    })
}

/// Will the window of the step after this one contain an integer grid
/// point? With `detn` = |det(m_k1, m_next)| and `nx` = |m_next|^2, the
/// next projection threshold is c1' + Delta' where c1' = psi'^-1 n2/nx
/// and Delta' = detn/nx; the window in squared units is
/// [(2 gamma psi')^-1 - p^2, (gamma psi')^-1 - p^2] with p = c1' + Delta',
/// and it certainly contains an offset if its sqrt-width is >= 1.
fn lookahead_safe(detn: &BigInt, nx: &QuadReal, n2: &BigInt, psi_next: &Rat) -> bool {
    let (lo, hi) = gamma_psi_windows(psi_next);
    let nx_inv = nx.recip().unwrap();
    let c1n = QuadReal::from_rat(psi_next.recip() * Rat::from_integer(n2.clone())) * &nx_inv;
    let dn = QuadReal::from_rat(Rat::from_integer(detn.clone())) * &nx_inv;
    let p = c1n + dn;
    let p2 = &p * &p;
    let s_hi = &hi - &p2;
    if !s_hi.is_positive() {
        return false;
    }
    let s_lo_raw = &lo - &p2;
    let s_lo = if s_lo_raw.is_negative() { QuadReal::zero() } else { s_lo_raw };
    // sqrt(s_hi) - sqrt(s_lo) >= 1  <=>  d := s_hi - s_lo - 1 >= 0 and d^2 >= 4 s_lo
    let d = &s_hi - &s_lo - QuadReal::one();
    if d.is_negative() {
        return false;
    }
    !(QuadReal::from_int(4) * &s_lo - &d * &d).is_positive()
}

/// alpha_{k+1}: the unique solution of <alpha', m_k1> = <alpha, m_k1>
/// and <alpha', m_k2> = nearest integer to <alpha, m_k2> (Cramer).
pub fn solve_alpha_next(
    alpha: &RatVec2,
    m_k1: &IntVec2,
    m_k2: &IntVec2,
) -> Result<RatVec2, ConstructionError> {
    let dd = det2(m_k1, m_k2);
    if dd.is_zero() {
        return Err(ConstructionError::SingularSystem);
    }
    let t1 = alpha.inner_int(m_k1);
    let rhs2 = Rat::from_integer(nearest_integer(&alpha.inner_int(m_k2)));
    let dd_rat = Rat::from_integer(dd);
    let ax = (&t1 * Rat::from_integer(m_k2.y.clone()) - &rhs2 * Rat::from_integer(m_k1.y.clone()))
        / &dd_rat;
    let ay = (&rhs2 * Rat::from_integer(m_k1.x.clone()) - &t1 * Rat::from_integer(m_k2.x.clone()))
        / &dd_rat;
    Ok(RatVec2::new(ax, ay))
}

/// delta_{k+1}: the half closest to the previous supporting line. When
/// <m_k, m_k1> < 0 that is the same side as delta_k; at exactly zero the
/// two halves are equidistant and a recorded branch bit decides.
pub fn half_ball_side(delta_k: i8, m_k: &IntVec2, m_k1: &IntVec2, branch: &mut BranchReader) -> i8 {
    let ip = inner(m_k, m_k1);
    debug_assert!(!ip.is_positive());
    if ip.is_negative() {
        delta_k
    } else if branch.next_bit() {
        -1
    } else {
        1
    }
}

/// One application of the inductive step. Consumes the state after step
/// k and psi_hat at k+1; produces the state after step k+1 with every
/// relied-upon statement re-verified exactly.
pub fn induction_step(
    state: &StepState,
    psi_next: &PsiValue,
    branch: &mut BranchReader,
) -> Result<StepState, ConstructionError> {
    let k = state.k;
    let fail = |statement: &'static str| ConstructionError::StepVerificationFailed { k, statement };

    verify_state_invariants(state).map_err(fail)?;
    if psi_next.value > state.psi_hat.value {
        return Err(ConstructionError::InadmissiblePsi(format!(
            "psi at step {} increased: {} > {}",
            k + 1,
            psi_next.value,
            state.psi_hat.value
        )));
    }

    let w = find_w(&state.alpha, &state.m_k, &state.m_k1)?;
    let sel = select_m_next(
        k,
        &w,
        &state.m_k,
        &state.m_k1,
        state.delta,
        &state.psi_hat.value,
        &psi_next.value,
    )?;
    let m_k2 = sel.m_next;
    let alpha_next = solve_alpha_next(&state.alpha, &state.m_k1, &m_k2)?;
    let delta_next = half_ball_side(state.delta, &state.m_k, &state.m_k1, branch);

    let dd = det2(&state.m_k1, &m_k2);
    let (r_lower, r_upper) = r_enclosure(&m_k2, &dd);
    let next = StepState {
        k: k + 1,
        m_k: state.m_k1.clone(),
        m_k1: m_k2,
        alpha: alpha_next,
        delta: delta_next,
        r_lower,
        r_upper,
        psi_hat: psi_next.clone(),
        checks: StepChecks::all_true(),
    };
    check_transition(state, &next).map_err(|stmt| {
        if stmt == "triple_switch" {
            ConstructionError::TripleSwitchViolated { k }
        } else {
            fail(stmt)
        }
    })?;
    verify_state_invariants(&next)
        .map_err(|s| ConstructionError::StepVerificationFailed { k: k + 1, statement: s })?;

    // theorem band at the center and 8 boundary probes of the new
    // half-ball, measured against the previous m_k and psi_hat
    theorem_band_probes(state, &next).map_err(fail)?;

    Ok(next)
}

/// Verify every statement a transition from `prev` to `next` relies on;
/// returns the identifier of the first violated statement. Shared by
/// the engine (fail-fast) and the trace auditor (collecting).
pub fn check_transition(prev: &StepState, next: &StepState) -> Result<(), &'static str> {
    if next.m_k != prev.m_k1 || next.k != prev.k + 1 {
        return Err("chain");
    }
    if next.psi_hat.value > prev.psi_hat.value {
        return Err("psi_monotone");
    }
    let m_k2 = &next.m_k1;
    let n1 = prev.m_k.sq_norm();
    let n2 = prev.m_k1.sq_norm();
    let nx = m_k2.sq_norm();
    let dd = det2(&prev.m_k1, m_k2);
    let d_prev = det2(&prev.m_k, &prev.m_k1);
    if dd.is_zero() || d_prev.is_zero() {
        return Err("chain");
    }
    let g = QuadReal::gamma();

    // statement 1: <m_k1, m_k2> <= 0
    if inner(&prev.m_k1, m_k2).is_positive() {
        return Err("stmt1");
    }
    // statement 2: the anchor still takes integer values on the new pair
    // and spans the same residue set
    if next.alpha.inner_int(&prev.m_k1) != prev.alpha.inner_int(&prev.m_k1) {
        return Err("stmt2");
    }
    if !span_equality(&next.alpha, &prev.m_k1, m_k2) {
        return Err("stmt2");
    }
    // statement 5: (2 gamma psi')^-1 <= |m_k2|^2/|m_k1|^2 < (gamma psi')^-1
    let (lo5, hi5) = gamma_psi_windows(&next.psi_hat.value);
    let r5 = QuadReal::from_rat(Rat::new(nx.clone(), n2.clone()));
    if (&lo5 - &r5).is_positive() || !(&hi5 - &r5).is_positive() {
        return Err("stmt5");
    }
    // statement 6: psi^-1 <= |det(m_k1, m_k2)|/|m_k|^2 < psi^-1 + 3 gamma
    let r6 = QuadReal::from_rat(Rat::new(dd.abs(), n1.clone()));
    let p_inv = QuadReal::from_rat(prev.psi_hat.value.recip());
    if (&p_inv - &r6).is_positive()
        || !(&(&p_inv + &(QuadReal::from_int(3) * &g)) - &r6).is_positive()
    {
        return Err("stmt6");
    }
    // condition 4 at k+1 (statement-6 transfer): gamma < |dd|/|m_k1|^2 < 3 gamma
    let r4 = QuadReal::from_rat(Rat::new(dd.abs(), n2.clone()));
    if !(&r4 - &g).is_positive() || !(&(QuadReal::from_int(3) * &g) - &r4).is_positive() {
        return Err("stmt6");
    }
    // half-ball side rule: a strict obtuse pair carries delta over
    if inner(&prev.m_k, &prev.m_k1).is_negative() && next.delta != prev.delta {
        return Err("half_ball");
    }
    // triple-switch equality: ||<alpha', m_k>|| |det(m_k1, m_k2)| = 1
    let ts = dist_to_z(&next.alpha.inner_int(&prev.m_k)) * Rat::from_integer(dd.abs());
    if !ts.is_one() {
        return Err("triple_switch");
    }
    // nesting: |alpha' - alpha| + R_{k+1} < R_k, via squared comparison
    let diff = RatVec2::new(&next.alpha.x - &prev.alpha.x, &next.alpha.y - &prev.alpha.y);
    let aa = &diff.x * &diff.x + &diff.y * &diff.y;
    let bb = r_squared(m_k2, &dd);
    let cc = r_squared(&prev.m_k1, &d_prev);
    if !sqrt_sum_less_than_sqrt(&aa, &bb, &cc) {
        return Err("nesting");
    }
    // the stored radius enclosure must bracket R_{k+1}: lower^2 <= R^2 <= upper^2
    if &next.r_lower * &next.r_lower > bb || &next.r_upper * &next.r_upper < bb {
        return Err("radius_enclosure");
    }
    // half-plane nesting: delta_k <alpha', m_k> < delta_k <alpha, m_k>
    let hp = Rat::from_integer(BigInt::from(prev.delta)) * diff.inner_int(&prev.m_k);
    if !hp.is_negative() {
        return Err("half_plane");
    }
    // radius decay toward the theorem bound: R_{k+1} |m_k|^3 <= gamma psi_k^2,
    // squared: n1^3 <= 4 nx dd^2 gamma^2 psi^4
    let psi2 = QuadReal::from_rat(&prev.psi_hat.value * &prev.psi_hat.value);
    let lhs = QuadReal::from_rat(Rat::from_integer(&n1 * &n1 * &n1));
    let rhs = QuadReal::from_rat(Rat::from_integer(BigInt::from(4) * &nx * &dd * &dd))
        * &g
        * &g
        * &psi2
        * &psi2;
    if (lhs - rhs).is_positive() {
        return Err("radius_bound");
    }
    Ok(())
}

/// Probe the new half-ball Omega_{k+1} (center plus 8 rational boundary
/// points on the admissible side) and check
/// psi_k - 4 gamma psi_k^2 < ||<alpha, m_k>|| |m_k|^2 <= psi_k + gamma psi_k^2
/// for each probe.
pub fn theorem_band_probes(prev: &StepState, next: &StepState) -> Result<(), &'static str> {
    let g = QuadReal::gamma();
    let psi = QuadReal::from_rat(prev.psi_hat.value.clone());
    let psi2 = &psi * &psi;
    let band_lo = &psi - &(QuadReal::from_int(4) * &g * &psi2);
    let band_hi = &psi + &(&g * &psi2);
    let n1 = QuadReal::from_rat(Rat::from_integer(prev.m_k.sq_norm()));

    let r = &next.r_lower;
    let dirs = [
        ("1", "0"),
        ("0", "1"),
        ("-1", "0"),
        ("0", "-1"),
        ("3/5", "4/5"),
        ("-3/5", "4/5"),
        ("3/5", "-4/5"),
        ("-3/5", "-4/5"),
    ];
    let mut probes = vec![next.alpha.clone()];
    for (dx, dy) in dirs {
        let p = RatVec2::new(
            &next.alpha.x + r * parse_rat(dx).unwrap(),
            &next.alpha.y + r * parse_rat(dy).unwrap(),
        );
        // keep only points on the half-ball side of the supporting line
        let side = Rat::from_integer(BigInt::from(next.delta))
            * RatVec2::new(&p.x - &next.alpha.x, &p.y - &next.alpha.y).inner_int(&next.m_k);
        if !side.is_positive() {
            probes.push(p);
        }
    }
    for p in probes {
        let err = QuadReal::from_rat(dist_to_z(&p.inner_int(&prev.m_k))) * &n1;
        if !(&err - &band_lo).is_positive() || (&err - &band_hi).is_positive() {
            return Err("theorem_band");
        }
    }
    Ok(())
}

/// Drive the induction until the trace holds K vectors m_1, ..., m_K
/// (the base case provides m_1, m_2; each further step adds one), i.e.
/// K - 1 states. K = 2 yields only the base case.
pub fn run_construction(
    spec: &PsiSpec,
    k_steps: u32,
    mode: Mode,
    branch: &mut BranchReader,
) -> Result<ConstructionTrace, ConstructionError> {
    assert!(k_steps >= 2, "need at least the base case pair");
    spec.validate()?;
    let psi1 = psi_eval(spec, &BigInt::one(), None)?;
    let delta1 = if branch.next_bit() { -1 } else { 1 };
    let mut state = base_case(&psi1, delta1)?;
    let mut steps = vec![state.clone()];
    for k in 1..k_steps - 1 {
        let sq = match mode {
            Mode::Norm => state.m_k1.sq_norm(),
            Mode::Index => {
                let kk = BigInt::from(k + 1);
                &kk * &kk
            }
        };
        let psi_next = psi_eval(spec, &sq, Some(&state.psi_hat))?;
        state = induction_step(&state, &psi_next, branch)?;
        steps.push(state.clone());
    }
    let last = steps.last().unwrap();
    let final_enclosure = (
        (&last.alpha.x - &last.r_upper, &last.alpha.x + &last.r_upper),
        (&last.alpha.y - &last.r_upper, &last.alpha.y + &last.r_upper),
    );
    Ok(ConstructionTrace {
        psi_spec: spec.clone(),
        mode,
        branch: branch.consumed_bitstring(),
        steps,
        final_enclosure,
    })
}
