//! Parabola states, defect-line data and the sharp jump cost.

use serde::{Deserialize, Serialize};

use crate::energy::sigma_point;
use crate::error::{Error, Result};
use crate::grid::Frame;

/// Relative agreement required between the two closed forms of the cost.
pub const FORMULA_TOL: f64 = 1e-12;
/// Angular tolerance (radians) between a segment normal and its jump vector.
pub const ANGLE_TOL: f64 = 1e-9;

/// A zero of the compression potential: `m = (a, a²/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub a: f64,
}

impl PhaseState {
    pub fn new(a: f64) -> Self {
        PhaseState { a }
    }

    #[inline]
    pub fn m(&self) -> [f64; 2] {
        [self.a, 0.5 * self.a * self.a]
    }
}

/// Data of one straight defect line between two parabola states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub minus: PhaseState,
    pub plus: PhaseState,
    /// `m⁺ − m⁻`
    pub p: [f64; 2],
    /// `p/|p|`
    pub n: [f64; 2],
    /// `±n` with `ν₁ > 0`.
    pub nu: [f64; 2],
}

impl JumpSpec {
    pub fn new(a_minus: f64, a_plus: f64) -> Result<Self> {
        if !a_minus.is_finite() || !a_plus.is_finite() {
            return Err(Error::InvalidArgument(format!("phase slopes must be finite, got {a_minus}, {a_plus}")));
        }
        if a_minus == a_plus {
            return Err(Error::DegenerateJump(a_minus));
        }
        let p1 = a_plus - a_minus;
        // p₂ = ½(a⁺² − a⁻²) factored to avoid cancellation
        let p2 = 0.5 * p1 * (a_plus + a_minus);
        let len = p1.hypot(p2);
        let n = [p1 / len, p2 / len];
        let nu = if n[0] > 0.0 { n } else { [-n[0], -n[1]] };
        Ok(JumpSpec { minus: PhaseState::new(a_minus), plus: PhaseState::new(a_plus), p: [p1, p2], n, nu })
    }

    pub fn a_minus(&self) -> f64 {
        self.minus.a
    }

    pub fn a_plus(&self) -> f64 {
        self.plus.a
    }

    pub fn m_minus(&self) -> [f64; 2] {
        self.minus.m()
    }

    pub fn m_plus(&self) -> [f64; 2] {
        self.plus.m()
    }

    pub fn p_norm(&self) -> f64 {
        self.p[0].hypot(self.p[1])
    }

    /// The `(ν, τ)` frame of the cell problem for this jump.
    pub fn frame(&self) -> Frame {
        Frame::from_normal(self.nu).expect("unit normal")
    }

    /// `|(Σ(m⁺) − Σ(m⁻))·ν|`, evaluated through the entropy field.
    pub fn entropy_flux(&self) -> f64 {
        let sp = sigma_point(self.m_plus());
        let sm = sigma_point(self.m_minus());
        ((sp[0] - sm[0]) * self.nu[0] + (sp[1] - sm[1]) * self.nu[1]).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpCost {
    pub cost: f64,
    pub first_form: f64,
    pub second_form: f64,
    pub degenerate: bool,
}

// Double-double helpers: the first form subtracts O(a·p₁²) terms to leave
// O(p₁³), so small jumps on a large mean slope need the extra bits.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd(p, a.mul_add(b, -p))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        let e = s.1 + self.1 + o.1;
        two_sum(s.0, e)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.0, o.0);
        let e = p.1 + (self.0 * o.1 + self.1 * o.0);
        two_sum(p.0, e)
    }

    fn scale(self, k: f64) -> Dd {
        self.mul(Dd(k, 0.0))
    }

    fn div_f64(self, d: f64) -> Dd {
        let q = self.0 / d;
        let r = self.add(two_prod(q, d).neg());
        two_sum(q, r.0 / d)
    }
}

/// `(n₁/2)(p₁p₂ − m₁⁻p₁² − p₁³/3)`
fn first_form(a_minus: f64, a_plus: f64) -> f64 {
    let p1 = two_sum(a_plus, -a_minus);
    let p2 = two_prod(a_plus, a_plus).add(two_prod(a_minus, a_minus).neg()).scale(0.5);
    let p1sq = p1.mul(p1);
    let bracket = p1.mul(p2).add(p1sq.scale(a_minus).neg()).add(p1sq.mul(p1).div_f64(3.0).neg());
    let n1 = p1.0 / p1.0.hypot(p2.0);
    0.5 * n1 * bracket.0
}

/// `|a⁺ − a⁻|³ / (12√(1 + ¼(a⁺ + a⁻)²))`
fn second_form(a_minus: f64, a_plus: f64) -> f64 {
    let d = (a_plus - a_minus).abs();
    let mean = 0.5 * (a_plus + a_minus);
    d * d * d / (12.0 * mean.hypot(1.0))
}

fn cost_between(a_minus: f64, a_plus: f64) -> Result<JumpCost> {
    if a_minus == a_plus {
        return Ok(JumpCost { cost: 0.0, first_form: 0.0, second_form: 0.0, degenerate: true });
    }
    let first = first_form(a_minus, a_plus);
    let second = second_form(a_minus, a_plus);
    if (first.abs() - second).abs() > FORMULA_TOL * second {
        return Err(Error::FormulaDisagreement { first, second });
    }
    Ok(JumpCost { cost: first.abs(), first_form: first, second_form: second, degenerate: false })
}

/// Sharp per-unit-length cost of the jump, checked against both closed forms.
pub fn jump_cost(j: &JumpSpec) -> Result<JumpCost> {
    cost_between(j.a_minus(), j.a_plus())
}

/// Like [`jump_cost`], but accepts `a⁺ = a⁻` (cost 0, flagged degenerate).
pub fn jump_cost_between(a_minus: f64, a_plus: f64) -> Result<JumpCost> {
    if !a_minus.is_finite() || !a_plus.is_finite() {
        return Err(Error::InvalidArgument(format!("phase slopes must be finite, got {a_minus}, {a_plus}")));
    }
    cost_between(a_minus, a_plus)
}

/// Tangential continuity `m⁺·ν⊥ = m⁻·ν⊥` across a line with normal `nu`.
pub fn jump_condition_holds(m_minus: [f64; 2], m_plus: [f64; 2], nu: [f64; 2]) -> bool {
    let len = nu[0].hypot(nu[1]);
    let perp = [-nu[1] / len, nu[0] / len];
    let tm = m_minus[0] * perp[0] + m_minus[1] * perp[1];
    let tp = m_plus[0] * perp[0] + m_plus[1] * perp[1];
    let scale = 1f64.max(tm.abs()).max(tp.abs());
    (tp - tm).abs() <= 1e-12 * scale
}

pub fn check_jump_condition(j: &JumpSpec) -> bool {
    jump_condition_holds(j.m_minus(), j.m_plus(), j.nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStates {
    pub a_minus: f64,
    pub a_plus: f64,
}

/// A polyline jump set with constant traces on each segment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectPath {
    pub vertices: Vec<[f64; 2]>,
    pub segments: Vec<SegmentStates>,
}

impl DefectPath {
    pub fn new(vertices: Vec<[f64; 2]>, segments: Vec<SegmentStates>) -> Result<Self> {
        let path = DefectPath { vertices, segments };
        path.validate()?;
        Ok(path)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let path: DefectPath = serde_json::from_str(text)?;
        path.validate()?;
        Ok(path)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        let expected = self.vertices.len().saturating_sub(1);
        if self.segments.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} vertices need {expected} segment trace pairs, got {}",
                self.vertices.len(),
                self.segments.len()
            )));
        }
        for k in 0..self.segments.len() {
            self.segment_cost(k)?;
        }
        Ok(())
    }

    /// Cost density times length of segment `k`.
    fn segment_cost(&self, k: usize) -> Result<f64> {
        let bad = |reason: String| Error::InadmissibleSegment { index: k, reason };
        let [x0, z0] = self.vertices[k];
        let [x1, z1] = self.vertices[k + 1];
        let (dx, dz) = (x1 - x0, z1 - z0);
        let len = dx.hypot(dz);
        if !(len > 0.0 && len.is_finite()) {
            return Err(bad(format!("segment length {len}")));
        }
        let SegmentStates { a_minus, a_plus } = self.segments[k];
        if a_minus == a_plus {
            return Ok(0.0);
        }
        let j = JumpSpec::new(a_minus, a_plus).map_err(|e| bad(e.to_string()))?;
        let normal = [dz / len, -dx / len];
        let cross = normal[0] * j.n[1] - normal[1] * j.n[0];
        let angle = cross.abs().min(1.0).asin();
        if angle > ANGLE_TOL {
            return Err(bad(format!("normal is {angle:e} rad away from the jump direction")));
        }
        let c = jump_cost(&j).map_err(|e| bad(e.to_string()))?;
        Ok(c.cost * len)
    }

    /// `∫_J |(Σ(m⁺) − Σ(m⁻))·ν| dH¹` over the polyline.
    pub fn limit_energy(&self) -> Result<f64> {
        (0..self.segments.len()).map(|k| self.segment_cost(k)).sum()
    }
}

pub fn limit_energy(path: &DefectPath) -> Result<f64> {
    path.limit_energy()
}
