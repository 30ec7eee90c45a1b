use super::TheoryError;
use crate::fw::IterateTrace;
use crate::geometry::{FeasibleRegion, RegionKind};
use crate::scalar::Scalar;

/// Face `conv{s_i·r·e_i : i ∈ support}` of the ℓ1-ball of radius `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceSpec {
    pub support: Vec<usize>,
    /// ±1 per support entry.
    pub signs: Vec<f64>,
    pub radius: f64,
}

impl FaceSpec {
    pub fn contains_vertex(&self, index: usize, value: f64) -> bool {
        self.support
            .iter()
            .zip(&self.signs)
            .any(|(i, s)| *i == index && (value * s - self.radius).abs() <= 1e-9 * self.radius)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceRecord {
    pub t: usize,
    pub in_optimal_face: bool,
    pub distance_cnorm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceDiagnostics {
    pub records: Vec<FaceRecord>,
    /// First `t` from which every LMO vertex lies in the face.
    pub q_empirical: Option<usize>,
}

/// `min_{y ∈ face} ‖x − y‖₁ / r`.
///
/// Mass off the support and with the wrong sign must be removed; what is left
/// on the support can be moved to total exactly `r` at cost `|Σ − r|`.
pub fn l1_face_distance(x: &[f64], face: &FaceSpec) -> f64 {
    let mut on = vec![None; x.len()];
    for (i, s) in face.support.iter().zip(&face.signs) {
        on[*i] = Some(*s);
    }
    let mut off = 0.0;
    let mut wrong = 0.0;
    let mut mass = 0.0;
    for (xi, si) in x.iter().zip(&on) {
        match si {
            None => off += xi.abs(),
            Some(s) => {
                let v = s * xi;
                if v < 0.0 {
                    wrong += -v;
                } else {
                    mass += v;
                }
            }
        }
    }
    (off + wrong + (mass - face.radius).abs()) / face.radius
}

pub fn face_diagnostics<S: Scalar>(
    trace: &IterateTrace<S>,
    region: &FeasibleRegion,
    face: &FaceSpec,
) -> Result<FaceDiagnostics, TheoryError> {
    match region.kind() {
        RegionKind::LpBall { p, radius, .. } if *p == 1.0 && *radius == face.radius => {}
        _ => {
            return Err(TheoryError::InvalidParameter(
                "face diagnostics need the l1-ball matching the face radius".into(),
            ))
        }
    }
    if trace.snapshots.is_empty() {
        return Err(TheoryError::NoSnapshots);
    }
    let mut q = None;
    for r in trace.records.iter().rev() {
        let (i, v) = r.vertex_peak;
        if face.contains_vertex(i, v) {
            q = Some(r.t);
        } else {
            break;
        }
    }
    let records = trace
        .snapshots
        .iter()
        .map(|s| {
            let (i, v) = s
                .vertex
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv.abs() { (i, *v) } else { (bi, bv) });
            FaceRecord {
                t: s.t,
                in_optimal_face: face.contains_vertex(i, v),
                distance_cnorm: l1_face_distance(&s.x, face),
            }
        })
        .collect();
    Ok(FaceDiagnostics { records, q_empirical: q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face() -> FaceSpec {
        FaceSpec {
            support: vec![1, 2],
            signs: vec![1.0, 1.0],
            radius: 1.0,
        }
    }

    #[test]
    fn zero_inside_face() {
        assert_eq!(l1_face_distance(&[0.0, 0.3, 0.7, 0.0], &face()), 0.0);
    }

    #[test]
    fn distance_matches_brute_force() {
        let x = [0.2, 0.1, -0.3, 0.15];
        let d = l1_face_distance(&x, &face());
        // y = (0, a, 1 − a, 0), a ∈ [0, 1]
        let brute = (0..=100_000)
            .map(|k| {
                let a = k as f64 / 100_000.0;
                (x[0]).abs() + (x[1] - a).abs() + (x[2] - (1.0 - a)).abs() + x[3].abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d - brute).abs() < 1e-5, "{d} vs {brute}");
    }

    #[test]
    fn vertex_membership() {
        let f = face();
        assert!(f.contains_vertex(2, 1.0));
        assert!(!f.contains_vertex(2, -1.0));
        assert!(!f.contains_vertex(0, 1.0));
    }
}
